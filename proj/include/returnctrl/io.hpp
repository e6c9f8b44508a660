#pragma once

#include <map>
#include <string>
#include <vector>

#include "returnctrl/grid.hpp"
#include "returnctrl/pde.hpp"

namespace returnctrl {

// Minimal TOML subset: [section] headers, `key = value` lines, # comments.
// Values: quoted strings, booleans, integers, floats.  Keys are flattened to
// "section.key".  Enough to make one file determine a run; anything fancier
// (arrays, nested tables, multiline strings) is rejected with a ConfigError
// naming the line.
struct TomlValue {
  enum class Kind { String, Int, Float, Bool } kind = Kind::String;
  std::string str;
  long long i = 0;
  double f = 0.0;
  bool b = false;
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text);
  static TomlTable parse_file(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::vector<std::string> keys() const;

  // Typed getters; the default-less forms throw ConfigError when the key is
  // missing, all forms throw on a type mismatch.  get_double accepts ints.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long def) const;
  bool get_bool(const std::string& key, bool def) const;

 private:
  const TomlValue& require(const std::string& key) const;
  std::map<std::string, TomlValue> kv_;
};

// CSV field dumps: one header comment carrying the grid, then rows
// t,x,re,im (complex) or t,x,value (real), printed with %.17g so the
// round-trip is exact sample-for-sample.
void write_field_csv(const std::string& path, const ComplexField& f);
void write_field_csv(const std::string& path, const RealField& f);
ComplexField read_field_csv(const std::string& path);
RealField read_field_csv_real(const std::string& path);

// Binary dumps: row-major little-endian doubles (re,im interleaved for the
// complex kind) at `path`, grid metadata in a JSON header at path + ".json".
void write_field_binary(const std::string& path, const ComplexField& f);
ComplexField read_field_binary(const std::string& path);

// Gnuplot emission: scripts only, never images, so the artifacts stay
// dependency-free.  `csv_name` is the data file relative to the script.
void write_heatmap_script(const std::string& path, const std::string& csv_name,
                          const std::string& title);
// Support/level-set figure: the region where the field magnitude exceeds a
// small level, over the (t, x) rectangle.
void write_support_script(const std::string& path, const std::string& csv_name,
                          const std::string& title, double level);

}  // namespace returnctrl
