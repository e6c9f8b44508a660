#include "returnctrl/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "returnctrl/errors.hpp"

namespace returnctrl {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Cuts a # comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_value(const std::string& raw, int lineno) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("toml: empty value at line " + std::to_string(lineno));
  TomlValue out;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("toml: unterminated string at line " + std::to_string(lineno));
    out.kind = TomlValue::Kind::String;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = TomlValue::Kind::Bool;
    out.b = v == "true";
    return out;
  }
  if (v.front() == '[' || v.front() == '{')
    throw ConfigError("toml: arrays and inline tables are not supported (line " +
                      std::to_string(lineno) + ")");
  const bool floaty = v.find_first_of(".eE") != std::string::npos &&
                      v.find("0x") != 0;
  char* end = nullptr;
  if (floaty) {
    out.kind = TomlValue::Kind::Float;
    out.f = std::strtod(v.c_str(), &end);
  } else {
    out.kind = TomlValue::Kind::Int;
    out.i = std::strtoll(v.c_str(), &end, 10);
  }
  if (end != v.c_str() + v.size())
    throw ConfigError("toml: cannot parse value '" + v + "' at line " + std::to_string(lineno));
  return out;
}

void write_grid_header(std::FILE* f, const SpaceTimeGrid& g, const char* scalar) {
  std::fprintf(f, "# grid nx=%d nt=%d x_lo=%.17g x_hi=%.17g T=%.17g theta=%.17g scalar=%s\n",
               g.nx, g.nt, g.x_lo, g.x_hi, g.T, g.theta, scalar);
}

SpaceTimeGrid parse_grid_header(const std::string& line, std::string* scalar) {
  SpaceTimeGrid g;
  char kind[16] = {0};
  const int got = std::sscanf(line.c_str(),
                              "# grid nx=%d nt=%d x_lo=%lg x_hi=%lg T=%lg theta=%lg scalar=%15s",
                              &g.nx, &g.nt, &g.x_lo, &g.x_hi, &g.T, &g.theta, kind);
  if (got != 7) throw ConfigError("field csv: malformed grid header");
  *scalar = kind;
  return g;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_or_throw(const std::string& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw ConfigError("io: cannot open " + path);
  return f;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable t;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("toml: malformed section header at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty() || section.find('[') != std::string::npos)
        throw ConfigError("toml: malformed section header at line " + std::to_string(lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("toml: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("toml: empty key at line " + std::to_string(lineno));
    const std::string full = section.empty() ? key : section + "." + key;
    if (t.kv_.count(full))
      throw ConfigError("toml: duplicate key '" + full + "' at line " + std::to_string(lineno));
    t.kv_[full] = parse_value(line.substr(eq + 1), lineno);
  }
  return t;
}

TomlTable TomlTable::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("toml: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::vector<std::string> TomlTable::keys() const {
  std::vector<std::string> out;
  out.reserve(kv_.size());
  for (const auto& [k, v] : kv_) out.push_back(k);
  return out;
}

const TomlValue& TomlTable::require(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::String)
    throw ConfigError("config: key '" + key + "' is not a string");
  return v.str;
}

std::string TomlTable::get_string(const std::string& key, const std::string& def) const {
  return has(key) ? get_string(key) : def;
}

double TomlTable::get_double(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind == TomlValue::Kind::Float) return v.f;
  if (v.kind == TomlValue::Kind::Int) return double(v.i);
  throw ConfigError("config: key '" + key + "' is not a number");
}

double TomlTable::get_double(const std::string& key, double def) const {
  return has(key) ? get_double(key) : def;
}

long long TomlTable::get_int(const std::string& key) const {
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::Int)
    throw ConfigError("config: key '" + key + "' is not an integer");
  return v.i;
}

long long TomlTable::get_int(const std::string& key, long long def) const {
  return has(key) ? get_int(key) : def;
}

bool TomlTable::get_bool(const std::string& key, bool def) const {
  if (!has(key)) return def;
  const TomlValue& v = require(key);
  if (v.kind != TomlValue::Kind::Bool)
    throw ConfigError("config: key '" + key + "' is not a boolean");
  return v.b;
}

void write_field_csv(const std::string& path, const ComplexField& f) {
  const SpaceTimeGrid& g = f.grid();
  File out = open_or_throw(path, "w");
  write_grid_header(out.get(), g, "complex");
  std::fprintf(out.get(), "t,x,re,im\n");
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      std::fprintf(out.get(), "%.17g,%.17g,%.17g,%.17g\n", g.t(n), g.x(i),
                   f.at(n, i).real(), f.at(n, i).imag());
}

void write_field_csv(const std::string& path, const RealField& f) {
  const SpaceTimeGrid& g = f.grid();
  File out = open_or_throw(path, "w");
  write_grid_header(out.get(), g, "real");
  std::fprintf(out.get(), "t,x,value\n");
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      std::fprintf(out.get(), "%.17g,%.17g,%.17g\n", g.t(n), g.x(i), f.at(n, i));
}

namespace {

template <class FieldT, class Fill>
FieldT read_csv_impl(const std::string& path, const char* want_scalar, Fill&& fill) {
  std::ifstream in(path);
  if (!in) throw ConfigError("io: cannot open " + path);
  std::string line, scalar;
  if (!std::getline(in, line)) throw ConfigError("field csv: empty file " + path);
  const SpaceTimeGrid g = parse_grid_header(line, &scalar);
  if (scalar != want_scalar)
    throw ConfigError("field csv: expected scalar kind " + std::string(want_scalar) +
                      ", file has " + scalar);
  g.validate();
  std::getline(in, line);  // column names
  FieldT f(g);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      if (!std::getline(in, line))
        throw ConfigError("field csv: truncated file " + path);
      fill(f, n, i, line);
    }
  return f;
}

}  // namespace

ComplexField read_field_csv(const std::string& path) {
  return read_csv_impl<ComplexField>(path, "complex",
                                     [&](ComplexField& f, int n, int i, const std::string& line) {
                                       double t, x, re, im;
                                       if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg", &t, &x,
                                                       &re, &im) != 4)
                                         throw ConfigError("field csv: malformed row " + line);
                                       f.at(n, i) = Z(re, im);
                                     });
}

RealField read_field_csv_real(const std::string& path) {
  return read_csv_impl<RealField>(path, "real",
                                  [&](RealField& f, int n, int i, const std::string& line) {
                                    double t, x, v;
                                    if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &x, &v) != 3)
                                      throw ConfigError("field csv: malformed row " + line);
                                    f.at(n, i) = v;
                                  });
}

void write_field_binary(const std::string& path, const ComplexField& f) {
  const SpaceTimeGrid& g = f.grid();
  {
    File out = open_or_throw(path, "wb");
    static_assert(sizeof(Z) == 2 * sizeof(double));
    if (std::fwrite(f.data().data(), sizeof(Z), f.data().size(), out.get()) != f.data().size())
      throw ConfigError("io: short write to " + path);
  }
  File hdr = open_or_throw(path + ".json", "w");
  std::fprintf(hdr.get(),
               "{\n"
               "  \"scalar\": \"complex\",\n"
               "  \"layout\": \"row-major\",\n"
               "  \"endianness\": \"little\",\n"
               "  \"element_bytes\": 16,\n"
               "  \"rows\": %d,\n"
               "  \"cols\": %d,\n"
               "  \"grid\": {\"nx\": %d, \"nt\": %d, \"x_lo\": %.17g, \"x_hi\": %.17g,"
               " \"T\": %.17g, \"theta\": %.17g}\n"
               "}\n",
               g.nt + 1, g.nx, g.nx, g.nt, g.x_lo, g.x_hi, g.T, g.theta);
}

ComplexField read_field_binary(const std::string& path) {
  std::ifstream hdr(path + ".json");
  if (!hdr) throw ConfigError("io: cannot open " + path + ".json");
  std::ostringstream ss;
  ss << hdr.rdbuf();
  const std::string h = ss.str();
  SpaceTimeGrid g;
  auto field = [&](const char* key) {
    const auto pos = h.find(std::string("\"") + key + "\":");
    if (pos == std::string::npos)
      throw ConfigError("field binary: header missing key " + std::string(key));
    return std::strtod(h.c_str() + pos + std::strlen(key) + 3, nullptr);
  };
  g.nx = int(field("nx"));
  g.nt = int(field("nt"));
  g.x_lo = field("x_lo");
  g.x_hi = field("x_hi");
  g.T = field("T");
  g.theta = field("theta");
  g.validate();
  ComplexField f(g);
  File in = open_or_throw(path, "rb");
  if (std::fread(f.data().data(), sizeof(Z), f.data().size(), in.get()) != f.data().size())
    throw ConfigError("io: short read from " + path);
  return f;
}

void write_heatmap_script(const std::string& path, const std::string& csv_name,
                          const std::string& title) {
  File out = open_or_throw(path, "w");
  std::fprintf(out.get(),
               "set datafile separator ','\n"
               "set title '%s'\n"
               "set xlabel 't'\n"
               "set ylabel 'x'\n"
               "set view map\n"
               "splot '%s' every ::1 using 1:2:(sqrt($3*$3+$4*$4)) "
               "with points pt 5 ps 0.4 palette notitle\n",
               title.c_str(), csv_name.c_str());
}

void write_support_script(const std::string& path, const std::string& csv_name,
                          const std::string& title, double level) {
  File out = open_or_throw(path, "w");
  std::fprintf(out.get(),
               "set datafile separator ','\n"
               "set title '%s'\n"
               "set xlabel 't'\n"
               "set ylabel 'x'\n"
               "level = %.17g\n"
               "set view map\n"
               "splot '%s' every ::1 using 1:2:((sqrt($3*$3+$4*$4) > level) ? 1 : 0) "
               "with points pt 5 ps 0.4 palette notitle\n",
               title.c_str(), level, csv_name.c_str());
}

}  // namespace returnctrl
