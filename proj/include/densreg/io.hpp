#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "densreg/diffeo.hpp"

namespace densreg {

// Volume files are a pair: X.json (sidecar metadata) + X.raw (little-endian
// scalar payload, first axis fastest-varying, matching the in-memory layout).
// f32 payloads widen to the build precision on read; writes are atomic
// (temp file + rename).

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
  return buf;
}

}  // namespace detail

inline void write_volume(const std::string& path_prefix, const ScalarField& field,
                         const std::string& dtype = "f64") {
  if (dtype != "f64" && dtype != "f32")
    throw ValidationError("write_volume: dtype must be f64 or f32");
  const Grid& g = field.grid;
  nlohmann::ordered_json meta;
  meta["dims"] = std::vector<int>(g.dims.begin(), g.dims.begin() + g.dim);
  meta["spacing"] = std::vector<Real>(g.spacing.begin(), g.spacing.begin() + g.dim);
  meta["origin"] = std::vector<Real>(g.origin.begin(), g.origin.begin() + g.dim);
  meta["bc"] = g.bc == Bc::periodic ? "periodic" : "clamped";
  meta["dtype"] = dtype;
  meta["byte_order"] = "little";
  detail::write_file_atomic(path_prefix + ".json", meta.dump(2) + "\n");

  std::string payload;
  if (dtype == "f64") {
    payload.resize(field.values.size() * sizeof(double));
    std::memcpy(payload.data(), field.values.data(), payload.size());
  } else {
    std::vector<float> narrow(field.values.begin(), field.values.end());
    payload.resize(narrow.size() * sizeof(float));
    std::memcpy(payload.data(), narrow.data(), payload.size());
  }
  detail::write_file_atomic(path_prefix + ".raw", payload);
}

inline ScalarField read_volume(const std::string& path_prefix) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_file(path_prefix + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad volume sidecar " + path_prefix + ".json: " + e.what());
  }
  try {
    const auto dims = meta.at("dims").get<std::vector<int>>();
    const auto spacing = meta.at("spacing").get<std::vector<Real>>();
    const auto origin = meta.at("origin").get<std::vector<Real>>();
    const auto bc_str = meta.at("bc").get<std::string>();
    const auto dtype = meta.at("dtype").get<std::string>();
    const auto order = meta.value("byte_order", std::string("little"));
    if (order != "little") throw ValidationError("only little-endian payloads are supported");
    if (dims.empty() || dims.size() > 3 || dims.size() != spacing.size() ||
        dims.size() != origin.size())
      throw ValidationError("dims/spacing/origin must agree and have 1-3 axes");
    Bc bc;
    if (bc_str == "periodic") bc = Bc::periodic;
    else if (bc_str == "clamped") bc = Bc::clamped;
    else throw ValidationError("bc must be 'periodic' or 'clamped'");

    std::array<int, 3> d{1, 1, 1};
    std::array<Real, 3> h{1, 1, 1}, o{0, 0, 0};
    for (std::size_t a = 0; a < dims.size(); ++a) {
      d[a] = dims[a];
      h[a] = spacing[a];
      o[a] = origin[a];
    }
    const Grid grid(static_cast<int>(dims.size()), d, h, o, bc);

    const std::string payload = detail::read_file(path_prefix + ".raw");
    const std::size_t elem = dtype == "f64" ? 8 : dtype == "f32" ? 4 : 0;
    if (elem == 0) throw ValidationError("dtype must be 'f64' or 'f32'");
    const std::size_t expected = grid.node_count() * elem;
    if (payload.size() != expected) {
      throw ValidationError("payload size mismatch for " + path_prefix + ".raw: expected " +
                            std::to_string(expected) + " bytes, got " +
                            std::to_string(payload.size()));
    }
    ScalarField field(grid);
    if (elem == 8) {
      std::memcpy(field.values.data(), payload.data(), payload.size());
    } else {
      std::vector<float> narrow(grid.node_count());
      std::memcpy(narrow.data(), payload.data(), payload.size());
      for (std::size_t i = 0; i < narrow.size(); ++i)
        field.values[i] = static_cast<Real>(narrow[i]);
    }
    if (!all_finite(field))
      throw ValidationError("volume " + path_prefix + " contains NaN or Inf values");
    return field;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad volume sidecar " + path_prefix + ".json: " + e.what());
  }
}

// Maps are stored one volume per displacement component (prefix.c0, c1, ...)
// plus an optional prefix.jacdet volume.
inline void write_map(const std::string& prefix, const DiffeoMap& map) {
  const Grid& g = map.grid();
  for (int a = 0; a < g.dim; ++a) {
    ScalarField comp(g);
    comp.values = map.displacement.comp[a];
    write_volume(prefix + ".c" + std::to_string(a), comp);
  }
  if (map.jac_det) write_volume(prefix + ".jacdet", *map.jac_det);
}

inline DiffeoMap read_map(const std::string& prefix,
                          MapDirection direction = MapDirection::forward) {
  ScalarField first = read_volume(prefix + ".c0");
  const Grid g = first.grid;
  DiffeoMap map(VectorField(g), direction);
  map.displacement.comp[0] = std::move(first.values);
  for (int a = 1; a < g.dim; ++a) {
    ScalarField comp = read_volume(prefix + ".c" + std::to_string(a));
    require_same_grid(g, comp.grid, "read_map");
    map.displacement.comp[a] = std::move(comp.values);
  }
  if (std::filesystem::exists(prefix + ".jacdet.json")) {
    ScalarField jd = read_volume(prefix + ".jacdet");
    require_same_grid(g, jd.grid, "read_map");
    map.jac_det = std::move(jd);
  }
  return map;
}

struct Landmark {
  std::string id;
  std::array<Real, 3> position{0, 0, 0};
};

struct LandmarkSet {
  std::vector<Landmark> points;
};

// CSV with the exact header "id,x,y,z"; coordinates are physical (mm),
// never grid indices.
inline LandmarkSet read_landmarks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open landmarks file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty landmarks file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,x,y,z")
    throw ValidationError("landmarks header must be 'id,x,y,z', got '" + line + "'");
  LandmarkSet set;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    Landmark lm;
    std::string tok;
    if (!std::getline(ss, lm.id, ',')) throw ValidationError("bad landmark row: " + line);
    for (int a = 0; a < 3; ++a) {
      if (!std::getline(ss, tok, ',')) throw ValidationError("bad landmark row: " + line);
      try {
        lm.position[a] = std::stod(tok);
      } catch (const std::exception&) {
        throw ValidationError("bad landmark coordinate '" + tok + "' in row: " + line);
      }
      if (!std::isfinite(lm.position[a]))
        throw ValidationError("non-finite landmark coordinate in row: " + line);
    }
    if (!seen.insert(lm.id).second)
      throw ValidationError("duplicate landmark id: " + lm.id);
    set.points.push_back(std::move(lm));
  }
  return set;
}

inline void write_landmarks(const std::string& path, const LandmarkSet& set, int dim = 3) {
  std::string out = "id,x,y,z\n";
  for (const auto& lm : set.points) {
    out += lm.id;
    for (int a = 0; a < 3; ++a) {
      out += ',';
      out += detail::format_real(a < dim ? lm.position[a] : Real(0));
    }
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

struct LandmarkError {
  std::string id;
  Real error = 0;      // Euclidean distance in mm
  bool excluded = false;
};

struct LandmarkReport {
  Real mean = 0;
  Real sd = 0;   // population SD over the included landmarks
  Real max = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::vector<LandmarkError> per_landmark;
};

// error_i = || map(source_i) - target_i ||. Landmarks outside the hull of a
// clamped grid are flagged and excluded from the statistics.
inline LandmarkReport eval_landmarks(const DiffeoMap& map, const LandmarkSet& source,
                                     const LandmarkSet& target) {
  if (source.points.empty()) throw ValidationError("eval_landmarks: empty landmark set");
  std::map<std::string, const Landmark*> by_id;
  for (const auto& lm : target.points) by_id[lm.id] = &lm;
  if (by_id.size() != source.points.size())
    throw ValidationError("eval_landmarks: source/target landmark counts differ");
  const Grid& g = map.grid();

  LandmarkReport report;
  Real sum = 0, sum_sq = 0;
  for (const auto& src : source.points) {
    auto it = by_id.find(src.id);
    if (it == by_id.end())
      throw ValidationError("eval_landmarks: id '" + src.id + "' missing from target set");
    LandmarkError entry;
    entry.id = src.id;
    bool inside = true;
    if (g.bc == Bc::clamped) {
      for (int a = 0; a < g.dim; ++a) {
        const Real lo = g.origin[a], hi = g.origin[a] + g.extent(a);
        if (src.position[a] < lo || src.position[a] > hi) inside = false;
      }
    }
    if (!inside) {
      entry.excluded = true;
      ++report.excluded;
    } else {
      const auto mapped = map(src.position);
      Real d2 = 0;
      for (int a = 0; a < g.dim; ++a) {
        const Real diff = mapped[a] - it->second->position[a];
        d2 += diff * diff;
      }
      entry.error = std::sqrt(d2);
      sum += entry.error;
      sum_sq += entry.error * entry.error;
      report.max = std::max(report.max, entry.error);
      ++report.used;
    }
    report.per_landmark.push_back(std::move(entry));
  }
  if (report.used == 0) throw ValidationError("eval_landmarks: all landmarks out of domain");
  const Real n = static_cast<Real>(report.used);
  report.mean = sum / n;
  const Real var = std::max(Real(0), sum_sq / n - report.mean * report.mean);
  report.sd = std::sqrt(var);
  return report;
}

// Flat key = value run configuration; unknown keys are rejected so typos
// cannot silently fall back to defaults.
class RunConfig {
 public:
  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "steps",          "samples",        "seed",        "track_inverse",
        "renormalize",    "floor",          "epsilon",     "iterations",
        "sigmoid_center", "sigmoid_sharpness", "resync_every", "report_every",
        "backtrack",      "alpha_min",      "alpha_max",   "alpha_step",
        "out_prefix"};
    return keys;
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("config line " + std::to_string(lineno) + " is not 'key = value'");
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!known_keys().count(key))
        throw ValidationError("unknown config key '" + key + "' (line " +
                              std::to_string(lineno) + ")");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  Real get_real(const std::string& key, Real fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "' is not a number: " + it->second);
    }
  }

  long get_int(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return std::stol(it->second);
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "' is not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ValidationError("config key '" + key + "' is not a boolean: " + it->second);
  }

  std::string get_string(const std::string& key, std::string fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace densreg
