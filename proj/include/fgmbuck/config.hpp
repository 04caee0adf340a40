#pragma once

// JSON run configuration. Every problem is collected before reporting, and
// unknown keys are rejected so typos in parameter studies never pass silently.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgmbuck/analysis.hpp"
#include "fgmbuck/errors.hpp"

namespace fgmbuck {

inline constexpr int kSchemaVersion = 1;

struct OutputSpec {
  std::string directory = ".";
  std::string basename = "results";
  bool csv = true;
  bool json = false;
  bool mode_shape = false;
};

struct RunConfig {
  ProblemConfig problem;
  std::vector<SweepDimension> sweep;
  OutputSpec output;
};

namespace detail {

using nlohmann::json;

/// Walks a JSON tree, recording every problem with its path.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, _] : j.items()) {
      if (!allowed.count(key)) fail(path + "." + key, "unknown key");
    }
    return true;
  }

  template <typename T>
  void number(const json& j, const std::string& key, const std::string& path, T& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "." + key, "required");
      return;
    }
    const json& v = j.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        fail(path + "." + key, "expected an integer");
        return;
      }
    } else if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
      return;
    }
    out = v.get<T>();
  }

  void boolean(const json& j, const std::string& key, const std::string& path, bool& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_boolean()) {
      fail(path + "." + key, "expected true or false");
      return;
    }
    out = j.at(key).get<bool>();
  }

  void string(const json& j, const std::string& key, const std::string& path, std::string& out, bool required = false) {
    if (!j.contains(key)) {
      if (required) fail(path + "." + key, "required");
      return;
    }
    if (!j.at(key).is_string()) {
      fail(path + "." + key, "expected a string");
      return;
    }
    out = j.at(key).get<std::string>();
  }

  void point(const json& j, const std::string& key, const std::string& path, Vec2& out) {
    if (!j.contains(key)) {
      fail(path + "." + key, "required");
      return;
    }
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(path + "." + key, "expected [x, y]");
      return;
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  /// Angles are given either in degrees or radians, never both.
  void angle(const json& j, const std::string& path, double& out) {
    const bool deg = j.contains("angle_deg"), rad = j.contains("angle_rad");
    if (deg && rad) {
      fail(path, "give angle_deg or angle_rad, not both");
      return;
    }
    double v = 0.0;
    if (deg) {
      number(j, "angle_deg", path, v);
      out = v * std::numbers::pi / 180.0;
    } else if (rad) {
      number(j, "angle_rad", path, out);
    }
  }

  std::optional<PhaseProperties> phase(const json& j, const std::string& path) {
    if (j.is_string()) {
      const std::string name = j.get<std::string>();
      if (name == "ZrO2") return zirconia();
      if (name == "Al2O3") return alumina();
      if (name == "Al") return aluminium();
      fail(path, "unknown phase '" + name + "' (known: ZrO2, Al2O3, Al)");
      return std::nullopt;
    }
    if (!object(j, path, {"youngs_modulus", "poisson_ratio", "thermal_expansion", "conductivity", "density"})) {
      return std::nullopt;
    }
    PhaseProperties p{};
    number(j, "youngs_modulus", path, p.youngs_modulus, true);
    number(j, "poisson_ratio", path, p.poisson_ratio, true);
    number(j, "thermal_expansion", path, p.thermal_expansion, true);
    number(j, "conductivity", path, p.conductivity, true);
    number(j, "density", path, p.density, true);
    try {
      p.validate(path);
    } catch (const Error& e) {
      fail(path, e.what());
    }
    return p;
  }
};

inline void read_material(Reader& r, const json& j, ProblemConfig& p) {
  const std::string path = "material";
  if (!r.object(j, path, {"pair", "ceramic", "metal", "gradient_index", "shear_correction"})) return;
  if (j.contains("pair")) {
    if (j.contains("ceramic") || j.contains("metal")) r.fail(path, "give either pair or ceramic/metal");
    std::string pair;
    r.string(j, "pair", path, pair);
    if (pair == "Al/ZrO2") {
      p.ceramic = zirconia();
    } else if (pair == "Al/Al2O3") {
      p.ceramic = alumina();
    } else if (!pair.empty()) {
      r.fail(path + ".pair", "unknown pair '" + pair + "' (known: Al/ZrO2, Al/Al2O3)");
    }
    p.metal = aluminium();
  } else {
    if (!j.contains("ceramic") || !j.contains("metal")) r.fail(path, "needs pair or both ceramic and metal");
    if (j.contains("ceramic")) {
      if (auto c = r.phase(j.at("ceramic"), path + ".ceramic")) p.ceramic = *c;
    }
    if (j.contains("metal")) {
      if (auto m = r.phase(j.at("metal"), path + ".metal")) p.metal = *m;
    }
  }
  r.number(j, "gradient_index", path, p.gradient_index);
  if (!(p.gradient_index >= 0.0)) r.fail(path + ".gradient_index", "must be >= 0");
  r.number(j, "shear_correction", path, p.shear_correction);
  if (!(p.shear_correction > 0.0)) r.fail(path + ".shear_correction", "must be > 0");
}

inline void read_defects(Reader& r, const json& j, ProblemConfig& p) {
  if (!j.is_array()) {
    r.fail("defects", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "defects[" + std::to_string(i) + "]";
    const json& d = j[i];
    if (!d.is_object() || !d.contains("type") || !d.at("type").is_string()) {
      r.fail(path, "expected an object with a string 'type'");
      continue;
    }
    const std::string type = d.at("type").get<std::string>();
    if (type == "crack") {
      r.object(d, path, {"type", "center", "length", "angle_deg", "angle_rad"});
      CrackSpec c;
      r.point(d, "center", path, c.center);
      r.number(d, "length", path, c.length, true);
      r.angle(d, path, c.angle);
      p.defects.emplace_back(c);
    } else if (type == "circle") {
      r.object(d, path, {"type", "center", "radius"});
      CircleCutout c;
      r.point(d, "center", path, c.center);
      r.number(d, "radius", path, c.radius, true);
      p.defects.emplace_back(c);
    } else if (type == "ellipse") {
      r.object(d, path, {"type", "center", "d", "e", "angle_deg", "angle_rad"});
      EllipseCutout c;
      r.point(d, "center", path, c.center);
      r.number(d, "d", path, c.d, true);
      r.number(d, "e", path, c.e, true);
      r.angle(d, path, c.angle);
      p.defects.emplace_back(c);
    } else {
      r.fail(path + ".type", "unknown defect type '" + type + "' (known: crack, circle, ellipse)");
    }
  }
}

inline void read_load(Reader& r, const json& j, LoadCase& load) {
  const std::string path = "load";
  if (!r.object(j, path, {"kind", "profile", "metal_surface_temp", "reference_temp", "strict_form"})) return;
  std::string kind;
  r.string(j, "kind", path, kind, true);
  if (kind == "uniaxial") {
    load.kind = LoadKind::uniaxial;
  } else if (kind == "biaxial") {
    load.kind = LoadKind::biaxial;
  } else if (kind == "thermal") {
    load.kind = LoadKind::thermal;
  } else if (!kind.empty()) {
    r.fail(path + ".kind", "expected uniaxial, biaxial or thermal");
  }
  std::string profile = "nonlinear";
  r.string(j, "profile", path, profile);
  if (profile == "linear") {
    load.profile = ProfileKind::linear;
  } else if (profile == "nonlinear") {
    load.profile = ProfileKind::nonlinear;
  } else {
    r.fail(path + ".profile", "expected linear or nonlinear");
  }
  r.number(j, "metal_surface_temp", path, load.metal_surface_temp);
  r.number(j, "reference_temp", path, load.reference_temp);
  r.boolean(j, "strict_form", path, load.strict_thermal_form);
  if (load.kind != LoadKind::thermal &&
      (j.contains("profile") || j.contains("metal_surface_temp") || j.contains("reference_temp") ||
       j.contains("strict_form"))) {
    r.fail(path, "thermal settings given for a mechanical load");
  }
}

inline void read_sweep(Reader& r, const json& j, std::vector<SweepDimension>& out) {
  if (!j.is_array()) {
    r.fail("sweep", "expected an array of {axis, values}");
    return;
  }
  std::set<SweepAxis> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "sweep[" + std::to_string(i) + "]";
    if (!r.object(j[i], path, {"axis", "values"})) continue;
    std::string name;
    r.string(j[i], "axis", path, name, true);
    const auto axis = sweep_axis_from_string(name);
    if (!axis) {
      if (!name.empty()) r.fail(path + ".axis", "unknown axis '" + name + "'");
      continue;
    }
    if (!seen.insert(*axis).second) r.fail(path + ".axis", "axis '" + name + "' repeated");
    SweepDimension dim{*axis, {}};
    if (!j[i].contains("values") || !j[i].at("values").is_array() || j[i].at("values").empty()) {
      r.fail(path + ".values", "expected a non-empty array of numbers");
      continue;
    }
    for (const auto& v : j[i].at("values")) {
      if (!v.is_number()) {
        r.fail(path + ".values", "expected numbers");
        break;
      }
      dim.values.push_back(v.get<double>());
    }
    out.push_back(std::move(dim));
  }
}

inline void read_output(Reader& r, const json& j, OutputSpec& out) {
  const std::string path = "output";
  if (!r.object(j, path, {"directory", "basename", "csv", "json", "mode_shape"})) return;
  r.string(j, "directory", path, out.directory);
  r.string(j, "basename", path, out.basename);
  r.boolean(j, "csv", path, out.csv);
  r.boolean(j, "json", path, out.json);
  r.boolean(j, "mode_shape", path, out.mode_shape);
  if (out.basename.empty()) r.fail(path + ".basename", "must not be empty");
}

inline void read_solver(Reader& r, const json& j, SolverOptions& s) {
  const std::string path = "solver";
  if (!r.object(j, path, {"method", "dense_limit", "max_iterations"})) return;
  std::string method = "auto";
  r.string(j, "method", path, method);
  if (method == "auto") {
    s.method = SolverMethod::automatic;
  } else if (method == "dense") {
    s.method = SolverMethod::dense;
  } else if (method == "sparse") {
    s.method = SolverMethod::sparse;
  } else {
    r.fail(path + ".method", "expected auto, dense or sparse");
  }
  r.number(j, "dense_limit", path, s.dense_limit);
  r.number(j, "max_iterations", path, s.max_iterations);
  if (s.max_iterations < 1) r.fail(path + ".max_iterations", "must be >= 1");
}

}  // namespace detail

struct ParseOutcome {
  RunConfig config;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

inline ParseOutcome parse_config_json(const nlohmann::json& j) {
  ParseOutcome out;
  detail::Reader r;
  ProblemConfig& p = out.config.problem;
  if (!r.object(j, "config", {"schema_version", "plate", "material", "mesh", "defects", "boundary", "load",
                              "normalization", "thickness_points", "solver", "sweep", "output"})) {
    out.errors = r.errors;
    return out;
  }
  int version = 0;
  r.number(j, "schema_version", "config", version, true);
  if (j.contains("schema_version") && version != kSchemaVersion) {
    r.fail("config.schema_version", "unsupported version " + std::to_string(version));
  }

  for (const char* key : {"plate", "material", "mesh", "load"}) {
    if (!j.contains(key)) r.fail(key, "required");
  }
  if (j.contains("plate") && r.object(j.at("plate"), "plate", {"a", "b", "h"})) {
    r.number(j.at("plate"), "a", "plate", p.plate.a, true);
    r.number(j.at("plate"), "b", "plate", p.plate.b, true);
    r.number(j.at("plate"), "h", "plate", p.plate.h, true);
    for (auto [name, v] : {std::pair{"a", p.plate.a}, {"b", p.plate.b}, {"h", p.plate.h}}) {
      if (!(v > 0.0)) r.fail(std::string("plate.") + name, "must be > 0");
    }
  }
  if (j.contains("material")) detail::read_material(r, j.at("material"), p);
  if (j.contains("mesh") && r.object(j.at("mesh"), "mesh", {"nx", "ny"})) {
    r.number(j.at("mesh"), "nx", "mesh", p.nx);
    r.number(j.at("mesh"), "ny", "mesh", p.ny);
    if (p.nx < 1) r.fail("mesh.nx", "must be >= 1");
    if (p.ny < 1) r.fail("mesh.ny", "must be >= 1");
  }
  if (j.contains("defects")) detail::read_defects(r, j.at("defects"), p);
  if (j.contains("boundary")) {
    std::string bc;
    r.string(j, "boundary", "config", bc);
    if (bc == "SSSS") {
      p.boundary = BoundaryCondition::SSSS;
    } else if (bc == "CCCC") {
      p.boundary = BoundaryCondition::CCCC;
    } else {
      r.fail("boundary", "expected SSSS or CCCC");
    }
  }
  if (j.contains("load")) detail::read_load(r, j.at("load"), p.load);
  if (j.contains("normalization")) {
    std::string n;
    r.string(j, "normalization", "config", n);
    if (n == "ceramic") {
      p.normalization = NormalizationRigidity::ceramic;
    } else if (n == "metal") {
      p.normalization = NormalizationRigidity::metal;
    } else {
      r.fail("normalization", "expected ceramic or metal");
    }
  }
  r.number(j, "thickness_points", "config", p.thickness_points);
  if (p.thickness_points < 2) r.fail("thickness_points", "must be >= 2");
  if (j.contains("solver")) detail::read_solver(r, j.at("solver"), p.solver);
  if (j.contains("sweep")) detail::read_sweep(r, j.at("sweep"), out.config.sweep);
  if (j.contains("output")) detail::read_output(r, j.at("output"), out.config.output);

  // Placement checks only make sense once the plate itself is sane.
  if (p.plate.a > 0.0 && p.plate.b > 0.0 && p.plate.h > 0.0) {
    for (const std::string& e : validate_defects(p.plate, p.defect_set())) r.fail("defects", e);
  }
  out.errors = r.errors;
  return out;
}

inline ParseOutcome parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    ParseOutcome out;
    out.errors.push_back(std::string("malformed JSON: ") + e.what());
    return out;
  }
  return parse_config_json(j);
}

/// Reads and validates a config file; throws ConfigError listing every
/// problem found.
inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cli", "cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ParseOutcome out = parse_config_text(buffer.str());
  if (!out.ok()) {
    std::string msg = "invalid config '" + path.string() + "':";
    for (const auto& e : out.errors) msg += "\n  " + e;
    throw ConfigError("cli", msg);
  }
  return out.config;
}

namespace detail {

inline json phase_to_json(const PhaseProperties& p) {
  return {{"youngs_modulus", p.youngs_modulus},
          {"poisson_ratio", p.poisson_ratio},
          {"thermal_expansion", p.thermal_expansion},
          {"conductivity", p.conductivity},
          {"density", p.density}};
}

}  // namespace detail

/// Fully explicit echo of a config; parse_config_json of it gives the same
/// config back.
inline nlohmann::json to_json(const RunConfig& cfg) {
  using nlohmann::json;
  const ProblemConfig& p = cfg.problem;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["plate"] = {{"a", p.plate.a}, {"b", p.plate.b}, {"h", p.plate.h}};
  j["material"] = {{"ceramic", detail::phase_to_json(p.ceramic)},
                   {"metal", detail::phase_to_json(p.metal)},
                   {"gradient_index", p.gradient_index},
                   {"shear_correction", p.shear_correction}};
  j["mesh"] = {{"nx", p.nx}, {"ny", p.ny}};
  json defects = json::array();
  for (const DefectSpec& d : p.defects) {
    if (const auto* c = std::get_if<CrackSpec>(&d)) {
      defects.push_back({{"type", "crack"},
                         {"center", {c->center.x(), c->center.y()}},
                         {"length", c->length},
                         {"angle_rad", c->angle}});
    } else if (const auto* o = std::get_if<CircleCutout>(&d)) {
      defects.push_back({{"type", "circle"}, {"center", {o->center.x(), o->center.y()}}, {"radius", o->radius}});
    } else {
      const auto& e = std::get<EllipseCutout>(d);
      defects.push_back({{"type", "ellipse"},
                         {"center", {e.center.x(), e.center.y()}},
                         {"d", e.d},
                         {"e", e.e},
                         {"angle_rad", e.angle}});
    }
  }
  j["defects"] = defects;
  j["boundary"] = to_string(p.boundary);
  j["load"] = {{"kind", to_string(p.load.kind)}};
  if (p.load.kind == LoadKind::thermal) {
    j["load"]["profile"] = p.load.profile == ProfileKind::linear ? "linear" : "nonlinear";
    j["load"]["metal_surface_temp"] = p.load.metal_surface_temp;
    j["load"]["reference_temp"] = p.load.reference_temp;
    j["load"]["strict_form"] = p.load.strict_thermal_form;
  }
  j["normalization"] = p.normalization == NormalizationRigidity::metal ? "metal" : "ceramic";
  j["thickness_points"] = p.thickness_points;
  const char* method = p.solver.method == SolverMethod::dense    ? "dense"
                       : p.solver.method == SolverMethod::sparse ? "sparse"
                                                                 : "auto";
  j["solver"] = {{"method", method}, {"dense_limit", p.solver.dense_limit}, {"max_iterations", p.solver.max_iterations}};
  if (!cfg.sweep.empty()) {
    json sweep = json::array();
    for (const auto& d : cfg.sweep) sweep.push_back({{"axis", to_string(d.axis)}, {"values", d.values}});
    j["sweep"] = sweep;
  }
  j["output"] = {{"directory", cfg.output.directory},
                 {"basename", cfg.output.basename},
                 {"csv", cfg.output.csv},
                 {"json", cfg.output.json},
                 {"mode_shape", cfg.output.mode_shape}};
  return j;
}

}  // namespace fgmbuck
