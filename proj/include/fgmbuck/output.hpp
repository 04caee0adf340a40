#pragma once

// Result emission: one CSV row per analysis, JSON records, and legacy ASCII
// VTK for mode shapes.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgmbuck/analysis.hpp"
#include "fgmbuck/config.hpp"
#include "fgmbuck/errors.hpp"

namespace fgmbuck {

/// One emitted row: the configuration that was run, any sweep coordinates,
/// and either a result or the error that stopped it.
struct ResultRecord {
  ProblemConfig config;
  std::vector<std::pair<SweepAxis, double>> parameters;
  std::optional<AnalysisResult> result;
  std::string error;
};

inline std::vector<ResultRecord> records_from_sweep(const std::vector<SweepPoint>& points) {
  std::vector<ResultRecord> out;
  for (const auto& p : points) out.push_back({p.config, p.parameters, p.result, p.error});
  return out;
}

namespace detail {

/// Shortest of %.15g..%.17g that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cli", "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

/// Writes the CSV table. Sweep axes present in any record become columns,
/// in first-seen order.
inline void write_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
  if (records.empty()) throw ConfigError("cli", "no results to write");
  std::vector<SweepAxis> axes;
  for (const auto& r : records) {
    for (const auto& [axis, _] : r.parameters) {
      if (std::find(axes.begin(), axes.end(), axis) == axes.end()) axes.push_back(axis);
    }
  }
  out << "index";
  for (SweepAxis a : axes) out << ",sweep_" << to_string(a);
  out << ",a,b,h,ceramic_E,metal_E,gradient_index,shear_correction,nx,ny,boundary,load,profile,normalization,"
         "cracks,cutouts,quantity,raw,normalized,residual,total_dofs,free_dofs,status,error\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ResultRecord& r = records[i];
    const ProblemConfig& c = r.config;
    out << i;
    for (SweepAxis a : axes) {
      out << ',';
      for (const auto& [axis, v] : r.parameters) {
        if (axis == a) out << detail::fmt(v);
      }
    }
    const DefectSet d = c.defect_set();
    out << ',' << detail::fmt(c.plate.a) << ',' << detail::fmt(c.plate.b) << ',' << detail::fmt(c.plate.h) << ','
        << detail::fmt(c.ceramic.youngs_modulus) << ',' << detail::fmt(c.metal.youngs_modulus) << ','
        << detail::fmt(c.gradient_index) << ',' << detail::fmt(c.shear_correction) << ',' << c.nx << ',' << c.ny << ','
        << to_string(c.boundary) << ',' << to_string(c.load.kind) << ','
        << (c.load.kind != LoadKind::thermal ? "" : c.load.profile == ProfileKind::linear ? "linear" : "nonlinear")
        << ',' << (c.normalization == NormalizationRigidity::metal ? "metal" : "ceramic") << ',' << d.cracks.size()
        << ',' << d.cutouts.size() << ',';
    if (r.result) {
      const AnalysisResult& a = *r.result;
      out << a.quantity << ',' << detail::fmt(a.raw) << ',' << detail::fmt(a.normalized) << ','
          << detail::fmt(a.residual) << ',' << a.stats.total_dofs << ',' << a.stats.free_dofs << ",ok,\n";
    } else {
      out << ",,,,,,failed," << detail::csv_quote(r.error) << '\n';
    }
  }
}

inline nlohmann::json to_json(const ResultRecord& r) {
  nlohmann::json j;
  j["config"] = to_json(RunConfig{r.config, {}, {}});
  j["config"].erase("output");
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [axis, v] : r.parameters) params[to_string(axis)] = v;
  j["parameters"] = params;
  if (r.result) {
    const AnalysisResult& a = *r.result;
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [cls, count] : a.stats.class_counts) classes[to_string(cls)] = count;
    j["result"] = {{"quantity", a.quantity},
                   {"raw", a.raw},
                   {"normalized", a.normalized},
                   {"residual", a.residual},
                   {"statistics",
                    {{"elements", a.stats.elements},
                     {"nodes", a.stats.nodes},
                     {"element_classes", classes},
                     {"heaviside_nodes", a.stats.heaviside_nodes},
                     {"tip_nodes", a.stats.tip_nodes},
                     {"inactive_nodes", a.stats.inactive_nodes},
                     {"total_dofs", a.stats.total_dofs},
                     {"free_dofs", a.stats.free_dofs},
                     {"dropped_triangles", a.stats.dropped_triangles},
                     {"perturbed", a.stats.perturbed}}}};
  } else {
    j["error"] = r.error;
  }
  return j;
}

inline void write_json(std::ostream& out, const std::vector<ResultRecord>& records) {
  if (records.empty()) throw ConfigError("cli", "no results to write");
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  out << arr.dump(2) << '\n';
}

/// Legacy ASCII unstructured grid: mesh nodes in the z = 0 plane, VTK_QUAD
/// cells and one point scalar.
inline void write_vtk(std::ostream& out, const StructuredMesh& mesh, const std::vector<double>& w,
                      const std::string& name = "w") {
  if (w.size() != mesh.nodes.size()) throw DomainError("cli", "mode has " + std::to_string(w.size()) +
                                                                  " values for " + std::to_string(mesh.nodes.size()) +
                                                                  " nodes");
  out << "# vtk DataFile Version 3.0\nbuckling mode\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.nodes.size() << " double\n";
  for (const Vec2& p : mesh.nodes) out << detail::fmt(p.x()) << ' ' << detail::fmt(p.y()) << " 0\n";
  out << "CELLS " << mesh.elements.size() << ' ' << 5 * mesh.elements.size() << '\n';
  for (const auto& e : mesh.elements) out << "4 " << e[0] << ' ' << e[1] << ' ' << e[2] << ' ' << e[3] << '\n';
  out << "CELL_TYPES " << mesh.elements.size() << '\n';
  for (std::size_t i = 0; i < mesh.elements.size(); ++i) out << "9\n";
  out << "POINT_DATA " << mesh.nodes.size() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : w) out << detail::fmt(v) << '\n';
}

/// Element classification table used by `dump-mesh`.
inline void write_classification_csv(std::ostream& out, const StructuredMesh& mesh, const EnrichmentMap& map) {
  out << "element,i,j,x0,y0,class,crack,tip,cutouts,material_fraction,heaviside_nodes,tip_nodes\n";
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const ElementInfo& info = map.elements[e];
    const Vec2 o = mesh.element_origin(static_cast<int>(e));
    int heavi = 0, tip = 0;
    for (int n : mesh.elements[e]) {
      heavi += map.nodes[n].heaviside.empty() ? 0 : 1;
      tip += map.nodes[n].tips.empty() ? 0 : 1;
    }
    std::string cutouts;
    for (int k : info.cutouts) cutouts += (cutouts.empty() ? "" : ";") + std::to_string(k);
    out << e << ',' << mesh.element_column(static_cast<int>(e)) << ',' << mesh.element_row(static_cast<int>(e)) << ','
        << detail::fmt(o.x()) << ',' << detail::fmt(o.y()) << ',' << to_string(info.cls) << ',' << info.crack << ','
        << info.tip << ',' << cutouts << ',' << detail::fmt(info.material_fraction) << ',' << heavi << ',' << tip
        << '\n';
  }
}

/// Writes the files requested by `spec` and returns their paths.
inline std::vector<std::filesystem::path> emit_results(const std::vector<ResultRecord>& records,
                                                       const OutputSpec& spec) {
  if (records.empty()) throw ConfigError("cli", "no results to write");
  const std::filesystem::path dir(spec.directory);
  std::vector<std::filesystem::path> written;
  if (spec.csv) {
    const auto path = dir / (spec.basename + ".csv");
    auto out = detail::open_for_write(path);
    write_csv(out, records);
    written.push_back(path);
  }
  if (spec.json) {
    const auto path = dir / (spec.basename + ".json");
    auto out = detail::open_for_write(path);
    write_json(out, records);
    written.push_back(path);
  }
  if (spec.mode_shape) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].result) continue;
      const ProblemConfig& c = records[i].config;
      const StructuredMesh mesh = generate_mesh(c.plate, c.nx, c.ny);
      const std::string suffix = records.size() == 1 ? "" : "_" + std::to_string(i);
      const auto path = dir / (spec.basename + "_mode" + suffix + ".vtk");
      auto out = detail::open_for_write(path);
      write_vtk(out, mesh, records[i].result->nodal_w);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace fgmbuck
