// Command-line front end: solve, sweep and dump-mesh.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgmbuck/analysis.hpp"
#include "fgmbuck/config.hpp"
#include "fgmbuck/errors.hpp"
#include "fgmbuck/output.hpp"

namespace {

using namespace fgmbuck;

struct Overrides {
  std::vector<int> mesh;
  std::string output;
};

RunConfig load(const std::string& path, const Overrides& o) {
  RunConfig cfg = parse_config(path);
  if (!o.mesh.empty()) {
    if (o.mesh[0] < 1 || o.mesh[1] < 1) throw ConfigError("cli", "--mesh values must be >= 1");
    cfg.problem.nx = o.mesh[0];
    cfg.problem.ny = o.mesh[1];
  }
  if (!o.output.empty()) cfg.output.directory = o.output;
  return cfg;
}

void print_result(const AnalysisResult& r) {
  std::printf("%s = %.6f\n", r.quantity.c_str(), r.normalized);
  std::printf("raw = %.10g, residual = %.3e, dofs = %d (free %d)\n", r.raw, r.residual, r.stats.total_dofs,
              r.stats.free_dofs);
}

void print_written(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::printf("wrote %s\n", f.string().c_str());
}

int solve(const std::string& path, const Overrides& o) {
  const RunConfig cfg = load(path, o);
  if (!cfg.sweep.empty()) std::fprintf(stderr, "note: config has a sweep section; 'solve' ignores it\n");
  ResultRecord rec{cfg.problem, {}, run(cfg.problem), {}};
  print_result(*rec.result);
  print_written(emit_results({rec}, cfg.output));
  return 0;
}

int sweep_cmd(const std::string& path, const Overrides& o) {
  const RunConfig cfg = load(path, o);
  if (cfg.sweep.empty()) throw ConfigError("cli", "config has no sweep section");
  const auto points = sweep(cfg.problem, cfg.sweep);
  int failed = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::string coords;
    for (const auto& [axis, v] : points[i].parameters) {
      coords += (coords.empty() ? "" : ", ") + std::string(to_string(axis)) + "=" + detail::fmt(v);
    }
    if (points[i].result) {
      std::printf("[%zu] %s: %s = %.6f\n", i, coords.c_str(), points[i].result->quantity.c_str(),
                  points[i].result->normalized);
    } else {
      ++failed;
      std::printf("[%zu] %s: FAILED %s\n", i, coords.c_str(), points[i].error.c_str());
    }
  }
  std::printf("%zu points, %zu succeeded, %d failed\n", points.size(), points.size() - failed, failed);
  print_written(emit_results(records_from_sweep(points), cfg.output));
  return failed == 0 ? 0 : 2;
}

int dump_mesh(const std::string& path, const Overrides& o) {
  const RunConfig cfg = load(path, o);
  validate(cfg.problem);
  const StructuredMesh mesh = generate_mesh(cfg.problem.plate, cfg.problem.nx, cfg.problem.ny);
  const EnrichmentMap map = classify(mesh, cfg.problem.defect_set());
  const auto file = std::filesystem::path(cfg.output.directory) / (cfg.output.basename + "_mesh.csv");
  auto out = detail::open_for_write(file);
  write_classification_csv(out, mesh, map);
  for (const auto& [cls, count] : collect_statistics(mesh, map).class_counts) {
    std::printf("%-20s %d\n", to_string(cls), count);
  }
  std::printf("heaviside nodes %zu, tip nodes %zu, inactive nodes %zu%s\n", map.heaviside_node_count(),
              map.tip_node_count(), map.inactive_node_count(), map.perturbed ? ", defects nudged off mesh lines" : "");
  print_written({file});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Buckling of cracked and perforated FGM plates (XFEM, first-order shear theory)"};
  app.require_subcommand(1);
  Overrides o;
  std::string config;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "JSON configuration file")->required();
    sub->add_option("--mesh", o.mesh, "Override the mesh: NX NY")->expected(2);
    sub->add_option("--output", o.output, "Override the output directory");
  };
  auto* solve_cmd = app.add_subcommand("solve", "Run a single analysis");
  auto* sweep_sub = app.add_subcommand("sweep", "Run the parameter sweep in the config");
  auto* dump_cmd = app.add_subcommand("dump-mesh", "Write the element classification CSV");
  for (auto* s : {solve_cmd, sweep_sub, dump_cmd}) add_common(s);
  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return solve(config, o);
    if (sweep_sub->parsed()) return sweep_cmd(config, o);
    if (dump_cmd->parsed()) return dump_mesh(config, o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
