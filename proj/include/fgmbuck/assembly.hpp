#pragma once

// Global numbering of standard and enriched unknowns, sparse assembly and
// essential boundary conditions by row/column elimination.

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fgmbuck/element.hpp"
#include "fgmbuck/errors.hpp"
#include "fgmbuck/geometry.hpp"

namespace fgmbuck {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Standard unknowns first (node-major, five per node), then one five-wide
/// Heaviside block per (node, crack), then one 23-wide tip block per
/// (node, crack, tip).
struct DofMap {
  int node_count = 0;
  int total = 0;
  std::map<std::pair<int, int>, int> heaviside_base;
  std::map<std::tuple<int, int, int>, int> tip_base;

  int standard(int node, Field f) const { return kStandardDofs * node + static_cast<int>(f); }
};

inline DofMap number_dofs(const StructuredMesh& mesh, const EnrichmentMap& map) {
  DofMap dofs;
  dofs.node_count = static_cast<int>(mesh.nodes.size());
  int next = kStandardDofs * dofs.node_count;
  for (int n = 0; n < dofs.node_count; ++n) {
    for (int crack : map.nodes[n].heaviside) {
      dofs.heaviside_base[{n, crack}] = next;
      next += kHeavisideDofs;
    }
  }
  for (int n = 0; n < dofs.node_count; ++n) {
    for (const TipKey& t : map.nodes[n].tips) {
      dofs.tip_base[{n, t.crack, t.tip}] = next;
      next += kTipDofs;
    }
  }
  dofs.total = next;
  return dofs;
}

/// Element unknowns in local order: 20 standard, then each node's Heaviside
/// blocks, then each node's tip blocks.
inline std::vector<DofDescriptor> element_dofs(const StructuredMesh& mesh, const EnrichmentMap& map, const DofMap& dofs,
                                               int e) {
  std::vector<DofDescriptor> out;
  const auto& conn = mesh.elements[e];
  for (int a = 0; a < 4; ++a) {
    for (int f = 0; f < kStandardDofs; ++f) {
      out.push_back({dofs.standard(conn[a], static_cast<Field>(f)), static_cast<Field>(f), DofKind::standard, a});
    }
  }
  for (int a = 0; a < 4; ++a) {
    for (int crack : map.nodes[conn[a]].heaviside) {
      const int base = dofs.heaviside_base.at({conn[a], crack});
      for (int f = 0; f < kHeavisideDofs; ++f) {
        out.push_back({base + f, static_cast<Field>(f), DofKind::heaviside, a, crack});
      }
    }
  }
  for (int a = 0; a < 4; ++a) {
    for (const TipKey& t : map.nodes[conn[a]].tips) {
      const int base = dofs.tip_base.at({conn[a], t.crack, t.tip});
      for (int k = 0; k < kTipDofs; ++k) {
        const auto [field, fn] = tip_block_entry(k);
        out.push_back({base + k, field, DofKind::tip, a, t.crack, t.tip, fn});
      }
    }
  }
  return out;
}

struct ElementContribution {
  std::vector<int> dofs;  // global indices, local order
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd geometric;
};

struct GlobalSystem {
  SparseMatrix stiffness;
  SparseMatrix geometric;
  DofMap dofs;
  std::vector<bool> inactive_nodes;
};

/// Scatter-adds element matrices in the order given.
inline GlobalSystem assemble(int size, const std::vector<ElementContribution>& elements) {
  std::vector<Eigen::Triplet<double>> k, kg;
  for (const auto& el : elements) {
    const int n = static_cast<int>(el.dofs.size());
    const bool has_k = el.stiffness.size() > 0, has_g = el.geometric.size() > 0;
    if ((has_k && el.stiffness.rows() != n) || (has_g && el.geometric.rows() != n)) {
      throw InternalError("assembly", "element matrix size does not match its DOF list");
    }
    for (int i = 0; i < n; ++i) {
      const int gi = el.dofs[i];
      if (gi < 0 || gi >= size) throw InternalError("assembly", "global index out of range");
      for (int j = 0; j < n; ++j) {
        const int gj = el.dofs[j];
        if (has_k && el.stiffness(i, j) != 0.0) k.emplace_back(gi, gj, el.stiffness(i, j));
        if (has_g && el.geometric(i, j) != 0.0) kg.emplace_back(gi, gj, el.geometric(i, j));
      }
    }
  }
  GlobalSystem sys;
  sys.stiffness.resize(size, size);
  sys.geometric.resize(size, size);
  sys.stiffness.setFromTriplets(k.begin(), k.end());
  sys.geometric.setFromTriplets(kg.begin(), kg.end());
  sys.dofs.total = size;
  return sys;
}

enum class BoundaryCondition { SSSS, CCCC };

inline const char* to_string(BoundaryCondition bc) { return bc == BoundaryCondition::SSSS ? "SSSS" : "CCCC"; }

/// Constrained field components at a node for the given support.
inline std::set<Field> constrained_fields(const Vec2& x, BoundaryCondition bc, double a, double b) {
  const double tol = 1e-9 * std::min(a, b);
  const bool on_x_edge = std::abs(x.x()) < tol || std::abs(x.x() - a) < tol;
  const bool on_y_edge = std::abs(x.y()) < tol || std::abs(x.y() - b) < tol;
  std::set<Field> out;
  if (!on_x_edge && !on_y_edge) return out;
  if (bc == BoundaryCondition::CCCC) return {Field::u, Field::v, Field::w, Field::beta_x, Field::beta_y};
  if (on_x_edge) out.insert({Field::u, Field::w, Field::beta_y});
  if (on_y_edge) out.insert({Field::v, Field::w, Field::beta_x});
  return out;
}

/// Global indices removed by the support conditions plus every unknown of an
/// inactive node. Enriched blocks follow their node's standard components.
inline std::vector<int> constrained_dofs(const StructuredMesh& mesh, const GlobalSystem& sys, BoundaryCondition bc) {
  std::vector<char> fixed(sys.dofs.total, 0);
  auto fix_node = [&](int node, const std::set<Field>& fields) {
    for (Field f : fields) fixed[sys.dofs.standard(node, f)] = 1;
    for (const auto& [key, base] : sys.dofs.heaviside_base) {
      if (key.first != node) continue;
      for (Field f : fields) fixed[base + static_cast<int>(f)] = 1;
    }
    for (const auto& [key, base] : sys.dofs.tip_base) {
      if (std::get<0>(key) != node) continue;
      for (int k = 0; k < kTipDofs; ++k) {
        if (fields.count(tip_block_entry(k).first)) fixed[base + k] = 1;
      }
    }
  };
  const std::set<Field> all = {Field::u, Field::v, Field::w, Field::beta_x, Field::beta_y};
  for (int n = 0; n < static_cast<int>(mesh.nodes.size()); ++n) {
    if (!sys.inactive_nodes.empty() && sys.inactive_nodes[n]) {
      fix_node(n, all);
      continue;
    }
    fix_node(n, constrained_fields(mesh.nodes[n], bc, mesh.a, mesh.b));
  }
  std::vector<int> out;
  for (int i = 0; i < sys.dofs.total; ++i) {
    if (fixed[i]) out.push_back(i);
  }
  return out;
}

struct ReducedSystem {
  SparseMatrix stiffness;
  SparseMatrix geometric;
  std::vector<int> free;  // reduced index -> global index
  int full_size = 0;

  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(full_size);
    for (std::size_t i = 0; i < free.size(); ++i) full(free[i]) = reduced(static_cast<Eigen::Index>(i));
    return full;
  }
};

/// Keeps the rows/columns not in `constrained`.
inline ReducedSystem reduce(const GlobalSystem& sys, const std::vector<int>& constrained) {
  const int n = sys.dofs.total;
  std::vector<char> fixed(n, 0);
  for (int c : constrained) fixed[c] = 1;
  ReducedSystem out;
  out.full_size = n;
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) out.free.push_back(i);
  }
  const int m = static_cast<int>(out.free.size());
  SparseMatrix select(n, m);
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < m; ++j) t.emplace_back(out.free[j], j, 1.0);
  select.setFromTriplets(t.begin(), t.end());
  out.stiffness = SparseMatrix(select.transpose() * sys.stiffness * select);
  out.geometric = SparseMatrix(select.transpose() * sys.geometric * select);
  return out;
}

inline ReducedSystem apply_bcs(const GlobalSystem& sys, BoundaryCondition bc, const StructuredMesh& mesh) {
  return reduce(sys, constrained_dofs(mesh, sys, bc));
}

}  // namespace fgmbuck
