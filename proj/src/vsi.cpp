#include "polyvsi/vsi.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

constexpr double kDenominatorGuard = 1e-9;

Complex nonzero_voltage(const OperatingPoint& v, PhaseIndex at) {
  const Complex value = v.voltage(at.node, at.phase);
  if (value == Complex(0.0, 0.0))
    throw ZeroVoltage(fmt::format("zero voltage at resource {} phase {}", at.node.value, at.phase));
  return value;
}

Complex guarded_denominator(const VsiCoefficient& e) {
  const Complex d = 1.0 + e.a;
  if (std::abs(d) < kDenominatorGuard)
    throw DegenerateDenominator(fmt::format("|1 + a| vanishes at node {} phase {}", e.at.node.value, e.at.phase));
  return d;
}

std::vector<LocalIndex> sorted(std::vector<LocalIndex> out) {
  std::sort(out.begin(), out.end(), [](const LocalIndex& x, const LocalIndex& y) { return x.at < y.at; });
  return out;
}

}  // namespace

std::vector<NodeId> AugmentedGrid::grid_nodes() const {
  std::vector<NodeId> out(slack_nodes);
  out.insert(out.end(), zero_nodes.begin(), zero_nodes.end());
  out.insert(out.end(), resource_nodes.begin(), resource_nodes.end());
  return out;
}

AugmentedGrid build_augmented(const GridModel& grid, std::span<const SlackModel> slacks) {
  AugmentedGrid aug;
  aug.slack_nodes = grid.nodes_with_role(NodeRole::slack);
  aug.zero_nodes = grid.nodes_with_role(NodeRole::zero_injection);
  aug.resource_nodes = grid.nodes_with_role(NodeRole::resource);
  if (aug.slack_nodes.empty()) throw InvalidModel("grid has no slack node");
  if (slacks.size() != aug.slack_nodes.size())
    throw InvalidModel(fmt::format("{} slack nodes but {} Thevenin models", aug.slack_nodes.size(), slacks.size()));

  const int p = grid.phases();
  int next_id = 0;
  for (const auto& n : grid.nodes()) next_id = std::max(next_id, n.id.value);
  std::vector<SlackInterface> te;
  aug.v_te.resize(static_cast<Eigen::Index>(slacks.size()) * p);
  for (std::size_t k = 0; k < aug.slack_nodes.size(); ++k) {
    auto it = std::find_if(slacks.begin(), slacks.end(), [&](const SlackModel& s) { return s.node == aug.slack_nodes[k]; });
    if (it == slacks.end()) throw InvalidModel(fmt::format("no Thevenin model for slack {}", aug.slack_nodes[k].value));
    if (it->v_te.size() != p) throw InvalidModel(fmt::format("slack {} has the wrong phase count", it->node.value));
    te.push_back(slack_interface(*it));
    aug.v_te.segment(static_cast<Eigen::Index>(k) * p, p) = it->v_te;
    aug.internal_nodes.push_back(NodeId{++next_id});
  }

  std::vector<NodeId> order(aug.internal_nodes);
  const auto physical = aug.grid_nodes();
  order.insert(order.end(), physical.begin(), physical.end());

  const BlockMatrix y = assemble_admittance(grid);
  const BlockMatrix y_grid = y.select(physical, physical);
  CMatrix dense = CMatrix::Zero(static_cast<Eigen::Index>(order.size()) * p, static_cast<Eigen::Index>(order.size()) * p);
  dense.bottomRightCorner(y_grid.dense().rows(), y_grid.dense().cols()) = y_grid.dense();
  aug.y_prime = BlockMatrix(order, order, p, std::move(dense));
  for (std::size_t k = 0; k < te.size(); ++k) {
    const NodeId i = aug.internal_nodes[k];
    const NodeId s = aug.slack_nodes[k];
    aug.y_prime.add_to_block(i, i, te[k].y_te);
    aug.y_prime.add_to_block(i, s, -te[k].y_te);
    aug.y_prime.add_to_block(s, i, -te[k].y_te);
    aug.y_prime.add_to_block(s, s, te[k].y_te);
  }
  return aug;
}

HybridPartition reduce_augmented(const AugmentedGrid& aug) {
  if (aug.resource_nodes.empty()) throw InvalidModel("grid has no resource node");
  std::vector<NodeId> eliminated(aug.slack_nodes);
  eliminated.insert(eliminated.end(), aug.zero_nodes.begin(), aug.zero_nodes.end());
  const BlockMatrix reduced = kron_reduce(aug.y_prime, eliminated);
  return hybrid_partition(reduced, aug.resource_nodes);
}

VsiCoefficients vsi_coefficients(const HybridPartition& h, const AugmentedGrid& aug,
                                 std::span<const ResourceModel> resources, const OperatingPoint& v) {
  const int p = h.h_m_m.phases();
  std::map<NodeId, const ResourceModel*> by_node;
  for (const auto& r : resources) by_node[r.node] = &r;

  const auto n = static_cast<Eigen::Index>(h.m_set.size()) * p;
  CVector volt(n), v_y(n), cur(n), s_over_v(n);
  std::vector<PhaseIndex> index;
  index.reserve(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < h.m_set.size(); ++j) {
    const NodeId node = h.m_set[j];
    auto it = by_node.find(node);
    if (it == by_node.end()) throw InvalidModel(fmt::format("no polynomial model for resource {}", node.value));
    if (static_cast<int>(it->second->phases.size()) != p)
      throw InvalidModel(fmt::format("resource {} has the wrong phase count", node.value));
    for (int q = 1; q <= p; ++q) {
      const auto k = static_cast<Eigen::Index>(j) * p + q - 1;
      const PhaseIndex at{node, q};
      volt(k) = nonzero_voltage(v, at);
      const auto d = pm_zip_at(*it->second, q, volt(k));
      v_y(k) = volt(k) * d.y_pm;
      cur(k) = d.i_pm;
      s_over_v(k) = std::conj(d.s_pm / volt(k));
      index.push_back(at);
    }
  }

  // Rows of H_RI V_TE give the open-circuit voltages seen by each resource.
  const CVector v_te_tilde = h.h_m_mc.dense() * aug.v_te;
  const CMatrix& h_rr = h.h_m_m.dense();
  VsiCoefficients out;
  out.entries.reserve(index.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto row = h_rr.row(k);
    Complex sum_y(0.0), sum_i(0.0), sum_s(0.0);
    for (Eigen::Index c = 0; c < n; ++c) {
      sum_y += row(c) * v_y(c);
      sum_i += row(c) * cur(c);
      sum_s += row(c) * s_over_v(c);
    }
    const Complex vk = volt(k);
    out.entries.push_back(VsiCoefficient{index[static_cast<std::size_t>(k)], sum_y / vk, sum_i + v_te_tilde(k),
                                         std::conj(vk) * sum_s});
  }
  return out;
}

std::vector<LocalIndex> vsi_local(const VsiCoefficients& coeffs, const OperatingPoint& v) {
  std::vector<LocalIndex> out;
  out.reserve(coeffs.entries.size());
  for (const auto& e : coeffs.entries) {
    const Complex vk = nonzero_voltage(v, e.at);
    out.push_back({e.at, std::abs(1.0 - e.b / (guarded_denominator(e) * vk))});
  }
  return sorted(std::move(out));
}

std::vector<LocalIndex> vsi_local_dual(const VsiCoefficients& coeffs, const OperatingPoint& v) {
  std::vector<LocalIndex> out;
  out.reserve(coeffs.entries.size());
  for (const auto& e : coeffs.entries) {
    const Complex vk = nonzero_voltage(v, e.at);
    out.push_back({e.at, std::abs(e.c / (guarded_denominator(e) * vk * vk))});
  }
  return sorted(std::move(out));
}

VsiResult vsi_global(std::span<const LocalIndex> local) {
  if (local.empty()) throw std::invalid_argument("no local indices");
  VsiResult out;
  out.local = sorted({local.begin(), local.end()});
  out.global = out.local.front().value;
  out.critical = out.local.front().at;
  for (const auto& l : out.local) {
    if (l.value > out.global) {
      out.global = l.value;
      out.critical = l.at;
    }
  }
  return out;
}

VsiEvaluator::VsiEvaluator(const GridModel& grid, std::span<const SlackModel> slacks)
    : aug_(build_augmented(grid, slacks)), hybrid_(reduce_augmented(aug_)) {}

VsiResult VsiEvaluator::evaluate(std::span<const ResourceModel> resources, const OperatingPoint& v) const {
  const auto coeffs = vsi_coefficients(hybrid_, aug_, resources, v);
  return vsi_global(vsi_local(coeffs, v));
}

}  // namespace polyvsi
