#pragma once

#include <span>
#include <vector>

#include "polyvsi/grid.hpp"
#include "polyvsi/node_models.hpp"
#include "polyvsi/operating_point.hpp"

namespace polyvsi {

/// Physical grid plus the Thevenin impedances of the slacks. Ordering is
/// internal source nodes I, then slacks S, zero-injection Z, resources R.
struct AugmentedGrid {
  BlockMatrix y_prime;
  std::vector<NodeId> internal_nodes;  ///< one per slack, same order as slack_nodes
  std::vector<NodeId> slack_nodes;
  std::vector<NodeId> zero_nodes;
  std::vector<NodeId> resource_nodes;
  CVector v_te;  ///< stacked source voltages over internal_nodes

  /// Grid node (S, Z, R) ordering without the internal nodes.
  std::vector<NodeId> grid_nodes() const;
};

/// Internal node ids are allocated above the largest grid node id.
AugmentedGrid build_augmented(const GridModel& grid, std::span<const SlackModel> slacks);

/// Eliminates S and Z from Y' and returns the hybrid blocks with M = R,
/// mapping [V_TE; I_R] to [I_S; V_R].
HybridPartition reduce_augmented(const AugmentedGrid& aug);

struct VsiCoefficient {
  PhaseIndex at;
  Complex a;
  Complex b;
  Complex c;
};

struct VsiCoefficients {
  std::vector<VsiCoefficient> entries;  ///< resource ordering, phases ascending
};

VsiCoefficients vsi_coefficients(const HybridPartition& h, const AugmentedGrid& aug,
                                 std::span<const ResourceModel> resources, const OperatingPoint& v);

struct LocalIndex {
  PhaseIndex at;
  double value = 0.0;
};

/// L = |1 - b / ((1 + a) V)| per resource phase.
std::vector<LocalIndex> vsi_local(const VsiCoefficients& coeffs, const OperatingPoint& v);

/// Dual expression |c / ((1 + a) V^2)|, equal to vsi_local at a power-flow solution.
std::vector<LocalIndex> vsi_local_dual(const VsiCoefficients& coeffs, const OperatingPoint& v);

struct VsiResult {
  std::vector<LocalIndex> local;  ///< sorted by (node, phase)
  double global = 0.0;
  PhaseIndex critical;
};

/// Maximum of the local indices; ties go to the lowest (node, phase).
VsiResult vsi_global(std::span<const LocalIndex> local);

/// Caches the hybrid blocks of one grid so that indices of many operating
/// points can be evaluated cheaply.
class VsiEvaluator {
 public:
  VsiEvaluator(const GridModel& grid, std::span<const SlackModel> slacks);

  const AugmentedGrid& augmented() const noexcept { return aug_; }
  const HybridPartition& hybrid() const noexcept { return hybrid_; }

  VsiResult evaluate(std::span<const ResourceModel> resources, const OperatingPoint& v) const;

 private:
  AugmentedGrid aug_;
  HybridPartition hybrid_;
};

}  // namespace polyvsi
