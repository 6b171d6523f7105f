#pragma once

#include <vector>

#include "polyvsi/block_matrix.hpp"

namespace polyvsi {

/// Nodal voltage phasors in polar form plus the continuation parameter.
/// Entry k * P + (p - 1) belongs to nodes[k], phase p.
struct OperatingPoint {
  std::vector<NodeId> nodes;
  int phases = 1;
  Eigen::VectorXd magnitude;  ///< volts
  Eigen::VectorXd angle;      ///< radians, wrapped to (-pi, pi]
  double xi = 1.0;

  Complex voltage(NodeId node, int phase) const;
  /// Voltages of `node` for all phases.
  CVector voltages(NodeId node) const;
  bool contains(NodeId node) const;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double radians);

}  // namespace polyvsi
