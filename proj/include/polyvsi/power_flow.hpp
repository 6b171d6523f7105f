#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "polyvsi/grid.hpp"
#include "polyvsi/node_models.hpp"
#include "polyvsi/operating_point.hpp"
#include "polyvsi/vsi.hpp"

namespace polyvsi {

/// Power mismatch V conj(Y'V) - S_model per unknown phase, in W and var.
struct Mismatch {
  std::vector<PhaseIndex> index;
  Eigen::VectorXd dp;
  Eigen::VectorXd dq;

  double max_abs() const;
};

/// Derivatives of the normalized residual with respect to the normalized
/// state [E / E_base; theta] and to the continuation parameter xi.
struct Jacobian {
  Eigen::MatrixXd dx;
  Eigen::VectorXd dxi;
};

/// Power-flow equations on the augmented grid. The Thevenin internal
/// voltages are fixed; magnitudes and angles of every grid node are
/// unknown. Residuals are scaled by s_base, magnitudes by the nominal
/// phase-to-ground voltage of each node.
class PowerFlowSystem {
 public:
  PowerFlowSystem(GridModel grid, std::vector<SlackModel> slacks, std::vector<ResourceModel> resources,
                  double s_base = 1e6);

  const GridModel& grid() const noexcept { return grid_; }
  const std::vector<SlackModel>& slacks() const noexcept { return slacks_; }
  const std::vector<ResourceModel>& resources() const noexcept { return resources_; }
  const AugmentedGrid& augmented() const noexcept { return aug_; }
  /// Node ordering of the unknowns (slacks, zero-injection, resources).
  const std::vector<NodeId>& unknown_nodes() const noexcept { return unknown_nodes_; }
  int phases() const noexcept { return grid_.phases(); }
  /// Length of the state vector, 2 * |unknown nodes| * P.
  Eigen::Index dimension() const noexcept { return 2 * unknown_count(); }
  Eigen::Index unknown_count() const noexcept { return voltage_base_.size(); }
  double s_base() const noexcept { return s_base_; }
  const Eigen::VectorXd& voltage_base() const noexcept { return voltage_base_; }

  /// Resource models with the loading factors of the uniform load increase.
  std::vector<ResourceModel> resources_at(double xi) const;

  /// Nominal magnitudes and positive-sequence angles aligned with the first slack source.
  OperatingPoint flat_start(double xi) const;

  Eigen::VectorXd state(const OperatingPoint& point) const;
  OperatingPoint point(const Eigen::VectorXd& state, double xi) const;

  Eigen::VectorXd residual(const Eigen::VectorXd& state, double xi) const;
  Jacobian jacobian(const Eigen::VectorXd& state, double xi) const;

  /// Unknown-node voltages as complex phasors.
  CVector voltages(const Eigen::VectorXd& state) const;

 private:
  GridModel grid_;
  std::vector<SlackModel> slacks_;
  std::vector<ResourceModel> resources_;
  AugmentedGrid aug_;
  std::vector<NodeId> unknown_nodes_;
  double s_base_;
  Eigen::VectorXd voltage_base_;
  CMatrix y_uu_;   // unknown x unknown block of Y'
  CVector i_src_;  // currents driven into the unknowns by the fixed sources
  std::vector<int> resource_of_;  // per unknown node: index into resources_ or -1
};

Mismatch mismatch(const PowerFlowSystem& system, const OperatingPoint& point);
Jacobian jacobian(const PowerFlowSystem& system, const OperatingPoint& point);

struct NewtonOptions {
  double eps = 1e-8;
  int max_iter = 30;
};

struct NewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;                 ///< correction steps taken
  std::vector<double> residual_norms; ///< infinity norm before each convergence check
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Newton-Raphson: check ||g(x)||_inf <= eps, otherwise solve J dx = g and
/// set x <- x - dx. Throws NonConvergence or SingularJacobian.
NewtonResult newton_solve(const ResidualFn& g, const JacobianFn& jac, Eigen::VectorXd x0, const NewtonOptions& options);

struct PowerFlowSolution {
  OperatingPoint point;
  int iterations = 0;
  std::vector<double> residual_norms;
};

PowerFlowSolution solve_power_flow(const PowerFlowSystem& system, double xi,
                                   const std::optional<OperatingPoint>& initial = std::nullopt,
                                   const NewtonOptions& options = {});

/// Natural-parameter ramp from start_xi to xi, warm-starting each solve and
/// halving the increment after a failure. Throws NonConvergence when the
/// increment falls below 1e-6, e.g. for xi beyond the loadability limit.
PowerFlowSolution solve_power_flow_ramped(const PowerFlowSystem& system, double xi, const NewtonOptions& options = {},
                                          double start_xi = 1.0);

struct SingularValueSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

SingularValueSummary jacobian_svd(const Eigen::MatrixXd& j);

struct BranchFlow {
  std::size_t branch = 0;
  NodeId from;
  NodeId to;
  CVector i_from;  ///< amperes, at the from terminal, flowing towards `to`
  CVector i_to;    ///< amperes, at the to terminal, flowing towards `to`
};

std::vector<BranchFlow> branch_flows(const PowerFlowSystem& system, const OperatingPoint& point);

}  // namespace polyvsi
