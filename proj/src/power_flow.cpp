#include "polyvsi/power_flow.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

constexpr Complex kJ(0.0, 1.0);

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

double Mismatch::max_abs() const { return std::max(inf_norm(dp), inf_norm(dq)); }

PowerFlowSystem::PowerFlowSystem(GridModel grid, std::vector<SlackModel> slacks, std::vector<ResourceModel> resources,
                                 double s_base)
    : grid_(std::move(grid)),
      slacks_(std::move(slacks)),
      resources_(std::move(resources)),
      aug_(build_augmented(grid_, slacks_)),
      unknown_nodes_(aug_.grid_nodes()),
      s_base_(s_base) {
  if (!(s_base_ > 0.0)) throw InvalidModel("s_base must be positive");
  const int p = grid_.phases();
  const auto n_u = static_cast<Eigen::Index>(unknown_nodes_.size()) * p;
  const auto n_i = static_cast<Eigen::Index>(aug_.internal_nodes.size()) * p;

  voltage_base_.resize(n_u);
  resource_of_.assign(unknown_nodes_.size(), -1);
  for (std::size_t k = 0; k < unknown_nodes_.size(); ++k) {
    voltage_base_.segment(static_cast<Eigen::Index>(k) * p, p).setConstant(grid_.node(unknown_nodes_[k]).nominal_voltage);
    for (std::size_t r = 0; r < resources_.size(); ++r) {
      if (resources_[r].node != unknown_nodes_[k]) continue;
      if (resource_of_[k] >= 0) throw InvalidModel(fmt::format("two resources at node {}", unknown_nodes_[k].value));
      resource_of_[k] = static_cast<int>(r);
    }
  }
  for (const auto& r : resources_) {
    validate(r);
    if (static_cast<int>(r.phases.size()) != p)
      throw InvalidModel(fmt::format("resource {} has the wrong phase count", r.node.value));
    if (!grid_.contains(r.node) || grid_.node(r.node).role != NodeRole::resource)
      throw InvalidModel(fmt::format("resource model at node {} which is not a resource node", r.node.value));
  }
  for (std::size_t k = 0; k < unknown_nodes_.size(); ++k)
    if (grid_.node(unknown_nodes_[k]).role == NodeRole::resource && resource_of_[k] < 0)
      throw InvalidModel(fmt::format("no polynomial model for resource {}", unknown_nodes_[k].value));

  const CMatrix& y = aug_.y_prime.dense();
  y_uu_ = y.bottomRightCorner(n_u, n_u);
  i_src_ = y.bottomLeftCorner(n_u, n_i) * aug_.v_te;
}

std::vector<ResourceModel> PowerFlowSystem::resources_at(double xi) const {
  std::vector<ResourceModel> out(resources_);
  for (auto& r : out) {
    const double lambda = trajectory_lambda(r.kind, xi);
    for (auto& ph : r.phases) ph.lambda = lambda;
  }
  return out;
}

OperatingPoint PowerFlowSystem::flat_start(double xi) const {
  const int p = phases();
  const double offset = std::arg(aug_.v_te(0));
  OperatingPoint op;
  op.nodes = unknown_nodes_;
  op.phases = p;
  op.magnitude = voltage_base_;
  op.angle.resize(voltage_base_.size());
  for (Eigen::Index k = 0; k < op.angle.size(); ++k)
    op.angle(k) = wrap_angle(offset - 2.0 * std::numbers::pi * static_cast<double>(k % p) / p);
  op.xi = xi;
  return op;
}

Eigen::VectorXd PowerFlowSystem::state(const OperatingPoint& point) const {
  const int p = phases();
  if (point.phases != p) throw InvalidModel("operating point has the wrong phase count");
  const auto n = unknown_count();
  Eigen::VectorXd x(2 * n);
  for (std::size_t k = 0; k < unknown_nodes_.size(); ++k) {
    const CVector v = point.voltages(unknown_nodes_[k]);
    for (int q = 0; q < p; ++q) {
      const auto i = static_cast<Eigen::Index>(k) * p + q;
      x(i) = std::abs(v(q)) / voltage_base_(i);
      x(n + i) = std::arg(v(q));
    }
  }
  return x;
}

OperatingPoint PowerFlowSystem::point(const Eigen::VectorXd& state, double xi) const {
  const auto n = unknown_count();
  OperatingPoint op;
  op.nodes = unknown_nodes_;
  op.phases = phases();
  op.magnitude.resize(n);
  op.angle.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double e = state(i) * voltage_base_(i);
    double theta = state(n + i);
    if (e < 0.0) {
      e = -e;
      theta += std::numbers::pi;
    }
    op.magnitude(i) = e;
    op.angle(i) = wrap_angle(theta);
  }
  op.xi = xi;
  return op;
}

CVector PowerFlowSystem::voltages(const Eigen::VectorXd& state) const {
  const auto n = unknown_count();
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std::polar(1.0, state(n + i)) * (state(i) * voltage_base_(i));
  return v;
}

Eigen::VectorXd PowerFlowSystem::residual(const Eigen::VectorXd& state, double xi) const {
  const int p = phases();
  const auto n = unknown_count();
  const CVector v = voltages(state);
  const CVector cur = y_uu_ * v + i_src_;
  const auto res = resources_at(xi);
  Eigen::VectorXd f(2 * n);
  for (std::size_t k = 0; k < unknown_nodes_.size(); ++k) {
    for (int q = 0; q < p; ++q) {
      const auto i = static_cast<Eigen::Index>(k) * p + q;
      Complex ds = v(i) * std::conj(cur(i));
      if (resource_of_[k] >= 0) ds -= pm_power_at(res[static_cast<std::size_t>(resource_of_[k])], q + 1, v(i));
      f(i) = ds.real() / s_base_;
      f(n + i) = ds.imag() / s_base_;
    }
  }
  return f;
}

Jacobian PowerFlowSystem::jacobian(const Eigen::VectorXd& state, double xi) const {
  const int p = phases();
  const auto n = unknown_count();
  const CVector v = voltages(state);
  const CVector cur = y_uu_ * v + i_src_;
  CVector unit(n);
  for (Eigen::Index i = 0; i < n; ++i) unit(i) = std::polar(1.0, state(n + i));

  // dS/dtheta = j diag(V) conj(diag(I)) - j diag(V) conj(Y diag(V))
  // dS/dE     = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
  CMatrix ds_dtheta(n, n), ds_de(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const Complex yc = std::conj(y_uu_(r, c));
      ds_dtheta(r, c) = -kJ * v(r) * yc * std::conj(v(c));
      ds_de(r, c) = v(r) * yc * std::conj(unit(c)) * voltage_base_(c);
    }
    ds_dtheta(c, c) += kJ * v(c) * std::conj(cur(c));
    ds_de(c, c) += std::conj(cur(c)) * unit(c) * voltage_base_(c);
  }

  Jacobian out;
  out.dxi = Eigen::VectorXd::Zero(2 * n);
  const auto res = resources_at(xi);
  for (std::size_t k = 0; k < unknown_nodes_.size(); ++k) {
    if (resource_of_[k] < 0) continue;
    const auto& model = res[static_cast<std::size_t>(resource_of_[k])];
    ResourceModel unit_model = model;
    const double slope = trajectory_lambda_slope(model.kind);
    for (auto& ph : unit_model.phases) ph.lambda = slope;
    for (int q = 0; q < p; ++q) {
      const auto i = static_cast<Eigen::Index>(k) * p + q;
      ds_de(i, i) -= pm_power_slope(model, q + 1, std::abs(v(i))) * voltage_base_(i);
      const Complex ds_dxi = -pm_power_at(unit_model, q + 1, v(i));
      out.dxi(i) = ds_dxi.real() / s_base_;
      out.dxi(n + i) = ds_dxi.imag() / s_base_;
    }
  }

  out.dx.resize(2 * n, 2 * n);
  out.dx.topLeftCorner(n, n) = ds_de.real() / s_base_;
  out.dx.topRightCorner(n, n) = ds_dtheta.real() / s_base_;
  out.dx.bottomLeftCorner(n, n) = ds_de.imag() / s_base_;
  out.dx.bottomRightCorner(n, n) = ds_dtheta.imag() / s_base_;
  return out;
}

Mismatch mismatch(const PowerFlowSystem& system, const OperatingPoint& point) {
  const auto f = system.residual(system.state(point), point.xi);
  const auto n = system.unknown_count();
  Mismatch out;
  for (const auto& node : system.unknown_nodes())
    for (int q = 1; q <= system.phases(); ++q) out.index.push_back({node, q});
  out.dp = f.head(n) * system.s_base();
  out.dq = f.tail(n) * system.s_base();
  return out;
}

Jacobian jacobian(const PowerFlowSystem& system, const OperatingPoint& point) {
  return system.jacobian(system.state(point), point.xi);
}

NewtonResult newton_solve(const ResidualFn& g, const JacobianFn& jac, Eigen::VectorXd x0, const NewtonOptions& options) {
  NewtonResult out;
  out.x = std::move(x0);
  for (int i = 0;; ++i) {
    const Eigen::VectorXd r = g(out.x);
    const double norm = inf_norm(r);
    out.residual_norms.push_back(norm);
    if (!std::isfinite(norm))
      throw NonConvergence(fmt::format("residual became non-finite after {} iterations", i), out.residual_norms);
    if (norm <= options.eps) {
      out.iterations = i;
      return out;
    }
    if (i >= options.max_iter)
      throw NonConvergence(fmt::format("no convergence in {} iterations (residual {:.3e})", options.max_iter, norm),
                           out.residual_norms);
    const Eigen::MatrixXd j = jac(out.x);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(j);
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-15)) throw SingularJacobian(fmt::format("Jacobian is singular (rcond {:.3e})", rcond));
    const Eigen::VectorXd dx = lu.solve(r);
    if (!dx.allFinite()) throw SingularJacobian("Newton step is not finite");
    out.x -= dx;
  }
}

PowerFlowSolution solve_power_flow(const PowerFlowSystem& system, double xi, const std::optional<OperatingPoint>& initial,
                                   const NewtonOptions& options) {
  const Eigen::VectorXd x0 = system.state(initial ? *initial : system.flat_start(xi));
  auto result = newton_solve([&](const Eigen::VectorXd& x) { return system.residual(x, xi); },
                             [&](const Eigen::VectorXd& x) { return system.jacobian(x, xi).dx; }, x0, options);
  return PowerFlowSolution{system.point(result.x, xi), result.iterations, std::move(result.residual_norms)};
}

PowerFlowSolution solve_power_flow_ramped(const PowerFlowSystem& system, double xi, const NewtonOptions& options,
                                          double start_xi) {
  try {
    return solve_power_flow(system, xi, std::nullopt, options);
  } catch (const NonConvergence&) {
  } catch (const SingularJacobian&) {
  }
  PowerFlowSolution current = solve_power_flow(system, start_xi, std::nullopt, options);
  double step = xi - start_xi;
  while (current.point.xi != xi) {
    if (std::abs(step) < 1e-6)
      throw NonConvergence(fmt::format("ramp towards xi = {} stalled at xi = {}", xi, current.point.xi),
                           current.residual_norms);
    const double target = std::abs(xi - current.point.xi) <= std::abs(step) ? xi : current.point.xi + step;
    try {
      current = solve_power_flow(system, target, current.point, options);
      step *= 1.5;
    } catch (const NonConvergence&) {
      step /= 2.0;
    } catch (const SingularJacobian&) {
      step /= 2.0;
    }
  }
  return current;
}

SingularValueSummary jacobian_svd(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return {};
  const Eigen::VectorXd s = Eigen::BDCSVD<Eigen::MatrixXd>(j).singularValues();
  return SingularValueSummary{s.minCoeff(), s.mean(), s.maxCoeff()};
}

std::vector<BranchFlow> branch_flows(const PowerFlowSystem& system, const OperatingPoint& point) {
  std::vector<BranchFlow> out;
  const auto& branches = system.grid().branches();
  out.reserve(branches.size());
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& br = branches[b];
    auto [i_from, i_to] = branch_terminal_currents(br, point.voltages(br.from), point.voltages(br.to));
    out.push_back(BranchFlow{b, br.from, br.to, std::move(i_from), std::move(i_to)});
  }
  return out;
}

}  // namespace polyvsi
