#pragma once

#include <random>
#include <vector>

#include "polyvsi/grid.hpp"
#include "polyvsi/node_models.hpp"
#include "polyvsi/power_flow.hpp"

namespace polyvsi::test {

inline double relative_error(const CMatrix& got, const CMatrix& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

inline double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

/// Symmetric matrix with positive definite real and imaginary parts.
inline CMatrix random_impedance(std::mt19937& rng, int p, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(p, p), b(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      a(i, j) = u(rng);
      b(i, j) = u(rng);
    }
  const Eigen::MatrixXd r = 0.3 * a * a.transpose() / p + 0.2 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd x = 0.3 * b * b.transpose() / p + 0.5 * Eigen::MatrixXd::Identity(p, p);
  CMatrix z(p, p);
  z.real() = r * scale;
  z.imag() = x * scale;
  return z;
}

struct RandomGridOptions {
  int min_nodes = 2;
  int max_nodes = 8;
  int max_phases = 3;
  double nominal_voltage = 1000.0;
  double z_scale = 0.5;
};

/// Connected grid of 2..8 nodes: a random tree plus occasional extra
/// branches, capacitive shunts and transformer ratios. Node 1 is the slack,
/// the last node is always a resource, the others are zero-injection or
/// resource nodes at random.
inline GridModel random_grid(std::mt19937& rng, const RandomGridOptions& opt = {}) {
  std::uniform_int_distribution<int> nodes_dist(opt.min_nodes, opt.max_nodes);
  std::uniform_int_distribution<int> phase_dist(1, opt.max_phases);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nodes_dist(rng);
  const int p = phase_dist(rng);

  std::vector<Node> nodes;
  for (int i = 1; i <= n; ++i) {
    NodeRole role = NodeRole::zero_injection;
    if (i == 1) role = NodeRole::slack;
    else if (i == n || u(rng) < 0.5) role = NodeRole::resource;
    nodes.push_back({NodeId{i}, role, opt.nominal_voltage});
  }
  std::vector<Branch> branches;
  for (int i = 2; i <= n; ++i) {
    std::uniform_int_distribution<int> parent(1, i - 1);
    Branch b{NodeId{parent(rng)}, NodeId{i}, random_impedance(rng, p, opt.z_scale)};
    if (u(rng) < 0.2) b.ratio_to = 0.95 + 0.1 * u(rng);
    branches.push_back(std::move(b));
  }
  if (n > 2 && u(rng) < 0.5) {
    std::uniform_int_distribution<int> any(1, n);
    const int a = any(rng), c = any(rng);
    if (a != c) branches.push_back({NodeId{a}, NodeId{c}, random_impedance(rng, p, 2.0 * opt.z_scale)});
  }
  std::vector<Shunt> shunts;
  for (int i = 1; i <= n; ++i)
    if (u(rng) < 0.3) shunts.push_back({NodeId{i}, Complex(0.0, 1e-5 * (1.0 + u(rng))) * CMatrix::Identity(p, p)});
  return GridModel(p, std::move(nodes), std::move(branches), std::move(shunts));
}

inline SlackModel random_slack(std::mt19937& rng, const GridModel& grid, double v_phase = 1000.0) {
  const int p = grid.phases();
  return SlackModel{NodeId{1}, positive_sequence(p, v_phase), random_impedance(rng, p, 0.05)};
}

/// ZIP loads between 1 and `max_kw` kW per phase at every resource node.
inline std::vector<ResourceModel> random_resources(std::mt19937& rng, const GridModel& grid, double max_kw = 20.0,
                                                   double v0 = 1000.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ResourceModel> out;
  for (const auto id : grid.nodes_with_role(NodeRole::resource)) {
    ResourceModel r{id, ResourceKind::load, v0, {}};
    for (int q = 0; q < grid.phases(); ++q) {
      const double alpha = 0.3 * u(rng), beta = 0.3 * u(rng);
      const double alpha_q = 0.3 * u(rng), beta_q = 0.3 * u(rng);
      ZipCoefficients zip({alpha, beta, 1.0 - alpha - beta}, {alpha_q, beta_q, 1.0 - alpha_q - beta_q});
      const double p0 = -1e3 * (1.0 + (max_kw - 1.0) * u(rng));
      r.phases.push_back({p0, 0.4 * p0 * u(rng), zip, 1.0});
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Central differences of the normalized residual, step 1e-6 relative.
inline Jacobian finite_difference_jacobian(const PowerFlowSystem& system, const Eigen::VectorXd& x, double xi) {
  const auto n = x.size();
  Jacobian fd;
  fd.dx.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    fd.dx.col(k) = (system.residual(xp, xi) - system.residual(xm, xi)) / (2.0 * h);
  }
  const double h = 1e-6 * std::max(1.0, std::abs(xi));
  fd.dxi = (system.residual(x, xi + h) - system.residual(x, xi - h)) / (2.0 * h);
  return fd;
}

}  // namespace polyvsi::test
