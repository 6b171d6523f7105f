#include "polyvsi/continuation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

Eigen::VectorXd stack(const ContinuationPoint& p) {
  Eigen::VectorXd z(p.x.size() + 1);
  z << p.x, p.xi;
  return z;
}

ContinuationPoint unstack(const Eigen::VectorXd& z) {
  return ContinuationPoint{z.head(z.size() - 1), z(z.size() - 1)};
}

}  // namespace

const char* to_string(CpfTermination t) {
  switch (t) {
    case CpfTermination::fold_detected: return "fold-detected";
    case CpfTermination::step_limit: return "step-limit";
    case CpfTermination::corrector_failure: return "corrector-failure";
  }
  return "unknown";
}

double CpfTrace::xi_max() const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::max(best, s.xi);
  return best;
}

std::vector<ResourceModel> load_trajectory(std::span<const ResourceModel> resources, double xi) {
  if (!(xi >= 0.0)) throw std::invalid_argument("xi must be non-negative");
  std::vector<ResourceModel> out(resources.begin(), resources.end());
  for (auto& r : out)
    for (auto& ph : r.phases) ph.lambda = trajectory_lambda(r.kind, xi);
  return out;
}

HomotopyFunction homotopy(const PowerFlowSystem& system) {
  return HomotopyFunction{[&system](const Eigen::VectorXd& x, double xi) { return system.residual(x, xi); },
                          [&system](const Eigen::VectorXd& x, double xi) { return system.jacobian(x, xi); }};
}

Eigen::VectorXd unit_tangent(const Jacobian& j) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(j.dx);
  if (!(lu.rcond() >= 1e-15)) throw SingularJacobian("D_x f is singular at the anchor");
  const Eigen::VectorXd dx = lu.solve(-j.dxi);
  if (!dx.allFinite()) throw SingularJacobian("tangent is not finite");
  Eigen::VectorXd t(dx.size() + 1);
  t << dx, 1.0;
  return t / std::sqrt(dx.squaredNorm() + 1.0);
}

ContinuationPoint tangent_predict(const HomotopyFunction& h, const ContinuationPoint& anchor, double sigma) {
  const Eigen::VectorXd t = unit_tangent(h.jacobian(anchor.x, anchor.xi));
  return unstack(stack(anchor) + sigma * t);
}

ContinuationPoint arclength_correct(const HomotopyFunction& h, const ContinuationPoint& predicted,
                                    const ContinuationPoint& anchor, double sigma, const NewtonOptions& options) {
  const Eigen::VectorXd z_k = stack(anchor);
  const double s2 = sigma * sigma;
  const auto n = predicted.x.size();
  auto g = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd r(n + 1);
    r.head(n) = h.f(z.head(n), z(n));
    r(n) = ((z - z_k).squaredNorm() - s2) / s2;
    return r;
  };
  auto jac = [&](const Eigen::VectorXd& z) {
    const Jacobian j = h.jacobian(z.head(n), z(n));
    Eigen::MatrixXd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = j.dx;
    m.topRightCorner(n, 1) = j.dxi;
    m.bottomRows(1) = 2.0 * (z - z_k).transpose() / s2;
    return m;
  };
  return unstack(newton_solve(g, jac, stack(predicted), options).x);
}

CpfTrace run_cpf(const PowerFlowSystem& system, const CpfConfig& config) {
  if (!(config.sigma > 0.0) || !(config.eps > 0.0)) throw std::invalid_argument("sigma and eps must be positive");
  const NewtonOptions newton{config.eps, config.max_corrector_iter};
  const HomotopyFunction h = homotopy(system);
  std::optional<VsiEvaluator> evaluator;
  if (config.record_vsi) evaluator.emplace(system.grid(), system.slacks());

  CpfTrace trace;
  auto record = [&](const ContinuationPoint& p, const Jacobian& j, double sigma) {
    CpfSample s;
    s.point = system.point(p.x, p.xi);
    s.xi = p.xi;
    s.sigma = sigma;
    if (evaluator) s.vsi = evaluator->evaluate(system.resources_at(p.xi), s.point);
    if (config.record_svd) s.sv = jacobian_svd(j.dx);
    trace.samples.push_back(std::move(s));
  };

  ContinuationPoint anchor;
  try {
    anchor.x = system.state(solve_power_flow(system, config.start_xi, std::nullopt, newton).point);
    anchor.xi = config.start_xi;
  } catch (const Error& e) {
    throw BaseCaseDiverged(fmt::format("base case at xi = {} did not converge: {}", config.start_xi, e.what()));
  }
  Jacobian j_k = h.jacobian(anchor.x, anchor.xi);
  record(anchor, j_k, 0.0);

  double sigma = config.sigma;
  bool fold_seen = false;
  int halvings = 0;
  for (int step = 0; step < config.max_steps; ++step) {
    bool accepted = false;
    while (!accepted) {
      Eigen::VectorXd t_k;
      try {
        t_k = unit_tangent(j_k);
      } catch (const SingularJacobian&) {
        trace.termination = CpfTermination::fold_detected;
        return trace;
      }
      const ContinuationPoint predicted = unstack(stack(anchor) + sigma * t_k);

      enum class Outcome { ok, failed, regressed, past_fold } outcome = Outcome::ok;
      ContinuationPoint next;
      Jacobian j_next;
      try {
        next = arclength_correct(h, predicted, anchor, sigma, newton);
        j_next = h.jacobian(next.x, next.xi);
        const Eigen::VectorXd dz = stack(next) - stack(anchor);
        if (dz.dot(t_k) <= 0.0) {
          outcome = Outcome::regressed;
        } else if (next.xi <= anchor.xi) {
          outcome = Outcome::past_fold;
        } else {
          // Past the tip the xi-oriented tangent flips relative to the curve.
          Eigen::VectorXd t_next;
          try {
            t_next = unit_tangent(j_next);
          } catch (const SingularJacobian&) {
            t_next = t_k;
          }
          if (t_next.dot(t_k) <= 0.0) outcome = Outcome::past_fold;
        }
      } catch (const NonConvergence&) {
        outcome = Outcome::failed;
      } catch (const SingularJacobian&) {
        outcome = Outcome::failed;
      }

      if (outcome == Outcome::ok) {
        accepted = true;
        anchor = next;
        j_k = j_next;
        record(anchor, j_k, sigma);
        if (!fold_seen) {
          sigma = config.sigma;
          halvings = 0;
        }
        continue;
      }
      if (outcome == Outcome::regressed) ++trace.regressions;
      if (outcome == Outcome::past_fold) fold_seen = true;

      if (fold_seen) {
        if (!config.refine_fold || sigma / 2.0 < config.min_sigma) {
          trace.termination = CpfTermination::fold_detected;
          return trace;
        }
      } else if (halvings >= config.max_halvings) {
        trace.termination = CpfTermination::corrector_failure;
        return trace;
      }
      sigma /= 2.0;
      ++halvings;
      ++trace.halvings;
    }
  }
  trace.termination = CpfTermination::step_limit;
  return trace;
}

}  // namespace polyvsi
