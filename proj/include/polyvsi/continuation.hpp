#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "polyvsi/power_flow.hpp"
#include "polyvsi/vsi.hpp"

namespace polyvsi {

struct CpfConfig {
  double sigma = 0.05;  ///< arclength step in the normalized (x, xi) metric
  double eps = 1e-8;
  int max_steps = 500;
  int max_corrector_iter = 20;
  int max_halvings = 6;  ///< retries with sigma / 2 after a corrector failure
  bool record_vsi = true;
  bool record_svd = true;
  /// Keep halving sigma after the fold is passed until it drops below min_sigma.
  bool refine_fold = true;
  double min_sigma = 1e-4;
  double start_xi = 1.0;
};

enum class CpfTermination { fold_detected, step_limit, corrector_failure };

const char* to_string(CpfTermination t);

struct CpfSample {
  OperatingPoint point;
  double xi = 0.0;
  std::optional<VsiResult> vsi;
  std::optional<SingularValueSummary> sv;
  double sigma = 0.0;  ///< step length that produced this sample (0 for the base case)
};

struct CpfTrace {
  std::vector<CpfSample> samples;
  CpfTermination termination = CpfTermination::step_limit;
  int regressions = 0;  ///< corrector results rejected for moving backwards
  int halvings = 0;

  /// Largest xi among accepted samples.
  double xi_max() const;
};

/// Loads get lambda = xi, compensators keep lambda = 1.
std::vector<ResourceModel> load_trajectory(std::span<const ResourceModel> resources, double xi);

/// f(x, xi) = 0 with its derivatives; decoupled from the power-flow system
/// so that small closed-form problems can drive the same machinery.
struct HomotopyFunction {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)> f;
  std::function<Jacobian(const Eigen::VectorXd&, double)> jacobian;
};

HomotopyFunction homotopy(const PowerFlowSystem& system);

struct ContinuationPoint {
  Eigen::VectorXd x;
  double xi = 0.0;
};

/// Unit tangent [dx; 1] / sqrt(|dx|^2 + 1) with D_x f dx = -D_xi f.
Eigen::VectorXd unit_tangent(const Jacobian& j);

/// anchor + sigma * unit tangent at the anchor. Throws SingularJacobian.
ContinuationPoint tangent_predict(const HomotopyFunction& h, const ContinuationPoint& anchor, double sigma);

/// Newton on [f(x, xi); (|x - x_k|^2 + (xi - xi_k)^2 - sigma^2) / sigma^2] = 0.
ContinuationPoint arclength_correct(const HomotopyFunction& h, const ContinuationPoint& predicted,
                                    const ContinuationPoint& anchor, double sigma, const NewtonOptions& options);

/// Throws BaseCaseDiverged if the power flow at config.start_xi fails.
CpfTrace run_cpf(const PowerFlowSystem& system, const CpfConfig& config);

}  // namespace polyvsi
