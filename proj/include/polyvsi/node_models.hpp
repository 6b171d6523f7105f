#pragma once

#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "polyvsi/block_matrix.hpp"

namespace polyvsi {

/// Thevenin equivalent of a slack node: V_s = v_te - z_te I_s.
struct SlackModel {
  NodeId node;
  CVector v_te;  ///< volts, phase-to-ground
  CMatrix z_te;  ///< ohms
};

/// Positive-sequence source behind a diagonal impedance derived from the
/// short-circuit power: |Z| = V_ll^2 / S_sc with the given R/X ratio.
SlackModel thevenin_from_short_circuit(NodeId node, int phases, double v_line_line, double s_short_circuit,
                                       double r_over_x, double angle_rad = 0.0);

/// Balanced source with phase p at angle_rad - 2 pi (p-1) / P.
CVector positive_sequence(int phases, double magnitude, double angle_rad = 0.0);

struct SlackInterface {
  CMatrix y_te;
  CVector v_te;
};

/// Admittance of the Thevenin impedance; throws SingularThevenin.
SlackInterface slack_interface(const SlackModel& model);

struct ZipTriple {
  double alpha = 0.0;  ///< constant impedance share
  double beta = 0.0;   ///< constant current share
  double gamma = 1.0;  ///< constant power share
};

/// Normalized polynomial coefficients for active and reactive power. Each
/// triple must sum to one within 1e-9.
class ZipCoefficients {
 public:
  ZipCoefficients() = default;
  ZipCoefficients(ZipTriple active, ZipTriple reactive);

  const ZipTriple& active() const noexcept { return active_; }
  const ZipTriple& reactive() const noexcept { return reactive_; }

  friend bool operator==(const ZipCoefficients& a, const ZipCoefficients& b) {
    return a.active_.alpha == b.active_.alpha && a.active_.beta == b.active_.beta &&
           a.active_.gamma == b.active_.gamma && a.reactive_.alpha == b.reactive_.alpha &&
           a.reactive_.beta == b.reactive_.beta && a.reactive_.gamma == b.reactive_.gamma;
  }

 private:
  ZipTriple active_{};
  ZipTriple reactive_{};
};

enum class ResourceKind { load, compensator };

const char* to_string(ResourceKind kind);
std::optional<ResourceKind> parse_resource_kind(std::string_view text);

/// Reference powers of one phase. Negative values absorb power.
struct PhaseInjectionRef {
  double p0 = 0.0;  ///< watts
  double q0 = 0.0;  ///< vars
  ZipCoefficients zip;
  double lambda = 1.0;
};

struct ResourceModel {
  NodeId node;
  ResourceKind kind = ResourceKind::load;
  double v0 = 1.0;  ///< reference phase-to-ground voltage magnitude, volts
  std::vector<PhaseInjectionRef> phases;
};

/// Throws InvalidModel unless v0 > 0 and every lambda is finite and >= 0.
void validate(const ResourceModel& model);

/// Injected power of `phase` (1-based) at voltage v.
Complex pm_power_at(const ResourceModel& model, int phase, Complex v);

/// d S / d|v| of the polynomial at |v|; used by the power-flow Jacobian.
Complex pm_power_slope(const ResourceModel& model, int phase, double magnitude);

/// Constant impedance, current and power terms reproducing the polynomial
/// exactly at v: S = -conj(y_pm)|v|^2 + v conj(i_pm) + s_pm.
struct ZipDecomposition {
  Complex y_pm;
  Complex i_pm;
  Complex s_pm;
};

ZipDecomposition pm_zip_at(const ResourceModel& model, int phase, Complex v);

/// I = -y_pm v + i_pm + conj(s_pm / v); throws ZeroVoltage if v == 0.
Complex injected_current(const ResourceModel& model, int phase, Complex v);

/// Loading factor along the uniform load increase: loads follow xi,
/// compensators stay at 1.
double trajectory_lambda(ResourceKind kind, double xi);
double trajectory_lambda_slope(ResourceKind kind);

}  // namespace polyvsi
