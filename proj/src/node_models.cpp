#include "polyvsi/node_models.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

constexpr double kSumTol = 1e-9;

const PhaseInjectionRef& phase_ref(const ResourceModel& model, int phase) {
  if (phase < 1 || phase > static_cast<int>(model.phases.size()))
    throw std::out_of_range(fmt::format("resource {} has no phase {}", model.node.value, phase));
  return model.phases[static_cast<std::size_t>(phase - 1)];
}

double poly(const ZipTriple& t, double u) { return t.alpha * u * u + t.beta * u + t.gamma; }

void check_triple(const ZipTriple& t, const char* which) {
  const double sum = t.alpha + t.beta + t.gamma;
  if (!std::isfinite(sum) || std::abs(sum - 1.0) > kSumTol)
    throw InvalidModel(fmt::format("{} ZIP coefficients sum to {} instead of 1", which, sum));
}

}  // namespace

CVector positive_sequence(int phases, double magnitude, double angle_rad) {
  CVector v(phases);
  for (int p = 0; p < phases; ++p)
    v(p) = std::polar(magnitude, angle_rad - 2.0 * std::numbers::pi * p / phases);
  return v;
}

SlackModel thevenin_from_short_circuit(NodeId node, int phases, double v_line_line, double s_short_circuit,
                                       double r_over_x, double angle_rad) {
  if (!(v_line_line > 0.0) || !(s_short_circuit > 0.0) || !(r_over_x >= 0.0))
    throw InvalidModel("short-circuit parameters must be positive");
  const double z_abs = v_line_line * v_line_line / s_short_circuit;
  const double x = z_abs / std::sqrt(1.0 + r_over_x * r_over_x);
  const Complex z(r_over_x * x, x);
  return SlackModel{node, positive_sequence(phases, v_line_line / std::sqrt(3.0), angle_rad),
                    z * CMatrix::Identity(phases, phases)};
}

SlackInterface slack_interface(const SlackModel& model) {
  if (model.z_te.rows() != model.z_te.cols() || model.z_te.rows() != model.v_te.size())
    throw InvalidModel(fmt::format("slack {} has inconsistent sizes", model.node.value));
  Eigen::PartialPivLU<CMatrix> lu(model.z_te);
  if (!(lu.rcond() >= 1e-13)) throw SingularThevenin(fmt::format("Thevenin impedance of slack {} is singular", model.node.value));
  return SlackInterface{lu.inverse(), model.v_te};
}

ZipCoefficients::ZipCoefficients(ZipTriple active, ZipTriple reactive) : active_(active), reactive_(reactive) {
  check_triple(active_, "active");
  check_triple(reactive_, "reactive");
}

const char* to_string(ResourceKind kind) { return kind == ResourceKind::load ? "load" : "compensator"; }

std::optional<ResourceKind> parse_resource_kind(std::string_view text) {
  if (text == "load") return ResourceKind::load;
  if (text == "compensator") return ResourceKind::compensator;
  return std::nullopt;
}

void validate(const ResourceModel& model) {
  if (!(model.v0 > 0.0) || !std::isfinite(model.v0))
    throw InvalidModel(fmt::format("resource {} needs v0 > 0", model.node.value));
  for (const auto& ph : model.phases)
    if (!std::isfinite(ph.lambda) || ph.lambda < 0.0)
      throw InvalidModel(fmt::format("resource {} has an invalid loading factor", model.node.value));
}

Complex pm_power_at(const ResourceModel& model, int phase, Complex v) {
  const auto& ref = phase_ref(model, phase);
  const double u = std::abs(v) / model.v0;
  return ref.lambda * Complex(ref.p0 * poly(ref.zip.active(), u), ref.q0 * poly(ref.zip.reactive(), u));
}

Complex pm_power_slope(const ResourceModel& model, int phase, double magnitude) {
  const auto& ref = phase_ref(model, phase);
  const double u = magnitude / model.v0;
  const auto& a = ref.zip.active();
  const auto& r = ref.zip.reactive();
  return ref.lambda / model.v0 * Complex(ref.p0 * (2.0 * a.alpha * u + a.beta), ref.q0 * (2.0 * r.alpha * u + r.beta));
}

ZipDecomposition pm_zip_at(const ResourceModel& model, int phase, Complex v) {
  const auto& ref = phase_ref(model, phase);
  const double mag = std::abs(v);
  if (mag == 0.0) throw ZeroVoltage(fmt::format("zero voltage at resource {} phase {}", model.node.value, phase));
  const auto& a = ref.zip.active();
  const auto& r = ref.zip.reactive();
  const Complex quadratic = ref.lambda * Complex(a.alpha * ref.p0, r.alpha * ref.q0);
  const Complex linear = ref.lambda * Complex(a.beta * ref.p0, r.beta * ref.q0);
  const Complex constant = ref.lambda * Complex(a.gamma * ref.p0, r.gamma * ref.q0);
  // -conj(y)|v|^2 = quadratic |v|^2 / v0^2 ; v conj(i) = linear |v| / v0 with i in phase with v.
  const Complex y_pm = -std::conj(quadratic) / (model.v0 * model.v0);
  const Complex i_pm = std::conj(linear) / model.v0 * (v / mag);
  return ZipDecomposition{y_pm, i_pm, constant};
}

Complex injected_current(const ResourceModel& model, int phase, Complex v) {
  const auto d = pm_zip_at(model, phase, v);
  return -d.y_pm * v + d.i_pm + std::conj(d.s_pm / v);
}

double trajectory_lambda(ResourceKind kind, double xi) { return kind == ResourceKind::load ? xi : 1.0; }

double trajectory_lambda_slope(ResourceKind kind) { return kind == ResourceKind::load ? 1.0 : 0.0; }

}  // namespace polyvsi
