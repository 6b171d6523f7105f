#include <doctest.h>

#include <cmath>
#include <numbers>

#include "polyvsi/errors.hpp"
#include "polyvsi/node_models.hpp"

using namespace polyvsi;

namespace {

const ZipCoefficients kLoadZip({-0.067, 0.251, 0.816}, {1.064, -0.088, 0.024});
const ZipCoefficients kConstantPower({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0});
const ZipCoefficients kConstantImpedance({1.0, 0.0, 0.0}, {1.0, 0.0, 0.0});

ResourceModel single(double p0, double q0, ZipCoefficients zip, double lambda = 1.0, double v0 = 14.4e3) {
  return ResourceModel{NodeId{9}, ResourceKind::load, v0, {{p0, q0, zip, lambda}}};
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("zip coefficients must sum to one") {
  CHECK_NOTHROW(ZipCoefficients({0.2, 0.3, 0.5}, {1.0, 0.0, 0.0}));
  CHECK_THROWS_AS(ZipCoefficients({0.2, 0.3, 0.6}, {1.0, 0.0, 0.0}), InvalidModel);
  CHECK_THROWS_AS(ZipCoefficients({0.2, 0.3, 0.5}, {1.0, 0.0, 1e-8}), InvalidModel);
  CHECK_NOTHROW(ZipCoefficients({0.2, 0.3, 0.5}, {1.0, 0.0, 1e-10}));
}

TEST_CASE("polynomial power") {
  const auto m = single(-60e3, -30e3, kLoadZip);
  CHECK(rel(pm_power_at(m, 1, Complex(14.4e3, 0.0)), Complex(-60e3, -30e3)) < 1e-12);
  CHECK(pm_power_at(single(-60e3, -30e3, kLoadZip, 0.0), 1, Complex(14.4e3, 0.0)) == Complex(0.0, 0.0));

  const double u = 0.9;
  const Complex v = std::polar(u * 14.4e3, 0.3);
  const double p = -60e3 * (-0.067 * u * u + 0.251 * u + 0.816);
  CHECK(std::abs(pm_power_at(m, 1, v).real() - p) < 1e-9 * std::abs(p));

  const auto m2 = single(-60e3, -30e3, kLoadZip, 1.7);
  CHECK(rel(pm_power_at(m2, 1, v), 1.7 * pm_power_at(m, 1, v)) < 1e-15);
  CHECK_THROWS_AS(pm_power_at(m, 2, v), std::out_of_range);
}

TEST_CASE("power slope matches a central difference") {
  const auto m = single(-75e3, -40e3, kLoadZip, 1.3);
  const double e = 13.1e3, h = 1e-3;
  const Complex fd = (pm_power_at(m, 1, Complex(e + h, 0.0)) - pm_power_at(m, 1, Complex(e - h, 0.0))) / (2.0 * h);
  CHECK(rel(pm_power_slope(m, 1, e), fd) < 1e-7);
}

TEST_CASE("zip decomposition") {
  const Complex v = std::polar(13.9e3, -0.4);
  SUBCASE("constant power") {
    const auto d = pm_zip_at(single(-100.0, -50.0, kConstantPower, 2.0), 1, v);
    CHECK(d.y_pm == Complex(0.0, 0.0));
    CHECK(d.i_pm == Complex(0.0, 0.0));
    CHECK(d.s_pm == Complex(-200.0, -100.0));
  }
  SUBCASE("constant impedance") {
    const auto d = pm_zip_at(single(-100.0, -50.0, kConstantImpedance), 1, v);
    CHECK(d.s_pm == Complex(0.0, 0.0));
    CHECK(d.i_pm == Complex(0.0, 0.0));
    const double u2 = std::norm(v) / (14.4e3 * 14.4e3);
    CHECK(rel(-std::conj(d.y_pm) * std::norm(v), Complex(-100.0, -50.0) * u2) < 1e-12);
  }
  SUBCASE("load row reconstruction at nominal voltage") {
    const auto m = single(-60e3, -30e3, kLoadZip);
    const Complex v0(14.4e3, 0.0);
    const auto d = pm_zip_at(m, 1, v0);
    const Complex s = -std::conj(d.y_pm) * std::norm(v0) + v0 * std::conj(d.i_pm) + d.s_pm;
    CHECK(rel(s, pm_power_at(m, 1, v0)) < 1e-12);
  }
  SUBCASE("zero voltage") {
    CHECK_THROWS_AS(pm_zip_at(single(-1.0, 0.0, kLoadZip), 1, Complex(0.0, 0.0)), ZeroVoltage);
    CHECK_THROWS_AS(injected_current(single(-1.0, 0.0, kLoadZip), 1, Complex(0.0, 0.0)), ZeroVoltage);
  }
}

TEST_CASE("injected current") {
  const Complex v0(14.4e3, 0.0);
  const auto cp = single(-100.0, -50.0, kConstantPower, 1.0);
  CHECK(rel(injected_current(cp, 1, v0), std::conj(Complex(-100.0, -50.0) / v0)) < 1e-15);
  CHECK(injected_current(single(-100.0, -50.0, kLoadZip, 0.0), 1, v0) == Complex(0.0, 0.0));

  const auto node9 = single(-60e3, -30e3, kLoadZip);
  const Complex s = pm_power_at(node9, 1, v0);
  CHECK(rel(s, Complex(-60e3, -30e3)) < 1e-12);
  CHECK(rel(injected_current(node9, 1, v0), std::conj(s / v0)) < 1e-12);
}

TEST_CASE("thevenin source from short-circuit data") {
  const auto s = thevenin_from_short_circuit(NodeId{1}, 3, 69e3, 100e6, 0.1);
  const double x = 47.61 / std::sqrt(1.01);
  CHECK(std::abs(s.z_te(0, 0) - Complex(0.1 * x, x)) < 1e-12);
  CHECK(std::abs(s.z_te(0, 0) - Complex(4.737, 47.37)) < 5e-3);
  CHECK(s.z_te(0, 1) == Complex(0.0, 0.0));
  const double mag = 69e3 / std::sqrt(3.0);
  CHECK(std::abs(s.v_te(0) - Complex(mag, 0.0)) < 1e-9);
  CHECK(std::abs(s.v_te(1) - std::polar(mag, -2.0 * std::numbers::pi / 3.0)) < 1e-9);
  CHECK(std::abs(s.v_te(2) - std::polar(mag, 2.0 * std::numbers::pi / 3.0)) < 1e-9);

  const auto iface = slack_interface(SlackModel{NodeId{1}, CVector::Ones(3), Complex(0.0, 2.0) * CMatrix::Identity(3, 3)});
  CHECK((iface.y_te - Complex(0.0, -0.5) * CMatrix::Identity(3, 3)).norm() < 1e-15);
  CHECK_THROWS_AS(slack_interface(SlackModel{NodeId{1}, CVector::Ones(3), CMatrix::Zero(3, 3)}), SingularThevenin);
}

TEST_CASE("trajectory loading factors") {
  CHECK(trajectory_lambda(ResourceKind::load, 1.759) == 1.759);
  CHECK(trajectory_lambda(ResourceKind::compensator, 1.759) == 1.0);
  CHECK(trajectory_lambda_slope(ResourceKind::load) == 1.0);
  CHECK(trajectory_lambda_slope(ResourceKind::compensator) == 0.0);
  CHECK(parse_resource_kind("compensator") == ResourceKind::compensator);
  CHECK_FALSE(parse_resource_kind("generator").has_value());
}

TEST_CASE("resource validation") {
  CHECK_THROWS_AS(validate(single(-1.0, 0.0, kLoadZip, 1.0, 0.0)), InvalidModel);
  CHECK_THROWS_AS(validate(single(-1.0, 0.0, kLoadZip, -1.0)), InvalidModel);
  CHECK_NOTHROW(validate(single(-1.0, 0.0, kLoadZip)));
}
