#include "polyvsi/operating_point.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace polyvsi {
namespace {

Eigen::Index offset_of(const OperatingPoint& op, NodeId node) {
  auto it = std::find(op.nodes.begin(), op.nodes.end(), node);
  if (it == op.nodes.end()) throw std::out_of_range(fmt::format("no voltage for node {}", node.value));
  return static_cast<Eigen::Index>(it - op.nodes.begin()) * op.phases;
}

}  // namespace

Complex OperatingPoint::voltage(NodeId node, int phase) const {
  if (phase < 1 || phase > phases) throw std::out_of_range(fmt::format("phase {} out of range", phase));
  const auto k = offset_of(*this, node) + phase - 1;
  return std::polar(magnitude(k), angle(k));
}

CVector OperatingPoint::voltages(NodeId node) const {
  const auto base = offset_of(*this, node);
  CVector out(phases);
  for (int p = 0; p < phases; ++p) out(p) = std::polar(magnitude(base + p), angle(base + p));
  return out;
}

bool OperatingPoint::contains(NodeId node) const {
  return std::find(nodes.begin(), nodes.end(), node) != nodes.end();
}

double wrap_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(radians, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

}  // namespace polyvsi
