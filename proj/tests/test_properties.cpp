// Randomized checks on small synthetic grids; no bundled data is used.

#include <doctest.h>

#include <random>

#include "polyvsi/errors.hpp"
#include "polyvsi/power_flow.hpp"
#include "polyvsi/vsi.hpp"
#include "test_support.hpp"

using namespace polyvsi;
using polyvsi::test::relative_error;

namespace {

constexpr int kGrids = 50;

struct Case {
  GridModel grid;
  std::vector<SlackModel> slacks;
  std::vector<ResourceModel> resources;
};

std::vector<Case> corpus() {
  std::mt19937 rng(20240611);
  std::vector<Case> out;
  for (int k = 0; k < kGrids; ++k) {
    auto grid = test::random_grid(rng);
    std::vector<SlackModel> slacks{test::random_slack(rng, grid)};
    auto resources = test::random_resources(rng, grid);
    out.push_back({std::move(grid), std::move(slacks), std::move(resources)});
  }
  return out;
}

const std::vector<Case>& cases() {
  static const auto c = corpus();
  return c;
}

}  // namespace

TEST_CASE("sequential and one-shot Kron reduction agree") {
  std::mt19937 rng(1);
  int checked = 0;
  for (const auto& c : cases()) {
    const auto y = assemble_admittance(c.grid);
    std::vector<NodeId> ids;
    for (const auto& n : c.grid.nodes()) ids.push_back(n.id);
    if (ids.size() < 3) continue;
    std::shuffle(ids.begin(), ids.end(), rng);
    std::uniform_int_distribution<std::size_t> count(2, ids.size() - 1);
    const std::vector<NodeId> zero(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count(rng)));

    const auto once = kron_reduce(y, zero);
    BlockMatrix seq = y;
    for (const auto id : zero) seq = kron_reduce(seq, std::vector<NodeId>{id});
    REQUIRE(seq.row_nodes() == once.row_nodes());
    // A single kept node leaves only the shunts, so scale by the full matrix.
    CHECK((seq.dense() - once.dense()).norm() <= 1e-10 * y.dense().norm());
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("hybrid relation matches a direct solve") {
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  for (const auto& c : cases()) {
    const auto aug = build_augmented(c.grid, c.slacks);
    const auto h = reduce_augmented(aug);
    const CMatrix& y = aug.y_prime.dense();
    const int p = c.grid.phases();
    const Eigen::Index ni = p, nu = y.rows() - ni;
    const Eigen::Index nr = static_cast<Eigen::Index>(aug.resource_nodes.size()) * p;

    CVector v_te(ni), i_r(nr);
    for (Eigen::Index k = 0; k < ni; ++k) v_te(k) = 1e3 * Complex(n(rng), n(rng));
    for (Eigen::Index k = 0; k < nr; ++k) i_r(k) = 10.0 * Complex(n(rng), n(rng));
    CVector i_u = CVector::Zero(nu);
    i_u.tail(nr) = i_r;
    const CVector v_u = y.bottomRightCorner(nu, nu).lu().solve(i_u - y.bottomLeftCorner(nu, ni) * v_te);
    const CVector i_i = y.topLeftCorner(ni, ni) * v_te + y.topRightCorner(ni, nu) * v_u;
    const auto [i_i_h, v_r_h] = h.apply(v_te, i_r);
    CHECK(relative_error(CMatrix(i_i_h), CMatrix(i_i)) <= 1e-10);
    CHECK(relative_error(CMatrix(v_r_h), CMatrix(v_u.tail(nr))) <= 1e-10);
  }
}

TEST_CASE("analytic jacobian matches central differences at random points") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const auto& c = cases()[static_cast<std::size_t>(k) * 5];
    const PowerFlowSystem s(c.grid, c.slacks, c.resources);
    const double xi = 1.0 + u(rng);
    Eigen::VectorXd x = s.state(s.flat_start(xi));
    const auto m = s.unknown_count();
    for (Eigen::Index i = 0; i < m; ++i) {
      x(i) *= 1.0 + 0.2 * u(rng);
      x(m + i) += 0.3 * u(rng);
    }
    const auto j = s.jacobian(x, xi);
    const auto fd = test::finite_difference_jacobian(s, x, xi);
    CHECK(relative_error(j.dx, fd.dx) <= 1e-6);
    CHECK(relative_error(Eigen::MatrixXd(j.dxi), Eigen::MatrixXd(fd.dxi)) <= 1e-6);
  }
}

TEST_CASE("dual form agrees at converged solutions") {
  int solved = 0;
  for (const auto& c : cases()) {
    const PowerFlowSystem s(c.grid, c.slacks, c.resources);
    const VsiEvaluator eval(c.grid, c.slacks);
    for (double xi : {0.5, 1.0, 2.0}) {
      PowerFlowSolution sol;
      try {
        sol = solve_power_flow(s, xi, std::nullopt, {1e-12, 30});
      } catch (const Error&) {
        continue;
      }
      ++solved;
      const auto res = s.resources_at(xi);
      const auto coeffs = vsi_coefficients(eval.hybrid(), eval.augmented(), res, sol.point);
      const auto l = vsi_local(coeffs, sol.point);
      const auto d = vsi_local_dual(coeffs, sol.point);
      for (std::size_t k = 0; k < l.size(); ++k) CHECK(std::abs(l[k].value - d[k].value) <= 1e-6);
    }
  }
  CHECK(solved >= kGrids * 2);
}

TEST_CASE("zero loading gives a zero index") {
  for (const auto& c : cases()) {
    const PowerFlowSystem s(c.grid, c.slacks, c.resources);
    const auto sol = solve_power_flow(s, 0.0, std::nullopt, {1e-13, 30});
    const VsiEvaluator eval(c.grid, c.slacks);
    CHECK(eval.evaluate(s.resources_at(0.0), sol.point).global <= 1e-10);
  }
}

TEST_CASE("zip reconstruction and power-current duality") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& c : cases()) {
    for (const auto& r : c.resources) {
      for (int p = 1; p <= static_cast<int>(r.phases.size()); ++p) {
        const Complex v = std::polar(r.v0 * (0.6 + 0.6 * u(rng)), 6.0 * u(rng) - 3.0);
        const Complex s = pm_power_at(r, p, v);
        const auto d = pm_zip_at(r, p, v);
        const Complex rebuilt = -std::conj(d.y_pm) * std::norm(v) + v * std::conj(d.i_pm) + d.s_pm;
        CHECK(std::abs(rebuilt - s) <= 1e-12 * std::abs(s));
        const Complex i = injected_current(r, p, v);
        CHECK(std::abs(v * std::conj(i) - s) <= 1e-12 * std::abs(s));
      }
    }
  }
}
