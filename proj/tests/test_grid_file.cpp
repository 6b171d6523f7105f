#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "polyvsi/benchmark.hpp"
#include "polyvsi/errors.hpp"
#include "polyvsi/grid_file.hpp"
#include "test_support.hpp"

using namespace polyvsi;

namespace {

constexpr std::string_view kTwoNode = R"(phases 1
[nodes]
1 slack 1
2 resource 1
[sequence_configs]
L 0.2 0.4 0 0.6 1.2 0
[lines]
1 2 2.5 L 100
[slacks]
1 z 0.01 0.05 1 0
[zip]
cp 0 0 1 0 0 1
[resources]
2 load 0.57735 cp -10 -2
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParseError parse_error_of(std::string_view text) {
  try {
    parse_grid_text(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no parse error");
  return ParseError("", 0, 0, "");
}

const ResourceModel& resource_at(const GridBundle& b, int node) {
  for (const auto& r : b.resources)
    if (r.node == NodeId{node}) return r;
  throw std::out_of_range("no resource");
}

}  // namespace

TEST_CASE("minimal file") {
  const auto d = parse_grid_text(kTwoNode);
  CHECK(d.phases == 1);
  CHECK(d.nodes.size() == 2);
  REQUIRE(d.lines.size() == 1);
  CHECK(d.lines[0].rated_a == 100.0);
  const auto b = realize(d);
  REQUIRE(b.grid.branches().size() == 1);
  CHECK(std::abs(b.grid.branches()[0].z(0, 0) - Complex(1.5, 3.0)) < 1e-12);
  CHECK(b.grid.shunts().empty());
  REQUIRE(b.slacks.size() == 1);
  CHECK(std::abs(b.slacks[0].z_te(0, 0) - Complex(0.01, 0.05)) < 1e-15);
  CHECK(std::abs(b.slacks[0].v_te(0) - Complex(1000.0 / std::sqrt(3.0), 0.0)) < 1e-9);
  REQUIRE(b.resources.size() == 1);
  CHECK(b.resources[0].phases[0].p0 == -10e3);
  CHECK(b.resources[0].phases[0].q0 == -2e3);
  CHECK(b.resources[0].v0 == doctest::Approx(577.35));
  CHECK(b.ratings[0].name == "1-2");
}

TEST_CASE("parse errors carry positions") {
  SUBCASE("undefined config") {
    std::string text(kTwoNode);
    text.replace(text.find("1 2 2.5 L"), 9, "1 2 2.5 Q");
    const auto e = parse_error_of(text);
    CHECK(std::string(e.what()).find("Q") != std::string::npos);
    CHECK(e.line() == 8);
    CHECK(e.column() == 9);
  }
  SUBCASE("bad number") {
    const auto e = parse_error_of("phases 3\n[nodes]\n1 slack 6x9\n");
    CHECK(e.line() == 3);
    CHECK(e.column() == 9);
  }
  SUBCASE("unknown section") {
    const auto e = parse_error_of("phases 3\n[buses]\n");
    CHECK(e.line() == 2);
  }
  SUBCASE("unknown zip") {
    std::string text(kTwoNode);
    text.replace(text.find("0.57735 cp"), 10, "0.57735 zz");
    const auto e = parse_error_of(text);
    CHECK(std::string(e.what()).find("zz") != std::string::npos);
    CHECK(e.line() == 14);
  }
  SUBCASE("wrong number of per-phase values") {
    std::string text(kTwoNode);
    text.replace(text.find("cp -10 -2"), 9, "cp -10 -2 -3");
    CHECK(parse_error_of(text).line() == 14);
  }
}

TEST_CASE("realization errors") {
  SUBCASE("negative resistance") {
    std::string text(kTwoNode);
    text.replace(text.find("0 0.6 1.2"), 9, "0 -0.6 1.2");
    CHECK_THROWS_AS(realize(parse_grid_text(text)), ValidationError);
  }
  SUBCASE("unknown node") {
    std::string text(kTwoNode);
    text.replace(text.find("1 2 2.5"), 7, "1 3 2.5");
    CHECK_THROWS_AS(realize(parse_grid_text(text)), Error);
  }
  SUBCASE("missing line configurations") {
    CHECK_THROWS_AS(benchmark_description("phases 3\n"), MissingData);
  }
  SUBCASE("missing phase count") { CHECK_THROWS_AS(realize(parse_grid_text("[nodes]\n1 slack 1\n")), InvalidModel); }
  SUBCASE("missing file") { CHECK_THROWS(read_grid_file("/nonexistent/grid.txt")); }
}

TEST_CASE("sequence parameters") {
  const Complex s1(0.071, 0.379), s0(0.202, 0.884);
  const auto m = sequence_to_phase(s1, s0, 3);
  CHECK(std::abs(m(0, 0) - (s0 + 2.0 * s1) / 3.0) < 1e-15);
  CHECK(std::abs(m(1, 2) - (s0 - s1) / 3.0) < 1e-15);
  CHECK((m - m.transpose()).norm() == 0.0);
  const auto [r1, r0] = phase_to_sequence(m);
  CHECK(std::abs(r1 - s1) < 1e-12);
  CHECK(std::abs(r0 - s0) < 1e-12);

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.01, 2.0);
  for (int p = 1; p <= 4; ++p) {
    const Complex a(u(rng), u(rng)), b(u(rng), u(rng));
    const auto [x1, x0] = phase_to_sequence(sequence_to_phase(a, b, p));
    if (p > 1) CHECK(std::abs(x1 - a) < 1e-12);
    CHECK(std::abs(x0 - b) < 1e-12);
  }
}

TEST_CASE("benchmark grid contents") {
  const auto b = build_benchmark();
  CHECK(b.grid.nodes().size() == 25);
  CHECK(b.grid.phases() == 3);
  CHECK(b.grid.branches().size() == 24);
  CHECK(b.slacks.size() == 1);
  int loads = 0, comps = 0;
  for (const auto& r : b.resources) (r.kind == ResourceKind::load ? loads : comps)++;
  CHECK(loads == 6);
  CHECK(comps == 2);

  const auto& tf = b.grid.branches()[21];
  CHECK(tf.from == NodeId{5});
  CHECK(tf.to == NodeId{6});
  CHECK(tf.z(0, 0).imag() * tf.ratio_from * tf.ratio_from == doctest::Approx(39.675).epsilon(1e-12));
  CHECK(tf.ratio_from == doctest::Approx(69.0 / 24.9));
  const auto& lvr = b.grid.branches()[22];
  CHECK(lvr.ratio_from * 1.05 == doctest::Approx(1.0));

  const auto& n25 = resource_at(b, 25);
  CHECK(n25.phases[0].p0 == -135e3);
  CHECK(n25.phases[0].q0 == -80e3);
  CHECK(resource_at(b, 12).phases[2].q0 == 100e3);
  CHECK(b.slacks[0].z_te(0, 0).imag() == doctest::Approx(47.61 / std::sqrt(1.01)));

  const auto line_1_2 = b.grid.branches()[0].z;
  CHECK(std::abs(line_1_2(0, 0) - 25.0 * (Complex(0.202, 0.884) + 2.0 * Complex(0.071, 0.379)) / 3.0) < 1e-12);
  CHECK(std::abs(b.grid.branches()[4].z(0, 0) - Complex(1.3368, 1.3343) * 1.314 / kKmPerMile) < 1e-12);
}

TEST_CASE("write and parse round trip") {
  const auto d = benchmark_description();
  const auto text = write_grid_text(d);
  const auto again = parse_grid_text(text);
  CHECK(write_grid_text(again) == text);
  const auto a = realize(d), b = realize(again);
  CHECK(assemble_admittance(a.grid).dense() == assemble_admittance(b.grid).dense());
  for (std::size_t k = 0; k < a.resources.size(); ++k)
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(a.resources[k].phases[p].p0 == b.resources[k].phases[p].p0);
      CHECK(a.resources[k].phases[p].q0 == b.resources[k].phases[p].q0);
    }
  CHECK(a.slacks[0].z_te == b.slacks[0].z_te);
  CHECK(a.slacks[0].v_te == b.slacks[0].v_te);

  const auto minimal = parse_grid_text(kTwoNode);
  CHECK(write_grid_text(parse_grid_text(write_grid_text(minimal))) == write_grid_text(minimal));
}

TEST_CASE("bundled grid file matches the built-in description") {
  const std::string path = std::string(POLYVSI_SOURCE_DIR) + "/data/benchmark.grid";
  CHECK(read_file(path) == write_grid_text(benchmark_description()));
  const auto from_file = parse_grid(path);
  CHECK(assemble_admittance(from_file.grid).dense() == assemble_admittance(build_benchmark().grid).dense());
}
