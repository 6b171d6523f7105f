#include "polyvsi/benchmark.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi::data {
std::string_view ieee34_line_configs();
}

namespace polyvsi {
namespace {

struct LineRow {
  int from;
  int to;
  double length_km;
  const char* config;
  double rated_a;  // 0 when not listed
};

constexpr std::array<LineRow, 21> kLines{{
    {1, 2, 25.0, "T", 300.0},   {2, 3, 25.0, "T", 0.0},      {3, 4, 25.0, "T", 0.0},
    {4, 5, 25.0, "T", 0.0},     {6, 7, 1.314, "300", 0.0},   {7, 8, 9.851, "300", 0.0},
    {8, 9, 1.769, "300", 0.0},  {8, 10, 11.430, "300", 230}, {10, 11, 9.062, "300", 0.0},
    {12, 13, 15.197, "301", 0}, {13, 14, 4.188, "301", 0.0}, {12, 15, 3.112, "301", 180},
    {15, 16, 6.645, "301", 0},  {16, 17, 7.111, "301", 0.0}, {16, 18, 11.226, "301", 180},
    {19, 20, 3.219, "301", 0},  {19, 21, 1.494, "301", 180}, {21, 22, 1.777, "301", 0.0},
    {22, 23, 1.768, "301", 0},  {22, 24, 1.433, "301", 180}, {24, 25, 1.567, "301", 0.0},
}};

struct ResourceRow {
  int node;
  ResourceKind kind;
  std::array<double, 3> p0_kw;
  std::array<double, 3> q0_kvar;
};

constexpr std::array<ResourceRow, 8> kResources{{
    {9, ResourceKind::load, {-60, -50, -40}, {-30, -25, -20}},
    {14, ResourceKind::load, {-75, -60, -45}, {-40, -30, -21}},
    {17, ResourceKind::load, {-90, -70, -50}, {-50, -35, -22}},
    {20, ResourceKind::load, {-105, -80, -55}, {-60, -40, -23}},
    {23, ResourceKind::load, {-120, -90, -60}, {-70, -45, -24}},
    {25, ResourceKind::load, {-135, -100, -65}, {-80, -50, -25}},
    {12, ResourceKind::compensator, {0, 0, 0}, {100, 100, 100}},
    {19, ResourceKind::compensator, {0, 0, 0}, {100, 100, 100}},
}};

std::optional<double> listed(double rated) { return rated > 0.0 ? std::optional<double>(rated) : std::nullopt; }

}  // namespace

std::string_view ieee34_line_configs() { return data::ieee34_line_configs(); }

GridDescription benchmark_description(std::string_view line_configs) {
  GridDescription g;
  g.phases = 3;

  const GridDescription ieee = parse_grid_text(line_configs, "ieee34_line_configs");
  for (const char* name : {"300", "301"}) {
    auto it = std::find_if(ieee.matrix_configs.begin(), ieee.matrix_configs.end(),
                           [&](const MatrixConfig& c) { return c.name == name; });
    if (it == ieee.matrix_configs.end()) throw MissingData(fmt::format("IEEE line config {} is not available", name));
    if (it->z.rows() != 3) throw MissingData(fmt::format("IEEE line config {} is not three-phase", name));
    g.matrix_configs.push_back(*it);
  }
  g.sequence_configs.push_back({"T", Complex(0.071, 0.379), 3.038, Complex(0.202, 0.884), 1.740});

  for (int id = 1; id <= 25; ++id) {
    NodeRole role = NodeRole::zero_injection;
    if (id == 1) role = NodeRole::slack;
    if (std::any_of(kResources.begin(), kResources.end(), [&](const ResourceRow& r) { return r.node == id; }))
      role = NodeRole::resource;
    g.nodes.push_back({NodeId{id}, role, id <= 5 ? 69.0 : 24.9});
  }

  for (const auto& l : kLines) g.lines.push_back({NodeId{l.from}, NodeId{l.to}, l.length_km, l.config, listed(l.rated_a)});

  g.transformers.push_back({"TF", NodeId{5}, NodeId{6}, 12.0, 69.0, 24.9, 0.005, 0.1, 1.0, 230.0});
  g.transformers.push_back({"LVR1", NodeId{11}, NodeId{12}, 9.0, 24.9, 24.9, 0.005, 0.1, 1.05, std::nullopt});
  g.transformers.push_back({"LVR2", NodeId{18}, NodeId{19}, 9.0, 24.9, 24.9, 0.005, 0.1, 1.05, std::nullopt});

  SlackSpec slack;
  slack.node = NodeId{1};
  slack.form = SlackSpec::Form::short_circuit;
  slack.s_sc_mva = 100.0;
  slack.r_over_x = 0.1;
  slack.v_ll_kv = 69.0;
  slack.angle_deg = 0.0;
  g.slacks.push_back(slack);

  g.zips.push_back({"load", ZipCoefficients({-0.067, 0.251, 0.816}, {1.064, -0.088, 0.024})});
  g.zips.push_back({"comp", ZipCoefficients({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0})});

  for (const auto& r : kResources)
    g.resources.push_back({NodeId{r.node}, r.kind, 14.4, r.kind == ResourceKind::load ? "load" : "comp",
                           {r.p0_kw.begin(), r.p0_kw.end()}, {r.q0_kvar.begin(), r.q0_kvar.end()}});
  return g;
}

GridDescription benchmark_description() { return benchmark_description(ieee34_line_configs()); }

GridBundle build_benchmark() { return realize(benchmark_description()); }

}  // namespace polyvsi
