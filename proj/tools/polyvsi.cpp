// polyvsi command line: grid validation, power flow, continuation and VSI reports.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "polyvsi/benchmark.hpp"
#include "polyvsi/continuation.hpp"
#include "polyvsi/csv.hpp"
#include "polyvsi/errors.hpp"
#include "polyvsi/grid_file.hpp"
#include "polyvsi/power_flow.hpp"
#include "polyvsi/vsi.hpp"

namespace {

using namespace polyvsi;

constexpr int kFailure = 1;
constexpr int kInputError = 2;

void emit(const std::string& out, std::string_view content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    csv::write_atomic(out, content);
  }
}

int cmd_validate(const std::string& path) {
  const auto b = parse_grid(path);
  std::size_t transformers = 0;
  for (const auto& br : b.grid.branches()) transformers += (br.ratio_from != 1.0 || br.ratio_to != 1.0) ? 1 : 0;
  fmt::print("{}: ok\n", path);
  fmt::print("  phases        {}\n", b.grid.phases());
  fmt::print("  nodes         {}\n", b.grid.nodes().size());
  fmt::print("  branches      {}\n", b.grid.branches().size());
  fmt::print("  slacks        {}\n", b.slacks.size());
  fmt::print("  resources     {}\n", b.resources.size());
  return 0;
}

int cmd_pf(const std::string& path, double xi, const std::string& out, const std::string& currents_out) {
  auto b = parse_grid(path);
  const PowerFlowSystem system(b.grid, b.slacks, b.resources);
  PowerFlowSolution sol;
  try {
    sol = solve_power_flow_ramped(system, xi);
  } catch (const NonConvergence& e) {
    fmt::print(stderr, "power flow diverged at xi = {}: {}\n", xi, e.what());
    return kFailure;
  } catch (const SingularJacobian& e) {
    fmt::print(stderr, "power flow diverged at xi = {}: {}\n", xi, e.what());
    return kFailure;
  }
  const auto mm = mismatch(system, sol.point);
  fmt::print(stderr, "converged at xi = {} in {} iterations, max mismatch {:.3e} VA\n", xi, sol.iterations, mm.max_abs());
  emit(out, csv::voltages(sol.point));
  if (!currents_out.empty()) emit(currents_out, csv::currents(branch_flows(system, sol.point)));
  return 0;
}

int cmd_cpf(const std::string& path, const CpfConfig& config, const std::string& out) {
  auto b = parse_grid(path);
  const PowerFlowSystem system(b.grid, b.slacks, b.resources);
  const CpfTrace trace = run_cpf(system, config);
  const auto& last = trace.samples.back();
  fmt::print("xi_max {:.6f}\n", trace.xi_max());
  fmt::print("termination {}\n", to_string(trace.termination));
  fmt::print("samples {}\n", trace.samples.size());
  if (last.vsi)
    fmt::print("critical node {} phase {} L {:.4f}\n", last.vsi->critical.node.value, last.vsi->critical.phase,
               last.vsi->global);
  if (last.sv) fmt::print("sv min {:.4e} mean {:.4e} max {:.4e}\n", last.sv->min, last.sv->mean, last.sv->max);
  if (!out.empty()) emit(out, csv::trace(trace));
  return trace.termination == CpfTermination::corrector_failure ? kFailure : 0;
}

int cmd_vsi(const std::string& path, const std::string& voltages, double xi, const std::string& out) {
  auto b = parse_grid(path);
  const OperatingPoint point = csv::read_voltages(voltages, xi);
  const VsiEvaluator evaluator(b.grid, b.slacks);
  const auto result = evaluator.evaluate(load_trajectory(b.resources, xi), point);
  fmt::print(stderr, "global L {:.6f} at node {} phase {}\n", result.global, result.critical.node.value,
             result.critical.phase);
  emit(out, csv::vsi(result));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voltage stability index for unbalanced polyphase grids"};
  app.require_subcommand(1);

  std::string grid_path, out, currents_out, voltages_path, emit_path;
  double xi = 1.0;
  CpfConfig cpf;

  auto* validate = app.add_subcommand("validate", "Parse and validate a grid file");
  validate->add_option("grid", grid_path, "Grid description")->required()->check(CLI::ExistingFile);

  auto* pf = app.add_subcommand("pf", "Solve the power flow at one loading level");
  pf->add_option("grid", grid_path, "Grid description")->required()->check(CLI::ExistingFile);
  pf->add_option("--xi", xi, "Continuation parameter")->required();
  pf->add_option("--out", out, "Voltage snapshot CSV (stdout if omitted)");
  pf->add_option("--currents", currents_out, "Branch current CSV");

  auto* cp = app.add_subcommand("cpf", "Trace the nose curve up to the loadability limit");
  cp->add_option("grid", grid_path, "Grid description")->required()->check(CLI::ExistingFile);
  cp->add_option("--sigma", cpf.sigma, "Arclength step")->check(CLI::PositiveNumber);
  cp->add_option("--eps", cpf.eps, "Corrector tolerance")->check(CLI::PositiveNumber);
  cp->add_option("--max-steps", cpf.max_steps, "Step limit")->check(CLI::PositiveNumber);
  cp->add_option("--out", out, "Trace CSV");

  auto* vs = app.add_subcommand("vsi", "Evaluate the index for a voltage snapshot");
  vs->add_option("grid", grid_path, "Grid description")->required()->check(CLI::ExistingFile);
  vs->add_option("--voltages", voltages_path, "Voltage snapshot CSV")->required()->check(CLI::ExistingFile);
  vs->add_option("--xi", xi, "Continuation parameter of the snapshot");
  vs->add_option("--out", out, "VSI report CSV (stdout if omitted)");

  auto* bench = app.add_subcommand("bench", "Bundled benchmark grid");
  bench->require_subcommand(1);
  auto* bench_emit = bench->add_subcommand("emit", "Write the benchmark grid file");
  bench_emit->add_option("path", emit_path, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kInputError;
  }

  try {
    if (*validate) return cmd_validate(grid_path);
    if (*pf) return cmd_pf(grid_path, xi, out, currents_out);
    if (*cp) return cmd_cpf(grid_path, cpf, out);
    if (*vs) return cmd_vsi(grid_path, voltages_path, xi, out);
    if (*bench_emit) {
      csv::write_atomic(emit_path, write_grid_text(benchmark_description()));
      return 0;
    }
  } catch (const ParseError& e) {
    fmt::print(stderr, "parse error: {}\n", e.what());
    return kInputError;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kInputError;
  } catch (const BaseCaseDiverged& e) {
    fmt::print(stderr, "{}\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kInputError;
}
