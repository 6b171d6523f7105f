#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyvsi/benchmark.hpp"
#include "polyvsi/csv.hpp"
#include "polyvsi/errors.hpp"

using namespace polyvsi;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("headers are stable") {
  CHECK(csv::kTraceHeader == "step,xi,node,phase,V_mag_V,V_ang_rad,L_local,L_global,sv_min,sv_mean,sv_max");
  CHECK(csv::kVoltageHeader == "node,phase,V_mag_V,V_ang_rad");
  CHECK(csv::kVsiHeader == "node,phase,L_local,L_global,critical");
  CHECK(csv::kCurrentHeader == "from,to,phase,I_from_A,I_to_A");
}

TEST_CASE("real formatting keeps nine significant digits") {
  CHECK(csv::real(1.0) == "1.00000000e+00");
  CHECK(csv::real(-14400.123456789) == "-1.44001235e+04");
  CHECK(csv::real(0.0) == "0.00000000e+00");
}

TEST_CASE("benchmark reports") {
  const auto b = build_benchmark();
  const PowerFlowSystem s(b.grid, b.slacks, b.resources);
  const auto sol = solve_power_flow(s, 1.0);
  const VsiEvaluator eval(b.grid, b.slacks);
  const auto res = s.resources_at(1.0);
  const auto direct = eval.evaluate(res, sol.point);

  SUBCASE("voltage snapshot round trip") {
    const auto text = csv::voltages(sol.point);
    CHECK(first_line(text) == csv::kVoltageHeader);
    CHECK(count_lines(text) == 1 + 75);
    const auto parsed = csv::parse_voltages(text, 1.0);
    CHECK(parsed.nodes == sol.point.nodes);
    CHECK((parsed.magnitude - sol.point.magnitude).cwiseAbs().maxCoeff() <= 1e-8 * sol.point.magnitude.maxCoeff());
    const auto again = eval.evaluate(res, parsed);
    CHECK(again.global == doctest::Approx(direct.global).epsilon(1e-6));
    CHECK(again.critical == direct.critical);
  }
  SUBCASE("vsi report") {
    const auto text = csv::vsi(direct);
    CHECK(first_line(text) == csv::kVsiHeader);
    CHECK(count_lines(text) == 1 + 24);
    CHECK(text.find("25,1,") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 25);
  }
  SUBCASE("currents report") {
    const auto text = csv::currents(branch_flows(s, sol.point));
    CHECK(first_line(text) == csv::kCurrentHeader);
    CHECK(count_lines(text) == 1 + 24 * 3);
  }
  SUBCASE("trace rows") {
    CpfTrace t;
    CpfSample with;
    with.point = sol.point;
    with.xi = 1.0;
    with.vsi = direct;
    with.sv = SingularValueSummary{1.0, 2.0, 3.0};
    CpfSample without = with;
    without.vsi.reset();
    without.sv.reset();
    t.samples = {with, without};
    const auto text = csv::trace(t);
    CHECK(first_line(text) == csv::kTraceHeader);
    CHECK(count_lines(text) == 1 + 2 * 75);
    // Slack node rows have no local index but carry the global one.
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line.rfind("0,1.00000000e+00,1,1,", 0) == 0);
    CHECK(line.find(",," + csv::real(direct.global) + ",") != std::string::npos);
    std::string last;
    while (std::getline(in, line)) last = line;
    CHECK(last.substr(last.size() - 5) == ",,,,,");
  }
}

TEST_CASE("snapshot parse errors") {
  CHECK_THROWS_AS(csv::parse_voltages("node,phase\n1,1\n"), ParseError);
  CHECK_THROWS_AS(csv::parse_voltages("node,phase,V_mag_V,V_ang_rad\n1,1,abc,0\n"), ParseError);
  CHECK_THROWS_AS(csv::parse_voltages("node,phase,V_mag_V,V_ang_rad\n"), ParseError);
  CHECK_THROWS_AS(csv::parse_voltages("node,phase,V_mag_V,V_ang_rad\n1,1,1,0\n1,1,1,0\n"), ParseError);
  CHECK_THROWS_AS(csv::parse_voltages("node,phase,V_mag_V,V_ang_rad\n1,1,1,0\n1,2,1,0\n2,1,1,0\n"), InvalidModel);
  const auto ok = csv::parse_voltages("node,phase,V_mag_V,V_ang_rad\r\n3,1,10,0.5\r\n", 1.2);
  CHECK(ok.phases == 1);
  CHECK(ok.xi == 1.2);
  CHECK(ok.voltage(NodeId{3}, 1) == std::polar(10.0, 0.5));
}

TEST_CASE("atomic write replaces the target") {
  const auto dir = std::filesystem::temp_directory_path() / "polyvsi_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  csv::write_atomic(path, "first\n");
  csv::write_atomic(path, "second\n");
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  CHECK_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
  CHECK_THROWS(csv::write_atomic(dir / "missing" / "out.csv", "x"));
  std::filesystem::remove_all(dir);
}
