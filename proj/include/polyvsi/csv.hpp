#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "polyvsi/continuation.hpp"
#include "polyvsi/power_flow.hpp"
#include "polyvsi/vsi.hpp"

namespace polyvsi::csv {

// Comma separated, header row first, reals in scientific notation with nine
// significant digits. Empty cells mark values that were not recorded.

inline constexpr std::string_view kTraceHeader =
    "step,xi,node,phase,V_mag_V,V_ang_rad,L_local,L_global,sv_min,sv_mean,sv_max";
inline constexpr std::string_view kVoltageHeader = "node,phase,V_mag_V,V_ang_rad";
inline constexpr std::string_view kVsiHeader = "node,phase,L_local,L_global,critical";
inline constexpr std::string_view kCurrentHeader = "from,to,phase,I_from_A,I_to_A";

std::string real(double v);

/// One row per sample, node and phase.
std::string trace(const CpfTrace& trace);
std::string voltages(const OperatingPoint& point);
std::string vsi(const VsiResult& result);
std::string currents(const std::vector<BranchFlow>& flows);

/// Parses a voltage snapshot; every node must list phases 1..P exactly once.
OperatingPoint parse_voltages(std::string_view text, double xi = 1.0);
OperatingPoint read_voltages(const std::filesystem::path& path, double xi = 1.0);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace polyvsi::csv
