#pragma once

#include <string_view>

#include "polyvsi/grid_file.hpp"

namespace polyvsi {

/// Bundled IEEE 34-node line configurations 300 and 301 in grid-file syntax.
std::string_view ieee34_line_configs();

/// Three-phase test feeder derived from the IEEE 34-node feeder: a 69 kV
/// transposed sub-transmission line, a 69/24.9 kV substation transformer,
/// two line voltage regulators and eight resources. `line_configs` must
/// define configs 300 and 301; throws MissingData otherwise.
GridDescription benchmark_description(std::string_view line_configs);
GridDescription benchmark_description();

GridBundle build_benchmark();

}  // namespace polyvsi
