#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyvsi/grid.hpp"
#include "polyvsi/node_models.hpp"

namespace polyvsi {

// Textual grid description. Sections start with a `[name]` line; `#` starts
// a comment. Units are fixed per column:
//
//   phases <P>
//   [nodes]            id role V_ll_kV
//   [matrix_configs]   config <name> <km|mile>, then P `z` rows of r x pairs
//                      (ohm/unit) and P `b` rows (uS/unit)
//   [sequence_configs] name r1 x1 b1 r0 x0 b0            (ohm/km, uS/km)
//   [lines]            from to length_km config rated_A|-
//   [transformers]     name from to S_MVA V1_kV V2_kV r_pu x_pu tap rated_A|-
//   [slacks]           node sc S_sc_MVA r_over_x V_ll_kV angle_deg
//                      node z r_ohm x_ohm V_ll_kV angle_deg
//   [zip]              name alpha_re beta_re gamma_re alpha_im beta_im gamma_im
//   [resources]        node load|compensator V0_kV zip p0_kW x P q0_kvar x P

enum class LengthUnit { km, mile };

inline constexpr double kKmPerMile = 1.609344;

struct NodeSpec {
  NodeId id;
  NodeRole role = NodeRole::zero_injection;
  double v_ll_kv = 0.0;
};

struct MatrixConfig {
  std::string name;
  LengthUnit unit = LengthUnit::km;
  CMatrix z;             ///< ohm per unit length
  Eigen::MatrixXd b_us;  ///< micro-siemens per unit length
};

/// Transposed line given by sequence parameters per km.
struct SequenceConfig {
  std::string name;
  Complex z1;
  double b1_us = 0.0;
  Complex z0;
  double b0_us = 0.0;
};

struct LineSpec {
  NodeId from;
  NodeId to;
  double length_km = 0.0;
  std::string config;
  std::optional<double> rated_a;
};

struct TransformerSpec {
  std::string name;
  NodeId from;  ///< side I
  NodeId to;    ///< side II
  double s_mva = 0.0;
  double v1_kv = 0.0;
  double v2_kv = 0.0;
  double r_pu = 0.0;
  double x_pu = 0.0;
  double tap = 1.0;  ///< off-nominal ratio, > 1 raises the side II voltage
  std::optional<double> rated_a;
};

struct SlackSpec {
  enum class Form { short_circuit, impedance };
  NodeId node;
  Form form = Form::short_circuit;
  double s_sc_mva = 0.0;
  double r_over_x = 0.0;
  Complex z_ohm;  ///< diagonal entry, impedance form only
  double v_ll_kv = 0.0;
  double angle_deg = 0.0;
};

struct ZipSpec {
  std::string name;
  ZipCoefficients coefficients;
};

struct ResourceSpec {
  NodeId node;
  ResourceKind kind = ResourceKind::load;
  double v0_kv = 0.0;
  std::string zip;
  std::vector<double> p0_kw;
  std::vector<double> q0_kvar;
};

struct GridDescription {
  int phases = 0;
  std::vector<NodeSpec> nodes;
  std::vector<MatrixConfig> matrix_configs;
  std::vector<SequenceConfig> sequence_configs;
  std::vector<LineSpec> lines;
  std::vector<TransformerSpec> transformers;
  std::vector<SlackSpec> slacks;
  std::vector<ZipSpec> zips;
  std::vector<ResourceSpec> resources;
};

/// Throws ParseError with the line and column of the offending token. Names
/// referenced by lines and resources must be defined somewhere in the text.
GridDescription parse_grid_text(std::string_view text, const std::string& source = "<text>");
GridDescription read_grid_file(const std::filesystem::path& path);

/// Inverse of parse_grid_text; numbers use the shortest exact representation.
std::string write_grid_text(const GridDescription& grid);

struct BranchRating {
  std::size_t branch = 0;  ///< index into GridModel::branches()
  std::string name;        ///< "from-to" for lines, the transformer name otherwise
  std::optional<double> rated_a;
};

struct GridBundle {
  GridModel grid;
  std::vector<SlackModel> slacks;
  std::vector<ResourceModel> resources;
  std::vector<BranchRating> ratings;
};

/// Builds the models in SI units. Lines become Pi sections whose shunt
/// admittance is split evenly between both ends. Throws ValidationError
/// when branch or shunt parameters violate the grid hypotheses.
GridBundle realize(const GridDescription& grid);

/// read_grid_file followed by realize.
GridBundle parse_grid(const std::filesystem::path& path);

/// Phase matrix of a transposed element: diagonal (s0 + (P-1) s1) / P,
/// off-diagonal (s0 - s1) / P.
CMatrix sequence_to_phase(Complex s1, Complex s0, int phases);

/// Recovers (s1, s0) from a matrix produced by sequence_to_phase.
std::pair<Complex, Complex> phase_to_sequence(const CMatrix& m);

}  // namespace polyvsi
