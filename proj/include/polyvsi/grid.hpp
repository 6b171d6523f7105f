#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyvsi/block_matrix.hpp"

namespace polyvsi {

enum class NodeRole { zero_injection, slack, resource };

const char* to_string(NodeRole role);
std::optional<NodeRole> parse_node_role(std::string_view text);

struct Node {
  NodeId id;
  NodeRole role = NodeRole::zero_injection;
  /// Nominal phase-to-ground voltage magnitude in volts.
  double nominal_voltage = 1.0;
};

/// Polyphase series element. `z` is in ohms and referred to the side of the
/// series element itself; ideal transformers with ratios `ratio_from` and
/// `ratio_to` sit between each terminal and the series element, so the
/// series current is z^-1 (V_from / ratio_from - V_to / ratio_to).
struct Branch {
  NodeId from;
  NodeId to;
  CMatrix z;
  double ratio_from = 1.0;
  double ratio_to = 1.0;
};

struct Shunt {
  NodeId node;
  CMatrix y;  ///< siemens; may be all-zero
};

class GridModel {
 public:
  /// Checks structural consistency (unique ids, known endpoints, matrix
  /// sizes); parameter hypotheses are checked by validate_parameters.
  GridModel(int phases, std::vector<Node> nodes, std::vector<Branch> branches, std::vector<Shunt> shunts);

  int phases() const noexcept { return phases_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const std::vector<Shunt>& shunts() const noexcept { return shunts_; }

  std::vector<NodeId> node_ids() const;
  std::vector<NodeId> nodes_with_role(NodeRole role) const;
  const Node& node(NodeId id) const;
  std::size_t position(NodeId id) const;
  bool contains(NodeId id) const;

  bool weakly_connected() const;

 private:
  int phases_;
  std::vector<Node> nodes_;
  std::vector<Branch> branches_;
  std::vector<Shunt> shunts_;
};

/// Branch-to-node incidence: +1 where a branch leaves a node, -1 where it
/// enters. Rows follow branches(), columns follow nodes().
Eigen::MatrixXi build_incidence(const GridModel& grid);

/// The incidence expanded per phase (A kron I_P).
Eigen::MatrixXi build_polyphase_incidence(const GridModel& grid);

struct ParameterViolation {
  enum class Kind { asymmetric, not_psd, singular, disconnected };
  Kind kind;
  std::string element;  ///< e.g. "branch 3 (5-6)" or "shunt at node 7"
  std::string detail;
};

std::string describe(const ParameterViolation& v);

/// Symmetry, positive semidefinite real part and invertibility of every
/// branch impedance and nonzero shunt admittance, plus connectivity.
std::vector<ParameterViolation> validate_parameters(const GridModel& grid, double tol = 1e-9);

namespace checks {

/// Relative symmetry defect ||m - m^T||_inf / ||m||_inf (0 for a zero matrix).
double asymmetry(const CMatrix& m);

/// Re{m} is PSD if its smallest eigenvalue is >= -rel_tol * largest.
bool real_part_psd(const CMatrix& m, double rel_tol = 1e-9);

/// Invertible if the reciprocal condition estimate is at least 1e-13.
bool invertible(const CMatrix& m);

}  // namespace checks

/// Compound admittance matrix Y = A^T Y_L A + Y_T over grid.nodes().
BlockMatrix assemble_admittance(const GridModel& grid);

/// Schur complement of `y` with respect to the nodes in `zero_set`.
/// The retained ordering is the original ordering restricted to the rest.
BlockMatrix kron_reduce(const BlockMatrix& y, std::span<const NodeId> zero_set);

/// Blocks of the hybrid matrix mapping [V_Mc; I_M] to [I_Mc; V_M].
struct HybridPartition {
  std::vector<NodeId> m_set;
  std::vector<NodeId> mc_set;
  BlockMatrix h_m_m;    ///< Y_MM^-1
  BlockMatrix h_m_mc;   ///< -Y_MM^-1 Y_MMc
  BlockMatrix h_mc_m;   ///< Y_McM Y_MM^-1
  BlockMatrix h_mc_mc;  ///< Y / Y_MM

  /// Returns (I_Mc, V_M) for the given (V_Mc, I_M).
  std::pair<CVector, CVector> apply(const CVector& v_mc, const CVector& i_m) const;
};

HybridPartition hybrid_partition(const BlockMatrix& y, std::span<const NodeId> m_set);

/// Series currents of one branch at its two terminals, both oriented from
/// `from` towards `to` (shunt elements excluded).
std::pair<CVector, CVector> branch_terminal_currents(const Branch& branch, const CVector& v_from,
                                                     const CVector& v_to);

}  // namespace polyvsi
