#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace polyvsi {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Identifier of a polyphase node.
struct NodeId {
  int value = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

/// One phase terminal of a polyphase node. Phases are numbered from 1.
struct PhaseIndex {
  NodeId node;
  int phase = 1;

  friend auto operator<=>(const PhaseIndex&, const PhaseIndex&) = default;
};

/// Dense complex matrix partitioned into P x P blocks, one per pair of
/// (row node, column node). The node orderings are part of the value.
class BlockMatrix {
 public:
  BlockMatrix() = default;
  BlockMatrix(std::vector<NodeId> row_nodes, std::vector<NodeId> col_nodes, int phases);
  BlockMatrix(std::vector<NodeId> row_nodes, std::vector<NodeId> col_nodes, int phases, CMatrix dense);

  int phases() const noexcept { return phases_; }
  const std::vector<NodeId>& row_nodes() const noexcept { return rows_; }
  const std::vector<NodeId>& col_nodes() const noexcept { return cols_; }
  const CMatrix& dense() const noexcept { return data_; }

  /// Position of `node` in the row ordering; throws std::out_of_range.
  std::size_t row_position(NodeId node) const;
  std::size_t col_position(NodeId node) const;

  CMatrix block(NodeId row, NodeId col) const;
  void add_to_block(NodeId row, NodeId col, const CMatrix& value);

  Complex at(PhaseIndex row, PhaseIndex col) const;

  /// Copy of the sub-matrix with the given row and column node orderings.
  BlockMatrix select(std::span<const NodeId> row_nodes, std::span<const NodeId> col_nodes) const;

  bool same_orderings() const { return rows_ == cols_; }

 private:
  std::vector<NodeId> rows_;
  std::vector<NodeId> cols_;
  int phases_ = 1;
  CMatrix data_;
};

/// Nodes of `all` that are not in `removed`, in the order of `all`.
std::vector<NodeId> complement(std::span<const NodeId> all, std::span<const NodeId> removed);

/// Reciprocal condition estimate in the 1-norm from a partial-pivot LU.
double reciprocal_condition(const CMatrix& m);

}  // namespace polyvsi

template <>
struct std::hash<polyvsi::NodeId> {
  std::size_t operator()(const polyvsi::NodeId& id) const noexcept { return std::hash<int>{}(id.value); }
};
