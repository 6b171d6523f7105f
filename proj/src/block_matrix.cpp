#include "polyvsi/block_matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace polyvsi {
namespace {

std::size_t position_in(const std::vector<NodeId>& order, NodeId node) {
  auto it = std::find(order.begin(), order.end(), node);
  if (it == order.end()) throw std::out_of_range("node " + std::to_string(node.value) + " not in block ordering");
  return static_cast<std::size_t>(it - order.begin());
}

}  // namespace

BlockMatrix::BlockMatrix(std::vector<NodeId> row_nodes, std::vector<NodeId> col_nodes, int phases)
    : rows_(std::move(row_nodes)), cols_(std::move(col_nodes)), phases_(phases) {
  if (phases_ < 1) throw std::invalid_argument("phase count must be positive");
  data_ = CMatrix::Zero(static_cast<Eigen::Index>(rows_.size()) * phases_,
                        static_cast<Eigen::Index>(cols_.size()) * phases_);
}

BlockMatrix::BlockMatrix(std::vector<NodeId> row_nodes, std::vector<NodeId> col_nodes, int phases, CMatrix dense)
    : rows_(std::move(row_nodes)), cols_(std::move(col_nodes)), phases_(phases), data_(std::move(dense)) {
  if (phases_ < 1) throw std::invalid_argument("phase count must be positive");
  if (data_.rows() != static_cast<Eigen::Index>(rows_.size()) * phases_ ||
      data_.cols() != static_cast<Eigen::Index>(cols_.size()) * phases_)
    throw std::invalid_argument("dense matrix size does not match node orderings");
}

std::size_t BlockMatrix::row_position(NodeId node) const { return position_in(rows_, node); }
std::size_t BlockMatrix::col_position(NodeId node) const { return position_in(cols_, node); }

CMatrix BlockMatrix::block(NodeId row, NodeId col) const {
  const auto r = static_cast<Eigen::Index>(row_position(row)) * phases_;
  const auto c = static_cast<Eigen::Index>(col_position(col)) * phases_;
  return data_.block(r, c, phases_, phases_);
}

void BlockMatrix::add_to_block(NodeId row, NodeId col, const CMatrix& value) {
  const auto r = static_cast<Eigen::Index>(row_position(row)) * phases_;
  const auto c = static_cast<Eigen::Index>(col_position(col)) * phases_;
  data_.block(r, c, phases_, phases_) += value;
}

Complex BlockMatrix::at(PhaseIndex row, PhaseIndex col) const {
  const auto r = static_cast<Eigen::Index>(row_position(row.node)) * phases_ + row.phase - 1;
  const auto c = static_cast<Eigen::Index>(col_position(col.node)) * phases_ + col.phase - 1;
  return data_(r, c);
}

BlockMatrix BlockMatrix::select(std::span<const NodeId> row_nodes, std::span<const NodeId> col_nodes) const {
  BlockMatrix out({row_nodes.begin(), row_nodes.end()}, {col_nodes.begin(), col_nodes.end()}, phases_);
  for (std::size_t i = 0; i < row_nodes.size(); ++i) {
    const auto src_r = static_cast<Eigen::Index>(row_position(row_nodes[i])) * phases_;
    for (std::size_t j = 0; j < col_nodes.size(); ++j) {
      const auto src_c = static_cast<Eigen::Index>(col_position(col_nodes[j])) * phases_;
      out.data_.block(static_cast<Eigen::Index>(i) * phases_, static_cast<Eigen::Index>(j) * phases_, phases_,
                      phases_) = data_.block(src_r, src_c, phases_, phases_);
    }
  }
  return out;
}

std::vector<NodeId> complement(std::span<const NodeId> all, std::span<const NodeId> removed) {
  std::vector<NodeId> out;
  for (NodeId n : all)
    if (std::find(removed.begin(), removed.end(), n) == removed.end()) out.push_back(n);
  return out;
}

double reciprocal_condition(const CMatrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::PartialPivLU<CMatrix> lu(m);
  const double rcond = lu.rcond();
  return std::isfinite(rcond) ? rcond : 0.0;
}

}  // namespace polyvsi
