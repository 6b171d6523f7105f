#include "polyvsi/grid.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

constexpr double kSingularRcond = 1e-13;
constexpr double kSymmetryTol = 1e-9;

std::string branch_label(std::size_t k, const Branch& b) {
  return fmt::format("branch {} ({}-{})", k, b.from.value, b.to.value);
}

// Positions of `subset` inside `order`, expanded per phase.
std::vector<Eigen::Index> phase_positions(const BlockMatrix& y, std::span<const NodeId> subset, bool rows) {
  std::vector<Eigen::Index> out;
  out.reserve(subset.size() * static_cast<std::size_t>(y.phases()));
  for (NodeId n : subset) {
    const auto base = static_cast<Eigen::Index>(rows ? y.row_position(n) : y.col_position(n)) * y.phases();
    for (int p = 0; p < y.phases(); ++p) out.push_back(base + p);
  }
  return out;
}

CMatrix gather(const CMatrix& m, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols) {
  CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(rows[i], cols[j]);
  return out;
}

void require_square(const BlockMatrix& y) {
  if (!y.same_orderings()) throw std::invalid_argument("admittance matrix must have identical row/column orderings");
}

void require_subset(const BlockMatrix& y, std::span<const NodeId> subset, const char* what) {
  std::set<NodeId> seen;
  for (NodeId n : subset) {
    y.row_position(n);
    if (!seen.insert(n).second) throw std::invalid_argument(fmt::format("{} lists node {} twice", what, n.value));
  }
  if (subset.size() >= y.row_nodes().size())
    throw std::invalid_argument(fmt::format("{} must be a strict subset of the nodes", what));
}

}  // namespace

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::zero_injection:
      return "zero";
    case NodeRole::slack:
      return "slack";
    case NodeRole::resource:
      return "resource";
  }
  return "?";
}

std::optional<NodeRole> parse_node_role(std::string_view text) {
  if (text == "zero") return NodeRole::zero_injection;
  if (text == "slack") return NodeRole::slack;
  if (text == "resource") return NodeRole::resource;
  return std::nullopt;
}

GridModel::GridModel(int phases, std::vector<Node> nodes, std::vector<Branch> branches, std::vector<Shunt> shunts)
    : phases_(phases), nodes_(std::move(nodes)), branches_(std::move(branches)), shunts_(std::move(shunts)) {
  if (phases_ < 1) throw InvalidModel("phase count must be positive");
  std::set<NodeId> ids;
  for (const auto& n : nodes_) {
    if (!ids.insert(n.id).second) throw InvalidModel(fmt::format("duplicate node id {}", n.id.value));
    if (!(n.nominal_voltage > 0.0)) throw InvalidModel(fmt::format("node {} needs a positive nominal voltage", n.id.value));
  }
  const auto square = [&](const CMatrix& m) { return m.rows() == phases_ && m.cols() == phases_; };
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const auto& b = branches_[k];
    if (!ids.contains(b.from) || !ids.contains(b.to))
      throw InvalidModel(branch_label(k, b) + " references an unknown node");
    if (b.from == b.to) throw InvalidModel(branch_label(k, b) + " is a self-loop");
    if (!square(b.z)) throw InvalidModel(branch_label(k, b) + " impedance has the wrong size");
    if (!(b.ratio_from > 0.0) || !(b.ratio_to > 0.0))
      throw InvalidModel(branch_label(k, b) + " needs positive turns ratios");
  }
  for (const auto& s : shunts_) {
    if (!ids.contains(s.node)) throw InvalidModel(fmt::format("shunt at unknown node {}", s.node.value));
    if (!square(s.y)) throw InvalidModel(fmt::format("shunt at node {} has the wrong size", s.node.value));
  }
}

std::vector<NodeId> GridModel::node_ids() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.id);
  return out;
}

std::vector<NodeId> GridModel::nodes_with_role(NodeRole role) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (n.role == role) out.push_back(n.id);
  return out;
}

std::size_t GridModel::position(NodeId id) const {
  auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.id == id; });
  if (it == nodes_.end()) throw std::out_of_range(fmt::format("unknown node {}", id.value));
  return static_cast<std::size_t>(it - nodes_.begin());
}

const Node& GridModel::node(NodeId id) const { return nodes_[position(id)]; }

bool GridModel::contains(NodeId id) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.id == id; });
}

bool GridModel::weakly_connected() const {
  if (nodes_.empty()) return true;
  std::vector<std::size_t> parent(nodes_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& b : branches_) parent[find(position(b.from))] = find(position(b.to));
  const auto root = find(0);
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (find(i) != root) return false;
  return true;
}

Eigen::MatrixXi build_incidence(const GridModel& grid) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(grid.branches().size()),
                                            static_cast<Eigen::Index>(grid.nodes().size()));
  for (std::size_t k = 0; k < grid.branches().size(); ++k) {
    const auto& b = grid.branches()[k];
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(grid.position(b.from))) = 1;
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(grid.position(b.to))) = -1;
  }
  return a;
}

Eigen::MatrixXi build_polyphase_incidence(const GridModel& grid) {
  const Eigen::MatrixXi a = build_incidence(grid);
  const int p = grid.phases();
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(a.rows() * p, a.cols() * p);
  for (Eigen::Index k = 0; k < a.rows(); ++k)
    for (Eigen::Index n = 0; n < a.cols(); ++n)
      if (a(k, n) != 0) out.block(k * p, n * p, p, p) = a(k, n) * Eigen::MatrixXi::Identity(p, p);
  return out;
}

namespace checks {

double asymmetry(const CMatrix& m) {
  const double scale = m.cwiseAbs().rowwise().sum().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (m - m.transpose()).cwiseAbs().rowwise().sum().maxCoeff() / scale;
}

bool real_part_psd(const CMatrix& m, double rel_tol) {
  const Eigen::MatrixXd re = m.real();
  const Eigen::MatrixXd sym = 0.5 * (re + re.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double largest = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  return ev.minCoeff() >= -rel_tol * largest;
}

bool invertible(const CMatrix& m) { return reciprocal_condition(m) >= kSingularRcond; }

}  // namespace checks

std::string describe(const ParameterViolation& v) {
  const char* kind = "";
  switch (v.kind) {
    case ParameterViolation::Kind::asymmetric:
      kind = "asymmetric";
      break;
    case ParameterViolation::Kind::not_psd:
      kind = "real part not positive semidefinite";
      break;
    case ParameterViolation::Kind::singular:
      kind = "not invertible";
      break;
    case ParameterViolation::Kind::disconnected:
      kind = "disconnected";
      break;
  }
  return v.detail.empty() ? fmt::format("{}: {}", v.element, kind)
                          : fmt::format("{}: {} ({})", v.element, kind, v.detail);
}

std::vector<ParameterViolation> validate_parameters(const GridModel& grid, double tol) {
  using Kind = ParameterViolation::Kind;
  std::vector<ParameterViolation> out;
  auto check = [&](const CMatrix& m, const std::string& label) {
    const double asym = checks::asymmetry(m);
    if (asym > tol) out.push_back({Kind::asymmetric, label, fmt::format("relative defect {:.3e}", asym)});
    if (!checks::real_part_psd(m, tol)) out.push_back({Kind::not_psd, label, {}});
    const double rcond = reciprocal_condition(m);
    if (rcond < kSingularRcond) out.push_back({Kind::singular, label, fmt::format("rcond {:.3e}", rcond)});
  };
  for (std::size_t k = 0; k < grid.branches().size(); ++k) check(grid.branches()[k].z, branch_label(k, grid.branches()[k]));
  for (const auto& s : grid.shunts())
    if (!s.y.isZero(0.0)) check(s.y, fmt::format("shunt at node {}", s.node.value));
  if (!grid.weakly_connected()) out.push_back({Kind::disconnected, "branch graph", {}});
  return out;
}

BlockMatrix assemble_admittance(const GridModel& grid) {
  const int p = grid.phases();
  const auto nb = static_cast<Eigen::Index>(grid.branches().size());
  const auto nn = static_cast<Eigen::Index>(grid.nodes().size());

  // Polyphase incidence weighted by the terminal turns ratios; with unit
  // ratios this is exactly A kron I_P.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nb * p, nn * p);
  CMatrix y_lines = CMatrix::Zero(nb * p, nb * p);
  for (Eigen::Index k = 0; k < nb; ++k) {
    const auto& b = grid.branches()[static_cast<std::size_t>(k)];
    const std::string label = branch_label(static_cast<std::size_t>(k), b);
    if (checks::asymmetry(b.z) > kSymmetryTol) throw AsymmetricParameter(label + " impedance is not symmetric");
    Eigen::PartialPivLU<CMatrix> lu(b.z);
    if (!(lu.rcond() >= kSingularRcond)) throw SingularBranch(label + " impedance is singular");
    y_lines.block(k * p, k * p, p, p) = lu.inverse();
    const auto from = static_cast<Eigen::Index>(grid.position(b.from));
    const auto to = static_cast<Eigen::Index>(grid.position(b.to));
    a.block(k * p, from * p, p, p) = Eigen::MatrixXd::Identity(p, p) / b.ratio_from;
    a.block(k * p, to * p, p, p) = -Eigen::MatrixXd::Identity(p, p) / b.ratio_to;
  }

  const CMatrix ac = a.cast<Complex>();
  CMatrix y = ac.transpose() * y_lines * ac;
  for (const auto& s : grid.shunts()) {
    if (s.y.isZero(0.0)) continue;
    if (checks::asymmetry(s.y) > kSymmetryTol)
      throw AsymmetricParameter(fmt::format("shunt at node {} is not symmetric", s.node.value));
    const auto n = static_cast<Eigen::Index>(grid.position(s.node));
    y.block(n * p, n * p, p, p) += s.y;
  }
  return BlockMatrix(grid.node_ids(), grid.node_ids(), p, std::move(y));
}

BlockMatrix kron_reduce(const BlockMatrix& y, std::span<const NodeId> zero_set) {
  require_square(y);
  if (zero_set.empty()) return y;
  require_subset(y, zero_set, "zero set");
  const auto kept = complement(y.row_nodes(), zero_set);
  const auto zi = phase_positions(y, zero_set, true);
  const auto ki = phase_positions(y, kept, true);

  const CMatrix y_zz = gather(y.dense(), zi, zi);
  Eigen::PartialPivLU<CMatrix> lu(y_zz);
  if (!(lu.rcond() >= kSingularRcond)) throw SingularInteriorBlock("Y_ZZ is numerically singular");
  CMatrix reduced = gather(y.dense(), ki, ki) - gather(y.dense(), ki, zi) * lu.solve(gather(y.dense(), zi, ki));
  return BlockMatrix(kept, kept, y.phases(), std::move(reduced));
}

HybridPartition hybrid_partition(const BlockMatrix& y, std::span<const NodeId> m_set) {
  require_square(y);
  if (m_set.empty()) throw std::invalid_argument("hybrid partition needs a nonempty M");
  require_subset(y, m_set, "M");
  std::vector<NodeId> m(m_set.begin(), m_set.end());
  auto mc = complement(y.row_nodes(), m);
  const auto mi = phase_positions(y, m, true);
  const auto ci = phase_positions(y, mc, true);

  Eigen::PartialPivLU<CMatrix> lu(gather(y.dense(), mi, mi));
  if (!(lu.rcond() >= kSingularRcond)) throw SingularInteriorBlock("Y_MM is numerically singular");
  const CMatrix inv = lu.inverse();
  const CMatrix y_m_mc = gather(y.dense(), mi, ci);
  const CMatrix y_mc_m = gather(y.dense(), ci, mi);
  const CMatrix h_m_mc = -inv * y_m_mc;
  const CMatrix h_mc_m = y_mc_m * inv;
  const CMatrix h_mc_mc = gather(y.dense(), ci, ci) + y_mc_m * h_m_mc;

  const int p = y.phases();
  return HybridPartition{m,
                         mc,
                         BlockMatrix(m, m, p, inv),
                         BlockMatrix(m, mc, p, h_m_mc),
                         BlockMatrix(mc, m, p, h_mc_m),
                         BlockMatrix(mc, mc, p, h_mc_mc)};
}

std::pair<CVector, CVector> HybridPartition::apply(const CVector& v_mc, const CVector& i_m) const {
  CVector i_mc = h_mc_mc.dense() * v_mc + h_mc_m.dense() * i_m;
  CVector v_m = h_m_mc.dense() * v_mc + h_m_m.dense() * i_m;
  return {std::move(i_mc), std::move(v_m)};
}

std::pair<CVector, CVector> branch_terminal_currents(const Branch& branch, const CVector& v_from,
                                                     const CVector& v_to) {
  const CVector series = branch.z.partialPivLu().solve(v_from / branch.ratio_from - v_to / branch.ratio_to);
  return {series / branch.ratio_from, series / branch.ratio_to};
}

}  // namespace polyvsi
