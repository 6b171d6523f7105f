#include "polyvsi/grid_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi {
namespace {

struct Token {
  std::string_view text;
  int column = 0;  // 1-based
};

struct Reference {
  std::string name;
  int line;
  int column;
};

enum class Section { none, nodes, matrix_configs, sequence_configs, lines, transformers, slacks, zip, resources };

std::optional<Section> parse_section(std::string_view name) {
  static const std::map<std::string_view, Section> table{
      {"nodes", Section::nodes},         {"matrix_configs", Section::matrix_configs},
      {"sequence_configs", Section::sequence_configs},
      {"lines", Section::lines},         {"transformers", Section::transformers},
      {"slacks", Section::slacks},       {"zip", Section::zip},
      {"resources", Section::resources}};
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  GridDescription run();

 private:
  [[noreturn]] void fail(int column, const std::string& msg) const { throw ParseError(source_, line_no_, column, msg); }

  void expect_count(const std::vector<Token>& t, std::size_t n, const char* what) const {
    if (t.size() != n) fail(t.empty() ? 1 : t.front().column, fmt::format("{} expects {} fields, got {}", what, n, t.size()));
  }

  double number(const Token& t) const {
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (!t.text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) fail(t.column, fmt::format("invalid number '{}'", t.text));
    return v;
  }

  int integer(const Token& t) const {
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail(t.column, fmt::format("invalid integer '{}'", t.text));
    return v;
  }

  NodeId node_ref(const Token& t) {
    const NodeId id{integer(t)};
    node_refs_.push_back({std::to_string(id.value), line_no_, t.column});
    return id;
  }

  std::optional<double> rating(const Token& t) const {
    if (t.text == "-") return std::nullopt;
    return number(t);
  }

  void finish_config();
  void check_references(const GridDescription& g) const;

  void on_nodes(const std::vector<Token>& t);
  void on_matrix_configs(const std::vector<Token>& t);
  void on_sequence_configs(const std::vector<Token>& t);
  void on_lines(const std::vector<Token>& t);
  void on_transformers(const std::vector<Token>& t);
  void on_slacks(const std::vector<Token>& t);
  void on_zip(const std::vector<Token>& t);
  void on_resources(const std::vector<Token>& t);

  std::string_view text_;
  std::string source_;
  int line_no_ = 0;
  GridDescription g_;
  Section section_ = Section::none;

  // Matrix config under construction.
  std::optional<MatrixConfig> config_;
  int config_line_ = 0;
  std::vector<std::vector<double>> z_rows_, b_rows_;

  std::vector<Reference> node_refs_, config_refs_, zip_refs_;
};

void Parser::finish_config() {
  if (!config_) return;
  const auto rows = z_rows_.size();
  const int saved = line_no_;
  line_no_ = config_line_;
  if (rows == 0 || b_rows_.size() != rows)
    fail(1, fmt::format("config {} needs the same number of z and b rows", config_->name));
  if (g_.phases > 0 && rows != static_cast<std::size_t>(g_.phases))
    fail(1, fmt::format("config {} has {} rows but the grid has {} phases", config_->name, rows, g_.phases));
  const auto n = static_cast<Eigen::Index>(rows);
  config_->z.resize(n, n);
  config_->b_us.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& z = z_rows_[static_cast<std::size_t>(r)];
    const auto& b = b_rows_[static_cast<std::size_t>(r)];
    if (z.size() != rows * 2 || b.size() != rows)
      fail(1, fmt::format("config {} row {} has the wrong number of entries", config_->name, r + 1));
    for (Eigen::Index c = 0; c < n; ++c) {
      config_->z(r, c) = Complex(z[static_cast<std::size_t>(2 * c)], z[static_cast<std::size_t>(2 * c + 1)]);
      config_->b_us(r, c) = b[static_cast<std::size_t>(c)];
    }
  }
  g_.matrix_configs.push_back(std::move(*config_));
  config_.reset();
  z_rows_.clear();
  b_rows_.clear();
  line_no_ = saved;
}

void Parser::on_nodes(const std::vector<Token>& t) {
  expect_count(t, 3, "node");
  const auto role = parse_node_role(t[1].text);
  if (!role) fail(t[1].column, fmt::format("unknown node role '{}'", t[1].text));
  g_.nodes.push_back({NodeId{integer(t[0])}, *role, number(t[2])});
}

void Parser::on_matrix_configs(const std::vector<Token>& t) {
  if (t[0].text == "config") {
    finish_config();
    expect_count(t, 3, "config header");
    LengthUnit unit;
    if (t[2].text == "km") unit = LengthUnit::km;
    else if (t[2].text == "mile") unit = LengthUnit::mile;
    else fail(t[2].column, fmt::format("unknown length unit '{}'", t[2].text));
    config_ = MatrixConfig{std::string(t[1].text), unit, {}, {}};
    config_line_ = line_no_;
    return;
  }
  if (!config_) fail(t[0].column, "matrix row before any config header");
  std::vector<double> values;
  for (std::size_t i = 1; i < t.size(); ++i) values.push_back(number(t[i]));
  if (t[0].text == "z") z_rows_.push_back(std::move(values));
  else if (t[0].text == "b") b_rows_.push_back(std::move(values));
  else fail(t[0].column, fmt::format("expected z or b row, got '{}'", t[0].text));
}

void Parser::on_sequence_configs(const std::vector<Token>& t) {
  expect_count(t, 7, "sequence config");
  g_.sequence_configs.push_back({std::string(t[0].text), Complex(number(t[1]), number(t[2])), number(t[3]),
                                 Complex(number(t[4]), number(t[5])), number(t[6])});
}

void Parser::on_lines(const std::vector<Token>& t) {
  expect_count(t, 5, "line");
  LineSpec l{node_ref(t[0]), node_ref(t[1]), number(t[2]), std::string(t[3].text), rating(t[4])};
  config_refs_.push_back({l.config, line_no_, t[3].column});
  g_.lines.push_back(std::move(l));
}

void Parser::on_transformers(const std::vector<Token>& t) {
  expect_count(t, 10, "transformer");
  g_.transformers.push_back({std::string(t[0].text), node_ref(t[1]), node_ref(t[2]), number(t[3]), number(t[4]),
                             number(t[5]), number(t[6]), number(t[7]), number(t[8]), rating(t[9])});
}

void Parser::on_slacks(const std::vector<Token>& t) {
  expect_count(t, 6, "slack");
  SlackSpec s;
  s.node = node_ref(t[0]);
  if (t[1].text == "sc") {
    s.form = SlackSpec::Form::short_circuit;
    s.s_sc_mva = number(t[2]);
    s.r_over_x = number(t[3]);
  } else if (t[1].text == "z") {
    s.form = SlackSpec::Form::impedance;
    s.z_ohm = Complex(number(t[2]), number(t[3]));
  } else {
    fail(t[1].column, fmt::format("unknown slack form '{}'", t[1].text));
  }
  s.v_ll_kv = number(t[4]);
  s.angle_deg = number(t[5]);
  g_.slacks.push_back(s);
}

void Parser::on_zip(const std::vector<Token>& t) {
  expect_count(t, 7, "zip");
  try {
    g_.zips.push_back({std::string(t[0].text), ZipCoefficients({number(t[1]), number(t[2]), number(t[3])},
                                                               {number(t[4]), number(t[5]), number(t[6])})});
  } catch (const InvalidModel& e) {
    fail(t[1].column, e.what());
  }
}

void Parser::on_resources(const std::vector<Token>& t) {
  if (t.size() < 4 || (t.size() - 4) % 2 != 0) fail(t.front().column, "resource expects node kind V0 zip p0... q0...");
  const std::size_t p = (t.size() - 4) / 2;
  if (g_.phases > 0 && p != static_cast<std::size_t>(g_.phases))
    fail(t.front().column, fmt::format("resource lists {} phases, grid has {}", p, g_.phases));
  ResourceSpec r;
  r.node = node_ref(t[0]);
  const auto kind = parse_resource_kind(t[1].text);
  if (!kind) fail(t[1].column, fmt::format("unknown resource kind '{}'", t[1].text));
  r.kind = *kind;
  r.v0_kv = number(t[2]);
  r.zip = std::string(t[3].text);
  zip_refs_.push_back({r.zip, line_no_, t[3].column});
  for (std::size_t i = 0; i < p; ++i) r.p0_kw.push_back(number(t[4 + i]));
  for (std::size_t i = 0; i < p; ++i) r.q0_kvar.push_back(number(t[4 + p + i]));
  g_.resources.push_back(std::move(r));
}

void Parser::check_references(const GridDescription& g) const {
  std::set<std::string> configs, zips, nodes;
  for (const auto& c : g.matrix_configs) configs.insert(c.name);
  for (const auto& c : g.sequence_configs) configs.insert(c.name);
  for (const auto& z : g.zips) zips.insert(z.name);
  for (const auto& n : g.nodes) nodes.insert(std::to_string(n.id.value));
  for (const auto& r : config_refs_)
    if (!configs.count(r.name)) throw ParseError(source_, r.line, r.column, fmt::format("undefined line config '{}'", r.name));
  for (const auto& r : zip_refs_)
    if (!zips.count(r.name)) throw ParseError(source_, r.line, r.column, fmt::format("undefined zip coefficients '{}'", r.name));
  if (!g.nodes.empty())
    for (const auto& r : node_refs_)
      if (!nodes.count(r.name)) throw ParseError(source_, r.line, r.column, fmt::format("undefined node {}", r.name));
}

GridDescription Parser::run() {
  std::size_t pos = 0;
  while (pos <= text_.size()) {
    std::size_t end = text_.find('\n', pos);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos, end - pos);
    pos = end + 1;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    const auto head = tokens.front().text;
    if (head.front() == '[') {
      if (head.back() != ']' || tokens.size() != 1) fail(tokens.front().column, "malformed section header");
      const auto s = parse_section(head.substr(1, head.size() - 2));
      if (!s) fail(tokens.front().column, fmt::format("unknown section '{}'", head));
      finish_config();
      section_ = *s;
      continue;
    }
    switch (section_) {
      case Section::none:
        if (head != "phases") fail(tokens.front().column, fmt::format("unexpected '{}' outside a section", head));
        expect_count(tokens, 2, "phases");
        g_.phases = integer(tokens[1]);
        if (g_.phases < 1) fail(tokens[1].column, "phase count must be positive");
        break;
      case Section::nodes: on_nodes(tokens); break;
      case Section::matrix_configs: on_matrix_configs(tokens); break;
      case Section::sequence_configs: on_sequence_configs(tokens); break;
      case Section::lines: on_lines(tokens); break;
      case Section::transformers: on_transformers(tokens); break;
      case Section::slacks: on_slacks(tokens); break;
      case Section::zip: on_zip(tokens); break;
      case Section::resources: on_resources(tokens); break;
    }
  }
  finish_config();
  check_references(g_);
  return std::move(g_);
}

std::string num(double v) { return fmt::format("{}", v); }

std::string rating_text(const std::optional<double>& r) { return r ? num(*r) : "-"; }

void add_shunt(std::map<NodeId, CMatrix>& shunts, NodeId node, const CMatrix& y) {
  if (y.isZero(0.0)) return;
  auto [it, inserted] = shunts.try_emplace(node, y);
  if (!inserted) it->second += y;
}

}  // namespace

GridDescription parse_grid_text(std::string_view text, const std::string& source) { return Parser(text, source).run(); }

GridDescription read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open grid file {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_text(buf.str(), path.string());
}

std::string write_grid_text(const GridDescription& g) {
  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };
  line(fmt::format("phases {}", g.phases));

  line("");
  line("[nodes]");
  line("# id role V_ll_kV");
  for (const auto& n : g.nodes) line(fmt::format("{} {} {}", n.id.value, to_string(n.role), num(n.v_ll_kv)));

  if (!g.matrix_configs.empty()) {
    line("");
    line("[matrix_configs]");
    for (const auto& c : g.matrix_configs) {
      line(fmt::format("config {} {}", c.name, c.unit == LengthUnit::km ? "km" : "mile"));
      for (Eigen::Index r = 0; r < c.z.rows(); ++r) {
        std::string row = "z";
        for (Eigen::Index k = 0; k < c.z.cols(); ++k) row += " " + num(c.z(r, k).real()) + " " + num(c.z(r, k).imag());
        line(row);
      }
      for (Eigen::Index r = 0; r < c.b_us.rows(); ++r) {
        std::string row = "b";
        for (Eigen::Index k = 0; k < c.b_us.cols(); ++k) row += " " + num(c.b_us(r, k));
        line(row);
      }
    }
  }

  if (!g.sequence_configs.empty()) {
    line("");
    line("[sequence_configs]");
    line("# name r1 x1 b1_uS r0 x0 b0_uS (per km)");
    for (const auto& s : g.sequence_configs)
      line(fmt::format("{} {} {} {} {} {} {}", s.name, num(s.z1.real()), num(s.z1.imag()), num(s.b1_us), num(s.z0.real()),
                       num(s.z0.imag()), num(s.b0_us)));
  }

  line("");
  line("[lines]");
  line("# from to length_km config rated_A");
  for (const auto& l : g.lines)
    line(fmt::format("{} {} {} {} {}", l.from.value, l.to.value, num(l.length_km), l.config, rating_text(l.rated_a)));

  if (!g.transformers.empty()) {
    line("");
    line("[transformers]");
    line("# name from to S_MVA V1_kV V2_kV r_pu x_pu tap rated_A");
    for (const auto& t : g.transformers)
      line(fmt::format("{} {} {} {} {} {} {} {} {} {}", t.name, t.from.value, t.to.value, num(t.s_mva), num(t.v1_kv),
                       num(t.v2_kv), num(t.r_pu), num(t.x_pu), num(t.tap), rating_text(t.rated_a)));
  }

  line("");
  line("[slacks]");
  for (const auto& s : g.slacks) {
    if (s.form == SlackSpec::Form::short_circuit)
      line(fmt::format("{} sc {} {} {} {}", s.node.value, num(s.s_sc_mva), num(s.r_over_x), num(s.v_ll_kv), num(s.angle_deg)));
    else
      line(fmt::format("{} z {} {} {} {}", s.node.value, num(s.z_ohm.real()), num(s.z_ohm.imag()), num(s.v_ll_kv),
                       num(s.angle_deg)));
  }

  if (!g.zips.empty()) {
    line("");
    line("[zip]");
    line("# name alpha_re beta_re gamma_re alpha_im beta_im gamma_im");
    for (const auto& z : g.zips) {
      const auto& a = z.coefficients.active();
      const auto& r = z.coefficients.reactive();
      line(fmt::format("{} {} {} {} {} {} {}", z.name, num(a.alpha), num(a.beta), num(a.gamma), num(r.alpha), num(r.beta),
                       num(r.gamma)));
    }
  }

  if (!g.resources.empty()) {
    line("");
    line("[resources]");
    line("# node kind V0_kV zip p0_kW... q0_kvar...");
    for (const auto& r : g.resources) {
      std::string row = fmt::format("{} {} {} {}", r.node.value, to_string(r.kind), num(r.v0_kv), r.zip);
      for (double p : r.p0_kw) row += " " + num(p);
      for (double q : r.q0_kvar) row += " " + num(q);
      line(row);
    }
  }
  return out;
}

CMatrix sequence_to_phase(Complex s1, Complex s0, int phases) {
  const double p = phases;
  const Complex diag = (s0 + (p - 1.0) * s1) / p;
  const Complex off = (s0 - s1) / p;
  CMatrix m = CMatrix::Constant(phases, phases, off);
  m.diagonal().setConstant(diag);
  return m;
}

std::pair<Complex, Complex> phase_to_sequence(const CMatrix& m) {
  const auto p = m.rows();
  const Complex diag = m(0, 0);
  const Complex off = p > 1 ? m(0, 1) : Complex(0.0);
  return {diag - off, diag + static_cast<double>(p - 1) * off};
}

GridBundle realize(const GridDescription& g) {
  if (g.phases < 1) throw InvalidModel("grid description has no phase count");
  if (g.nodes.empty()) throw InvalidModel("grid description has no nodes");
  const int p = g.phases;
  const auto eye = CMatrix::Identity(p, p);

  struct PerKm {
    CMatrix z;
    CMatrix y;
  };
  std::map<std::string, PerKm> configs;
  for (const auto& c : g.matrix_configs) {
    if (c.z.rows() != p) throw InvalidModel(fmt::format("config {} is not {}x{}", c.name, p, p));
    const double per_km = c.unit == LengthUnit::mile ? 1.0 / kKmPerMile : 1.0;
    configs[c.name] = {c.z * per_km, Complex(0.0, 1e-6 * per_km) * c.b_us.cast<Complex>()};
  }
  for (const auto& s : g.sequence_configs)
    configs[s.name] = {sequence_to_phase(s.z1, s.z0, p),
                       Complex(0.0, 1e-6) * sequence_to_phase(Complex(s.b1_us), Complex(s.b0_us), p)};

  std::vector<Node> nodes;
  for (const auto& n : g.nodes) nodes.push_back({n.id, n.role, n.v_ll_kv * 1e3 / std::sqrt(3.0)});

  std::vector<Branch> branches;
  std::vector<BranchRating> ratings;
  std::map<NodeId, CMatrix> shunt_map;
  for (const auto& l : g.lines) {
    auto it = configs.find(l.config);
    if (it == configs.end()) throw MissingData(fmt::format("undefined line config '{}'", l.config));
    branches.push_back({l.from, l.to, it->second.z * l.length_km});
    const CMatrix half = it->second.y * (l.length_km / 2.0);
    add_shunt(shunt_map, l.from, half);
    add_shunt(shunt_map, l.to, half);
    ratings.push_back({branches.size() - 1, fmt::format("{}-{}", l.from.value, l.to.value), l.rated_a});
  }
  for (const auto& t : g.transformers) {
    if (!(t.s_mva > 0.0) || !(t.v1_kv > 0.0) || !(t.v2_kv > 0.0) || !(t.tap > 0.0))
      throw InvalidModel(fmt::format("transformer {} needs positive ratings and tap", t.name));
    // Series impedance on the side II base, ideal ratio on side I.
    const double v2 = t.v2_kv * 1e3;
    const Complex z = Complex(t.r_pu, t.x_pu) * (v2 * v2 / (t.s_mva * 1e6));
    branches.push_back({t.from, t.to, z * eye, t.v1_kv / (t.v2_kv * t.tap), 1.0});
    ratings.push_back({branches.size() - 1, t.name, t.rated_a});
  }
  std::vector<Shunt> shunts;
  for (auto& [node, y] : shunt_map) shunts.push_back({node, std::move(y)});

  GridModel grid(p, std::move(nodes), std::move(branches), std::move(shunts));
  if (const auto violations = validate_parameters(grid); !violations.empty()) {
    std::vector<std::string> text;
    for (const auto& v : violations) text.push_back(describe(v));
    throw ValidationError(std::move(text));
  }

  std::vector<SlackModel> slacks;
  for (const auto& s : g.slacks) {
    if (!grid.contains(s.node) || grid.node(s.node).role != NodeRole::slack)
      throw InvalidModel(fmt::format("slack model at node {} which is not a slack node", s.node.value));
    const double angle = s.angle_deg * std::numbers::pi / 180.0;
    if (s.form == SlackSpec::Form::short_circuit)
      slacks.push_back(thevenin_from_short_circuit(s.node, p, s.v_ll_kv * 1e3, s.s_sc_mva * 1e6, s.r_over_x, angle));
    else
      slacks.push_back({s.node, positive_sequence(p, s.v_ll_kv * 1e3 / std::sqrt(3.0), angle), s.z_ohm * eye});
  }

  std::map<std::string, ZipCoefficients> zips;
  for (const auto& z : g.zips) zips[z.name] = z.coefficients;
  std::vector<ResourceModel> resources;
  for (const auto& r : g.resources) {
    if (!grid.contains(r.node) || grid.node(r.node).role != NodeRole::resource)
      throw InvalidModel(fmt::format("resource model at node {} which is not a resource node", r.node.value));
    if (r.p0_kw.size() != static_cast<std::size_t>(p) || r.q0_kvar.size() != static_cast<std::size_t>(p))
      throw InvalidModel(fmt::format("resource {} needs {} phases", r.node.value, p));
    auto it = zips.find(r.zip);
    if (it == zips.end()) throw MissingData(fmt::format("undefined zip coefficients '{}'", r.zip));
    ResourceModel m{r.node, r.kind, r.v0_kv * 1e3, {}};
    for (int q = 0; q < p; ++q)
      m.phases.push_back({r.p0_kw[static_cast<std::size_t>(q)] * 1e3, r.q0_kvar[static_cast<std::size_t>(q)] * 1e3,
                          it->second, 1.0});
    validate(m);
    resources.push_back(std::move(m));
  }
  return GridBundle{std::move(grid), std::move(slacks), std::move(resources), std::move(ratings)};
}

GridBundle parse_grid(const std::filesystem::path& path) { return realize(read_grid_file(path)); }

}  // namespace polyvsi
