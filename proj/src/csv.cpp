#include "polyvsi/csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "polyvsi/errors.hpp"

namespace polyvsi::csv {
namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, int line, int column) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("voltage snapshot", line, column, fmt::format("invalid value '{}'", s));
  return v;
}

}  // namespace

std::string real(double v) { return fmt::format("{:.8e}", v); }

std::string trace(const CpfTrace& t) {
  std::string out(kTraceHeader);
  out += '\n';
  for (std::size_t step = 0; step < t.samples.size(); ++step) {
    const auto& s = t.samples[step];
    std::map<PhaseIndex, double> local;
    if (s.vsi)
      for (const auto& l : s.vsi->local) local[l.at] = l.value;
    const std::string global = s.vsi ? real(s.vsi->global) : "";
    const std::string sv = s.sv ? fmt::format("{},{},{}", real(s.sv->min), real(s.sv->mean), real(s.sv->max)) : ",,";
    for (std::size_t k = 0; k < s.point.nodes.size(); ++k) {
      for (int p = 1; p <= s.point.phases; ++p) {
        const auto i = static_cast<Eigen::Index>(k) * s.point.phases + p - 1;
        auto it = local.find(PhaseIndex{s.point.nodes[k], p});
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", step, real(s.xi), s.point.nodes[k].value, p,
                           real(s.point.magnitude(i)), real(s.point.angle(i)), it == local.end() ? "" : real(it->second),
                           global, sv);
      }
    }
  }
  return out;
}

std::string voltages(const OperatingPoint& point) {
  std::string out(kVoltageHeader);
  out += '\n';
  for (std::size_t k = 0; k < point.nodes.size(); ++k)
    for (int p = 1; p <= point.phases; ++p) {
      const auto i = static_cast<Eigen::Index>(k) * point.phases + p - 1;
      out += fmt::format("{},{},{},{}\n", point.nodes[k].value, p, real(point.magnitude(i)), real(point.angle(i)));
    }
  return out;
}

std::string vsi(const VsiResult& result) {
  std::string out(kVsiHeader);
  out += '\n';
  for (const auto& l : result.local)
    out += fmt::format("{},{},{},{},{}\n", l.at.node.value, l.at.phase, real(l.value), real(result.global),
                       l.at == result.critical ? 1 : 0);
  return out;
}

std::string currents(const std::vector<BranchFlow>& flows) {
  std::string out(kCurrentHeader);
  out += '\n';
  for (const auto& f : flows)
    for (Eigen::Index p = 0; p < f.i_from.size(); ++p)
      out += fmt::format("{},{},{},{},{}\n", f.from.value, f.to.value, p + 1, real(std::abs(f.i_from(p))),
                         real(std::abs(f.i_to(p))));
  return out;
}

OperatingPoint parse_voltages(std::string_view text, double xi) {
  std::map<NodeId, std::map<int, std::pair<double, double>>> rows;
  std::vector<NodeId> order;
  int line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kVoltageHeader)
        throw ParseError("voltage snapshot", line_no, 1, fmt::format("expected header '{}'", kVoltageHeader));
      header_seen = true;
      continue;
    }
    const auto f = split(line);
    if (f.size() != 4) throw ParseError("voltage snapshot", line_no, 1, "expected 4 columns");
    const NodeId node{parse_field<int>(f[0], line_no, 1)};
    const int phase = parse_field<int>(f[1], line_no, 2);
    const double mag = parse_field<double>(f[2], line_no, 3);
    const double ang = parse_field<double>(f[3], line_no, 4);
    if (!rows.count(node)) order.push_back(node);
    if (!rows[node].emplace(phase, std::pair{mag, ang}).second)
      throw ParseError("voltage snapshot", line_no, 2, fmt::format("duplicate entry for node {} phase {}", node.value, phase));
  }
  if (!header_seen || order.empty()) throw ParseError("voltage snapshot", line_no, 1, "no voltages");
  const int phases = static_cast<int>(rows[order.front()].size());
  OperatingPoint op;
  op.nodes = order;
  op.phases = phases;
  op.xi = xi;
  op.magnitude.resize(static_cast<Eigen::Index>(order.size()) * phases);
  op.angle.resize(op.magnitude.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& ph = rows[order[k]];
    for (int p = 1; p <= phases; ++p) {
      auto it = ph.find(p);
      if (it == ph.end() || static_cast<int>(ph.size()) != phases)
        throw InvalidModel(fmt::format("voltage snapshot: node {} does not list phases 1..{}", order[k].value, phases));
      const auto i = static_cast<Eigen::Index>(k) * phases + p - 1;
      op.magnitude(i) = it->second.first;
      op.angle(i) = it->second.second;
    }
  }
  return op;
}

OperatingPoint read_voltages(const std::filesystem::path& path, double xi) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_voltages(buf.str(), xi);
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace polyvsi::csv
