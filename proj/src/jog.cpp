#include "treejog/jog.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "treejog/errors.hpp"

namespace treejog {

ProjectedTree project_tree(const StateAnnotatedTree& tree, const PcaModel& model,
                           std::array<std::size_t, 2> components) {
  for (auto c : components) {
    if (c >= model.components()) {
      throw InputError("component " + std::to_string(c + 1) + " not in the model (it has " +
                       std::to_string(model.components()) + ")");
    }
  }
  ProjectedTree out{tree.tree(), {}};
  out.coords.resize(tree.tree().size());
  for (NodeId v = 0; v < static_cast<NodeId>(tree.tree().size()); ++v) {
    auto s = tree.states(v);
    if (std::find(s.begin(), s.end(), Cell::missing) != s.end()) {
      throw InputError("node " + std::to_string(v) + " has missing states and cannot be projected");
    }
    auto scores = project(model, s);
    out.coords[static_cast<std::size_t>(v)] = {scores[components[0]], scores[components[1]]};
  }
  return out;
}

std::string pattern_name(std::size_t index) {
  return {static_cast<char>('0' + ((index >> 2) & 1)), static_cast<char>('0' + ((index >> 1) & 1)),
          static_cast<char>('0' + (index & 1))};
}

JogReport jogging_score(const ProjectedTree& ptree, std::size_t axis) {
  if (axis > 1) throw InputError("jogging axis must be 0 or 1");
  const auto& tree = ptree.tree;
  if (ptree.coords.size() != tree.size()) throw InputError("projected tree lacks coordinates");
  auto coord = [&](NodeId v) { return ptree.coords[static_cast<std::size_t>(v)][axis]; };

  JogReport report;
  report.axis = axis;
  for (NodeId leaf : tree.leaves()) {
    const auto path = tree.path_from_root(leaf);
    PathJog pj;
    pj.leaf = tree.node(leaf).label;
    for (std::size_t i = 1; i < path.size(); ++i) pj.total += std::abs(coord(path[i]) - coord(path[i - 1]));
    pj.net = std::abs(coord(leaf) - coord(path.front()));
    pj.backtrack = pj.total > 0 ? std::clamp((pj.total - pj.net) / pj.total, 0.0, 1.0) : 0.0;
    report.mean_backtrack += pj.backtrack;
    report.max_backtrack = std::max(report.max_backtrack, pj.backtrack);
    report.paths.push_back(std::move(pj));
  }
  if (!report.paths.empty()) report.mean_backtrack /= static_cast<double>(report.paths.size());
  return report;
}

PatternCounts count_patterns(const StateAnnotatedTree& stree) {
  const auto& tree = stree.tree();
  PatternCounts counts{};
  const std::size_t p = stree.features();
  for (NodeId child = 0; child < static_cast<NodeId>(tree.size()); ++child) {
    const NodeId parent = tree.parent(child);
    if (parent == kNoNode) continue;
    const NodeId grand = tree.parent(parent);
    if (grand == kNoNode) continue;
    auto g = stree.states(grand);
    auto m = stree.states(parent);
    auto c = stree.states(child);
    for (std::size_t f = 0; f < p; ++f) {
      if (g[f] == Cell::missing || m[f] == Cell::missing || c[f] == Cell::missing) {
        throw InputError("pattern count: missing state at node " +
                         std::to_string(g[f] == Cell::missing ? grand
                                        : m[f] == Cell::missing ? parent
                                                                : child) +
                         ", feature " + std::to_string(f + 1));
      }
      const auto idx = 4 * static_cast<std::size_t>(g[f]) + 2 * static_cast<std::size_t>(m[f]) +
                       static_cast<std::size_t>(c[f]);
      ++counts[idx];
    }
  }
  return counts;
}

nlohmann::json patterns_to_json(const PatternCounts& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < counts.size(); ++i) j[pattern_name(i)] = counts[i];
  return j;
}

nlohmann::json to_json(const JogReport& report) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : report.paths) {
    paths.push_back({{"leaf", p.leaf}, {"total", p.total}, {"net", p.net}, {"backtrack", p.backtrack}});
  }
  nlohmann::json j{{"axis", report.axis},
                   {"mean_backtrack", report.mean_backtrack},
                   {"max_backtrack", report.max_backtrack},
                   {"paths", std::move(paths)}};
  if (report.patterns) j["patterns"] = patterns_to_json(*report.patterns);
  return j;
}

std::vector<CladeLocation> clade_locations(const NexusTreeLog& log,
                                           std::span<const std::string> clade,
                                           const PcaModel& model,
                                           std::array<std::size_t, 2> components) {
  if (clade.empty()) throw InputError("clade is empty");
  for (auto c : components) {
    if (c >= model.components()) throw InputError("component not in the model");
  }
  std::vector<CladeLocation> out;
  for (const auto& sample : log.samples) {
    const auto& tree = sample.tree.tree();
    std::vector<NodeId> ids;
    for (const auto& label : clade) {
      auto id = tree.find_leaf(label);
      if (!id) throw InputError("clade leaf \"" + label + "\" not found in sample " + sample.id);
      ids.push_back(*id);
    }
    CladeLocation loc;
    loc.sample_id = sample.id;
    loc.mrca = tree.mrca(ids);
    std::set<NodeId> wanted(ids.begin(), ids.end());
    loc.monophyletic = tree.descendant_leaves(loc.mrca).size() == wanted.size();
    auto s = sample.tree.states(loc.mrca);
    if (std::find(s.begin(), s.end(), Cell::missing) != s.end()) {
      throw InputError("sample " + sample.id + ": clade ancestor has missing states");
    }
    auto scores = project(model, s);
    loc.location = {scores[components[0]], scores[components[1]]};
    out.push_back(std::move(loc));
  }
  return out;
}

}  // namespace treejog
