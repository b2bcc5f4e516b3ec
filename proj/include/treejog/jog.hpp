#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "treejog/nexus.hpp"
#include "treejog/pca.hpp"
#include "treejog/state_tree.hpp"

namespace treejog {

using Point2 = std::array<double, 2>;

// A tree with a PC-space coordinate pair on every node.
struct ProjectedTree {
  TimeTree tree;
  std::vector<Point2> coords;  // indexed by node id
};

// Projects every node state onto two model components (default PC1, PC2).
// Throws InputError if any node has a missing cell.
ProjectedTree project_tree(const StateAnnotatedTree& tree, const PcaModel& model,
                           std::array<std::size_t, 2> components = {0, 1});

// Grandparent -> parent -> child feature patterns, indexed 4*g + 2*p + c,
// so index 5 is 1 -> 0 -> 1 and index 2 is 0 -> 1 -> 0.
using PatternCounts = std::array<std::uint64_t, 8>;
inline constexpr std::size_t kPattern101 = 5;
inline constexpr std::size_t kPattern010 = 2;

std::string pattern_name(std::size_t index);

struct PathJog {
  std::string leaf;
  double total = 0.0;      // sum of |step| along the path
  double net = 0.0;        // |leaf - root|
  double backtrack = 0.0;  // (total - net) / total, 0 when total is 0
};

struct JogReport {
  std::size_t axis = 0;  // coordinate measured (0 = first projected component)
  std::vector<PathJog> paths;
  double mean_backtrack = 0.0;
  double max_backtrack = 0.0;
  std::optional<PatternCounts> patterns;
};

// Backtrack fraction of every root-to-leaf path along one coordinate.
// Invariant to flipping or shifting that coordinate.
JogReport jogging_score(const ProjectedTree& ptree, std::size_t axis = 0);

// Tallies all eight patterns over every (grandparent, parent, child) triple
// and feature. Throws InputError if a node in any triple has a missing cell.
PatternCounts count_patterns(const StateAnnotatedTree& tree);

nlohmann::json to_json(const JogReport& report);
nlohmann::json patterns_to_json(const PatternCounts& counts);

struct CladeLocation {
  std::string sample_id;
  NodeId mrca = kNoNode;
  Point2 location{};
  bool monophyletic = true;  // false when the MRCA has leaves outside the clade
};

// Per sample, the projected state of the MRCA of `clade`. Throws
// InputError for labels absent from the log.
std::vector<CladeLocation> clade_locations(const NexusTreeLog& log,
                                           std::span<const std::string> clade,
                                           const PcaModel& model,
                                           std::array<std::size_t, 2> components = {0, 1});

}  // namespace treejog
