#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "treejog/character_matrix.hpp"
#include "treejog/time_tree.hpp"

namespace treejog {

// A time tree with a binary state vector on every node. Parsed logs may
// carry unannotated (all-missing) internal nodes, so completeness of the
// internal states is checked by the consumers that need it
// (count_patterns, project_tree) rather than at construction.
class StateAnnotatedTree {
 public:
  StateAnnotatedTree() = default;
  // `states` holds tree.size() * features cells, row = node id.
  StateAnnotatedTree(TimeTree tree, std::size_t features, std::vector<Cell> states);

  const TimeTree& tree() const { return tree_; }
  std::size_t features() const { return features_; }
  std::span<const Cell> states(NodeId id) const {
    return {states_.data() + static_cast<std::size_t>(id) * features_, features_};
  }
  std::span<Cell> mutable_states(NodeId id) {
    return {states_.data() + static_cast<std::size_t>(id) * features_, features_};
  }
  const std::vector<Cell>& all_states() const { return states_; }

  bool internal_complete() const;
  bool complete() const;
  // Leaf rows in tree leaf order.
  CharacterMatrix leaf_matrix(const std::vector<std::string>& feature_names = {}) const;

 private:
  TimeTree tree_;
  std::size_t features_ = 0;
  std::vector<Cell> states_;
};

}  // namespace treejog
