#include "treejog/state_tree.hpp"

#include <algorithm>

#include "treejog/errors.hpp"

namespace treejog {

StateAnnotatedTree::StateAnnotatedTree(TimeTree tree, std::size_t features,
                                       std::vector<Cell> states)
    : tree_(std::move(tree)), features_(features), states_(std::move(states)) {
  if (states_.size() != tree_.size() * features_) {
    throw InputError("state annotation size mismatch: " + std::to_string(states_.size()) +
                     " cells for " + std::to_string(tree_.size()) + " nodes x " +
                     std::to_string(features_) + " features");
  }
}

bool StateAnnotatedTree::internal_complete() const {
  for (NodeId v : tree_.internals()) {
    auto s = states(v);
    if (std::find(s.begin(), s.end(), Cell::missing) != s.end()) return false;
  }
  return true;
}

bool StateAnnotatedTree::complete() const {
  return std::find(states_.begin(), states_.end(), Cell::missing) == states_.end();
}

CharacterMatrix StateAnnotatedTree::leaf_matrix(const std::vector<std::string>& feature_names) const {
  std::vector<std::string> names = feature_names;
  if (names.empty()) {
    for (std::size_t j = 0; j < features_; ++j) names.push_back("f" + std::to_string(j + 1));
  } else if (names.size() != features_) {
    throw InputError("feature name count does not match state length");
  }
  std::vector<std::string> labels;
  std::vector<Cell> cells;
  cells.reserve(tree_.leaf_count() * features_);
  for (NodeId l : tree_.leaves()) {
    labels.push_back(tree_.node(l).label);
    auto s = states(l);
    cells.insert(cells.end(), s.begin(), s.end());
  }
  return CharacterMatrix(std::move(labels), std::move(names), std::move(cells));
}

}  // namespace treejog
