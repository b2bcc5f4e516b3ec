#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treejog {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Tree ages are in years; evolutionary rates are per 1000 years.
inline constexpr double kYearsPerRateUnit = 1000.0;

struct TreeNode {
  NodeId parent = kNoNode;
  std::array<NodeId, 2> children{kNoNode, kNoNode};
  double age = 0.0;  // years before present
  std::string label;  // leaves only

  bool is_leaf() const { return children[0] == kNoNode; }
};

enum class BranchPolicy {
  strictly_positive,
  // Parent age may equal child age. Used by hand-built test trees and by
  // parsed logs, where zero-length branches do occur.
  allow_zero,
};

// Rooted, strictly bifurcating tree with node ages. Immutable once built.
class TimeTree {
 public:
  TimeTree() = default;
  // Validates the topology and ages; throws InputError on any violation.
  explicit TimeTree(std::vector<TreeNode> nodes,
                    BranchPolicy policy = BranchPolicy::strictly_positive);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  NodeId root() const { return root_; }
  const TreeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool is_leaf(NodeId id) const { return node(id).is_leaf(); }
  double age(NodeId id) const { return node(id).age; }
  NodeId parent(NodeId id) const { return node(id).parent; }
  // Parent age minus own age; 0 for the root.
  double branch_length(NodeId id) const;

  // Leaves and internal nodes in ascending id order.
  std::span<const NodeId> leaves() const { return leaves_; }
  std::span<const NodeId> internals() const { return internals_; }
  std::size_t leaf_count() const { return leaves_.size(); }
  std::span<const NodeId> preorder() const { return preorder_; }
  std::span<const NodeId> postorder() const { return postorder_; }

  std::optional<NodeId> find_leaf(std::string_view label) const;
  // Root first, `id` last.
  std::vector<NodeId> path_from_root(NodeId id) const;
  std::vector<NodeId> descendant_leaves(NodeId id) const;
  NodeId mrca(std::span<const NodeId> ids) const;
  NodeId mrca(NodeId a, NodeId b) const;

 private:
  std::vector<TreeNode> nodes_;
  NodeId root_ = kNoNode;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> internals_;
  std::vector<NodeId> preorder_;
  std::vector<NodeId> postorder_;
  std::vector<int> depth_;
};

// Caterpillar: internal nodes at equally spaced ages from depth down to
// depth / n_leaves along the spine. Leaves get ids 0..n-1, labels L01...
TimeTree make_skewed_tree(std::size_t n_leaves, double depth);
// Complete binary tree; internal ages halve per level. n_leaves must be a
// power of two.
TimeTree make_balanced_tree(std::size_t n_leaves, double depth);

// Leaf labels L1..Ln zero-padded to a common width.
std::vector<std::string> default_leaf_labels(std::size_t n_leaves);

// Newick-like string with children ordered by their smallest leaf label.
// Equal strings mean equal leaf-labelled topologies (ages ignored).
std::string canonical_topology(const TimeTree& tree);

// Node correspondence a -> b when both trees have the same labelled
// topology and all node ages agree within `age_tolerance`.
std::optional<std::vector<NodeId>> match_trees(const TimeTree& a, const TimeTree& b,
                                               double age_tolerance);

}  // namespace treejog
