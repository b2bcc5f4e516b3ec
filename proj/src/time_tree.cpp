#include "treejog/time_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "treejog/errors.hpp"

namespace treejog {

TimeTree::TimeTree(std::vector<TreeNode> nodes, BranchPolicy policy) : nodes_(std::move(nodes)) {
  const auto n = static_cast<NodeId>(nodes_.size());
  if (n < 3) throw InputError("tree needs at least two leaves");

  for (NodeId i = 0; i < n; ++i) {
    const auto& nd = nodes_[static_cast<std::size_t>(i)];
    if (nd.parent == kNoNode) {
      if (root_ != kNoNode) throw InputError("tree has more than one root");
      root_ = i;
    } else if (nd.parent < 0 || nd.parent >= n) {
      throw InputError("node " + std::to_string(i) + " has an out-of-range parent");
    }
    const bool c0 = nd.children[0] != kNoNode;
    const bool c1 = nd.children[1] != kNoNode;
    if (c0 != c1) throw InputError("node " + std::to_string(i) + " is not bifurcating");
    if (!std::isfinite(nd.age) || nd.age < 0) {
      throw InputError("node " + std::to_string(i) + " has an invalid age");
    }
    if (c0) {
      for (NodeId c : nd.children) {
        if (c < 0 || c >= n || nodes_[static_cast<std::size_t>(c)].parent != i) {
          throw InputError("node " + std::to_string(i) + " has an inconsistent child link");
        }
      }
      if (nd.children[0] == nd.children[1]) {
        throw InputError("node " + std::to_string(i) + " lists the same child twice");
      }
    }
  }
  if (root_ == kNoNode) throw InputError("tree has no root");

  // Iterative preorder; a node reached twice or never means a broken tree.
  depth_.assign(nodes_.size(), -1);
  std::vector<NodeId> stack{root_};
  depth_[static_cast<std::size_t>(root_)] = 0;
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    preorder_.push_back(v);
    const auto& nd = node(v);
    if (nd.is_leaf()) continue;
    for (int k = 1; k >= 0; --k) {
      NodeId c = nd.children[static_cast<std::size_t>(k)];
      if (depth_[static_cast<std::size_t>(c)] != -1) throw InputError("tree contains a cycle");
      depth_[static_cast<std::size_t>(c)] = depth_[static_cast<std::size_t>(v)] + 1;
      stack.push_back(c);
    }
  }
  if (preorder_.size() != nodes_.size()) throw InputError("tree is not connected");

  postorder_.assign(preorder_.rbegin(), preorder_.rend());
  std::set<std::string_view> labels;
  for (NodeId i = 0; i < n; ++i) {
    const auto& nd = node(i);
    if (nd.is_leaf()) {
      leaves_.push_back(i);
      if (!labels.insert(nd.label).second) {
        throw InputError("duplicate leaf label \"" + nd.label + "\"");
      }
    } else {
      internals_.push_back(i);
    }
    if (nd.parent != kNoNode) {
      double len = node(nd.parent).age - nd.age;
      bool ok = policy == BranchPolicy::allow_zero ? len >= 0 : len > 0;
      if (!ok) {
        throw InputError("node " + std::to_string(i) + " is not younger than its parent (age " +
                         std::to_string(nd.age) + " vs " + std::to_string(node(nd.parent).age) +
                         ")");
      }
    }
  }
}

double TimeTree::branch_length(NodeId id) const {
  const auto& nd = node(id);
  return nd.parent == kNoNode ? 0.0 : node(nd.parent).age - nd.age;
}

std::optional<NodeId> TimeTree::find_leaf(std::string_view label) const {
  for (NodeId l : leaves_) {
    if (node(l).label == label) return l;
  }
  return std::nullopt;
}

std::vector<NodeId> TimeTree::path_from_root(NodeId id) const {
  std::vector<NodeId> path;
  for (NodeId v = id; v != kNoNode; v = parent(v)) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<NodeId> TimeTree::descendant_leaves(NodeId id) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{id};
  while (!stack.empty()) {
    NodeId v = stack.back();
    stack.pop_back();
    if (is_leaf(v)) {
      out.push_back(v);
    } else {
      stack.push_back(node(v).children[0]);
      stack.push_back(node(v).children[1]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

NodeId TimeTree::mrca(NodeId a, NodeId b) const {
  auto d = [this](NodeId v) { return depth_[static_cast<std::size_t>(v)]; };
  while (d(a) > d(b)) a = parent(a);
  while (d(b) > d(a)) b = parent(b);
  while (a != b) {
    a = parent(a);
    b = parent(b);
  }
  return a;
}

NodeId TimeTree::mrca(std::span<const NodeId> ids) const {
  if (ids.empty()) throw InputError("mrca of an empty node set");
  NodeId m = ids.front();
  for (NodeId v : ids.subspan(1)) m = mrca(m, v);
  return m;
}

std::vector<std::string> default_leaf_labels(std::size_t n_leaves) {
  const std::size_t width = std::to_string(n_leaves).size();
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= n_leaves; ++i) {
    auto num = std::to_string(i);
    labels.push_back("L" + std::string(width - num.size(), '0') + num);
  }
  return labels;
}

TimeTree make_skewed_tree(std::size_t n_leaves, double depth) {
  if (n_leaves < 2) throw InputError("skewed tree needs at least 2 leaves");
  if (!(depth > 0)) throw InputError("tree depth must be positive");
  const auto labels = default_leaf_labels(n_leaves);
  const std::size_t n_internal = n_leaves - 1;
  std::vector<TreeNode> nodes(n_leaves + n_internal);
  for (std::size_t i = 0; i < n_leaves; ++i) nodes[i].label = labels[i];

  const double youngest = depth / static_cast<double>(n_leaves);
  const double step =
      n_internal > 1 ? (depth - youngest) / static_cast<double>(n_internal - 1) : 0.0;
  // Spine node k holds leaf k and spine node k+1; the last spine node holds
  // the final two leaves.
  for (std::size_t k = 0; k < n_internal; ++k) {
    auto id = static_cast<NodeId>(n_leaves + k);
    auto& nd = nodes[static_cast<std::size_t>(id)];
    nd.age = depth - step * static_cast<double>(k);
    NodeId left = static_cast<NodeId>(k);
    NodeId right = k + 1 < n_internal ? id + 1 : static_cast<NodeId>(k + 1);
    nd.children = {left, right};
    nodes[static_cast<std::size_t>(left)].parent = id;
    nodes[static_cast<std::size_t>(right)].parent = id;
  }
  return TimeTree(std::move(nodes));
}

TimeTree make_balanced_tree(std::size_t n_leaves, double depth) {
  if (n_leaves < 2) throw InputError("balanced tree needs at least 2 leaves");
  if ((n_leaves & (n_leaves - 1)) != 0) {
    throw InputError("balanced tree needs a power-of-two leaf count, got " +
                     std::to_string(n_leaves));
  }
  if (!(depth > 0)) throw InputError("tree depth must be positive");
  const auto labels = default_leaf_labels(n_leaves);
  std::vector<TreeNode> nodes(2 * n_leaves - 1);
  for (std::size_t i = 0; i < n_leaves; ++i) nodes[i].label = labels[i];

  auto next = static_cast<NodeId>(n_leaves);
  // Builds the subtree over leaves [lo, hi) with its root at `age`.
  std::function<NodeId(std::size_t, std::size_t, double)> build =
      [&](std::size_t lo, std::size_t hi, double age) -> NodeId {
    if (hi - lo == 1) return static_cast<NodeId>(lo);
    NodeId id = next++;
    std::size_t mid = lo + (hi - lo) / 2;
    NodeId l = build(lo, mid, hi - mid > 1 ? age / 2 : 0.0);
    NodeId r = build(mid, hi, hi - mid > 1 ? age / 2 : 0.0);
    auto& nd = nodes[static_cast<std::size_t>(id)];
    nd.age = age;
    nd.children = {l, r};
    nodes[static_cast<std::size_t>(l)].parent = id;
    nodes[static_cast<std::size_t>(r)].parent = id;
    return id;
  };
  build(0, n_leaves, depth);
  return TimeTree(std::move(nodes));
}

namespace {

// Smallest leaf label under each node.
std::vector<std::string> min_labels(const TimeTree& tree) {
  std::vector<std::string> out(tree.size());
  for (NodeId v : tree.postorder()) {
    const auto& nd = tree.node(v);
    out[static_cast<std::size_t>(v)] =
        nd.is_leaf() ? nd.label
                     : std::min(out[static_cast<std::size_t>(nd.children[0])],
                                out[static_cast<std::size_t>(nd.children[1])]);
  }
  return out;
}

std::array<NodeId, 2> ordered_children(const TreeNode& nd, const std::vector<std::string>& mins) {
  auto [a, b] = nd.children;
  if (mins[static_cast<std::size_t>(b)] < mins[static_cast<std::size_t>(a)]) std::swap(a, b);
  return {a, b};
}

}  // namespace

std::string canonical_topology(const TimeTree& tree) {
  const auto mins = min_labels(tree);
  std::vector<std::string> text(tree.size());
  for (NodeId v : tree.postorder()) {
    const auto& nd = tree.node(v);
    if (nd.is_leaf()) {
      text[static_cast<std::size_t>(v)] = nd.label;
    } else {
      auto [a, b] = ordered_children(nd, mins);
      text[static_cast<std::size_t>(v)] =
          "(" + text[static_cast<std::size_t>(a)] + "," + text[static_cast<std::size_t>(b)] + ")";
    }
  }
  return text[static_cast<std::size_t>(tree.root())] + ";";
}

std::optional<std::vector<NodeId>> match_trees(const TimeTree& a, const TimeTree& b,
                                               double age_tolerance) {
  if (a.size() != b.size()) return std::nullopt;
  const auto mins_a = min_labels(a);
  const auto mins_b = min_labels(b);
  std::vector<NodeId> map(a.size(), kNoNode);
  std::vector<std::pair<NodeId, NodeId>> stack{{a.root(), b.root()}};
  while (!stack.empty()) {
    auto [u, v] = stack.back();
    stack.pop_back();
    const auto& nu = a.node(u);
    const auto& nv = b.node(v);
    if (nu.is_leaf() != nv.is_leaf()) return std::nullopt;
    if (std::abs(nu.age - nv.age) > age_tolerance) return std::nullopt;
    if (nu.is_leaf()) {
      if (nu.label != nv.label) return std::nullopt;
    } else {
      auto ca = ordered_children(nu, mins_a);
      auto cb = ordered_children(nv, mins_b);
      for (int k = 0; k < 2; ++k) {
        if (mins_a[static_cast<std::size_t>(ca[k])] != mins_b[static_cast<std::size_t>(cb[k])]) {
          return std::nullopt;
        }
        stack.emplace_back(ca[k], cb[k]);
      }
    }
    map[static_cast<std::size_t>(u)] = v;
  }
  return map;
}

}  // namespace treejog
