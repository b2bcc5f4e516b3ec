#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "treejog/character_matrix.hpp"
#include "treejog/errors.hpp"
#include "treejog/state_tree.hpp"
#include "treejog/time_tree.hpp"

using namespace treejog;

namespace {

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(CharacterMatrix, MinimalMatrixIsValid) {
  CharacterMatrix m({"A", "B"}, {"f1"}, {Cell::absent, Cell::present});
  EXPECT_TRUE(validate(m).empty());
}

TEST(CharacterMatrix, DuplicateLabelReported) {
  CharacterMatrix m({"LangA", "LangA"}, {"f1"}, {Cell::absent, Cell::present});
  EXPECT_TRUE(mentions(validate(m), "duplicate label"));
}

TEST(CharacterMatrix, AllMissingColumnReported) {
  CharacterMatrix m({"A", "B"}, {"f1"}, {Cell::missing, Cell::missing});
  EXPECT_TRUE(mentions(validate(m), "all-missing column"));
}

TEST(CharacterMatrix, ReportsEveryViolation) {
  CharacterMatrix m({"A"}, {"f1"}, {Cell::missing});
  auto errors = validate(m);
  EXPECT_TRUE(mentions(errors, "too few languages"));
  EXPECT_TRUE(mentions(errors, "all-missing column"));
}

TEST(CharacterMatrix, CellCountMismatchThrows) {
  EXPECT_THROW(CharacterMatrix({"A", "B"}, {"f1", "f2"}, {Cell::absent}), InputError);
}

TEST(CharacterMatrix, CsvRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = oracle::random_binary_matrix(2 + trial % 5, 1 + trial % 9, rng);
    std::vector<Cell> cells = m.cells();
    cells[static_cast<std::size_t>(trial) % cells.size()] = Cell::missing;
    CharacterMatrix with_missing(m.labels(), m.feature_names(), cells);
    std::ostringstream out;
    write_matrix_csv(out, with_missing);
    std::istringstream in(out.str());
    EXPECT_EQ(read_matrix_csv(in), with_missing);
  }
}

TEST(CharacterMatrix, CsvAcceptsMissingSpellingsAndQuotes) {
  std::istringstream in("language,a,b,c\n\"Lang, X\",1,?,-\nY,0,1,\n");
  auto m = read_matrix_csv(in);
  ASSERT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.labels()[0], "Lang, X");
  EXPECT_EQ(m.at(0, 1), Cell::missing);
  EXPECT_EQ(m.at(0, 2), Cell::missing);
  EXPECT_EQ(m.at(1, 2), Cell::missing);
  EXPECT_TRUE(m.has_missing());
}

TEST(CharacterMatrix, CsvRejectsBadCell) {
  std::istringstream in("language,a\nX,2\nY,0\n");
  EXPECT_THROW(read_matrix_csv(in), InputError);
}

TEST(CharacterMatrix, CsvRejectsRaggedRow) {
  std::istringstream in("language,a,b\nX,1\nY,0,1\n");
  EXPECT_THROW(read_matrix_csv(in), InputError);
}

TEST(TreeGenerators, SkewedTwoLeaves) {
  auto t = make_skewed_tree(2, 1000);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_DOUBLE_EQ(t.age(t.root()), 1000.0);
  for (NodeId leaf : t.leaves()) EXPECT_EQ(t.age(leaf), 0.0);
}

TEST(TreeGenerators, BalancedFour) {
  auto t = make_balanced_tree(4, 8000);
  EXPECT_DOUBLE_EQ(t.age(t.root()), 8000.0);
  int at4000 = 0;
  for (NodeId v : t.internals())
    if (v != t.root()) at4000 += t.age(v) == 4000.0;
  EXPECT_EQ(at4000, 2);
  EXPECT_EQ(t.leaf_count(), 4u);
  for (NodeId leaf : t.leaves()) EXPECT_EQ(t.age(leaf), 0.0);
}

TEST(TreeGenerators, SkewedSixteenSpine) {
  auto t = make_skewed_tree(16, 10000);
  EXPECT_EQ(t.internals().size(), 15u);
  // Recount: walk down the spine from the root, always into the internal
  // child, and check the equally spaced ages.
  std::vector<double> ages;
  NodeId v = t.root();
  while (!t.is_leaf(v)) {
    ages.push_back(t.age(v));
    const auto& ch = t.node(v).children;
    NodeId next = t.is_leaf(ch[0]) ? ch[1] : ch[0];
    if (t.is_leaf(ch[0]) && t.is_leaf(ch[1])) break;
    v = next;
  }
  ASSERT_EQ(ages.size(), 15u);
  const double step = (10000.0 - 10000.0 / 16) / 14;
  for (std::size_t i = 0; i < ages.size(); ++i) {
    EXPECT_NEAR(ages[i], 10000.0 - step * static_cast<double>(i), 1e-9);
    if (i > 0) EXPECT_LT(ages[i], ages[i - 1]);
  }
}

TEST(TreeGenerators, Errors) {
  EXPECT_THROW(make_skewed_tree(1, 100), InputError);
  EXPECT_THROW(make_balanced_tree(6, 100), InputError);
  EXPECT_THROW(make_balanced_tree(8, 0), InputError);
}

TEST(TimeTree, LeafCountIsInternalCountPlusOne) {
  std::mt19937_64 rng(11);
  for (std::size_t n = 2; n < 40; ++n) {
    auto t = oracle::random_tree(n, rng);
    EXPECT_EQ(t.leaf_count(), n);
    EXPECT_EQ(t.internals().size(), n - 1);
    EXPECT_EQ(t.preorder().size(), t.size());
    EXPECT_EQ(t.postorder().size(), t.size());
  }
  for (std::size_t n : {2u, 4u, 8u, 32u}) EXPECT_EQ(make_balanced_tree(n, 100).internals().size(), n - 1);
}

TEST(TimeTree, RejectsBadStructure) {
  // Child older than parent.
  std::vector<TreeNode> nodes(3);
  nodes[0].label = "A";
  nodes[1].label = "B";
  nodes[0].parent = nodes[1].parent = 2;
  nodes[2].children = {0, 1};
  nodes[2].age = 10;
  nodes[0].age = 20;
  EXPECT_THROW(TimeTree{nodes}, InputError);
  // Zero-length branch only with the explicit policy.
  nodes[0].age = 10;
  EXPECT_THROW(TimeTree{nodes}, InputError);
  EXPECT_NO_THROW(TimeTree(nodes, BranchPolicy::allow_zero));
  // Duplicate leaf labels.
  nodes[0].age = 0;
  nodes[1].label = "A";
  EXPECT_THROW(TimeTree{nodes}, InputError);
}

TEST(TimeTree, MrcaAndPaths) {
  auto t = make_balanced_tree(8, 800);
  auto a = *t.find_leaf("L1");
  auto b = *t.find_leaf("L2");
  auto c = *t.find_leaf("L8");
  EXPECT_EQ(t.mrca(a, c), t.root());
  NodeId ab = t.mrca(a, b);
  EXPECT_DOUBLE_EQ(t.age(ab), 200.0);
  auto path = t.path_from_root(a);
  EXPECT_EQ(path.front(), t.root());
  EXPECT_EQ(path.back(), a);
  EXPECT_EQ(path.size(), 4u);
  EXPECT_EQ(t.descendant_leaves(ab).size(), 2u);
}

TEST(TimeTree, MatchTreesIgnoresChildOrder) {
  std::mt19937_64 rng(3);
  auto t = oracle::random_tree(9, rng);
  auto nodes = t.nodes();
  for (auto& n : nodes)
    if (!n.is_leaf()) std::swap(n.children[0], n.children[1]);
  TimeTree swapped(nodes);
  EXPECT_EQ(canonical_topology(t), canonical_topology(swapped));
  EXPECT_TRUE(match_trees(t, swapped, 1e-9).has_value());
  nodes[static_cast<std::size_t>(t.root())].age += 1.0;
  EXPECT_FALSE(match_trees(t, TimeTree(nodes), 1e-9).has_value());
}

TEST(StateAnnotatedTree, CompletenessAndLeafMatrix) {
  auto t = make_skewed_tree(3, 300);
  std::vector<Cell> states(t.size() * 2, Cell::present);
  states[static_cast<std::size_t>(t.root()) * 2] = Cell::missing;
  StateAnnotatedTree s(t, 2, states);
  EXPECT_FALSE(s.internal_complete());
  EXPECT_FALSE(s.complete());
  auto m = s.leaf_matrix();
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m.feature_names()[1], "f2");
  EXPECT_FALSE(m.has_missing());
  EXPECT_THROW(StateAnnotatedTree(t, 2, std::vector<Cell>(3)), InputError);
}
