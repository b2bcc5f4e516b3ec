#include <gtest/gtest.h>

#include <random>

#include "../oracles.hpp"
#include "treejog/errors.hpp"
#include "treejog/nexus.hpp"

using namespace treejog;

namespace {

std::string states_of(const StateAnnotatedTree& t, NodeId v) {
  std::string s;
  for (Cell c : t.states(v)) s.push_back(cell_char(c));
  return s;
}

const char* kThreeLeaf = "tree S0 = ((1:1.0,2:1.0)[&states=\"01\"]:1.0,3:2.0)[&states=\"11\"];";

std::string wrap(const std::string& body) { return "#NEXUS\nBegin trees;\n" + body + "\nEnd;\n"; }

}  // namespace

TEST(ParseNexus, ThreeLeafExample) {
  auto log = parse_nexus(wrap(kThreeLeaf), "states");
  ASSERT_EQ(log.samples.size(), 1u);
  const auto& t = log.samples[0].tree;
  EXPECT_EQ(t.tree().leaf_count(), 3u);
  EXPECT_EQ(t.features(), 2u);
  const NodeId root = t.tree().root();
  EXPECT_EQ(states_of(t, root), "11");
  const NodeId cherry = t.tree().mrca(*t.tree().find_leaf("1"), *t.tree().find_leaf("2"));
  EXPECT_EQ(states_of(t, cherry), "01");
  EXPECT_DOUBLE_EQ(t.tree().age(root), 2.0);
  EXPECT_DOUBLE_EQ(t.tree().age(cherry), 1.0);
  // Leaves carry no tag, so their states are missing.
  for (NodeId leaf : t.tree().leaves()) EXPECT_EQ(states_of(t, leaf), "??");
}

TEST(ParseNexus, TranslateTableAndExtraAnnotations) {
  const std::string text = wrap(
      "Translate\n 1 Alpha,\n 2 'Beta gamma',\n 3 Delta\n;\n"
      "tree STATE_0 = [&R] ((1[&states=\"10\",rate=0.5]:100,2[&states=\"11\"]:100)[&states=\"11\"]:50,"
      "3[&states=\"0-\"]:150)[&posterior=1.0,states=\"01\"];");
  auto log = parse_nexus(text, "states");
  ASSERT_EQ(log.translate.size(), 3u);
  EXPECT_EQ(log.translate.at(2), "Beta gamma");
  const auto& t = log.samples[0].tree;
  EXPECT_TRUE(t.tree().find_leaf("Beta gamma").has_value());
  EXPECT_EQ(states_of(t, *t.tree().find_leaf("Delta")), "0?");
  EXPECT_EQ(states_of(t, t.tree().root()), "01");
}

TEST(ParseNexus, Errors) {
  EXPECT_THROW(parse_nexus(wrap("tree A = ((1:1,2:1):1,3:2;"), "states"), InputError);
  EXPECT_THROW(parse_nexus(wrap("Translate 1 a, 2 b, 3 c;\ntree A = ((1:1,2:1):1,4:2);"), "states"),
               InputError);
  EXPECT_THROW(parse_nexus(wrap("tree A = ((1[&states=\"0\"]:1,2[&states=\"01\"]:1):1,3:2);"), "states"),
               InputError);
  EXPECT_THROW(parse_nexus(wrap("tree A = ((1[&states=\"02\"]:1,2:1):1,3:2);"), "states"), InputError);
  EXPECT_THROW(parse_nexus(wrap("tree A = ((1:1,2:1,4:1):1,3:2);"), "states"), InputError);
  EXPECT_THROW(parse_nexus(wrap("tree A = ((1:1,2):1,3:2);"), "states"), InputError);
  EXPECT_THROW(parse_nexus("#NEXUS\nbegin taxa;\nend;\n", "states"), InputError);
  try {
    parse_nexus(wrap("tree A = ((1[&states=\"0x\"]:1,2:1):1,3:2);"), "states");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("non-binary"), std::string::npos);
  }
}

TEST(ParseNexus, OtherTagIgnored) {
  auto log = parse_nexus(wrap(kThreeLeaf), "other");
  EXPECT_EQ(log.samples[0].tree.features(), 0u);
}

TEST(WriteNexus, EmptyLog) {
  NexusTreeLog empty;
  const std::string text = write_nexus(empty, "states");
  auto back = parse_nexus(text, "states");
  EXPECT_TRUE(back.samples.empty());
}

TEST(WriteNexus, TwoLeafTreeIsCanonicalAndStable) {
  std::vector<TreeNode> nodes(3);
  nodes[0].label = "B";
  nodes[1].label = "A";
  nodes[0].parent = nodes[1].parent = 2;
  nodes[2].children = {0, 1};
  nodes[2].age = 500;
  StateAnnotatedTree t(TimeTree(nodes), 1, {Cell::present, Cell::absent, Cell::present});
  auto log = make_log({{"S1", t}});
  const std::string a = write_nexus(log, "states");
  EXPECT_EQ(a, write_nexus(log, "states"));
  EXPECT_NE(a.find("tree S1 = [&R] ("), std::string::npos);
  EXPECT_NE(a.find("[&states=\"1\"]"), std::string::npos);
}

TEST(WriteNexus, RoundTripTwoTreeLog) {
  std::mt19937_64 rng(21);
  auto log = oracle::random_log(5, 2, 7, rng);
  auto back = parse_nexus(write_nexus(log, "states"), "states");
  EXPECT_TRUE(same_log(log, back, 1e-9));
  auto again = parse_nexus(write_nexus(back, "states"), "states");
  EXPECT_TRUE(same_log(back, again, 1e-9));
}

TEST(WriteNexus, RoundTripRandomEightLeaf) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 25; ++i) {
    auto log = oracle::random_log(8, 1 + i % 3, 1 + i % 11, rng);
    auto back = parse_nexus(write_nexus(log, "states"), "states");
    ASSERT_TRUE(same_log(log, back, 1e-9)) << "trial " << i;
  }
}

TEST(MergeStateLogs, ConcatenatesInOrder) {
  std::mt19937_64 rng(9);
  auto base = oracle::random_log(4, 2, 2, rng);
  NexusTreeLog second = base;
  for (auto& s : second.samples) {
    const auto& tree = s.tree.tree();
    std::vector<Cell> cells;
    for (std::size_t v = 0; v < tree.size(); ++v) {
      cells.insert(cells.end(), {Cell::present, Cell::present, Cell::absent});
    }
    s.tree = StateAnnotatedTree(tree, 3, cells);
  }
  for (auto& s : base.samples) {
    const auto& tree = s.tree.tree();
    std::vector<Cell> cells;
    for (std::size_t v = 0; v < tree.size(); ++v) cells.insert(cells.end(), {Cell::absent, Cell::present});
    s.tree = StateAnnotatedTree(tree, 2, cells);
  }
  std::vector<NexusTreeLog> logs{base, second};
  std::vector<std::size_t> order{0, 1};
  auto merged = merge_state_logs(logs, order);
  ASSERT_EQ(merged.samples.size(), 2u);
  for (const auto& s : merged.samples) {
    for (NodeId v = 0; v < static_cast<NodeId>(s.tree.tree().size()); ++v) EXPECT_EQ(states_of(s.tree, v), "01110");
  }
  std::vector<std::size_t> reversed{1, 0};
  EXPECT_EQ(states_of(merge_state_logs(logs, reversed).samples[0].tree, 0), "11001");
}

TEST(MergeStateLogs, SingleLogIsIdentity) {
  std::mt19937_64 rng(10);
  std::vector<NexusTreeLog> logs{oracle::random_log(6, 3, 4, rng)};
  std::vector<std::size_t> order{0};
  EXPECT_TRUE(same_log(merge_state_logs(logs, order), logs[0], 0.0));
}

TEST(MergeStateLogs, Errors) {
  std::mt19937_64 rng(12);
  auto a = oracle::random_log(6, 2, 2, rng);
  auto b = oracle::random_log(6, 2, 2, rng);
  std::vector<NexusTreeLog> logs{a, b};
  std::vector<std::size_t> order{0, 1};
  try {
    merge_state_logs(logs, order);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("topology mismatch"), std::string::npos);
  }
  auto shorter = a;
  shorter.samples.pop_back();
  std::vector<NexusTreeLog> uneven{a, shorter};
  EXPECT_THROW(merge_state_logs(uneven, order), InputError);
  std::vector<std::size_t> bad{0, 0};
  EXPECT_THROW(merge_state_logs(logs, bad), InputError);
}

TEST(ResolveSampleIndex, Choices) {
  std::mt19937_64 rng(13);
  auto log = oracle::random_log(4, 3, 1, rng);
  EXPECT_EQ(resolve_sample_index(log, "last"), 2u);
  EXPECT_EQ(resolve_sample_index(log, "first"), 0u);
  EXPECT_EQ(resolve_sample_index(log, "1"), 1u);
  EXPECT_THROW(resolve_sample_index(log, "3"), InputError);
  EXPECT_THROW(resolve_sample_index(log, "x"), InputError);
}
