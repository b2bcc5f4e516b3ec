#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "treejog/ctmc.hpp"
#include "treejog/errors.hpp"
#include "treejog/jog.hpp"
#include "treejog/kde.hpp"
#include "treejog/pca.hpp"

using namespace treejog;

namespace {

// ((A, (B, C)3)4): leaves 0..2, internal 3, root 4.
TimeTree three_leaf_caterpillar() {
  std::vector<TreeNode> n(5);
  n[0].label = "A";
  n[1].label = "B";
  n[2].label = "C";
  n[0].parent = 4;
  n[1].parent = 3;
  n[2].parent = 3;
  n[3] = {4, {1, 2}, 1.0, ""};
  n[4] = {kNoNode, {0, 3}, 2.0, ""};
  return TimeTree(std::move(n));
}

ProjectedTree with_x(const TimeTree& tree, const std::vector<double>& x) {
  ProjectedTree p{tree, {}};
  for (double v : x) p.coords.push_back({v, 0.0});
  return p;
}

double backtrack_of(const JogReport& r, const std::string& leaf) {
  for (const auto& p : r.paths)
    if (p.leaf == leaf) return p.backtrack;
  ADD_FAILURE() << "no path for " << leaf;
  return -1;
}

}  // namespace

TEST(Jog, OutAndBackPath) {
  // Root 0, internal 1, leaf C at 0.5: 1.5 travelled, 0.5 net.
  auto r = jogging_score(with_x(three_leaf_caterpillar(), {0.0, 0.0, 0.5, 1.0, 0.0}));
  EXPECT_NEAR(backtrack_of(r, "C"), 1.0 / 1.5, 1e-12);
  EXPECT_NEAR(backtrack_of(r, "B"), 1.0, 1e-12);  // returns to where it started
  EXPECT_EQ(backtrack_of(r, "A"), 0.0);           // single edge, zero length
  EXPECT_NEAR(r.max_backtrack, 1.0, 1e-12);
  EXPECT_NEAR(r.mean_backtrack, (1.0 / 1.5 + 1.0) / 3, 1e-12);
}

TEST(Jog, MonotonePathsDoNotJog) {
  auto r = jogging_score(with_x(three_leaf_caterpillar(), {-1.0, 3.0, 4.0, 2.0, 0.0}));
  for (const auto& p : r.paths) EXPECT_EQ(p.backtrack, 0.0) << p.leaf;
}

TEST(Jog, SingleEdgeHasNoBacktrack) {
  auto r = jogging_score(with_x(three_leaf_caterpillar(), {5.0, 0, 0, 0, 1.0}));
  EXPECT_EQ(backtrack_of(r, "A"), 0.0);
}

TEST(Jog, FlipAndShiftInvariant) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    auto tree = oracle::random_tree(3 + trial % 8, rng);
    std::vector<double> x(tree.size());
    for (auto& v : x) v = z(rng);
    std::vector<double> y(x);
    for (auto& v : y) v = 7.5 - v;
    auto a = jogging_score(with_x(tree, x));
    auto b = jogging_score(with_x(tree, y));
    ASSERT_EQ(a.paths.size(), b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i)
      EXPECT_NEAR(a.paths[i].backtrack, b.paths[i].backtrack, 1e-12);
    for (const auto& p : a.paths) {
      EXPECT_GE(p.backtrack, 0.0);
      EXPECT_LT(p.backtrack, 1.0 + 1e-12);
    }
  }
}

TEST(Jog, SecondAxis) {
  ProjectedTree p{three_leaf_caterpillar(), {}};
  for (double v : {0.0, 0.0, 0.5, 1.0, 0.0}) p.coords.push_back({0.0, v});
  auto r = jogging_score(p, 1);
  EXPECT_EQ(r.axis, 1u);
  EXPECT_NEAR(backtrack_of(r, "C"), 1.0 / 1.5, 1e-12);
}

TEST(Patterns, ChainWithOneReturn) {
  auto tree = three_leaf_caterpillar();
  // Root 1, internal 0, C 1, B 0, A 0.
  std::vector<Cell> s{Cell::absent, Cell::absent, Cell::present, Cell::absent, Cell::present};
  auto counts = count_patterns(StateAnnotatedTree(tree, 1, s));
  EXPECT_EQ(counts[kPattern101], 1u);
  EXPECT_EQ(counts[4], 1u);  // 1 -> 0 -> 0 into B
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}), 2u);
  EXPECT_EQ(pattern_name(kPattern101), "101");
  EXPECT_EQ(pattern_name(kPattern010), "010");
}

TEST(Patterns, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 30; ++trial) {
    auto tree = oracle::random_tree(2 + trial % 10, rng);
    const std::size_t p = 1 + static_cast<std::size_t>(trial % 7);
    std::vector<Cell> s(tree.size() * p);
    for (auto& c : s) c = coin(rng) ? Cell::present : Cell::absent;
    StateAnnotatedTree st(tree, p, s);
    PatternCounts expect{};
    std::size_t triples = 0;
    for (std::size_t v = 0; v < tree.size(); ++v) {
      const NodeId par = tree.parent(static_cast<NodeId>(v));
      if (par == kNoNode || tree.parent(par) == kNoNode) continue;
      ++triples;
      const NodeId g = tree.parent(par);
      for (std::size_t f = 0; f < p; ++f) {
        auto bit = [&](NodeId id) { return st.states(id)[f] == Cell::present ? 1u : 0u; };
        ++expect[4 * bit(g) + 2 * bit(par) + bit(static_cast<NodeId>(v))];
      }
    }
    auto got = count_patterns(st);
    EXPECT_EQ(got, expect);
    EXPECT_EQ(std::accumulate(got.begin(), got.end(), std::uint64_t{0}), p * triples);
  }
}

TEST(Patterns, MissingInternalStateIsAnError) {
  auto tree = three_leaf_caterpillar();
  std::vector<Cell> s(5, Cell::present);
  s[3] = Cell::missing;
  EXPECT_THROW(count_patterns(StateAnnotatedTree(tree, 1, s)), InputError);
  EXPECT_THROW(project_tree(StateAnnotatedTree(tree, 1, s), PcaModel{{"f"}, {0.5}, {{1.0}}, {1.0}, 3}),
               InputError);
}

TEST(Clade, WholeTreeGivesRoot) {
  std::mt19937_64 rng(5);
  auto log = oracle::random_log(6, 3, 12, rng);
  for (auto& sample : log.samples)
    for (std::size_t v = 0; v < sample.tree.tree().size(); ++v)
      for (auto& c : sample.tree.mutable_states(static_cast<NodeId>(v)))
        if (c == Cell::missing) c = Cell::present;
  auto model = fit_pca(log.samples[0].tree.leaf_matrix(), 2);
  std::vector<std::string> all;
  for (NodeId l : log.samples[0].tree.tree().leaves()) all.push_back(log.samples[0].tree.tree().node(l).label);
  auto locs = clade_locations(log, all, model);
  ASSERT_EQ(locs.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& tree = log.samples[s].tree;
    EXPECT_EQ(locs[s].mrca, tree.tree().root());
    EXPECT_TRUE(locs[s].monophyletic);
    auto expect = project(model, tree.states(tree.tree().root()));
    EXPECT_NEAR(locs[s].location[0], expect[0], 1e-12);
    EXPECT_NEAR(locs[s].location[1], expect[1], 1e-12);
  }
  std::vector<std::string> bogus{"nope"};
  EXPECT_THROW(clade_locations(log, bogus, model), InputError);
}

TEST(Clade, SampledMeanMatchesMarginalProjection) {
  auto tree = make_balanced_tree(8, 4000);
  std::mt19937_64 rng(8);
  auto leaves = oracle::random_binary_matrix(8, 30, rng, 0.5);
  leaves = CharacterMatrix(default_leaf_labels(8), leaves.feature_names(), leaves.cells());
  auto model = fit_pca(leaves, 2);
  CtmcRates rates{0.4, 0.6, std::nullopt};
  AncestralSampler sampler(tree, rates, leaves);

  std::vector<TreeSample> draws;
  for (std::uint64_t k = 0; k < 100; ++k)
    draws.push_back({"STATE_" + std::to_string(k), sampler.draw(1000 + k)});
  auto log = make_log(std::move(draws));
  std::vector<std::string> clade{default_leaf_labels(8)[0], default_leaf_labels(8)[1]};
  auto locs = clade_locations(log, clade, model);

  const NodeId anc = tree.mrca(*tree.find_leaf(clade[0]), *tree.find_leaf(clade[1]));
  auto marg = sampler.marginals();
  std::vector<double> mean_state(marg.begin() + static_cast<std::ptrdiff_t>(anc * 30),
                                 marg.begin() + static_cast<std::ptrdiff_t>((anc + 1) * 30));
  auto expect = project(model, std::span<const double>(mean_state));
  for (int c = 0; c < 2; ++c) {
    double m = 0, ss = 0;
    for (const auto& l : locs) m += l.location[static_cast<std::size_t>(c)];
    m /= 100.0;
    for (const auto& l : locs) ss += std::pow(l.location[static_cast<std::size_t>(c)] - m, 2);
    const double se = std::sqrt(ss / 99.0 / 100.0);
    EXPECT_NEAR(m, expect[static_cast<std::size_t>(c)], 3 * se + 1e-12) << "component " << c;
  }
}

TEST(Kde, NormalisedAndSymmetric) {
  std::vector<Point2> pts{{-1.0, 0.0}, {1.0, 0.0}, {0.0, -0.5}, {0.0, 0.5}};
  auto h = scott_bandwidth(pts);
  GridSpec g;
  g.nx = g.ny = 120;
  g.x0 = -6;
  g.x1 = 6;
  g.y0 = -5;
  g.y1 = 5;
  auto d = kde_2d(pts, h, g);
  double sum = 0;
  for (double v : d.density) sum += v;
  EXPECT_NEAR(sum * d.cell_area(), 1.0, 1e-3);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      EXPECT_NEAR(d.at(i, j), d.at(g.nx - 1 - i, j), 1e-12);
      EXPECT_NEAR(d.at(i, j), d.at(i, g.ny - 1 - j), 1e-12);
    }
}

TEST(Kde, SinglePointPeaksAndDecays) {
  std::vector<Point2> pts{{0.0, 0.0}};
  GridSpec g;
  g.nx = g.ny = 41;
  g.x0 = g.y0 = -2.05;
  g.x1 = g.y1 = 2.05;
  auto d = kde_2d(pts, Bandwidth{0.5, 0.3}, g);
  const std::size_t c = 20;
  EXPECT_NEAR(d.at(c, c), 1.0 / (2 * M_PI * 0.5 * 0.3), 1e-9);
  for (std::size_t i = c; i + 1 < g.nx; ++i) EXPECT_GT(d.at(i, c), d.at(i + 1, c));
  for (std::size_t j = c; j + 1 < g.ny; ++j) EXPECT_GT(d.at(c, j), d.at(c, j + 1));
  EXPECT_EQ(std::max_element(d.density.begin(), d.density.end()) - d.density.begin(),
            static_cast<std::ptrdiff_t>(c * g.nx + c));
}

TEST(Kde, ScottBandwidth) {
  std::vector<Point2> pts{{0, 0}, {1, 2}, {2, 4}, {3, 0}};
  auto h = scott_bandwidth(pts);
  const double sx = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
  const double sy = std::sqrt((2.25 + 0.25 + 6.25 + 2.25) / 3.0);
  EXPECT_NEAR(h.hx, sx * std::pow(4.0, -1.0 / 6.0), 1e-12);
  EXPECT_NEAR(h.hy, sy * std::pow(4.0, -1.0 / 6.0), 1e-12);
}

TEST(Kde, DegenerateInput) {
  std::vector<Point2> same{{1, 1}, {1, 1}, {1, 1}};
  EXPECT_THROW(scott_bandwidth(same), NumericalError);
  std::vector<Point2> none;
  EXPECT_ANY_THROW(kde_2d(none, Bandwidth{}, GridSpec{}));
  GridSpec bad;
  bad.x1 = bad.x0;
  EXPECT_THROW(bad.validate(), InputError);
}

TEST(Kde, CsvLayout) {
  std::vector<Point2> pts{{0, 0}, {1, 1}};
  GridSpec g;
  g.nx = 3;
  g.ny = 2;
  auto d = kde_2d(pts, Bandwidth{1, 1}, g);
  std::ostringstream out;
  write_density_csv(out, d);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,density");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
}
