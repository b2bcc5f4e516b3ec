#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../oracles.hpp"
#include "treejog/ctmc.hpp"
#include "treejog/errors.hpp"

using namespace treejog;

namespace {

CharacterMatrix leaf_matrix(const TimeTree& tree, const std::vector<std::vector<int>>& columns) {
  std::vector<std::string> labels;
  for (NodeId leaf : tree.leaves()) labels.push_back(tree.node(leaf).label);
  std::vector<std::string> names;
  for (std::size_t f = 0; f < columns.size(); ++f) names.push_back("f" + std::to_string(f));
  std::vector<Cell> cells;
  for (std::size_t r = 0; r < labels.size(); ++r)
    for (const auto& col : columns)
      cells.push_back(col[r] < 0 ? Cell::missing : (col[r] ? Cell::present : Cell::absent));
  return {labels, names, cells};
}

// Two leaves joined at `age`, leaves at age 0.
TimeTree cherry(double age) {
  std::vector<TreeNode> nodes(3);
  nodes[0].label = "A";
  nodes[1].label = "B";
  nodes[0].parent = nodes[1].parent = 2;
  nodes[2].children = {0, 1};
  nodes[2].age = age;
  return TimeTree(nodes, BranchPolicy::allow_zero);
}

}  // namespace

TEST(TransitionMatrix, IdentityAtZero) {
  auto m = transition_matrix({0.7, 1.3, std::nullopt}, 0.0);
  EXPECT_EQ(m[0][0], 1.0);
  EXPECT_EQ(m[1][1], 1.0);
  EXPECT_EQ(m[0][1], 0.0);
  EXPECT_EQ(m[1][0], 0.0);
}

TEST(TransitionMatrix, MatchesSeriesOracle) {
  auto m = transition_matrix({1.0, 1.0, std::nullopt}, 0.5);
  EXPECT_NEAR(m[0][1], 0.3160603, 1e-7);
  auto o = oracle::expm_series(1.0, 1.0, 0.5);
  EXPECT_NEAR(m[0][1], o[0][1], 1e-14);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), t = u(rng);
    auto p = transition_matrix({a, b, std::nullopt}, t);
    auto q = oracle::expm_series(a, b, t);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) EXPECT_NEAR(p[r][c], q[r][c], 1e-13);
  }
}

TEST(TransitionMatrix, StationaryLimit) {
  auto m = transition_matrix({1.0, 3.0, std::nullopt}, 1e6);
  EXPECT_NEAR(m[0][0], 0.75, 1e-12);
  EXPECT_NEAR(m[1][0], 0.75, 1e-12);
  EXPECT_NEAR(m[0][1], 0.25, 1e-12);
  EXPECT_NEAR(m[1][1], 0.25, 1e-12);
}

TEST(TransitionMatrix, RowsStochasticAndChapmanKolmogorov) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 300; ++i) {
    CtmcRates r{u(rng), u(rng) + 1e-3, std::nullopt};
    const double s = u(rng), t = u(rng);
    auto ps = transition_matrix(r, s), pt = transition_matrix(r, t), pst = transition_matrix(r, s + t);
    auto prod = oracle::mul(ps, pt);
    for (int a = 0; a < 2; ++a) {
      EXPECT_NEAR(ps[a][0] + ps[a][1], 1.0, 1e-12);
      for (int b = 0; b < 2; ++b) {
        EXPECT_GE(ps[a][b], 0.0);
        EXPECT_LE(ps[a][b], 1.0);
        EXPECT_NEAR(prod[a][b], pst[a][b], 1e-12);
      }
    }
  }
}

TEST(TransitionMatrix, Errors) {
  EXPECT_THROW(transition_matrix({1, 1, std::nullopt}, -1.0), InputError);
  EXPECT_THROW(transition_matrix({0, 0, std::nullopt}, 1.0), InputError);
  EXPECT_THROW(transition_matrix({1, 1, 1.5}, 1.0), InputError);
}

TEST(Pruning, ZeroLengthCherry) {
  auto tree = cherry(0.0);
  CtmcRates r{1.0, 2.0, 0.3};
  auto same = prune_log_likelihood(tree, r, leaf_matrix(tree, {{1, 1}}));
  EXPECT_NEAR(std::exp(same[0]), 0.3, 1e-15);
  auto clash = prune_log_likelihood(tree, r, leaf_matrix(tree, {{0, 1}}));
  EXPECT_EQ(clash[0], -std::numeric_limits<double>::infinity());
}

TEST(Pruning, MatchesEnumerationOnRandomFourLeafTrees) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  std::bernoulli_distribution bit(0.5);
  for (int trial = 0; trial < 30; ++trial) {
    auto tree = oracle::random_tree(4, rng);
    CtmcRates r{u(rng), u(rng), std::nullopt};
    std::vector<std::vector<int>> cols(3, std::vector<int>(4));
    for (auto& c : cols)
      for (auto& x : c) x = bit(rng);
    cols[2][1] = -1;
    auto ll = prune_log_likelihood(tree, r, leaf_matrix(tree, cols));
    for (std::size_t f = 0; f < cols.size(); ++f) {
      const double expect = oracle::likelihood(tree, r.alpha, r.beta, r.prior_one(), cols[f]);
      EXPECT_NEAR(std::exp(ll[f]), expect, 1e-12 * std::max(1.0, expect));
    }
  }
}

TEST(Pruning, LabelMismatch) {
  auto tree = cherry(100.0);
  CharacterMatrix m({"A", "C"}, {"f"}, {Cell::present, Cell::absent});
  EXPECT_THROW(prune_log_likelihood(tree, {}, m), InputError);
}

TEST(Pruning, DeepTreeDoesNotUnderflow) {
  auto tree = make_skewed_tree(64, 1e6);
  std::vector<std::vector<int>> cols(5, std::vector<int>(64));
  for (std::size_t i = 0; i < 64; ++i) cols[0][i] = static_cast<int>(i % 2);
  auto ll = prune_log_likelihood(tree, {3.0, 3.0, std::nullopt}, leaf_matrix(tree, cols));
  for (double x : ll) EXPECT_TRUE(std::isfinite(x));
  EXPECT_NEAR(ll[0], 64 * std::log(0.5), 1e-6);
}

TEST(Ffbs, ZeroLengthBranchesForceStates) {
  auto tree = cherry(0.0);
  auto m = leaf_matrix(tree, {{1, 1}, {0, 0}, {1, -1}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = ffbs_sample(tree, {1.0, 1.0, std::nullopt}, m, seed);
    auto root = s.states(tree.root());
    EXPECT_EQ(root[0], Cell::present);
    EXPECT_EQ(root[1], Cell::absent);
    // Missing leaf behind a zero-length branch copies its parent.
    EXPECT_EQ(s.states(1)[2], root[2]);
    EXPECT_EQ(root[2], Cell::present);
    EXPECT_TRUE(s.complete());
  }
}

TEST(Ffbs, ImpossibleFeatureThrows) {
  auto tree = cherry(0.0);
  EXPECT_THROW(ffbs_sample(tree, {1.0, 1.0, std::nullopt}, leaf_matrix(tree, {{0, 1}}), 1),
               NumericalError);
}

TEST(Ffbs, DeterministicGivenSeed) {
  std::mt19937_64 rng(4);
  auto tree = oracle::random_tree(7, rng);
  std::vector<std::vector<int>> cols(12, std::vector<int>(7));
  std::bernoulli_distribution bit(0.4);
  for (auto& c : cols)
    for (auto& x : c) x = bit(rng);
  auto m = leaf_matrix(tree, cols);
  auto a = ffbs_sample(tree, {1.0, 1.0, std::nullopt}, m, 99);
  auto b = ffbs_sample(tree, {1.0, 1.0, std::nullopt}, m, 99);
  EXPECT_EQ(a.all_states(), b.all_states());
}

TEST(Ffbs, MarginalsMatchEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto tree = oracle::random_tree(5, rng);
    std::vector<int> col{1, 0, 1, -1, 1};
    CtmcRates r{0.4, 0.9, std::nullopt};
    AncestralSampler sampler(tree, r, leaf_matrix(tree, {col}));
    auto marg = sampler.marginals();
    auto expect = oracle::posteriors(tree, r.alpha, r.beta, r.prior_one(), col);
    for (std::size_t v = 0; v < tree.size(); ++v) EXPECT_NEAR(marg[v], expect[v], 1e-12);
  }
}

TEST(Ffbs, ThreeLeafRootFrequency) {
  std::mt19937_64 rng(6);
  auto tree = oracle::random_tree(3, rng, 800.0);
  std::vector<int> col{1, 0, 1};
  CtmcRates r{0.8, 0.5, std::nullopt};
  AncestralSampler sampler(tree, r, leaf_matrix(tree, {col}));
  const double p = oracle::posteriors(tree, r.alpha, r.beta, r.prior_one(), col)[static_cast<std::size_t>(tree.root())];
  const int draws = 20000;
  int ones = 0;
  for (int k = 0; k < draws; ++k) ones += sampler.draw(static_cast<std::uint64_t>(k)).states(tree.root())[0] == Cell::present;
  const double sigma = std::sqrt(p * (1 - p) / draws);
  EXPECT_NEAR(static_cast<double>(ones) / draws, p, 3 * sigma);
}

TEST(FitRates, RecoversGeneratingRateRoughly) {
  // Data drawn from the symmetric chain itself; the estimate should land
  // near the truth with many features.
  std::mt19937_64 rng(7);
  auto tree = make_balanced_tree(16, 4000);
  const double rate = 0.3;
  auto P = [&](double t) { return oracle::expm_series(rate, rate, t / 1000.0); };
  std::vector<std::vector<int>> cols;
  std::uniform_real_distribution<double> u(0, 1);
  for (int f = 0; f < 2000; ++f) {
    std::vector<int> state(tree.size());
    for (NodeId v : tree.preorder()) {
      if (v == tree.root()) {
        state[static_cast<std::size_t>(v)] = u(rng) < 0.5;
      } else {
        const int up = state[static_cast<std::size_t>(tree.parent(v))];
        state[static_cast<std::size_t>(v)] = u(rng) < P(tree.branch_length(v))[up][1];
      }
    }
    std::vector<int> col;
    for (NodeId leaf : tree.leaves()) col.push_back(state[static_cast<std::size_t>(leaf)]);
    cols.push_back(col);
  }
  auto fit = fit_rates(tree, leaf_matrix(tree, cols));
  EXPECT_NEAR(fit.rates.alpha, rate, 0.05);
  EXPECT_EQ(fit.rates.alpha, fit.rates.beta);
  auto asym = fit_rates(tree, leaf_matrix(tree, cols), RateModel::asymmetric);
  EXPECT_GE(asym.log_likelihood, fit.log_likelihood - 1e-6);
}
