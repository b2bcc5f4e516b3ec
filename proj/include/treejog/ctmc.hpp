#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "treejog/character_matrix.hpp"
#include "treejog/state_tree.hpp"
#include "treejog/time_tree.hpp"

namespace treejog {

// Two-state continuous-time Markov chain. Rates are per 1000 years.
struct CtmcRates {
  double alpha = 1.0;  // 0 -> 1
  double beta = 1.0;   // 1 -> 0
  // P(state 1) at the root; the stationary alpha / (alpha + beta) if unset.
  std::optional<double> root_prior;

  double prior_one() const { return root_prior.value_or(alpha / (alpha + beta)); }
  void validate() const;
};

using TransitionMatrix = std::array<std::array<double, 2>, 2>;

// P(t) = exp(Q t) in closed form, t in rate units (1000 years).
TransitionMatrix transition_matrix(const CtmcRates& rates, double t);

// Exact per-feature log marginal likelihood by pruning. Branch lengths are
// converted from years to rate units. Missing leaf cells contribute (1, 1).
// A feature whose leaves are impossible under the tree gets -infinity.
std::vector<double> prune_log_likelihood(const TimeTree& tree, const CtmcRates& rates,
                                         const CharacterMatrix& leaves);

// Forward filtering (pruning partials with per-node rescaling) shared by
// sampling and marginal computation.
class AncestralSampler {
 public:
  AncestralSampler(TimeTree tree, const CtmcRates& rates, const CharacterMatrix& leaves);

  const TimeTree& tree() const { return tree_; }
  std::size_t features() const { return features_; }
  const std::vector<double>& log_likelihoods() const { return log_lik_; }

  // One joint draw of all internal states and missing leaf cells from the
  // posterior. Each feature uses its own stream derived from (seed,
  // feature). Throws NumericalError if some feature has zero likelihood.
  StateAnnotatedTree draw(std::uint64_t seed) const;

  // Exact posterior P(state = 1) per node and feature (node-major), by an
  // up-down pass.
  std::vector<double> marginals() const;

 private:
  double& partial(NodeId v, std::size_t f, int s) {
    return partials_[(static_cast<std::size_t>(v) * features_ + f) * 2 + static_cast<std::size_t>(s)];
  }
  double partial(NodeId v, std::size_t f, int s) const {
    return partials_[(static_cast<std::size_t>(v) * features_ + f) * 2 + static_cast<std::size_t>(s)];
  }
  void require_positive() const;

  TimeTree tree_;
  std::size_t features_ = 0;
  double prior_one_ = 0.5;
  std::vector<TransitionMatrix> transitions_;  // per node, for its parent branch
  std::vector<Cell> leaf_cells_;               // node-major; leaves only
  std::vector<double> partials_;
  std::vector<double> log_lik_;
};

StateAnnotatedTree ffbs_sample(const TimeTree& tree, const CtmcRates& rates,
                               const CharacterMatrix& leaves, std::uint64_t seed);

enum class RateModel { symmetric, asymmetric };

struct RateFit {
  CtmcRates rates;
  double log_likelihood = 0.0;
};

// Maximum-likelihood point estimate of the rates on a fixed tree: golden
// section over log(rate) with alpha = beta, or a Nelder-Mead search over
// (log alpha, log beta) started from the symmetric optimum.
RateFit fit_rates(const TimeTree& tree, const CharacterMatrix& leaves,
                  RateModel model = RateModel::symmetric);

}  // namespace treejog
