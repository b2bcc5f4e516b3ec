#include "treejog/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "treejog/errors.hpp"
#include "treejog/random.hpp"

namespace treejog {

void CtmcRates::validate() const {
  if (!(alpha >= 0) || !(beta >= 0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw InputError("CTMC rates must be finite and non-negative");
  }
  if (!(alpha + beta > 0)) throw InputError("CTMC needs alpha + beta > 0");
  if (root_prior && !(*root_prior >= 0 && *root_prior <= 1)) {
    throw InputError("root prior must lie in [0, 1]");
  }
}

TransitionMatrix transition_matrix(const CtmcRates& rates, double t) {
  if (!(t >= 0)) throw InputError("transition time must be non-negative");
  rates.validate();
  const double total = rates.alpha + rates.beta;
  // 1 - decay without cancellation for small t.
  const double grow = -std::expm1(-total * t);
  TransitionMatrix p{};
  p[0][1] = rates.alpha * grow / total;
  p[0][0] = 1.0 - p[0][1];
  p[1][0] = rates.beta * grow / total;
  p[1][1] = 1.0 - p[1][0];
  return p;
}

namespace {

// Matrix row index for every tree leaf, by label.
std::vector<std::size_t> leaf_rows(const TimeTree& tree, const CharacterMatrix& leaves) {
  if (leaves.rows() != tree.leaf_count()) {
    throw InputError("matrix has " + std::to_string(leaves.rows()) + " languages but the tree has " +
                     std::to_string(tree.leaf_count()) + " leaves");
  }
  std::vector<std::size_t> rows(tree.size(), 0);
  for (NodeId l : tree.leaves()) {
    const auto& label = tree.node(l).label;
    auto r = leaves.find_row(label);
    if (r == leaves.rows()) throw InputError("tree leaf \"" + label + "\" is missing from the matrix");
    rows[static_cast<std::size_t>(l)] = r;
  }
  return rows;
}

}  // namespace

AncestralSampler::AncestralSampler(TimeTree tree, const CtmcRates& rates,
                                   const CharacterMatrix& leaves)
    : tree_(std::move(tree)), features_(leaves.cols()) {
  rates.validate();
  prior_one_ = rates.prior_one();
  const auto rows = leaf_rows(tree_, leaves);
  const std::size_t n = tree_.size();

  transitions_.resize(n);
  for (NodeId v = 0; v < static_cast<NodeId>(n); ++v) {
    transitions_[static_cast<std::size_t>(v)] =
        transition_matrix(rates, tree_.branch_length(v) / kYearsPerRateUnit);
  }
  leaf_cells_.assign(n * features_, Cell::missing);
  for (NodeId l : tree_.leaves()) {
    auto row = leaves.row(rows[static_cast<std::size_t>(l)]);
    std::copy(row.begin(), row.end(), leaf_cells_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(l) * features_));
  }

  partials_.assign(n * features_ * 2, 0.0);
  std::vector<double> log_scale(features_, 0.0);
  for (NodeId v : tree_.postorder()) {
    const auto& nd = tree_.node(v);
    for (std::size_t f = 0; f < features_; ++f) {
      if (nd.is_leaf()) {
        Cell c = leaf_cells_[static_cast<std::size_t>(v) * features_ + f];
        partial(v, f, 0) = c == Cell::present ? 0.0 : 1.0;
        partial(v, f, 1) = c == Cell::absent ? 0.0 : 1.0;
        continue;
      }
      double l0 = 1.0;
      double l1 = 1.0;
      for (NodeId c : nd.children) {
        const auto& p = transitions_[static_cast<std::size_t>(c)];
        const double c0 = partial(c, f, 0);
        const double c1 = partial(c, f, 1);
        l0 *= p[0][0] * c0 + p[0][1] * c1;
        l1 *= p[1][0] * c0 + p[1][1] * c1;
      }
      const double mx = std::max(l0, l1);
      if (mx > 0) {
        l0 /= mx;
        l1 /= mx;
        log_scale[f] += std::log(mx);
      }
      partial(v, f, 0) = l0;
      partial(v, f, 1) = l1;
    }
  }
  log_lik_.resize(features_);
  const NodeId root = tree_.root();
  for (std::size_t f = 0; f < features_; ++f) {
    const double lik = (1.0 - prior_one_) * partial(root, f, 0) + prior_one_ * partial(root, f, 1);
    log_lik_[f] = lik > 0 ? std::log(lik) + log_scale[f] : -std::numeric_limits<double>::infinity();
  }
}

void AncestralSampler::require_positive() const {
  for (std::size_t f = 0; f < features_; ++f) {
    if (!std::isfinite(log_lik_[f])) {
      throw NumericalError("feature " + std::to_string(f + 1) +
                           " has zero likelihood under the tree and rates");
    }
  }
}

StateAnnotatedTree AncestralSampler::draw(std::uint64_t seed) const {
  require_positive();
  const std::size_t n = tree_.size();
  std::vector<Cell> states(n * features_);
  std::vector<int> state(n);
  const NodeId root = tree_.root();
  for (std::size_t f = 0; f < features_; ++f) {
    Rng rng(derive_seed(seed, {f}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (NodeId v : tree_.preorder()) {
      double w0 = 0.0;
      double w1 = 0.0;
      if (v == root) {
        w0 = (1.0 - prior_one_) * partial(v, f, 0);
        w1 = prior_one_ * partial(v, f, 1);
      } else {
        const auto& p = transitions_[static_cast<std::size_t>(v)];
        const int s = state[static_cast<std::size_t>(tree_.parent(v))];
        w0 = p[static_cast<std::size_t>(s)][0] * partial(v, f, 0);
        w1 = p[static_cast<std::size_t>(s)][1] * partial(v, f, 1);
      }
      // Always consume one draw so the stream layout is fixed per node.
      const double u = unit(rng);
      const int s = u * (w0 + w1) < w0 ? 0 : 1;
      state[static_cast<std::size_t>(v)] = s;
      states[static_cast<std::size_t>(v) * features_ + f] = s ? Cell::present : Cell::absent;
    }
  }
  return StateAnnotatedTree(tree_, features_, std::move(states));
}

std::vector<double> AncestralSampler::marginals() const {
  require_positive();
  const std::size_t n = tree_.size();
  std::vector<double> out(n * features_);
  // outside[v] = P(data outside subtree v, state at v), rescaled per node.
  std::vector<std::array<double, 2>> outside(n);
  for (std::size_t f = 0; f < features_; ++f) {
    for (NodeId v : tree_.preorder()) {
      auto& o = outside[static_cast<std::size_t>(v)];
      if (v == tree_.root()) {
        o = {1.0 - prior_one_, prior_one_};
      } else {
        const NodeId par = tree_.parent(v);
        const auto& pn = tree_.node(par);
        const NodeId sib = pn.children[0] == v ? pn.children[1] : pn.children[0];
        const auto& ps = transitions_[static_cast<std::size_t>(sib)];
        const auto& pv = transitions_[static_cast<std::size_t>(v)];
        const auto& op = outside[static_cast<std::size_t>(par)];
        std::array<double, 2> above{};
        for (int s = 0; s < 2; ++s) {
          const double sib_msg = ps[static_cast<std::size_t>(s)][0] * partial(sib, f, 0) +
                                 ps[static_cast<std::size_t>(s)][1] * partial(sib, f, 1);
          above[static_cast<std::size_t>(s)] = op[static_cast<std::size_t>(s)] * sib_msg;
        }
        for (int t = 0; t < 2; ++t) {
          o[static_cast<std::size_t>(t)] = above[0] * pv[0][static_cast<std::size_t>(t)] +
                                           above[1] * pv[1][static_cast<std::size_t>(t)];
        }
        const double mx = std::max(o[0], o[1]);
        if (mx > 0) {
          o[0] /= mx;
          o[1] /= mx;
        }
      }
      const double j0 = o[0] * partial(v, f, 0);
      const double j1 = o[1] * partial(v, f, 1);
      out[static_cast<std::size_t>(v) * features_ + f] = j1 / (j0 + j1);
    }
  }
  return out;
}

std::vector<double> prune_log_likelihood(const TimeTree& tree, const CtmcRates& rates,
                                         const CharacterMatrix& leaves) {
  return AncestralSampler(tree, rates, leaves).log_likelihoods();
}

StateAnnotatedTree ffbs_sample(const TimeTree& tree, const CtmcRates& rates,
                               const CharacterMatrix& leaves, std::uint64_t seed) {
  return AncestralSampler(tree, rates, leaves).draw(seed);
}

namespace {

double total_log_likelihood(const TimeTree& tree, const CharacterMatrix& leaves, double alpha,
                            double beta) {
  auto ll = prune_log_likelihood(tree, CtmcRates{alpha, beta, std::nullopt}, leaves);
  return std::accumulate(ll.begin(), ll.end(), 0.0);
}

}  // namespace

RateFit fit_rates(const TimeTree& tree, const CharacterMatrix& leaves, RateModel model) {
  // Golden section on log(rate) over [1e-4, 1e2] per 1000 years.
  auto sym = [&](double x) { return total_log_likelihood(tree, leaves, std::exp(x), std::exp(x)); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(1e-4);
  double b = std::log(1e2);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = sym(c);
  double fd = sym(d);
  while (b - a > 1e-6) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = sym(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = sym(d);
    }
  }
  const double x_sym = 0.5 * (a + b);
  RateFit fit{CtmcRates{std::exp(x_sym), std::exp(x_sym), std::nullopt}, sym(x_sym)};
  if (model == RateModel::symmetric) return fit;

  // Nelder-Mead on (log alpha, log beta), maximizing.
  using Point = std::array<double, 2>;
  auto f = [&](const Point& x) {
    double v = total_log_likelihood(tree, leaves, std::exp(x[0]), std::exp(x[1]));
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  std::array<Point, 3> simplex{Point{x_sym, x_sym}, Point{x_sym + 0.5, x_sym},
                               Point{x_sym, x_sym + 0.5}};
  std::array<double, 3> val{};
  for (int i = 0; i < 3; ++i) val[static_cast<std::size_t>(i)] = f(simplex[static_cast<std::size_t>(i)]);
  for (int iter = 0; iter < 400; ++iter) {
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return val[static_cast<std::size_t>(i)] < val[static_cast<std::size_t>(j)]; });
    auto best = simplex[static_cast<std::size_t>(order[0])];
    auto mid = simplex[static_cast<std::size_t>(order[1])];
    auto worst = simplex[static_cast<std::size_t>(order[2])];
    const double fb = val[static_cast<std::size_t>(order[0])];
    const double fm = val[static_cast<std::size_t>(order[1])];
    const double fw = val[static_cast<std::size_t>(order[2])];
    if (std::abs(fw - fb) < 1e-9 * (1.0 + std::abs(fb)) &&
        std::hypot(worst[0] - best[0], worst[1] - best[1]) < 1e-7) {
      break;
    }
    Point centroid{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
    auto along = [&](double coef) {
      return Point{centroid[0] + coef * (worst[0] - centroid[0]),
                   centroid[1] + coef * (worst[1] - centroid[1])};
    };
    Point refl = along(-1.0);
    double fr = f(refl);
    std::size_t w = static_cast<std::size_t>(order[2]);
    if (fr < fb) {
      Point exp_pt = along(-2.0);
      double fe = f(exp_pt);
      simplex[w] = fe < fr ? exp_pt : refl;
      val[w] = std::min(fe, fr);
    } else if (fr < fm) {
      simplex[w] = refl;
      val[w] = fr;
    } else {
      Point con = fr < fw ? along(-0.5) : along(0.5);
      double fc2 = f(con);
      if (fc2 < std::min(fr, fw)) {
        simplex[w] = con;
        val[w] = fc2;
      } else {
        for (int k : {order[1], order[2]}) {
          auto& pt = simplex[static_cast<std::size_t>(k)];
          pt = Point{best[0] + 0.5 * (pt[0] - best[0]), best[1] + 0.5 * (pt[1] - best[1])};
          val[static_cast<std::size_t>(k)] = f(pt);
        }
      }
    }
  }
  auto it = std::min_element(val.begin(), val.end());
  const auto& xb = simplex[static_cast<std::size_t>(it - val.begin())];
  if (-*it > fit.log_likelihood) {
    fit.rates = CtmcRates{std::exp(xb[0]), std::exp(xb[1]), std::nullopt};
    fit.log_likelihood = -*it;
  }
  return fit;
}

}  // namespace treejog
