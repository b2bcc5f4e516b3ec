#include "treejog/dollo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>

#include "treejog/errors.hpp"
#include "treejog/random.hpp"

namespace treejog {

std::string to_string(BorrowKind kind) {
  switch (kind) {
    case BorrowKind::none: return "none";
    case BorrowKind::global: return "global";
    case BorrowKind::local: return "local";
  }
  return "none";
}

BorrowKind parse_borrow_kind(const std::string& text) {
  if (text == "none") return BorrowKind::none;
  if (text == "global") return BorrowKind::global;
  if (text == "local") return BorrowKind::local;
  throw InputError("unknown borrowing kind \"" + text + "\" (expected none, global or local)");
}

void BorrowScenario::validate() const {
  if (kind == BorrowKind::none) return;
  if (target_fraction.has_value() == borrow_rate.has_value()) {
    throw InputError("borrowing needs exactly one of a target fraction or a raw borrow rate");
  }
  if (target_fraction && !(*target_fraction > 0 && *target_fraction < 1)) {
    throw InputError("target borrow fraction must lie in (0, 1)");
  }
  if (borrow_rate && !(*borrow_rate >= 0 && std::isfinite(*borrow_rate))) {
    throw InputError("borrow rate must be a finite non-negative number");
  }
  if (kind == BorrowKind::local && !(time_limit > 0)) {
    throw InputError("local borrowing needs a positive time limit");
  }
}

void write_events_csv(std::ostream& out, const EventLog& log) {
  out << "time,lineage_id,event,trait_id,donor_id\n";
  for (const auto& e : log.events) {
    const char* kind = e.kind == EventKind::gain ? "gain" : e.kind == EventKind::loss ? "loss" : "borrow";
    out << e.time << ',' << e.lineage << ',' << kind << ',' << e.trait << ',';
    if (e.kind == EventKind::borrow) out << e.donor;
    out << '\n';
  }
}

namespace {

// Set of trait ids with O(1) insert, erase, membership and uniform pick.
class TraitSet {
 public:
  std::size_t size() const { return items_.size(); }
  bool contains(std::int64_t t) const {
    auto i = static_cast<std::size_t>(t);
    return i < slot_.size() && slot_[i] >= 0;
  }
  void insert(std::int64_t t) {
    auto i = static_cast<std::size_t>(t);
    if (i >= slot_.size()) slot_.resize(i + 1, -1);
    slot_[i] = static_cast<std::int64_t>(items_.size());
    items_.push_back(t);
  }
  void erase(std::int64_t t) {
    auto i = static_cast<std::size_t>(t);
    auto pos = static_cast<std::size_t>(slot_[i]);
    std::int64_t last = items_.back();
    items_[pos] = last;
    slot_[static_cast<std::size_t>(last)] = static_cast<std::int64_t>(pos);
    items_.pop_back();
    slot_[i] = -1;
  }
  std::int64_t at(std::size_t k) const { return items_[k]; }
  const std::vector<std::int64_t>& items() const { return items_; }

 private:
  std::vector<std::int64_t> items_;
  std::vector<std::int64_t> slot_;
};

struct Lineage {
  NodeId node;  // lower end of the branch
  TraitSet traits;
};

}  // namespace

namespace {

Simulation run(const TimeTree& tree, const DolloConfig& config, BorrowKind kind,
               double time_limit, double borrow_rate) {
  if (!(config.loss_rate >= 0) || !(config.mean_traits > 0) || !(config.effective_birth_rate() >= 0)) {
    throw InputError("Dollo rates must be non-negative and mean_traits positive");
  }
  Rng rng(config.seed);
  const double birth = config.effective_birth_rate() / kYearsPerRateUnit;
  const double loss = config.loss_rate / kYearsPerRateUnit;
  const double borrow = kind == BorrowKind::none ? 0.0 : borrow_rate / kYearsPerRateUnit;

  Simulation sim;
  sim.borrow_rate = kind == BorrowKind::none ? 0.0 : borrow_rate;
  auto& events = sim.events.events;
  std::vector<std::vector<std::int64_t>> node_sets(tree.size());

  const NodeId root = tree.root();
  double t = tree.age(root);
  TraitSet root_set;
  std::int64_t next_trait = 0;
  std::poisson_distribution<std::int64_t> standing(config.mean_traits);
  sim.root_traits = static_cast<std::size_t>(standing(rng));
  for (std::size_t i = 0; i < sim.root_traits; ++i) {
    root_set.insert(next_trait);
    events.push_back({t, root, EventKind::gain, next_trait, kNoNode});
    ++next_trait;
  }
  node_sets[static_cast<std::size_t>(root)] = root_set.items();

  std::vector<Lineage> active;
  for (NodeId c : tree.node(root).children) active.push_back({c, root_set});

  // Ages at which some pair stops being eligible for local borrowing.
  std::vector<double> thresholds;
  if (kind == BorrowKind::local) {
    for (NodeId v : tree.internals()) thresholds.push_back(tree.age(v) - time_limit);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  }

  std::vector<std::vector<std::size_t>> recipients;
  std::vector<double> weight;
  while (!active.empty()) {
    double t_end = 0.0;
    for (const auto& l : active) t_end = std::max(t_end, tree.age(l.node));
    for (double th : thresholds) {
      if (th < t && th > t_end) {
        t_end = th;
        break;
      }
    }

    // Eligibility is constant within the epoch; evaluate it mid-epoch.
    const double t_mid = 0.5 * (t + t_end);
    recipients.assign(active.size(), {});
    if (borrow > 0) {
      for (std::size_t i = 0; i < active.size(); ++i) {
        for (std::size_t j = 0; j < active.size(); ++j) {
          if (i == j) continue;
          if (kind == BorrowKind::local &&
              tree.age(tree.mrca(active[i].node, active[j].node)) - t_mid > time_limit) {
            continue;
          }
          recipients[i].push_back(j);
        }
      }
    }

    for (;;) {
      weight.assign(active.size(), 0.0);
      double total = 0.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        double n = static_cast<double>(active[i].traits.size());
        double w = birth + loss * n + (recipients[i].empty() ? 0.0 : borrow * n);
        weight[i] = w;
        total += w;
      }
      double dt = total > 0 ? std::exponential_distribution<double>(total)(rng)
                            : std::numeric_limits<double>::infinity();
      if (t - dt <= t_end) {
        t = t_end;
        break;
      }
      t -= dt;

      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      std::size_t i = 0;
      while (i + 1 < active.size() && u >= weight[i]) {
        u -= weight[i];
        ++i;
      }
      auto& lin = active[i];
      const double n = static_cast<double>(lin.traits.size());
      // Guards keep rounding at the end of the scan from selecting an
      // impossible event.
      if (u < birth || lin.traits.size() == 0) {
        lin.traits.insert(next_trait);
        events.push_back({t, lin.node, EventKind::gain, next_trait, kNoNode});
        ++next_trait;
        continue;
      }
      auto pick = [&](const TraitSet& s) {
        return s.at(std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng));
      };
      if (u < birth + loss * n || recipients[i].empty()) {
        auto trait = pick(lin.traits);
        lin.traits.erase(trait);
        events.push_back({t, lin.node, EventKind::loss, trait, kNoNode});
        continue;
      }
      auto trait = pick(lin.traits);
      const auto& rec_list = recipients[i];
      auto& rec = active[rec_list[std::uniform_int_distribution<std::size_t>(0, rec_list.size() - 1)(rng)]];
      if (rec.traits.contains(trait)) continue;
      if (rec.traits.size() > 0) {
        auto displaced = pick(rec.traits);
        rec.traits.erase(displaced);
        events.push_back({t, rec.node, EventKind::loss, displaced, kNoNode});
      }
      rec.traits.insert(trait);
      events.push_back({t, rec.node, EventKind::borrow, trait, lin.node});
    }

    // Branches ending at t split (internal) or stop (leaves).
    std::vector<Lineage> next;
    next.reserve(active.size() + 2);
    for (auto& l : active) {
      if (tree.age(l.node) < t) {
        next.push_back(std::move(l));
        continue;
      }
      node_sets[static_cast<std::size_t>(l.node)] = l.traits.items();
      const auto& nd = tree.node(l.node);
      if (!nd.is_leaf()) {
        next.push_back({nd.children[0], l.traits});
        next.push_back({nd.children[1], std::move(l.traits)});
      }
    }
    active = std::move(next);
  }

  // Columns: traits attested in at least one leaf, by id.
  std::set<std::int64_t> attested;
  for (NodeId l : tree.leaves()) {
    const auto& s = node_sets[static_cast<std::size_t>(l)];
    attested.insert(s.begin(), s.end());
  }
  if (attested.empty()) throw NumericalError("simulation produced no trait in any leaf");
  sim.trait_ids.assign(attested.begin(), attested.end());
  std::vector<std::int64_t> column(static_cast<std::size_t>(next_trait), -1);
  for (std::size_t j = 0; j < sim.trait_ids.size(); ++j) {
    column[static_cast<std::size_t>(sim.trait_ids[j])] = static_cast<std::int64_t>(j);
  }
  const std::size_t p = sim.trait_ids.size();
  std::vector<Cell> states(tree.size() * p, Cell::absent);
  for (NodeId v = 0; v < static_cast<NodeId>(tree.size()); ++v) {
    for (auto trait : node_sets[static_cast<std::size_t>(v)]) {
      auto j = column[static_cast<std::size_t>(trait)];
      if (j >= 0) states[static_cast<std::size_t>(v) * p + static_cast<std::size_t>(j)] = Cell::present;
    }
  }
  std::vector<std::string> names;
  names.reserve(p);
  for (auto id : sim.trait_ids) names.push_back("t" + std::to_string(id));
  sim.truth = StateAnnotatedTree(tree, p, std::move(states));
  sim.leaves = sim.truth.leaf_matrix(names);
  return sim;
}

}  // namespace

Simulation simulate(const TimeTree& tree, const DolloConfig& config,
                    const BorrowScenario& scenario) {
  scenario.validate();
  double rate = 0.0;
  if (scenario.kind != BorrowKind::none) {
    rate = scenario.borrow_rate
               ? *scenario.borrow_rate
               : calibrate_borrow_rate(tree, config, scenario.kind, scenario.time_limit,
                                       *scenario.target_fraction,
                                       derive_seed(config.seed, {0xca11b}));
  }
  return run(tree, config, scenario.kind, scenario.time_limit, rate);
}

double effective_borrowed_fraction(const EventLog& log, const TimeTree& tree) {
  std::vector<std::vector<const TraitEvent*>> by_lineage(tree.size());
  for (const auto& e : log.events) by_lineage[static_cast<std::size_t>(e.lineage)].push_back(&e);

  double sum = 0.0;
  for (NodeId leaf : tree.leaves()) {
    const auto path = tree.path_from_root(leaf);
    const double span = (tree.age(tree.root()) - tree.age(leaf)) / kYearsPerRateUnit;
    // Replay the path in chronological order: the branches are disjoint in
    // time and each lineage's events are already chronological.
    std::set<std::int64_t> present;
    std::size_t borrowed = 0;
    for (NodeId v : path) {
      for (const auto* e : by_lineage[static_cast<std::size_t>(v)]) {
        if (e->kind == EventKind::loss) {
          present.erase(e->trait);
        } else {
          present.insert(e->trait);
          if (e->kind == EventKind::borrow) ++borrowed;
        }
      }
    }
    if (!present.empty() && span > 0) {
      sum += static_cast<double>(borrowed) / static_cast<double>(present.size()) / span;
    }
  }
  return sum / static_cast<double>(tree.leaf_count());
}

double calibrate_borrow_rate(const TimeTree& tree, const DolloConfig& config, BorrowKind kind,
                             double time_limit, double target, std::uint64_t seed,
                             const CalibrationOptions& options) {
  if (kind == BorrowKind::none) throw InputError("cannot calibrate borrowing for scenario none");
  if (!(target > 0 && target < 1)) throw InputError("target borrow fraction must lie in (0, 1)");
  if (options.pilot_replicates == 0) throw InputError("calibration needs at least one pilot replicate");

  auto measure = [&](double rate) {
    double sum = 0.0;
    for (std::size_t r = 0; r < options.pilot_replicates; ++r) {
      DolloConfig pilot = config;
      pilot.seed = derive_seed(seed, {r});
      try {
        auto sim = run(tree, pilot, kind, time_limit, rate);
        sum += effective_borrowed_fraction(sim.events, tree);
      } catch (const NumericalError&) {
        // An empty replicate contributes no borrowing.
      }
    }
    return sum / static_cast<double>(options.pilot_replicates);
  };

  double lo = 0.0;
  double hi = target;
  double f_hi = measure(hi);
  while (f_hi < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > options.max_rate) {
      throw InputError("borrow fraction " + std::to_string(target) +
                       " is unreachable for this tree and scenario (rate cap " +
                       std::to_string(options.max_rate) + ")");
    }
    f_hi = measure(hi);
  }
  double best = hi;
  double best_err = std::abs(f_hi - target);
  for (int it = 0; it < options.max_iterations && best_err > options.relative_tolerance * target;
       ++it) {
    double mid = 0.5 * (lo + hi);
    double f = measure(mid);
    if (std::abs(f - target) < best_err) {
      best = mid;
      best_err = std::abs(f - target);
    }
    (f < target ? lo : hi) = mid;
  }
  return best;
}

}  // namespace treejog
