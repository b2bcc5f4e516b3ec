#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "treejog/character_matrix.hpp"
#include "treejog/state_tree.hpp"
#include "treejog/time_tree.hpp"

namespace treejog {

struct DolloConfig {
  double loss_rate = 0.2;  // per trait
  double mean_traits = 200.0;
  // Trait births per lineage. Defaults to mean_traits * loss_rate, which
  // keeps the stationary trait count at mean_traits.
  std::optional<double> birth_rate;
  std::uint64_t seed = 1;

  double effective_birth_rate() const { return birth_rate.value_or(mean_traits * loss_rate); }
};

enum class BorrowKind { none, global, local };

std::string to_string(BorrowKind kind);
BorrowKind parse_borrow_kind(const std::string& text);

struct BorrowScenario {
  BorrowKind kind = BorrowKind::none;
  // Local only: donor and recipient must have diverged at most this many
  // years before the event.
  double time_limit = std::numeric_limits<double>::infinity();
  // Exactly one of these is set for global/local borrowing. A target
  // fraction is turned into a raw rate by calibrate_borrow_rate.
  std::optional<double> target_fraction;
  std::optional<double> borrow_rate;  // events per donor trait

  // Throws InputError when the fields are inconsistent.
  void validate() const;
};

enum class EventKind { gain, loss, borrow };

struct TraitEvent {
  double time;     // years before present
  NodeId lineage;  // node at the lower end of the branch; the root for root traits
  EventKind kind;
  std::int64_t trait;
  NodeId donor = kNoNode;  // borrow only
};

struct EventLog {
  std::vector<TraitEvent> events;  // chronological (ages non-increasing)
};

void write_events_csv(std::ostream& out, const EventLog& log);

struct Simulation {
  StateAnnotatedTree truth;  // columns = traits present in at least one leaf
  CharacterMatrix leaves;    // rows in tree leaf order
  EventLog events;
  std::vector<std::int64_t> trait_ids;  // trait id per column
  std::size_t root_traits = 0;
  double borrow_rate = 0.0;  // raw rate actually used
};

// Stochastic Dollo process along `tree`: a Poisson(mean_traits) standing
// set at the root, per-lineage births, per-trait losses, and optional
// borrowing. A borrow event copies a donor trait into an eligible
// co-existing recipient that lacks it, displacing one of the recipient's
// own traits. Throws NumericalError when no trait reaches any leaf.
Simulation simulate(const TimeTree& tree, const DolloConfig& config,
                    const BorrowScenario& scenario);

// Mean over leaves of (borrow events received on the root-to-leaf path) /
// (traits at the leaf) / (path length in 1000-year units).
double effective_borrowed_fraction(const EventLog& log, const TimeTree& tree);

struct CalibrationOptions {
  std::size_t pilot_replicates = 20;
  double relative_tolerance = 2e-3;
  int max_iterations = 40;
  double max_rate = 1e3;
};

// Raw borrow rate whose mean effective_borrowed_fraction over pilot
// replicates (common random numbers across candidate rates) matches
// `target`. Throws InputError when the target is out of reach.
double calibrate_borrow_rate(const TimeTree& tree, const DolloConfig& config, BorrowKind kind,
                             double time_limit, double target, std::uint64_t seed,
                             const CalibrationOptions& options = {});

}  // namespace treejog
