// Bounded-exhaustive exploration of single-shot TetraBFT with n = 4, f = 1.
//
// The network is abstracted into the set of messages sent so far: a node may
// act on any message already sent, in any order, or never (drops). Honest
// nodes may move to a higher view at any time, which covers every timing the
// view-change procedure allows. The Byzantine node is a wildcard drawn from
// its menu: any vote value (equivocation), any well-formed suggest / proof
// (lying history) and any proposal in views it leads.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tetrabft/safety.hpp"
#include "tetrabft/types.hpp"

namespace tetrabft {

struct ExploreConfig {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  /// Values 1..values; honest node i starts with (i mod values) + 1.
  std::uint32_t values = 2;
  /// Views 0..max_view are explored.
  View max_view = 2;
  /// Defaults to leader_of(max_view).
  std::optional<NodeId> byzantine;
  /// The faulty node stays silent (a crash) instead of acting from its menu.
  bool no_byzantine = false;
  bool equivocate = true;
  bool lying_history = true;
  RuleMutation mutation = RuleMutation::none;
  /// Subset of agreement, within_view, cross_view, acceptance; empty checks all.
  /// acceptance: on entering a view, every value the honest suggests qualify
  /// also passes the follower rule on the honest proofs.
  std::vector<std::string> invariants;
  std::uint64_t max_states = 200000000;
};

struct ExploreResult {
  bool complete = true;
  /// Share of the root's branches finished; 1 for a complete run.
  double explored_fraction = 1.0;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  bool violation = false;
  /// agreement, within_view, cross_view or acceptance.
  std::string invariant;
  std::vector<std::string> counterexample;  // minimized action sequence
  std::size_t raw_counterexample_length = 0;
  /// Values decidable in some reachable state.
  std::vector<Value> decidable_values;
};

/// Throws std::invalid_argument for unsupported bounds.
ExploreResult bounded_explore(const ExploreConfig& config);

/// Re-runs a counterexample (as printed) and returns the invariant it breaks,
/// or nullopt when it no longer fails or is not a valid schedule.
std::optional<std::string> replay_counterexample(const ExploreConfig& config,
                                                 const std::vector<std::string>& actions);

}  // namespace tetrabft
