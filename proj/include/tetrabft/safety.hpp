// Safe-value rules: how a leader picks a value from suggest messages and how a
// follower checks a proposal against proof messages.
#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "tetrabft/types.hpp"

namespace tetrabft {

/// At most one record per sender, all for the same view.
using SuggestSet = std::map<NodeId, Suggest>;
using ProofSet = std::map<NodeId, Proof>;

/// Counts claim evaluations so callers can bound the work done per decision.
struct RuleCounter {
  std::uint64_t claim_evaluations = 0;
};

/// Deliberately broken variants of the follower rule, used to show that the
/// checker and explorer catch violations.
enum class RuleMutation {
  none,
  /// Drops the two-blocking-set alternative of the follower rule.
  drop_two_blocking_sets,
  /// Drops the blocking-set claim requirement altogether.
  drop_blocking_claim,
};

/// Whether `record` claims `val` safe at `v_prime`. Throws std::invalid_argument
/// if the record's (vote, prev) pair is malformed.
bool node_claim_safe(const Suggest& record, View v_prime, Value val);
bool node_claim_safe(const Proof& record, View v_prime, Value val);

/// Leader-side qualification of a single value in view v >= 1. Malformed
/// records are ignored; quorums are formed from the remaining ones.
bool leader_value_qualifies(const SuggestSet& suggests, View v, Value val, const Committee& c,
                            RuleCounter* counter = nullptr);

/// Returns a value safe to propose in view v, or nullopt when no value
/// qualifies yet. View 0 returns `init_val` (every value is safe there).
/// Preference: init_val, then the value justified at the highest view, then
/// the smallest value.
std::optional<Value> leader_pick_safe_value(const SuggestSet& suggests, View v, Value init_val,
                                            const Committee& c, RuleCounter* counter = nullptr);

/// Follower-side check that `val` is safe in view v.
bool node_check_safe(const ProofSet& proofs, View v, Value val, const Committee& c,
                     RuleMutation mutation = RuleMutation::none, RuleCounter* counter = nullptr);

}  // namespace tetrabft
