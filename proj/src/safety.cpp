#include "tetrabft/safety.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

namespace tetrabft {

namespace {

/// The (vote, prev_vote) pair a claim is judged on.
struct ClaimPair {
  std::optional<VoteRecord> vote;
  std::optional<VoteRecord> prev;
};

bool claim(const ClaimPair& r, View v_prime, Value val) {
  if (v_prime == 0) return true;
  if (r.vote && r.vote->view >= v_prime && r.vote->value == val) return true;
  return r.prev && r.prev->view >= v_prime;
}

void check_pair(const ClaimPair& r) {
  if (!r.prev) return;
  if (!r.vote || r.prev->view >= r.vote->view || r.prev->value == r.vote->value) {
    throw std::invalid_argument("malformed (vote, prev_vote) pair");
  }
}

/// A sender's record reduced to what the rules read: the claim pair and the
/// highest vote of the "locking" phase (vote-3 for leaders, vote-4 for followers).
struct RuleRecord {
  ClaimPair pair;
  std::optional<VoteRecord> lock;
};

std::vector<RuleRecord> usable(const SuggestSet& suggests, View v) {
  std::vector<RuleRecord> out;
  for (const auto& [from, s] : suggests) {
    if (s.view != v || !well_formed(s)) continue;
    out.push_back({{s.vote2, s.prev_vote2}, s.vote3});
  }
  return out;
}

std::vector<RuleRecord> usable(const ProofSet& proofs, View v) {
  std::vector<RuleRecord> out;
  for (const auto& [from, p] : proofs) {
    if (p.view != v || !well_formed(p)) continue;
    out.push_back({{p.vote1, p.prev_vote1}, p.vote4});
  }
  return out;
}

/// Members compatible with (v', val): no lock above v', any lock at v' is for val.
/// Taking all of them is the largest quorum candidate, and every count the
/// rules need only grows with the member set.
bool compatible(const RuleRecord& r, View v_prime, Value val) {
  return !r.lock || r.lock->view < v_prime || (r.lock->view == v_prime && r.lock->value == val);
}

std::size_t count_without_lock(const std::vector<RuleRecord>& records) {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.lock; }));
}

/// Highest v' < v at which the leader rule's second case holds for `val`.
std::optional<View> leader_witness_view(const std::vector<RuleRecord>& records, View v, Value val,
                                        const Committee& c, RuleCounter* counter) {
  for (View vp = v; vp-- > 0;) {
    if (vp > 0) {
      // Nobody can claim anything at vp without a vote-2 / prev-vote-2 at or above it.
      const auto possible = std::count_if(records.begin(), records.end(), [vp](const auto& r) {
        return (r.pair.vote && r.pair.vote->view >= vp) || (r.pair.prev && r.pair.prev->view >= vp);
      });
      if (!c.is_blocking(static_cast<std::size_t>(possible))) continue;
    }
    std::size_t members = 0;
    std::size_t claims = 0;
    for (const auto& r : records) {
      if (!compatible(r, vp, val)) continue;
      ++members;
      if (counter) ++counter->claim_evaluations;
      if (claim(r.pair, vp, val)) ++claims;
    }
    if (c.is_quorum(members) && c.is_blocking(claims)) return vp;
  }
  return std::nullopt;
}

/// Number of distinct values (2 meaning "two or more") that a blocking subset
/// of `members` claims safe at `at`.
int blocking_value_count(const std::vector<const RuleRecord*>& members, View at,
                         const Committee& c, RuleCounter* counter) {
  // Every value not named in a vote field is claimed by exactly the members
  // whose claim holds regardless of value.
  std::size_t any_value = 0;
  std::map<Value, std::size_t> named;
  for (const auto* r : members) {
    if (counter) ++counter->claim_evaluations;
    const bool generic = at == 0 || (r->pair.prev && r->pair.prev->view >= at);
    if (generic) {
      ++any_value;
    } else if (r->pair.vote && r->pair.vote->view >= at) {
      ++named[r->pair.vote->value];
    }
  }
  if (c.is_blocking(any_value)) return 2;
  int count = 0;
  for (const auto& [value, n] : named) {
    if (c.is_blocking(n + any_value)) ++count;
  }
  return std::min(count, 2);
}

}  // namespace

bool node_claim_safe(const Suggest& record, View v_prime, Value val) {
  const ClaimPair pair{record.vote2, record.prev_vote2};
  check_pair(pair);
  return claim(pair, v_prime, val);
}

bool node_claim_safe(const Proof& record, View v_prime, Value val) {
  const ClaimPair pair{record.vote1, record.prev_vote1};
  check_pair(pair);
  return claim(pair, v_prime, val);
}

bool leader_value_qualifies(const SuggestSet& suggests, View v, Value val, const Committee& c,
                            RuleCounter* counter) {
  if (v == 0) return true;
  const auto records = usable(suggests, v);
  if (!c.is_quorum(records.size())) return false;
  if (c.is_quorum(count_without_lock(records))) return true;
  return leader_witness_view(records, v, val, c, counter).has_value();
}

std::optional<Value> leader_pick_safe_value(const SuggestSet& suggests, View v, Value init_val,
                                            const Committee& c, RuleCounter* counter) {
  if (v == 0) return init_val;
  const auto records = usable(suggests, v);
  if (!c.is_quorum(records.size())) return std::nullopt;
  if (c.is_quorum(count_without_lock(records))) return init_val;

  if (leader_witness_view(records, v, init_val, c, counter)) return init_val;

  std::set<Value> candidates;
  for (const auto& r : records) {
    if (r.lock) candidates.insert(r.lock->value);
    if (r.pair.vote) candidates.insert(r.pair.vote->value);
    if (r.pair.prev) candidates.insert(r.pair.prev->value);
  }
  candidates.erase(init_val);

  std::optional<Value> best;
  View best_view = 0;
  for (const auto& candidate : candidates) {
    const auto witness = leader_witness_view(records, v, candidate, c, counter);
    if (witness && (!best || *witness > best_view)) {
      best = candidate;
      best_view = *witness;
    }
  }
  return best;
}

bool node_check_safe(const ProofSet& proofs, View v, Value val, const Committee& c,
                     RuleMutation mutation, RuleCounter* counter) {
  if (v == 0) return true;
  const auto records = usable(proofs, v);
  if (!c.is_quorum(records.size())) return false;
  if (c.is_quorum(count_without_lock(records))) return true;

  std::vector<const RuleRecord*> members;
  for (View vp = v; vp-- > 0;) {
    members.clear();
    std::size_t claims = 0;
    for (const auto& r : records) {
      if (!compatible(r, vp, val)) continue;
      members.push_back(&r);
      if (counter) ++counter->claim_evaluations;
      if (claim(r.pair, vp, val)) ++claims;
    }
    if (!c.is_quorum(members.size())) continue;
    if (mutation == RuleMutation::drop_blocking_claim) return true;
    if (c.is_blocking(claims)) return true;
    if (mutation == RuleMutation::drop_two_blocking_sets) continue;
    // Two blocking sets claiming different values at views w < w' < v with
    // vp <= w. Taking w = vp keeps the member set largest, and claims only get
    // weaker as the view grows, so w' = vp + 1 suffices.
    if (vp + 1 >= v) continue;
    if (blocking_value_count(members, vp + 1, c, counter) >= 1 &&
        blocking_value_count(members, vp, c, counter) >= 2) {
      return true;
    }
  }
  return false;
}

}  // namespace tetrabft
