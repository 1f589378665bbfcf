// Acceptance suite: one PASS/FAIL line per criterion. `--only <id>` runs a
// single criterion; ids are 1, 2, 3, 4, 5a, 5b, 5c, 6, 7, 8.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pipeline_checks.hpp"
#include "oracle.hpp"
#include "tetrabft/checker.hpp"
#include "tetrabft/explorer.hpp"
#include "tetrabft/safety.hpp"
#include "tetrabft/simnet.hpp"

using namespace tetrabft;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double budget_seconds;
  std::function<Outcome()> body;
};

/// Collects the first few problems and counts the rest.
class Problems {
 public:
  void add(const std::string& text) {
    if (shown_.size() < 3) shown_.push_back(text);
    ++count_;
  }
  [[nodiscard]] bool empty() const { return count_ == 0; }
  [[nodiscard]] Outcome outcome(const std::string& summary) const {
    if (empty()) return {true, summary};
    std::ostringstream os;
    os << count_ << " problem(s): ";
    for (std::size_t i = 0; i < shown_.size(); ++i) os << (i ? "; " : "") << shown_[i];
    return {false, os.str()};
  }

 private:
  std::vector<std::string> shown_;
  std::size_t count_ = 0;
};

std::vector<const TraceEvent*> honest_events(const Trace& t, EventKind kind) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : t.events) {
    if (e.kind == kind && t.header.is_honest(e.node)) out.push_back(&e);
  }
  return out;
}

// 1. Good case: every honest node decides the leader's value exactly 5 delays
// after the proposal is sent.
Outcome good_case_latency() {
  constexpr Tick kDelay = 2;
  Problems problems;
  for (const std::string extra : {"", "byzantine = 3\n[adversary]\nstrategy = silent\n"}) {
    const Trace t = run(parse_scenario_text("n = 4\nf = 1\ndelta = 4\ndelay = 2\ngst = 0\n"
                                            "inputs = 7,8,9,10\n" + extra));
    const std::string label = extra.empty() ? "all honest" : "silent node 3";
    const auto proposal = event_time(t, "first-proposal");
    if (!proposal) {
      problems.add(label + ": no proposal");
      continue;
    }
    const auto decides = honest_events(t, EventKind::decide);
    if (decides.size() != t.header.honest().size()) problems.add(label + ": not every honest node decided");
    for (const auto* d : decides) {
      if (d->value != Value{7}) problems.add(label + ": decided another value");
      if (d->t - *proposal != 5 * kDelay) {
        problems.add(label + ": node " + std::to_string(d->node) + " decided after " +
                     std::to_string(d->t - *proposal) + " ticks");
      }
    }
  }
  return problems.outcome("decision at exactly 5 delays, with and without a silent node");
}

// 2. View change: silent view-0 leader; decision 7 delays after the first
// honest view-change broadcast and inside the view-1 timer.
Outcome view_change_latency() {
  constexpr Tick kDelay = 2;
  Problems problems;
  const Trace t = run(parse_scenario_text("n = 4\nf = 1\ndelta = 4\ndelay = 2\ngst = 0\nbyzantine = 0\n"
                                          "inputs = 1,2,2,2\n[adversary]\nstrategy = silent\n"));
  const auto vc = event_time(t, "first-vc");
  if (!vc) return {false, "no view change"};
  const auto decides = honest_events(t, EventKind::decide);
  if (decides.size() != 3) problems.add("not every honest node decided");
  for (const auto* d : decides) {
    if (d->t - *vc != 7 * kDelay) {
      problems.add("node " + std::to_string(d->node) + " decided " + std::to_string(d->t - *vc) +
                   " ticks after the first view change");
    }
    if (d->view != 1) problems.add("decision outside view 1");
    if (d->value != Value{2}) problems.add("decided a value other than the view-1 leader's");
    Tick deadline = 0;
    for (const auto& e : t.events) {
      if (&e == d) break;
      if (e.kind == EventKind::timer_set && e.node == d->node) deadline = e.deadline;
    }
    if (d->t > deadline) problems.add("node " + std::to_string(d->node) + " decided after its view timer");
  }
  return problems.outcome("decision 7 delays after the first view change, inside the 9 delta timer");
}

// 3. Safety under each adversary strategy with random GST and pre-GST drops.
Outcome adversary_safety() {
  constexpr int kRuns = 1000;
  const std::vector<std::string> strategies{"equivocate_votes", "lying_leader", "lying_history", "vc_spammer"};
  Problems problems;
  std::size_t runs = 0;
  std::size_t decided_runs = 0;
  for (std::size_t si = 0; si < strategies.size(); ++si) {
    for (std::uint32_t n : {4u, 7u}) {
      const std::uint32_t f = (n - 1) / 3;
      for (int seed = 1; seed <= kRuns; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 1000003u + si * 101u + n);
        Scenario s;
        s.n = n;
        s.f = f;
        s.delta_bound = 4;
        s.delay = 1;
        s.gst = static_cast<Tick>(rng() % 151);
        s.drop_probability = static_cast<double>(rng() % 61) / 100.0;
        s.seed = static_cast<std::uint64_t>(seed);
        s.adversary.strategy = strategies[si];
        std::vector<NodeId> ids(n);
        for (NodeId i = 0; i < n; ++i) ids[i] = i;
        std::shuffle(ids.begin(), ids.end(), rng);
        s.byzantine.assign(ids.begin(), ids.begin() + f);
        std::sort(s.byzantine.begin(), s.byzantine.end());
        s.inputs.clear();
        for (NodeId i = 0; i < n; ++i) s.inputs.push_back(Value{rng() % 3 + 1});
        const Trace t = run(s);
        ++runs;
        if (!honest_events(t, EventKind::decide).empty()) ++decided_runs;
        for (const auto& v : {check_agreement(t), check_cross_view(t)}) {
          if (!v.pass) {
            problems.add(strategies[si] + " n=" + std::to_string(n) + " seed=" + std::to_string(seed) +
                         ": " + v.property + " (" + v.detail + ")");
          }
        }
      }
    }
  }
  return problems.outcome(std::to_string(runs) + " runs, " + std::to_string(decided_runs) +
                          " with decisions, agreement and cross-view hold");
}

/// Drops malformed members so every set is well-formed.
template <typename Set>
Set well_formed_only(Set set) {
  std::erase_if(set, [](const auto& entry) { return !well_formed(entry.second); });
  return set;
}

// 4. The fast rules agree with brute-force subset enumeration.
Outcome rule_equivalence() {
  constexpr std::size_t kSets = 10000;
  oracle::Generator gen{std::mt19937_64(977)};
  std::size_t proof_sets = 0;
  std::size_t suggest_sets = 0;
  std::size_t comparisons = 0;
  Problems problems;
  for (std::size_t trial = 0; proof_sets < kSets || suggest_sets < kSets; ++trial) {
    const std::uint32_t n = trial % 2 == 0 ? 4 : 5;
    const Committee c(n, 1);
    gen.v = static_cast<View>(gen.pick(4) + 1);
    const Value init = gen.value();

    const ProofSet proofs = well_formed_only(gen.proofs(n));
    ++proof_sets;
    for (Value x : oracle::universe_of(proofs, init)) {
      ++comparisons;
      if (node_check_safe(proofs, gen.v, x, c) != oracle::node_rule(proofs, gen.v, x, n, 1)) {
        problems.add("follower rule n=" + std::to_string(n) + " v=" + std::to_string(gen.v));
      }
    }

    const SuggestSet suggests = well_formed_only(gen.suggests(n));
    ++suggest_sets;
    bool any = false;
    for (Value x : oracle::universe_of(suggests, init)) {
      ++comparisons;
      const bool slow = oracle::leader_rule(suggests, gen.v, x, n, 1);
      any = any || slow;
      if (leader_value_qualifies(suggests, gen.v, x, c) != slow) {
        problems.add("leader rule n=" + std::to_string(n) + " v=" + std::to_string(gen.v));
      }
    }
    const auto picked = leader_pick_safe_value(suggests, gen.v, init, c);
    if (picked.has_value() != any || (picked && !oracle::leader_rule(suggests, gen.v, *picked, n, 1))) {
      problems.add("leader pick n=" + std::to_string(n) + " v=" + std::to_string(gen.v));
    }
  }
  return problems.outcome(std::to_string(proof_sets) + " proof sets, " + std::to_string(suggest_sets) +
                          " suggest sets, " + std::to_string(comparisons) + " comparisons, 0 discrepancies");
}

ExploreConfig exploration(RuleMutation mutation) {
  ExploreConfig c;
  c.n = 4;
  c.f = 1;
  c.values = 2;
  c.max_view = 2;
  c.equivocate = true;
  c.lying_history = true;
  c.mutation = mutation;
  return c;
}

std::string explore_summary(const ExploreResult& r) {
  std::ostringstream os;
  os << r.states << " states, " << r.transitions << " transitions";
  return os.str();
}

// 5a. No violation anywhere in the reachable set.
Outcome exploration_baseline() {
  const ExploreResult r = bounded_explore(exploration(RuleMutation::none));
  if (!r.complete) return {false, "incomplete after " + explore_summary(r)};
  if (r.violation) return {false, r.invariant + " violated: " + explore_summary(r)};
  return {true, explore_summary(r) + ", no violation"};
}

Outcome mutant_caught(RuleMutation mutation) {
  const ExploreConfig c = exploration(mutation);
  const ExploreResult r = bounded_explore(c);
  if (!r.violation) {
    return {false, "no counterexample in " + explore_summary(r) + (r.complete ? " (complete)" : " (partial)")};
  }
  if (replay_counterexample(c, r.counterexample) != r.invariant) return {false, "counterexample does not replay"};
  return {true, r.invariant + " counterexample of " + std::to_string(r.counterexample.size()) + " steps"};
}

// 5b. The whole blocking-claim condition removed.
Outcome exploration_blocking_claim_mutant() { return mutant_caught(RuleMutation::drop_blocking_claim); }

// 5c. Only the two-blocking-set alternative removed.
Outcome exploration_two_blocking_sets_mutant() { return mutant_caught(RuleMutation::drop_two_blocking_sets); }

// 6. Multi-shot runs against their golden traces.
Outcome multishot_golden_runs() {
  Problems problems;
  const Trace good = run(load_scenario(pipeline::scenario_path("pipeline_good_case")));
  if (pipeline::trace_text(good) != pipeline::read_file(pipeline::golden_path("pipeline_good_case"))) {
    problems.add("good case differs from its golden trace");
  }
  for (const auto& p : pipeline::check_good_case(good, 10)) problems.add("good case: " + p);

  const Trace failure = run(load_scenario(pipeline::scenario_path("pipeline_slot_failure")));
  if (pipeline::trace_text(failure) != pipeline::read_file(pipeline::golden_path("pipeline_slot_failure"))) {
    problems.add("slot-1 failure differs from its golden trace");
  }
  const auto r = pipeline::check_slot_failure(failure);
  for (const auto& p : r.problems) problems.add("slot-1 failure: " + p);
  return problems.outcome("golden traces match; new block notarized " +
                          std::to_string(r.renotarized_at - r.switch_at) + " ticks after the switch");
}

// 7. Persistent state stays constant; at most 5 active slots.
Outcome constant_storage() {
  Problems problems;
  const Trace churn = run(load_scenario(pipeline::scenario_path("view_churn")));
  View highest = 0;
  std::map<NodeId, std::set<std::size_t>> persistent;
  for (const auto* e : honest_events(churn, EventKind::storage)) {
    highest = std::max(highest, e->view);
    persistent[e->node].insert(e->persistent);
  }
  if (highest < 50) problems.add("churn run reached only view " + std::to_string(highest));
  for (const auto& [id, sizes] : persistent) {
    if (sizes.size() != 1) problems.add("node " + std::to_string(id) + " persistent size changed");
  }
  if (!check_storage_bound(churn).pass) problems.add("churn run: " + check_storage_bound(churn).detail);

  const Trace slots = run(parse_scenario_text("n = 4\nf = 1\ndelta = 4\ndelay = 1\ngst = 0\nmode = multi\n"
                                              "slots = 100\n"));
  persistent.clear();
  std::size_t widest = 0;
  std::size_t samples = 0;
  for (const auto* e : honest_events(slots, EventKind::storage)) {
    persistent[e->node].insert(e->persistent);
    widest = std::max(widest, e->active_slots);
    ++samples;
  }
  for (const auto& [id, sizes] : persistent) {
    if (sizes.size() != 1) problems.add("multi-shot node " + std::to_string(id) + " persistent size changed");
  }
  if (widest > 5) problems.add("multi-shot window reached " + std::to_string(widest) + " slots");
  const auto finals = honest_events(slots, EventKind::finalize);
  if (finals.size() != 4 * 100) problems.add("multi-shot run finalized " + std::to_string(finals.size()) + " slots");
  if (!check_storage_bound(slots).pass) problems.add("multi-shot run: " + check_storage_bound(slots).detail);
  return problems.outcome("churn to view " + std::to_string(highest) + "; 100 slots over " +
                          std::to_string(samples) + " samples, window <= " + std::to_string(widest));
}

// 8. Validity with uniform inputs and no faulty node.
Outcome validity() {
  constexpr int kSeeds = 100;
  Problems problems;
  std::size_t decisions = 0;
  for (std::uint32_t n : {4u, 7u}) {
    for (int seed = 1; seed <= kSeeds; ++seed) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 7919u + n);
      Scenario s;
      s.n = n;
      s.f = (n - 1) / 3;
      s.delta_bound = 4;
      s.delay = 1;
      s.gst = static_cast<Tick>(rng() % 101);
      s.drop_probability = static_cast<double>(rng() % 51) / 100.0;
      s.seed = static_cast<std::uint64_t>(seed);
      s.inputs.assign(n, Value{rng() % 1000 + 1});
      const Trace t = run(s);
      const Verdict v = check_validity(t);
      if (!v.pass || !v.applicable) {
        problems.add("n=" + std::to_string(n) + " seed=" + std::to_string(seed) + ": " + v.detail);
      }
      for (const auto* d : honest_events(t, EventKind::decide)) {
        ++decisions;
        if (d->value != s.inputs[0]) problems.add("decision differs from the common input");
      }
    }
  }
  if (decisions == 0) problems.add("no decisions at all");
  return problems.outcome(std::to_string(2 * kSeeds) + " runs, " + std::to_string(decisions) +
                          " decisions, all equal to the input");
}

std::vector<Criterion> criteria() {
  return {
      {"1", "good-case latency", 1.0, good_case_latency},
      {"2", "view-change latency", 1.0, view_change_latency},
      {"3", "safety under adversaries", 300.0, adversary_safety},
      {"4", "rule oracle equivalence", 120.0, rule_equivalence},
      {"5a", "exploration: no violation", 1800.0, exploration_baseline},
      {"5b", "exploration: blocking-claim mutant caught", 1800.0, exploration_blocking_claim_mutant},
      {"5c", "exploration: two-blocking-set mutant caught", 1800.0, exploration_two_blocking_sets_mutant},
      {"6", "multi-shot golden runs", 10.0, multishot_golden_runs},
      {"7", "constant storage", 60.0, constant_storage},
      {"8", "validity", 60.0, validity},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<std::string> only;
  app.add_option("--only", only, "criterion ids to run");
  CLI11_PARSE(app, argc, argv);

  const auto all = criteria();
  for (const auto& id : only) {
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; })) {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
  }
  bool ok = true;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      out.pass = false;
      out.detail += "; over the time budget";
    }
    ok = ok && out.pass;
    std::cout << (out.pass ? "PASS " : "FAIL ") << c.id << ' ' << c.title << ": " << out.detail << " ["
              << std::fixed << std::setprecision(2) << seconds << " s / " << c.budget_seconds << " s]"
              << std::endl;
  }
  return ok ? 0 : 1;
}
