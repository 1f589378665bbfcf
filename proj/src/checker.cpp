#include "tetrabft/checker.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace tetrabft {

namespace {

Verdict pass(std::string property, bool applicable = true, std::string detail = {}) {
  return Verdict{std::move(property), true, applicable, std::move(detail), {}};
}

Verdict fail(std::string property, std::string detail, std::vector<TraceEvent> witness) {
  return Verdict{std::move(property), false, true, std::move(detail), std::move(witness)};
}

bool honest(const Trace& t, NodeId id) { return t.header.is_honest(id); }

const TraceEvent* end_event(const Trace& t) {
  for (auto it = t.events.rbegin(); it != t.events.rend(); ++it) {
    if (it->kind == EventKind::end) return &*it;
  }
  return nullptr;
}

std::string describe(const TraceEvent& e) { return format_event(e); }

/// Phase of a single-shot vote message, 0 if not one.
int vote_phase(const Message& m) {
  const auto* v = std::get_if<Vote>(&m);
  return v ? v->phase : 0;
}

/// Honest finalizations by slot, in trace order.
std::map<Slot, std::vector<const TraceEvent*>> finalizations(const Trace& t) {
  std::map<Slot, std::vector<const TraceEvent*>> out;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::finalize && honest(t, e.node)) out[e.slot].push_back(&e);
  }
  return out;
}

}  // namespace

Verdict check_agreement(const Trace& t) {
  const std::string name = "agreement";
  if (t.header.multi_shot) {
    for (const auto& [slot, events] : finalizations(t)) {
      for (const auto* e : events) {
        if (e->value != events.front()->value) {
          return fail(name, "slot " + std::to_string(slot) + " finalized with two values",
                      {*events.front(), *e});
        }
      }
    }
    return pass(name);
  }
  const TraceEvent* first = nullptr;
  for (const auto& e : t.events) {
    if (e.kind != EventKind::decide || !honest(t, e.node)) continue;
    if (!first) {
      first = &e;
    } else if (e.value != first->value) {
      return fail(name, "honest nodes decided different values", {*first, e});
    }
  }
  return pass(name, true, first ? "" : "no decisions");
}

Verdict check_validity(const Trace& t) {
  const std::string name = "validity";
  const auto& h = t.header;
  if (h.multi_shot || !h.byzantine.empty() || h.inputs.empty()) return pass(name, false);
  const Value input = h.inputs.front();
  for (const auto& v : h.inputs) {
    if (v != input) return pass(name, false, "mixed inputs");
  }
  for (const auto& e : t.events) {
    if (e.kind == EventKind::decide && honest(t, e.node) && e.value != input) {
      return fail(name, "decision differs from the common input " + encode(input), {e});
    }
  }
  return pass(name);
}

Verdict check_termination(const Trace& t) {
  const std::string name = "termination";
  const auto& h = t.header;
  const auto* end = end_event(t);
  if (!h.expect_termination || !end || end->t <= h.gst) return pass(name, false);
  for (auto id : h.honest()) {
    bool done = false;
    for (const auto& e : t.events) {
      if (e.node != id) continue;
      if (!h.multi_shot && e.kind == EventKind::decide) done = true;
      if (h.multi_shot && e.kind == EventKind::finalize && e.slot >= h.slots) done = true;
      if (done) break;
    }
    if (!done) {
      return fail(name, "node " + std::to_string(id) + " did not " +
                            (h.multi_shot ? "finalize slot " + std::to_string(h.slots) : "decide"),
                  {*end});
    }
  }
  return pass(name);
}

Verdict check_consistency(const Trace& t) {
  const std::string name = "consistency";
  if (!t.header.multi_shot) return pass(name, false);
  std::map<NodeId, const TraceEvent*> last;
  std::map<Slot, const TraceEvent*> first_by_slot;
  for (const auto& e : t.events) {
    if (e.kind != EventKind::finalize || !honest(t, e.node)) continue;
    const auto* prev = last.count(e.node) ? last[e.node] : nullptr;
    if (prev && e.slot != prev->slot + 1) {
      return fail(name, "node " + std::to_string(e.node) + " finalized out of order", {*prev, e});
    }
    last[e.node] = &e;
    auto [it, inserted] = first_by_slot.emplace(e.slot, &e);
    if (!inserted && it->second->value != e.value) {
      return fail(name, "finalized chains diverge at slot " + std::to_string(e.slot),
                  {*it->second, e});
    }
  }
  return pass(name);
}

Verdict check_storage_bound(const Trace& t) {
  const std::string name = "storage_bound";
  std::map<NodeId, const TraceEvent*> first;
  bool any = false;
  for (const auto& e : t.events) {
    if (e.kind != EventKind::storage || !honest(t, e.node)) continue;
    any = true;
    auto [it, inserted] = first.emplace(e.node, &e);
    if (!inserted && it->second->persistent != e.persistent) {
      return fail(name, "persistent size changed for node " + std::to_string(e.node),
                  {*it->second, e});
    }
    if (e.volatile_size > e.volatile_bound) {
      return fail(name, "volatile state above bound for node " + std::to_string(e.node), {e});
    }
    if (t.header.multi_shot && e.active_slots > 5) {
      return fail(name, "more than 5 active slots at node " + std::to_string(e.node), {e});
    }
  }
  return pass(name, any);
}

Verdict check_cross_view(const Trace& t) {
  const std::string name = "cross_view";
  if (t.header.multi_shot) {
    std::map<Slot, const TraceEvent*> final;
    for (const auto& e : t.events) {
      if (e.kind == EventKind::finalize && honest(t, e.node)) final.emplace(e.slot, &e);
    }
    for (const auto& e : t.events) {
      if (e.kind != EventKind::send || !honest(t, e.node) || !e.msg) continue;
      const auto* v = std::get_if<SlotVote>(&*e.msg);
      if (!v) continue;
      auto it = final.find(v->slot);
      if (it != final.end() && v->view > it->second->view && v->value != it->second->value) {
        return fail(name, "vote for another value after finalization", {*it->second, e});
      }
    }
    return pass(name);
  }
  std::vector<const TraceEvent*> decisions;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::decide && honest(t, e.node)) decisions.push_back(&e);
  }
  for (const auto& e : t.events) {
    if (e.kind != EventKind::send || !honest(t, e.node) || !e.msg || vote_phase(*e.msg) != 1) continue;
    const auto& v = std::get<Vote>(*e.msg);
    for (const auto* d : decisions) {
      if (v.view > d->view && v.value != d->value) {
        return fail(name, "vote-1 for another value in a view after a decision", {*d, e});
      }
    }
  }
  return pass(name);
}

Verdict check_within_view(const Trace& t) {
  const std::string name = "within_view";
  if (t.header.multi_shot) {
    std::map<std::pair<Slot, View>, const TraceEvent*> seen;
    for (const auto& e : t.events) {
      if (e.kind != EventKind::notarize || !honest(t, e.node)) continue;
      auto [it, inserted] = seen.emplace(std::make_pair(e.slot, e.view), &e);
      if (!inserted && it->second->value != e.value) {
        return fail(name, "two values notarized in one slot view", {*it->second, e});
      }
    }
    return pass(name);
  }
  std::map<View, const TraceEvent*> seen;
  for (const auto& e : t.events) {
    if (e.kind != EventKind::send || !honest(t, e.node) || !e.msg || vote_phase(*e.msg) < 2) continue;
    const auto& v = std::get<Vote>(*e.msg);
    auto [it, inserted] = seen.emplace(v.view, &e);
    if (!inserted && std::get<Vote>(*it->second->msg).value != v.value) {
      return fail(name, "two values voted in phases 2-4 of view " + std::to_string(v.view),
                  {*it->second, e});
    }
  }
  return pass(name);
}

Verdict check_one_vote(const Trace& t) {
  const std::string name = "one_vote";
  // (node, kind, slot, view) -> first send
  std::map<std::tuple<NodeId, std::string, Slot, View>, const TraceEvent*> seen;
  for (const auto& e : t.events) {
    if (e.kind != EventKind::send || !honest(t, e.node) || !e.msg) continue;
    const auto kind = kind_of(*e.msg);
    std::optional<Value> value;
    if (const auto* v = std::get_if<Vote>(&*e.msg)) value = v->value;
    if (const auto* v = std::get_if<SlotVote>(&*e.msg)) value = v->value;
    if (const auto* p = std::get_if<Proposal>(&*e.msg)) value = p->value;
    if (!value) continue;
    auto [it, inserted] =
        seen.emplace(std::make_tuple(e.node, kind, slot_of(*e.msg), view_of(*e.msg)), &e);
    if (inserted) continue;
    const auto& first = *it->second->msg;
    Value prev;
    if (const auto* v = std::get_if<Vote>(&first)) prev = v->value;
    if (const auto* v = std::get_if<SlotVote>(&first)) prev = v->value;
    if (const auto* p = std::get_if<Proposal>(&first)) prev = p->value;
    if (prev != *value) {
      return fail(name, "node " + std::to_string(e.node) + " sent two " + kind + " values",
                  {*it->second, e});
    }
  }
  return pass(name);
}

Verdict check_post_gst_delivery(const Trace& t) {
  const std::string name = "post_gst_delivery";
  const auto* end = end_event(t);
  if (!end) return pass(name, false);
  const Tick delta = t.header.delta_bound;
  std::map<std::uint64_t, const TraceEvent*> sends;
  std::map<std::uint64_t, Tick> delivered;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::send) sends.emplace(e.id, &e);
    if (e.kind == EventKind::deliver) delivered.emplace(e.id, e.t);
  }
  for (const auto& [id, s] : sends) {
    if (s->t < t.header.gst || !s->peer || !honest(t, *s->peer)) continue;
    if (s->t + delta > end->t) continue;
    auto it = delivered.find(id);
    if (it == delivered.end() || it->second > s->t + delta) {
      return fail(name, "message " + std::to_string(id) + " not delivered within delta", {*s, *end});
    }
  }
  return pass(name);
}

Verdict check_authentication(const Trace& t) {
  const std::string name = "authentication";
  std::map<std::uint64_t, const TraceEvent*> sends;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::send) {
      sends.emplace(e.id, &e);
      continue;
    }
    if (e.kind != EventKind::deliver) continue;
    auto it = sends.find(e.id);
    const bool ok = it != sends.end() && it->second->node == e.peer && it->second->peer == e.node &&
                    it->second->msg == e.msg && it->second->t <= e.t;
    if (!ok) return fail(name, "delivery without a matching send: " + describe(e), {e});
  }
  return pass(name);
}

Verdict check_quorum_causality(const Trace& t) {
  const std::string name = "quorum_causality";
  const std::size_t quorum = t.header.n - t.header.f;
  // node -> message text -> distinct senders delivered so far
  std::map<NodeId, std::map<std::string, std::set<NodeId>>> got;
  std::set<std::tuple<NodeId, int, View>> checked;
  auto count = [&](NodeId node, const Message& m) {
    auto& by_msg = got[node];
    auto it = by_msg.find(encode(m));
    return it == by_msg.end() ? std::size_t{0} : it->second.size();
  };
  for (const auto& e : t.events) {
    if (!honest(t, e.node)) continue;
    if (e.kind == EventKind::deliver && e.msg) {
      if (std::holds_alternative<Vote>(*e.msg) || std::holds_alternative<SlotVote>(*e.msg)) {
        got[e.node][encode(*e.msg)].insert(*e.peer);
      }
      continue;
    }
    if (e.kind == EventKind::send && e.msg) {
      const int phase = vote_phase(*e.msg);
      if (phase < 2) continue;
      const auto& v = std::get<Vote>(*e.msg);
      if (!checked.insert({e.node, phase, v.view}).second) continue;
      if (count(e.node, Vote{phase - 1, v.view, v.value}) < quorum) {
        return fail(name, "vote-" + std::to_string(phase) + " without a vote-" +
                              std::to_string(phase - 1) + " quorum",
                    {e});
      }
    } else if (e.kind == EventKind::decide) {
      if (count(e.node, Vote{4, e.view, e.value}) < quorum) {
        return fail(name, "decision without a vote-4 quorum", {e});
      }
    } else if (e.kind == EventKind::notarize) {
      if (count(e.node, SlotVote{e.slot, e.view, e.value}) < quorum) {
        return fail(name, "notarization without a vote quorum", {e});
      }
    }
  }
  return pass(name);
}

const std::vector<std::string>& all_properties() {
  static const std::vector<std::string> kNames{
      "agreement",       "validity",          "termination",    "consistency",
      "storage_bound",   "cross_view",        "within_view",    "one_vote",
      "post_gst_delivery", "authentication",  "quorum_causality",
  };
  return kNames;
}

Verdict check_property(const Trace& t, const std::string& name) {
  static const std::map<std::string, std::function<Verdict(const Trace&)>> kChecks{
      {"agreement", check_agreement},
      {"validity", check_validity},
      {"termination", check_termination},
      {"consistency", check_consistency},
      {"storage_bound", check_storage_bound},
      {"cross_view", check_cross_view},
      {"within_view", check_within_view},
      {"one_vote", check_one_vote},
      {"post_gst_delivery", check_post_gst_delivery},
      {"authentication", check_authentication},
      {"quorum_causality", check_quorum_causality},
  };
  auto it = kChecks.find(name);
  if (it == kChecks.end()) throw std::invalid_argument("unknown property '" + name + "'");
  return it->second(t);
}

std::vector<Verdict> check_all(const Trace& t) { return check_all(t, all_properties()); }

std::vector<Verdict> check_all(const Trace& t, const std::vector<std::string>& properties) {
  std::vector<Verdict> out;
  for (const auto& p : properties) out.push_back(check_property(t, p));
  return out;
}

std::string format_verdict(const Verdict& v, const std::string& counterexample_path) {
  std::string line = (v.pass ? "PASS " : "FAIL ") + v.property;
  if (!v.pass && !counterexample_path.empty()) line += " counterexample=" + counterexample_path;
  return line;
}

Trace counterexample_trace(const Trace& t, const Verdict& v) {
  Trace out;
  out.header = t.header;
  out.events = v.counterexample;
  return out;
}

}  // namespace tetrabft
