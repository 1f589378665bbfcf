#include "tetrabft/simnet.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <stdexcept>

#include "tetrabft/adversary.hpp"
#include "tetrabft/multishot.hpp"
#include "tetrabft/node.hpp"

namespace tetrabft {

namespace {

struct Pending {
  enum class Type { deliver, timer };

  Tick t = 0;
  std::uint64_t seq = 0;
  Type type = Type::deliver;
  NodeId node = 0;
  // deliver
  NodeId from = 0;
  std::uint64_t id = 0;
  Message msg;
  // timer
  Slot slot = 0;
  std::uint64_t generation = 0;
};

struct Later {
  bool operator()(const Pending& a, const Pending& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

struct Peak {
  std::size_t volatile_size = 0;
  std::size_t active_slots = 0;
};

class Simulator {
 public:
  Simulator(const Scenario& sc, const AdversaryFactory& factory) : sc_(sc), rng_(sc.seed) {
    sc_.validate();
    trace_.header = header_for(sc_);
    const Committee committee(sc_.n, sc_.f);
    for (NodeId i = 0; i < sc_.n; ++i) {
      if (sc_.is_byzantine(i)) {
        AdversaryContext ctx{i, committee, sc_.delta_bound, sc_.inputs[i], sc_.seed, sc_.vc_window};
        adversaries_[i] = factory ? factory(ctx) : make_adversary(sc_.adversary, ctx);
      } else if (sc_.mode == Mode::single_shot) {
        single_[i] = std::make_unique<Node>(
            NodeConfig{i, committee, sc_.delta_bound, sc_.inputs[i], sc_.vc_window, sc_.mutation});
      } else {
        MsConfig cfg;
        cfg.id = i;
        cfg.committee = committee;
        cfg.delta_bound = sc_.delta_bound;
        cfg.target_slots = sc_.slots;
        cfg.vc_window = sc_.vc_window;
        cfg.mutation = sc_.mutation;
        multi_[i] = std::make_unique<MsNode>(cfg);
      }
    }
  }

  RunResult run() {
    now_ = 0;
    for (NodeId i = 0; i < sc_.n; ++i) {
      if (auto it = single_.find(i); it != single_.end()) {
        apply(i, it->second->start());
      } else if (auto m = multi_.find(i); m != multi_.end()) {
        apply(i, m->second->start());
      } else {
        apply(i, adversaries_.at(i)->start());
      }
    }
    RunStats stats;
    while (!queue_.empty()) {
      const Pending& top = queue_.top();
      if (top.t > sc_.horizon) {
        stats.hit_horizon = true;
        break;
      }
      if (stats.events >= sc_.max_events) {
        stats.hit_event_cap = true;
        break;
      }
      Pending ev = top;
      queue_.pop();
      now_ = ev.t;
      ++stats.events;
      step(ev);
    }
    stats.end_time = stats.hit_horizon ? sc_.horizon : now_;
    for (auto& [i, node] : single_) sample(i, *node, true);
    for (auto& [i, node] : multi_) sample(i, *node, true);
    TraceEvent end;
    end.t = stats.end_time;
    end.kind = EventKind::end;
    trace_.events.push_back(end);
    return {std::move(trace_), stats};
  }

 private:
  void step(const Pending& ev) {
    if (ev.type == Pending::Type::timer) {
      if (timer_gen_[{ev.node, ev.slot}] != ev.generation) return;
      emit(EventKind::timer_fire, ev.node, [&](TraceEvent& e) { e.slot = ev.slot; });
      if (auto it = single_.find(ev.node); it != single_.end()) {
        apply(ev.node, it->second->on_timer());
      } else if (auto m = multi_.find(ev.node); m != multi_.end()) {
        apply(ev.node, m->second->on_timer(ev.slot));
      } else {
        apply(ev.node, adversaries_.at(ev.node)->on_timer());
      }
      return;
    }
    emit(EventKind::deliver, ev.node, [&](TraceEvent& e) {
      e.peer = ev.from;
      e.id = ev.id;
      e.msg = ev.msg;
    });
    if (auto it = single_.find(ev.node); it != single_.end()) {
      apply(ev.node, it->second->deliver(ev.msg, ev.from));
    } else if (auto m = multi_.find(ev.node); m != multi_.end()) {
      apply(ev.node, m->second->deliver(ev.msg, ev.from));
    } else {
      apply(ev.node, adversaries_.at(ev.node)->deliver(ev.msg, ev.from));
    }
  }

  template <typename Fill>
  void emit(EventKind kind, NodeId node, Fill&& fill) {
    TraceEvent e;
    e.t = now_;
    e.kind = kind;
    e.node = node;
    fill(e);
    trace_.events.push_back(std::move(e));
  }

  void note_all(NodeId node, const std::vector<std::string>& notes, EventKind kind) {
    for (const auto& text : notes) emit(kind, node, [&](TraceEvent& e) { e.text = text; });
  }

  Tick transit_delay(const Message& msg, NodeId from, NodeId to, bool& dropped) {
    dropped = false;
    if (now_ < sc_.gst) {
      for (const auto& rule : sc_.drop_rules) {
        if (!rule.matches(msg, from, to)) continue;
        if (rule.delay) return *rule.delay;
        dropped = true;
        return 0;
      }
      if (sc_.drop_policy == DropPolicy::random) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng_) < sc_.drop_probability) {
          dropped = true;
          return 0;
        }
        std::uniform_int_distribution<Tick> pre(1, sc_.pre_gst_max_delay);
        return pre(rng_);
      }
    }
    if (sc_.delay_model == DelayModel::constant) return sc_.delay;
    std::uniform_int_distribution<Tick> post(1, sc_.delta_bound);
    return post(rng_);
  }

  void send(NodeId from, const std::optional<NodeId>& to, const Message& msg) {
    std::vector<NodeId> dests;
    if (to) {
      if (*to >= sc_.n) throw std::logic_error("destination out of range");
      dests.push_back(*to);
    } else {
      for (NodeId i = 0; i < sc_.n; ++i) dests.push_back(i);
    }
    for (auto dest : dests) {
      const auto id = next_id_++;
      emit(EventKind::send, from, [&](TraceEvent& e) {
        e.peer = dest;
        e.id = id;
        e.msg = msg;
      });
      bool dropped = false;
      const Tick delay = transit_delay(msg, from, dest, dropped);
      if (dropped) {
        emit(EventKind::drop, dest, [&](TraceEvent& e) {
          e.peer = from;
          e.id = id;
          e.msg = msg;
        });
        continue;
      }
      Pending p;
      p.t = now_ + delay;
      p.seq = seq_++;
      p.type = Pending::Type::deliver;
      p.node = dest;
      p.from = from;
      p.id = id;
      p.msg = msg;
      queue_.push(std::move(p));
    }
  }

  void set_timer(NodeId node, Slot slot, Tick after) {
    const auto gen = ++timer_gen_[{node, slot}];
    emit(EventKind::timer_set, node, [&](TraceEvent& e) {
      e.slot = slot;
      e.deadline = now_ + after;
    });
    Pending p;
    p.t = now_ + after;
    p.seq = seq_++;
    p.type = Pending::Type::timer;
    p.node = node;
    p.slot = slot;
    p.generation = gen;
    queue_.push(std::move(p));
  }

  void cancel_timer(NodeId node, Slot slot) {
    ++timer_gen_[{node, slot}];
    emit(EventKind::timer_cancel, node, [&](TraceEvent& e) { e.slot = slot; });
  }

  void apply(NodeId node, Effects fx) {
    auto& n = *single_.at(node);
    const View before = last_view_.count(node) ? last_view_[node] : n.current_view();
    note_all(node, fx.notes, EventKind::note);
    for (const auto& o : fx.outbound) send(node, o.to, o.msg);
    if (fx.set_timer) set_timer(node, 0, *fx.set_timer);
    if (fx.decided) {
      emit(EventKind::decide, node, [&](TraceEvent& e) {
        e.view = n.decided_view().value_or(0);
        e.value = *fx.decided;
      });
    }
    auto& peak = peaks_[node];
    peak.volatile_size = std::max(peak.volatile_size, n.volatile_size());
    if (!last_view_.count(node) || n.current_view() != before) sample(node, n, false);
  }

  void apply(NodeId node, MsEffects fx) {
    auto& n = *multi_.at(node);
    note_all(node, fx.notes, EventKind::note);
    for (const auto& o : fx.outbound) send(node, o.to, o.msg);
    for (auto s : fx.cancel_timers) cancel_timer(node, s);
    for (const auto& t : fx.set_timers) set_timer(node, t.slot, t.after);
    for (const auto& v : fx.notarized) {
      emit(EventKind::notarize, node, [&](TraceEvent& e) {
        e.slot = v.slot;
        e.view = v.view;
        e.value = v.value;
      });
    }
    for (const auto& v : fx.finalized) {
      emit(EventKind::finalize, node, [&](TraceEvent& e) {
        e.slot = v.slot;
        e.view = v.view;
        e.value = v.value;
      });
    }
    auto& peak = peaks_[node];
    peak.volatile_size = std::max(peak.volatile_size, n.volatile_size());
    peak.active_slots = std::max(peak.active_slots, n.active_slots());
    if (!fx.finalized.empty()) sample(node, n, false);
  }

  void apply(NodeId node, AdversaryStep step) {
    note_all(node, step.actions, EventKind::adversary);
    for (const auto& o : step.outbound) {
      if (o.claimed_sender && *o.claimed_sender != node) {
        throw ForgeryError("node " + std::to_string(node) + " tried to send as node " +
                           std::to_string(*o.claimed_sender));
      }
      send(node, o.to, o.msg);
    }
    if (step.set_timer) set_timer(node, 0, *step.set_timer);
  }

  void sample(NodeId node, const Node& n, bool final_sample) {
    last_view_[node] = n.current_view();
    emit(EventKind::storage, node, [&](TraceEvent& e) {
      e.view = n.current_view();
      e.persistent = n.persistent_size();
      e.volatile_size = final_sample ? peaks_[node].volatile_size : n.volatile_size();
      e.volatile_bound = n.volatile_bound();
    });
  }

  void sample(NodeId node, const MsNode& n, bool final_sample) {
    emit(EventKind::storage, node, [&](TraceEvent& e) {
      e.view = n.slot_view(n.finalized_height() + 1);
      e.persistent = n.persistent_size();
      e.volatile_size = final_sample ? peaks_[node].volatile_size : n.volatile_size();
      e.volatile_bound = n.volatile_bound();
      e.active_slots = final_sample ? peaks_[node].active_slots : n.active_slots();
    });
  }

  Scenario sc_;
  std::mt19937_64 rng_;
  Trace trace_;
  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t next_id_ = 1;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  std::map<NodeId, std::unique_ptr<Node>> single_;
  std::map<NodeId, std::unique_ptr<MsNode>> multi_;
  std::map<NodeId, std::unique_ptr<Adversary>> adversaries_;
  std::map<std::pair<NodeId, Slot>, std::uint64_t> timer_gen_;
  std::map<NodeId, View> last_view_;
  std::map<NodeId, Peak> peaks_;
};

bool honest_send_of(const TraceHeader& h, const TraceEvent& e, const char* kind) {
  return e.kind == EventKind::send && h.is_honest(e.node) && e.msg && kind_of(*e.msg) == kind;
}

}  // namespace

TraceHeader header_for(const Scenario& sc) {
  TraceHeader h;
  h.n = sc.n;
  h.f = sc.f;
  h.byzantine = sc.byzantine;
  std::sort(h.byzantine.begin(), h.byzantine.end());
  h.inputs = sc.inputs;
  h.delta_bound = sc.delta_bound;
  h.delay = sc.delay;
  h.constant_delay = sc.delay_model == DelayModel::constant;
  h.gst = sc.gst;
  h.multi_shot = sc.mode == Mode::multi_shot;
  h.slots = h.multi_shot ? sc.slots : 0;
  h.expect_termination = sc.expect_termination;
  h.seed = sc.seed;
  return h;
}

RunResult simulate(const Scenario& scenario, const AdversaryFactory& factory) {
  Simulator sim(scenario, factory);
  return sim.run();
}

RunResult simulate(const Scenario& scenario) { return simulate(scenario, {}); }

Trace run(const Scenario& scenario) { return simulate(scenario).trace; }

bool is_event_name(const std::string& name) {
  return name == "first-proposal" || name == "first-decide" || name == "last-decide" ||
         name == "first-vc" || name == "first-notarize" || name == "first-finalize";
}

std::optional<Tick> event_time(const Trace& trace, const std::string& name) {
  if (!is_event_name(name)) throw std::invalid_argument("unknown event name '" + name + "'");
  const auto& h = trace.header;
  std::optional<Tick> last;
  for (const auto& e : trace.events) {
    const bool honest = h.is_honest(e.node);
    if (name == "first-proposal" && honest_send_of(h, e, "PROPOSAL")) return e.t;
    if (name == "first-vc" && honest_send_of(h, e, "VC")) return e.t;
    if (name == "first-decide" && honest && e.kind == EventKind::decide) return e.t;
    if (name == "first-notarize" && honest && e.kind == EventKind::notarize) return e.t;
    if (name == "first-finalize" && honest && e.kind == EventKind::finalize) return e.t;
    if (name == "last-decide" && honest && e.kind == EventKind::decide) last = e.t;
  }
  return last;
}

Latency measure_latency(const Trace& trace, const std::string& from, const std::string& to) {
  const auto a = event_time(trace, from);
  const auto b = event_time(trace, to);
  if (!a) throw std::runtime_error("event '" + from + "' does not occur in the trace");
  if (!b) throw std::runtime_error("event '" + to + "' does not occur in the trace");
  Latency out;
  out.ticks = *b - *a;
  const Tick delta = trace.header.delay;
  if (trace.header.constant_delay && delta > 0 && out.ticks % delta == 0) {
    out.delays = out.ticks / delta;
  }
  return out;
}

}  // namespace tetrabft
