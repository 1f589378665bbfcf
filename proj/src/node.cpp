#include "tetrabft/node.hpp"

#include <algorithm>
#include <iterator>
#include <utility>

namespace tetrabft {

void Effects::append(Effects other) {
  outbound.insert(outbound.end(), std::make_move_iterator(other.outbound.begin()),
                  std::make_move_iterator(other.outbound.end()));
  if (other.set_timer) set_timer = other.set_timer;
  if (other.decided) decided = other.decided;
  notes.insert(notes.end(), std::make_move_iterator(other.notes.begin()),
               std::make_move_iterator(other.notes.end()));
}

Node::Node(NodeConfig config) : config_(std::move(config)) {
  if (config_.id >= config_.committee.n()) {
    throw std::invalid_argument("node id out of range");
  }
}

Effects Node::start() {
  started_ = true;
  return start_view(0);
}

Effects Node::start_view(View v) {
  if (started_ && v < view_) {
    throw ProtocolViolation("view may not decrease");
  }
  started_ = true;
  Effects fx;
  view_ = v;
  tally_ = Tally{};
  view_change_.erase(view_change_.begin(), view_change_.upper_bound(v));
  fx.set_timer = kTimeoutDeltas * config_.delta_bound;

  if (v > 0) {
    fx.outbound.push_back({std::nullopt, make_proof(history_, 0, v)});
    fx.outbound.push_back({leader(v), make_suggest(history_, 0, v)});
  }
  try_propose(fx);

  // Messages that arrived before this node entered v.
  std::map<NodeId, std::vector<Message>> early;
  if (auto it = early_.find(v); it != early_.end()) early = std::move(it->second);
  early_.erase(early_.begin(), early_.upper_bound(v));
  for (const auto& [from, msgs] : early) {
    for (const auto& m : msgs) fx.append(deliver(m, from));
  }
  return fx;
}

bool Node::buffer_if_future(const Message& msg, NodeId from) {
  const View v = view_of(msg);
  if (v <= view_) return false;
  if (v - view_ <= config_.vc_window) {
    auto& bucket = early_[v][from];
    if (bucket.size() < kBufferedPerSender) bucket.push_back(msg);
  }
  return true;
}

Effects Node::deliver(const Message& msg, NodeId from) {
  if (slot_of(msg) != 0) {
    Effects fx;
    fx.notes.push_back("ignored multi-shot message " + encode(msg));
    return fx;
  }
  if (const auto* vc = std::get_if<ViewChange>(&msg)) return on_view_change(*vc, from);
  if (buffer_if_future(msg, from) || view_of(msg) < view_) return {};
  struct {
    Node& self;
    NodeId from;
    Effects operator()(const Proposal& m) { return self.on_proposal(m, from); }
    Effects operator()(const Vote& m) { return self.on_vote(m, from); }
    Effects operator()(const SlotVote&) { return {}; }
    Effects operator()(const Suggest& m) { return self.on_suggest(m, from); }
    Effects operator()(const Proof& m) { return self.on_proof(m, from); }
    Effects operator()(const ViewChange& m) { return self.on_view_change(m, from); }
  } dispatch{*this, from};
  return std::visit(dispatch, msg);
}

void Node::try_propose(Effects& fx) {
  if (!is_leader() || tally_.proposed) return;
  const auto pick = leader_pick_safe_value(tally_.suggests, view_, config_.initial_value,
                                           config_.committee);
  if (!pick) return;
  tally_.proposed = true;
  fx.outbound.push_back({std::nullopt, Proposal{0, view_, *pick, {}, 0}});
}

void Node::send_vote(int phase, Value val, Effects& fx) {
  history_.record(phase, view_, val);
  tally_.sent[static_cast<std::size_t>(phase - 1)] = true;
  fx.outbound.push_back({std::nullopt, Vote{phase, view_, val}});
}

void Node::try_vote1(Effects& fx) {
  if (!tally_.proposal || tally_.sent[0]) return;
  const bool safe = view_ == 0 || node_check_safe(tally_.proofs, view_, *tally_.proposal,
                                                  config_.committee, config_.mutation);
  if (safe) send_vote(1, *tally_.proposal, fx);
}

Effects Node::on_suggest(const Suggest& msg, NodeId from) {
  Effects fx;
  if (msg.view != view_) return fx;
  if (!is_leader()) {
    fx.notes.push_back("misdirected suggest from " + std::to_string(from));
    return fx;
  }
  if (!tally_.suggests.emplace(from, msg).second) return fx;
  try_propose(fx);
  return fx;
}

Effects Node::on_proposal(const Proposal& msg, NodeId from) {
  Effects fx;
  if (from != leader(msg.view)) {
    fx.notes.push_back("proposal from non-leader " + std::to_string(from));
    return fx;
  }
  if (msg.view != view_) return fx;
  if (tally_.proposal) {
    if (*tally_.proposal != msg.value) {
      fx.notes.push_back("equivocating proposal from " + std::to_string(from));
    }
    return fx;
  }
  tally_.proposal = msg.value;
  try_vote1(fx);
  return fx;
}

Effects Node::on_proof(const Proof& msg, NodeId from) {
  Effects fx;
  if (msg.view != view_) return fx;
  if (!tally_.proofs.emplace(from, msg).second) return fx;
  try_vote1(fx);
  return fx;
}

Effects Node::on_vote(const Vote& msg, NodeId from) {
  Effects fx;
  if (msg.view != view_ || msg.phase < 1 || msg.phase > 4) return fx;
  const auto idx = static_cast<std::size_t>(msg.phase - 1);
  auto& senders = tally_.votes[idx];
  if (auto [it, inserted] = senders.emplace(from, msg.value); !inserted) {
    if (it->second != msg.value) {
      fx.notes.push_back("equivocating vote-" + std::to_string(msg.phase) + " from " +
                         std::to_string(from));
    }
    return fx;
  }
  const auto count = static_cast<std::size_t>(std::count_if(
      senders.begin(), senders.end(), [&](const auto& e) { return e.second == msg.value; }));
  if (!config_.committee.is_quorum(count)) return fx;

  if (msg.phase < 4) {
    if (!tally_.sent[idx + 1]) send_vote(msg.phase + 1, msg.value, fx);
  } else if (!decided_) {
    decided_ = msg.value;
    decided_view_ = view_;
    fx.decided = msg.value;
  }
  return fx;
}

Effects Node::on_timer() {
  Effects fx;
  if (decided_) return fx;
  const View next = view_ + 1;
  if (highest_vc_sent_ >= next) return fx;
  highest_vc_sent_ = next;
  fx.outbound.push_back({std::nullopt, ViewChange{0, next}});
  return fx;
}

Effects Node::on_view_change(const ViewChange& msg, NodeId from) {
  Effects fx;
  const View target = msg.view;
  if (msg.slot != 0 || target <= view_ || target - view_ > config_.vc_window) return fx;
  auto& senders = view_change_[target];
  senders.insert(from);
  const auto count = senders.size();
  if (config_.committee.is_blocking(count) && highest_vc_sent_ < target) {
    highest_vc_sent_ = target;
    fx.outbound.push_back({std::nullopt, ViewChange{0, target}});
  }
  if (config_.committee.is_quorum(count)) fx.append(start_view(target));
  return fx;
}

std::size_t Node::volatile_size() const {
  std::size_t size = tally_.suggests.size() + tally_.proofs.size() + (tally_.proposal ? 1 : 0);
  for (const auto& phase : tally_.votes) size += phase.size();
  for (const auto& [v, senders] : view_change_) size += senders.size();
  for (const auto& [v, per_sender] : early_) {
    for (const auto& [from, msgs] : per_sender) size += msgs.size();
  }
  return size;
}

std::size_t Node::volatile_bound() const {
  const std::size_t n = config_.committee.n();
  return 6 * n + 1 + config_.vc_window * n * (1 + kBufferedPerSender);
}

}  // namespace tetrabft
