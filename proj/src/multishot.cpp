#include "tetrabft/multishot.hpp"

#include <algorithm>
#include <iterator>

namespace tetrabft {

namespace {

template <typename T>
void move_append(std::vector<T>& into, std::vector<T>& from) {
  into.insert(into.end(), std::make_move_iterator(from.begin()),
              std::make_move_iterator(from.end()));
}

/// Records a vote unless it would break the per-phase view discipline.
void record_if_allowed(VoteHistory& h, int phase, View view, Value value) {
  const auto& top = h.highest(phase);
  if (top && (view < top->view || (view == top->view && value != top->value))) return;
  h.record(phase, view, value);
}

std::uint64_t honest_payload(Slot s, View v, NodeId id) {
  return (static_cast<std::uint64_t>(s) << 32) | (static_cast<std::uint64_t>(v) << 12) | id;
}

}  // namespace

void MsEffects::append(MsEffects other) {
  move_append(outbound, other.outbound);
  move_append(set_timers, other.set_timers);
  move_append(cancel_timers, other.cancel_timers);
  move_append(notarized, other.notarized);
  move_append(finalized, other.finalized);
  move_append(notes, other.notes);
}

MsNode::MsNode(MsConfig config) : config_(std::move(config)) {
  if (config_.id >= config_.committee.n()) throw std::invalid_argument("node id out of range");
  if (config_.window < 4) throw std::invalid_argument("slot window must hold four slots");
}

MsNode::SlotState* MsNode::slot(Slot s) {
  if (!in_window(s)) return nullptr;
  return &slots_[s];
}

const MsNode::SlotState* MsNode::slot(Slot s) const {
  auto it = slots_.find(s);
  return it == slots_.end() ? nullptr : &it->second;
}

View MsNode::slot_view(Slot s) const {
  const auto* st = slot(s);
  return st ? st->view : 0;
}

std::optional<Value> MsNode::notarized(Slot s) const {
  const auto* st = slot(s);
  return st ? st->notarized : std::nullopt;
}

const VoteHistory* MsNode::slot_history(Slot s) const {
  const auto* st = slot(s);
  return st ? &st->history : nullptr;
}

std::optional<Value> MsNode::settled(Slot s) const {
  if (s == 0) return kGenesis;
  if (s <= finalized_height_) return chain_[s - 1];
  return notarized(s);
}

const Proposal* MsNode::block(Slot s, Value v) const {
  const auto* st = slot(s);
  if (!st) return nullptr;
  for (const auto& p : st->known_blocks) {
    if (p.value == v) return &p;
  }
  return nullptr;
}

void MsNode::remember_block(SlotState& st, const Proposal& p) {
  for (const auto& known : st.known_blocks) {
    if (known.value == p.value) return;
  }
  if (st.known_blocks.size() >= kKnownBlocksPerSlot) st.known_blocks.erase(st.known_blocks.begin());
  st.known_blocks.push_back(p);
}

std::optional<Value> MsNode::tip(Slot s) const {
  if (auto v = settled(s)) return v;
  const auto* st = slot(s);
  if (st && st->voted && st->proposal) return st->proposal->value;
  return std::nullopt;
}

MsEffects MsNode::start() {
  MsEffects fx;
  arm_timer(1, fx);
  progress(fx);
  return fx;
}

void MsNode::arm_timer(Slot s, MsEffects& fx) {
  armed_.insert(s);
  fx.set_timers.push_back({s, kTimeoutDeltas * config_.delta_bound});
}

MsEffects MsNode::deliver(const Message& msg, NodeId from) {
  MsEffects fx;
  handle(msg, from, fx);
  settle(fx);
  return fx;
}

bool MsNode::applicable(const Message& msg) const {
  const Slot s = slot_of(msg);
  if (!in_window(s)) return false;
  if (std::holds_alternative<ViewChange>(msg)) return true;
  const View v = view_of(msg);
  const View current = slot_view(s);
  return v <= current || (s >= vc_floor_.first && v <= vc_floor_.second);
}

bool MsNode::defer(const Message& msg, NodeId from, MsEffects& fx) {
  const Slot s = slot_of(msg);
  if (s == 0 || s <= finalized_height_) return true;
  if (applicable(msg)) return false;
  const bool ahead_slot = !in_window(s);
  if (ahead_slot && s > finalized_height_ + 2 * config_.window) return true;
  if (!ahead_slot && view_of(msg) - slot_view(s) > config_.vc_window) return true;
  auto& held = early_[s];
  if (held.size() < kEarlyPerSlotPerNode * config_.committee.n()) {
    held.emplace_back(from, msg);
  } else {
    fx.notes.push_back("early buffer full for slot " + std::to_string(s));
  }
  return true;
}

void MsNode::handle(const Message& msg, NodeId from, MsEffects& fx) {
  if (std::holds_alternative<Vote>(msg)) {
    fx.notes.push_back("ignored single-shot message " + encode(msg));
    return;
  }
  if (defer(msg, from, fx)) return;
  const Slot s = slot_of(msg);
  // A peer already moved this slot into a view a recent quorum allows.
  if (!std::holds_alternative<ViewChange>(msg) && view_of(msg) > slot_view(s)) {
    switch_view(s, view_of(msg), fx);
  }
  if (view_of(msg) < slot_view(s) && !std::holds_alternative<ViewChange>(msg)) return;

  if (const auto* p = std::get_if<Proposal>(&msg)) accept_proposal(*p, from, fx);
  if (const auto* v = std::get_if<SlotVote>(&msg)) accept_vote(*v, from, fx);
  if (const auto* sg = std::get_if<Suggest>(&msg)) store_suggest(*sg, from, fx);
  if (const auto* pf = std::get_if<Proof>(&msg)) store_proof(*pf, from, fx);
  if (const auto* vc = std::get_if<ViewChange>(&msg)) accept_view_change(*vc, from, fx);
  progress(fx);
}

void MsNode::settle(MsEffects& fx) {
  for (;;) {
    std::vector<std::pair<NodeId, Message>> ready;
    for (auto it = early_.begin(); it != early_.end();) {
      if (it->first <= finalized_height_) {
        it = early_.erase(it);
        continue;
      }
      auto& held = it->second;
      auto split = std::stable_partition(held.begin(), held.end(),
                                         [&](const auto& e) { return !applicable(e.second); });
      ready.insert(ready.end(), std::make_move_iterator(split), std::make_move_iterator(held.end()));
      held.erase(split, held.end());
      it = held.empty() ? early_.erase(it) : std::next(it);
    }
    if (ready.empty()) return;
    for (const auto& [from, msg] : ready) handle(msg, from, fx);
  }
}

void MsNode::accept_proposal(const Proposal& p, NodeId from, MsEffects& fx) {
  auto* st = slot(p.slot);
  if (from != leader(p.slot, p.view)) {
    fx.notes.push_back("proposal from non-leader " + std::to_string(from));
    return;
  }
  if (p.value != block_value(p.slot, p.parent, p.payload)) {
    fx.notes.push_back("proposal value does not match its block from " + std::to_string(from));
    return;
  }
  st->evidence = true;
  if (st->proposal) {
    if (st->proposal->value != p.value) {
      fx.notes.push_back("equivocating proposal from " + std::to_string(from));
    }
    return;
  }
  st->proposal = p;
  remember_block(*st, p);
  // Receiving the block for slot s starts slot s+1.
  arm_timer(p.slot + 1, fx);
}

void MsNode::accept_vote(const SlotVote& v, NodeId from, MsEffects& fx) {
  auto* st = slot(v.slot);
  st->evidence = true;
  auto [it, inserted] = st->votes.emplace(from, v.value);
  if (!inserted) {
    if (it->second != v.value) {
      fx.notes.push_back("equivocating vote from " + std::to_string(from));
    }
    return;
  }
  const auto count = static_cast<std::size_t>(std::count_if(
      st->votes.begin(), st->votes.end(), [&](const auto& e) { return e.second == v.value; }));
  if (st->notarized || !config_.committee.is_quorum(count)) return;
  st->notarized = v.value;
  fx.notarized.push_back({v.slot, st->view, v.value});
}

void MsNode::store_suggest(const Suggest& s, NodeId from, MsEffects& fx) {
  auto* st = slot(s.slot);
  if (leader(s.slot, s.view) != config_.id) {
    fx.notes.push_back("misdirected suggest from " + std::to_string(from));
    return;
  }
  st->suggests.emplace(from, s);
}

void MsNode::store_proof(const Proof& p, NodeId from, MsEffects& /*fx*/) {
  slot(p.slot)->proofs.emplace(from, p);
}

void MsNode::accept_view_change(const ViewChange& vc, NodeId from, MsEffects& fx) {
  auto* st = slot(vc.slot);
  if (vc.view <= st->view || vc.view - st->view > config_.vc_window) return;
  auto& senders = st->view_change[vc.view];
  senders.insert(from);
  const auto count = senders.size();
  if (config_.committee.is_blocking(count) && st->highest_vc_sent < vc.view) {
    st->highest_vc_sent = vc.view;
    fx.outbound.push_back({std::nullopt, ViewChange{vc.slot, vc.view}});
  }
  if (!config_.committee.is_quorum(count)) return;

  vc_floor_ = {vc.slot, vc.view};
  for (Slot s = vc.slot; in_window(s); ++s) {
    auto* other = slot(s);
    if ((s == vc.slot || other->evidence) && other->view < vc.view) switch_view(s, vc.view, fx);
  }
  // Timers of started slots that kept view 0 restart as well.
  for (Slot s : armed_) {
    if (s >= vc.slot && !(in_window(s) && slot(s)->view == vc.view)) {
      fx.set_timers.push_back({s, kTimeoutDeltas * config_.delta_bound});
    }
  }
}

void MsNode::switch_view(Slot s, View v, MsEffects& fx) {
  auto* st = slot(s);
  st->view = v;
  st->proposal.reset();
  st->votes.clear();
  st->notarized.reset();
  st->suggests.clear();
  st->proofs.clear();
  st->voted = false;
  st->proposed = false;
  st->evidence = true;
  st->view_change.erase(st->view_change.begin(), st->view_change.upper_bound(v));
  st->highest_vc_sent = std::max(st->highest_vc_sent, v);
  arm_timer(s, fx);
  fx.outbound.push_back({std::nullopt, make_proof(st->history, s, v)});
  fx.outbound.push_back({leader(s, v), make_suggest(st->history, s, v)});
}

MsEffects MsNode::on_timer(Slot s) {
  MsEffects fx;
  armed_.erase(s);
  const Slot target = finalized_height_ + 1;
  if (s <= finalized_height_ || target > config_.target_slots) return fx;
  auto* st = slot(target);
  const View next = st->view + 1;
  if (st->highest_vc_sent >= next) return fx;
  st->highest_vc_sent = next;
  fx.outbound.push_back({std::nullopt, ViewChange{target, next}});
  return fx;
}

void MsNode::progress(MsEffects& fx) {
  for (bool changed = true; changed;) {
    changed = false;
    for (Slot s = finalized_height_ + 1; in_window(s); ++s) {
      changed |= try_vote(s, fx);
      changed |= try_propose(s, fx);
    }
    changed |= try_finalize(fx);
  }
}

bool MsNode::try_propose(Slot s, MsEffects& fx) {
  if (s > config_.target_slots + 3) return false;
  auto* st = slot(s);
  if (st->proposed || leader(s, st->view) != config_.id) return false;
  const auto parent = tip(s - 1);
  if (!parent) return false;

  const std::uint64_t payload = honest_payload(s, st->view, config_.id);
  Proposal out{s, st->view, block_value(s, *parent, payload), *parent, payload};
  if (st->view > 0) {
    const auto pick = leader_pick_safe_value(st->suggests, st->view, out.value, config_.committee);
    if (!pick) return false;
    if (*pick != out.value) {
      const auto* known = block(s, *pick);
      if (!known) {
        fx.notes.push_back("safe value for slot " + std::to_string(s) + " has no known block");
        st->proposed = true;
        return false;
      }
      out = *known;
      out.view = st->view;
    }
  }
  st->proposed = true;
  fx.outbound.push_back({std::nullopt, out});
  return true;
}

bool MsNode::try_vote(Slot s, MsEffects& fx) {
  auto* st = slot(s);
  if (st->voted || !st->proposal) return false;
  const auto& p = *st->proposal;
  if (settled(s - 1) != p.parent) return false;
  if (st->view > 0 &&
      !node_check_safe(st->proofs, st->view, p.value, config_.committee, config_.mutation)) {
    return false;
  }
  st->voted = true;
  record_implied_votes(s, p);
  fx.outbound.push_back({std::nullopt, SlotVote{s, st->view, p.value}});
  return true;
}

void MsNode::record_implied_votes(Slot s, const Proposal& p) {
  auto* st = slot(s);
  record_if_allowed(st->history, 1, st->view, p.value);
  Value ancestor = p.parent;
  for (int k = 1; k <= 3; ++k) {
    const Slot a = s - static_cast<Slot>(k);
    if (a == 0 || a <= finalized_height_) return;
    auto* ast = slot(a);
    if (ast->notarized != ancestor) return;
    record_if_allowed(ast->history, k + 1, ast->view, ancestor);
    const auto* b = block(a, ancestor);
    if (!b) return;
    ancestor = b->parent;
  }
}

bool MsNode::try_finalize(MsEffects& fx) {
  // Highest k with k..k+3 notarized and chained.
  std::optional<Slot> top;
  for (Slot k = finalized_height_ + 1; k + 3 <= finalized_height_ + config_.window; ++k) {
    bool ok = true;
    for (Slot j = k; j <= k + 3 && ok; ++j) {
      const auto val = settled(j);
      ok = val.has_value();
      if (ok && j > k) {
        const auto* b = block(j, *val);
        ok = b && b->parent == settled(j - 1);
      }
    }
    if (ok) top = k;
  }
  if (!top) return false;

  // Walk the parent links from the finalized block down to the last finalized one.
  std::vector<Value> newly(*top - finalized_height_);
  Value cur = *settled(*top);
  for (Slot j = *top; j > finalized_height_; --j) {
    newly[j - finalized_height_ - 1] = cur;
    const auto* b = block(j, cur);
    if (!b) {
      fx.notes.push_back("cannot finalize: unknown block at slot " + std::to_string(j));
      return false;
    }
    cur = b->parent;
  }
  if (cur != *settled(finalized_height_)) {
    fx.notes.push_back("cannot finalize: chain does not extend the finalized prefix");
    return false;
  }

  for (std::size_t i = 0; i < newly.size(); ++i) {
    const Slot j = finalized_height_ + 1 + static_cast<Slot>(i);
    chain_.push_back(newly[i]);
    fx.finalized.push_back({j, slot(j)->view, newly[i]});
    if (armed_.erase(j)) fx.cancel_timers.push_back(j);
    slots_.erase(j);
  }
  finalized_height_ = *top;
  early_.erase(early_.begin(), early_.upper_bound(finalized_height_));
  return true;
}

std::size_t MsNode::volatile_size() const {
  std::size_t size = armed_.size();
  for (const auto& [s, st] : slots_) {
    size += st.votes.size() + st.suggests.size() + st.proofs.size() + st.known_blocks.size() +
            (st.proposal ? 1 : 0);
    for (const auto& [v, senders] : st.view_change) size += senders.size();
  }
  for (const auto& [s, held] : early_) size += held.size();
  return size;
}

std::size_t MsNode::volatile_bound() const {
  const std::size_t n = config_.committee.n();
  const std::size_t per_slot = 3 * n + kKnownBlocksPerSlot + 1 + config_.vc_window * n;
  return config_.window + 2 + config_.window * per_slot +
         2 * config_.window * kEarlyPerSlotPerNode * n;
}

}  // namespace tetrabft
