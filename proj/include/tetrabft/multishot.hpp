// Pipelined multi-shot TetraBFT node. Each slot runs its own view sequence;
// a vote for slot s doubles as vote-2..4 for the three notarized ancestors.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tetrabft/node.hpp"
#include "tetrabft/safety.hpp"
#include "tetrabft/types.hpp"

namespace tetrabft {

/// Round-robin leader of (slot, view).
inline NodeId ms_leader_of(Slot s, View v, std::uint32_t n) {
  return static_cast<NodeId>((static_cast<std::uint64_t>(s) + v) % n);
}

struct SlotTimer {
  Slot slot = 0;
  Tick after = 0;
};

struct SlotValue {
  Slot slot = 0;
  View view = 0;
  Value value;
};

struct MsEffects {
  std::vector<Outbound> outbound;
  std::vector<SlotTimer> set_timers;
  std::vector<Slot> cancel_timers;
  std::vector<SlotValue> notarized;
  std::vector<SlotValue> finalized;
  std::vector<std::string> notes;

  void append(MsEffects other);
};

struct MsConfig {
  NodeId id = 0;
  Committee committee{4, 1};
  Tick delta_bound = 1;
  /// Slots 1..target_slots are meant to finalize; leaders propose up to
  /// target_slots + 3 so the last target slot gets its three successors.
  Slot target_slots = 10;
  /// Maximum number of non-finalized slots held at once.
  std::size_t window = 5;
  std::size_t vc_window = 8;
  RuleMutation mutation = RuleMutation::none;
};

class MsNode {
 public:
  static constexpr Tick kTimeoutDeltas = 9;
  /// Raw messages held per slot beyond the window or ahead of the slot's view.
  static constexpr std::size_t kEarlyPerSlotPerNode = 8;
  static constexpr std::size_t kKnownBlocksPerSlot = 8;

  explicit MsNode(MsConfig config);

  MsEffects start();
  MsEffects deliver(const Message& msg, NodeId from);
  MsEffects on_timer(Slot slot);

  // Typed entry points; each is equivalent to deliver() / on_timer().
  MsEffects ms_on_proposal(const Proposal& p, NodeId from) { return deliver(p, from); }
  MsEffects ms_on_vote(const SlotVote& v, NodeId from) { return deliver(v, from); }
  MsEffects ms_on_timeout(Slot slot) { return on_timer(slot); }
  MsEffects ms_on_view_change(const ViewChange& vc, NodeId from) { return deliver(vc, from); }

  [[nodiscard]] NodeId id() const { return config_.id; }
  [[nodiscard]] const MsConfig& config() const { return config_; }
  [[nodiscard]] Slot finalized_height() const { return finalized_height_; }
  [[nodiscard]] const std::vector<Value>& finalized_chain() const { return chain_; }
  [[nodiscard]] View slot_view(Slot s) const;
  [[nodiscard]] std::optional<Value> notarized(Slot s) const;
  [[nodiscard]] const VoteHistory* slot_history(Slot s) const;
  [[nodiscard]] std::size_t active_slots() const { return slots_.size(); }

  /// Fixed capacity of the per-slot vote histories.
  [[nodiscard]] std::size_t persistent_size() const {
    return config_.window * VoteHistory::kSerializedSize;
  }
  [[nodiscard]] std::size_t volatile_size() const;
  [[nodiscard]] std::size_t volatile_bound() const;

 private:
  struct SlotState {
    View view = 0;
    bool evidence = false;  // a proposal or vote for this slot was seen
    std::optional<Proposal> proposal;
    std::map<NodeId, Value> votes;
    std::optional<Value> notarized;
    VoteHistory history;
    SuggestSet suggests;
    ProofSet proofs;
    bool voted = false;
    bool proposed = false;
    std::vector<Proposal> known_blocks;
    std::map<View, std::set<NodeId>> view_change;
    View highest_vc_sent = 0;
  };

  [[nodiscard]] NodeId leader(Slot s, View v) const {
    return ms_leader_of(s, v, config_.committee.n());
  }
  [[nodiscard]] bool in_window(Slot s) const {
    return s > finalized_height_ && s <= finalized_height_ + config_.window;
  }
  SlotState* slot(Slot s);
  [[nodiscard]] const SlotState* slot(Slot s) const;
  /// Value of slot s if it is finalized, genesis or notarized.
  [[nodiscard]] std::optional<Value> settled(Slot s) const;
  [[nodiscard]] const Proposal* block(Slot s, Value v) const;
  void remember_block(SlotState& st, const Proposal& p);

  /// Holds a message that is not yet applicable; true if held or dropped.
  bool defer(const Message& msg, NodeId from, MsEffects& fx);
  [[nodiscard]] bool applicable(const Message& msg) const;
  void arm_timer(Slot s, MsEffects& fx);
  void switch_view(Slot s, View v, MsEffects& fx);
  void progress(MsEffects& fx);
  bool try_propose(Slot s, MsEffects& fx);
  bool try_vote(Slot s, MsEffects& fx);
  void record_implied_votes(Slot s, const Proposal& p);
  bool try_finalize(MsEffects& fx);
  [[nodiscard]] std::optional<Value> tip(Slot s) const;

  void handle(const Message& msg, NodeId from, MsEffects& fx);
  void accept_proposal(const Proposal& p, NodeId from, MsEffects& fx);
  void accept_vote(const SlotVote& v, NodeId from, MsEffects& fx);
  void accept_view_change(const ViewChange& vc, NodeId from, MsEffects& fx);
  void settle(MsEffects& fx);
  void store_suggest(const Suggest& s, NodeId from, MsEffects& fx);
  void store_proof(const Proof& p, NodeId from, MsEffects& fx);

  MsConfig config_;
  std::map<Slot, SlotState> slots_;
  Slot finalized_height_ = 0;
  std::vector<Value> chain_;  // chain_[i] is slot i+1
  std::set<Slot> armed_;
  /// Latest view-change quorum: slots at or above `first` may follow into
  /// views up to `second` when peers show them there.
  std::pair<Slot, View> vc_floor_{0, 0};
  std::map<Slot, std::vector<std::pair<NodeId, Message>>> early_;
};

}  // namespace tetrabft
