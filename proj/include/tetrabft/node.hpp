// Single-shot TetraBFT node as a pure state machine: each input event yields
// the node's outbound messages, timer request and decision, if any.
#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tetrabft/safety.hpp"
#include "tetrabft/types.hpp"

namespace tetrabft {

/// Destination of an outbound message; nullopt means broadcast to all n nodes
/// (including the sender itself).
struct Outbound {
  std::optional<NodeId> to;
  Message msg;

  friend bool operator==(const Outbound&, const Outbound&) = default;
};

struct Effects {
  std::vector<Outbound> outbound;
  /// Re-arms the node's single view timer to fire after this many ticks.
  std::optional<Tick> set_timer;
  std::optional<Value> decided;
  /// Diagnostics such as equivocation evidence or misdirected messages.
  std::vector<std::string> notes;

  void append(Effects other);
};

struct NodeConfig {
  NodeId id = 0;
  Committee committee{4, 1};
  /// Known post-GST delivery bound; the view timer is 9 of these.
  Tick delta_bound = 1;
  Value initial_value{1};
  /// Number of future views whose view-change senders (and early messages)
  /// are retained.
  std::size_t vc_window = 8;
  RuleMutation mutation = RuleMutation::none;
};

class Node {
 public:
  static constexpr Tick kTimeoutDeltas = 9;
  /// Messages buffered per sender for a future view (proof, suggest,
  /// proposal, four votes).
  static constexpr std::size_t kBufferedPerSender = 7;

  explicit Node(NodeConfig config);

  /// Enters view 0.
  Effects start();
  Effects deliver(const Message& msg, NodeId from);
  Effects on_timer();

  Effects start_view(View v);
  Effects on_suggest(const Suggest& msg, NodeId from);
  Effects on_proposal(const Proposal& msg, NodeId from);
  Effects on_proof(const Proof& msg, NodeId from);
  Effects on_vote(const Vote& msg, NodeId from);
  Effects on_view_change(const ViewChange& msg, NodeId from);

  [[nodiscard]] NodeId id() const { return config_.id; }
  [[nodiscard]] const NodeConfig& config() const { return config_; }
  [[nodiscard]] View current_view() const { return view_; }
  [[nodiscard]] std::optional<Value> decided() const { return decided_; }
  [[nodiscard]] std::optional<View> decided_view() const { return decided_view_; }
  [[nodiscard]] const VoteHistory& history() const { return history_; }
  [[nodiscard]] View highest_vc_sent() const { return highest_vc_sent_; }
  [[nodiscard]] bool started() const { return started_; }

  /// Bytes of state that must survive a crash: the vote history.
  [[nodiscard]] std::size_t persistent_size() const { return VoteHistory::kSerializedSize; }
  /// Number of volatile entries held (per-view tallies, view-change window,
  /// buffered early messages).
  [[nodiscard]] std::size_t volatile_size() const;
  /// Upper bound on volatile_size() for this configuration.
  [[nodiscard]] std::size_t volatile_bound() const;

 private:
  struct Tally {
    std::array<std::map<NodeId, Value>, 4> votes;  // phase-1 index -> sender -> value
    SuggestSet suggests;
    ProofSet proofs;
    std::optional<Value> proposal;
    bool proposed = false;
    std::array<bool, 4> sent{};  // vote-1..vote-4 sent this view
  };

  [[nodiscard]] NodeId leader(View v) const { return leader_of(v, config_.committee.n()); }
  [[nodiscard]] bool is_leader() const { return leader(view_) == config_.id; }
  bool buffer_if_future(const Message& msg, NodeId from);
  void try_propose(Effects& fx);
  void try_vote1(Effects& fx);
  void send_vote(int phase, Value val, Effects& fx);

  NodeConfig config_;
  bool started_ = false;
  View view_ = 0;
  std::optional<Value> decided_;
  std::optional<View> decided_view_;
  VoteHistory history_;
  Tally tally_;
  std::map<View, std::set<NodeId>> view_change_;
  View highest_vc_sent_ = 0;
  std::map<View, std::map<NodeId, std::vector<Message>>> early_;
};

}  // namespace tetrabft
