// Domain vocabulary shared by every TetraBFT module: identifiers, values,
// quorum arithmetic, wire messages and the constant-size vote history.
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tetrabft {

using NodeId = std::uint32_t;
using View = std::uint32_t;
using Slot = std::uint32_t;
/// Simulated time in integer ticks.
using Tick = std::int64_t;

/// Opaque protocol value. The protocol only tests equality; the total order
/// exists for deterministic tie-breaking.
struct Value {
  std::uint64_t token = 0;

  friend constexpr auto operator<=>(const Value&, const Value&) = default;
};

/// Committee parameters. Construction rejects n <= 3f.
class Committee {
 public:
  Committee(std::uint32_t n, std::uint32_t f);

  [[nodiscard]] std::uint32_t n() const { return n_; }
  [[nodiscard]] std::uint32_t f() const { return f_; }
  [[nodiscard]] std::uint32_t quorum() const { return n_ - f_; }
  [[nodiscard]] std::uint32_t blocking() const { return f_ + 1; }
  [[nodiscard]] bool is_quorum(std::size_t count) const { return count >= quorum(); }
  [[nodiscard]] bool is_blocking(std::size_t count) const { return count >= blocking(); }

  friend bool operator==(const Committee&, const Committee&) = default;

 private:
  std::uint32_t n_;
  std::uint32_t f_;
};

bool is_quorum(std::size_t count, std::uint32_t n, std::uint32_t f);
bool is_blocking(std::size_t count, std::uint32_t n, std::uint32_t f);

/// Round-robin leader of a single-shot view.
inline NodeId leader_of(View v, std::uint32_t n) { return static_cast<NodeId>(v % n); }

struct VoteRecord {
  View view = 0;
  Value value;

  friend constexpr auto operator<=>(const VoteRecord&, const VoteRecord&) = default;
};

/// Thrown when a well-behaved node would violate its own voting discipline.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Highest vote sent per phase, plus the highest vote-1 / vote-2 whose value
/// differs from the respective highest one. Fixed size regardless of history.
class VoteHistory {
 public:
  static constexpr std::size_t kSerializedSize = 6 * (1 + 4 + 8);

  [[nodiscard]] const std::optional<VoteRecord>& highest(int phase) const;
  /// Second-highest differing-value record; only phases 1 and 2 keep one.
  [[nodiscard]] const std::optional<VoteRecord>& prev(int phase) const;

  /// Records a vote sent in `phase` (1..4). Views must be non-decreasing per phase.
  void record(int phase, View view, Value value);

  [[nodiscard]] std::array<std::uint8_t, kSerializedSize> serialize() const;
  [[nodiscard]] bool well_formed() const;

  friend bool operator==(const VoteHistory&, const VoteHistory&) = default;

 private:
  std::array<std::optional<VoteRecord>, 4> highest_{};
  std::optional<VoteRecord> prev1_;
  std::optional<VoteRecord> prev2_;
};

VoteHistory record_vote(VoteHistory h, int phase, View view, Value value);

// ---------------------------------------------------------------------------
// Messages. Slot 0 means single-shot; multi-shot slots start at 1. The sender
// is never part of a payload: the channel attaches it.

struct Proposal {
  Slot slot = 0;
  View view = 0;
  Value value;
  // Multi-shot only: the block's parent value and payload.
  Value parent;
  std::uint64_t payload = 0;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

/// Single-shot vote-i, i in 1..4.
struct Vote {
  int phase = 1;
  View view = 0;
  Value value;

  friend bool operator==(const Vote&, const Vote&) = default;
};

/// Multi-shot slot vote; its phase meaning is implied by the slot distance.
struct SlotVote {
  Slot slot = 1;
  View view = 0;
  Value value;

  friend bool operator==(const SlotVote&, const SlotVote&) = default;
};

struct Suggest {
  Slot slot = 0;
  View view = 0;
  std::optional<VoteRecord> vote2;
  std::optional<VoteRecord> prev_vote2;
  std::optional<VoteRecord> vote3;

  friend bool operator==(const Suggest&, const Suggest&) = default;
};

struct Proof {
  Slot slot = 0;
  View view = 0;
  std::optional<VoteRecord> vote1;
  std::optional<VoteRecord> prev_vote1;
  std::optional<VoteRecord> vote4;

  friend bool operator==(const Proof&, const Proof&) = default;
};

struct ViewChange {
  Slot slot = 0;
  View view = 0;

  friend bool operator==(const ViewChange&, const ViewChange&) = default;
};

using Message = std::variant<Proposal, Vote, SlotVote, Suggest, Proof, ViewChange>;

Suggest make_suggest(const VoteHistory& h, Slot slot, View view);
Proof make_proof(const VoteHistory& h, Slot slot, View view);

/// (vote, prev) pair constraints plus "all reported views precede `view`".
bool well_formed(const Suggest& s);
bool well_formed(const Proof& p);

/// View tag carried by any message.
View view_of(const Message& m);
Slot slot_of(const Message& m);
/// Short kind name used by filters: PROPOSAL, VOTE1..VOTE4, VOTE, SUGGEST, PROOF, VC.
std::string kind_of(const Message& m);

/// Canonical single-line encoding, e.g. `VOTE2(v=3,val=1)` or
/// `VC(slot=2,v=1)`. Stable across runs.
std::string encode(const Message& m);
std::string encode(const Value& v);
std::string encode(const std::optional<VoteRecord>& r);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse of encode(); throws ParseError on malformed input.
Message decode_message(std::string_view text);

/// Multi-shot block value: commits to slot, parent and payload so a value
/// determines its whole ancestry.
Value block_value(Slot slot, Value parent, std::uint64_t payload);

/// Value of the pre-notarized genesis block at slot 0.
inline constexpr Value kGenesis{0};

}  // namespace tetrabft
