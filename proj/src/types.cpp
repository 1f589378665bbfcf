#include "tetrabft/types.hpp"

#include <charconv>
#include <map>
#include <sstream>

namespace tetrabft {

Committee::Committee(std::uint32_t n, std::uint32_t f) : n_(n), f_(f) {
  if (n <= 3 * f) {
    throw std::invalid_argument("committee requires n > 3f (n=" + std::to_string(n) +
                                ", f=" + std::to_string(f) + ")");
  }
}

bool is_quorum(std::size_t count, std::uint32_t n, std::uint32_t f) { return count + f >= n; }

bool is_blocking(std::size_t count, std::uint32_t /*n*/, std::uint32_t f) { return count >= f + 1; }

// ---------------------------------------------------------------------------

const std::optional<VoteRecord>& VoteHistory::highest(int phase) const {
  if (phase < 1 || phase > 4) throw std::out_of_range("vote phase must be 1..4");
  return highest_[static_cast<std::size_t>(phase - 1)];
}

const std::optional<VoteRecord>& VoteHistory::prev(int phase) const {
  static const std::optional<VoteRecord> kNone;
  if (phase == 1) return prev1_;
  if (phase == 2) return prev2_;
  if (phase == 3 || phase == 4) return kNone;
  throw std::out_of_range("vote phase must be 1..4");
}

void VoteHistory::record(int phase, View view, Value value) {
  if (phase < 1 || phase > 4) throw std::out_of_range("vote phase must be 1..4");
  auto& top = highest_[static_cast<std::size_t>(phase - 1)];
  if (top && view < top->view) {
    throw ProtocolViolation("vote-" + std::to_string(phase) + " recorded for view " +
                            std::to_string(view) + " below highest view " +
                            std::to_string(top->view));
  }
  if (top && top->view == view && top->value != value) {
    throw ProtocolViolation("two different vote-" + std::to_string(phase) +
                            " values in view " + std::to_string(view));
  }
  // When the value changes, the old highest is the highest differing-value
  // vote: every other differing vote has a lower view than it.
  if (phase <= 2 && top && top->value != value) {
    (phase == 1 ? prev1_ : prev2_) = top;
  }
  top = VoteRecord{view, value};
}

namespace {

void put_record(std::uint8_t*& out, const std::optional<VoteRecord>& r) {
  *out++ = r ? 1 : 0;
  const std::uint32_t view = r ? r->view : 0;
  const std::uint64_t token = r ? r->value.token : 0;
  for (int i = 0; i < 4; ++i) *out++ = static_cast<std::uint8_t>(view >> (8 * i));
  for (int i = 0; i < 8; ++i) *out++ = static_cast<std::uint8_t>(token >> (8 * i));
}

bool pair_ok(const std::optional<VoteRecord>& top, const std::optional<VoteRecord>& prev) {
  if (!prev) return true;
  return top && prev->view < top->view && prev->value != top->value;
}

bool precedes(const std::optional<VoteRecord>& r, View view) { return !r || r->view < view; }

}  // namespace

std::array<std::uint8_t, VoteHistory::kSerializedSize> VoteHistory::serialize() const {
  std::array<std::uint8_t, kSerializedSize> bytes{};
  std::uint8_t* out = bytes.data();
  for (const auto& h : highest_) put_record(out, h);
  put_record(out, prev1_);
  put_record(out, prev2_);
  return bytes;
}

bool VoteHistory::well_formed() const {
  return pair_ok(highest_[0], prev1_) && pair_ok(highest_[1], prev2_);
}

VoteHistory record_vote(VoteHistory h, int phase, View view, Value value) {
  h.record(phase, view, value);
  return h;
}

Suggest make_suggest(const VoteHistory& h, Slot slot, View view) {
  return Suggest{slot, view, h.highest(2), h.prev(2), h.highest(3)};
}

Proof make_proof(const VoteHistory& h, Slot slot, View view) {
  return Proof{slot, view, h.highest(1), h.prev(1), h.highest(4)};
}

bool well_formed(const Suggest& s) {
  return pair_ok(s.vote2, s.prev_vote2) && precedes(s.vote2, s.view) &&
         precedes(s.prev_vote2, s.view) && precedes(s.vote3, s.view);
}

bool well_formed(const Proof& p) {
  return pair_ok(p.vote1, p.prev_vote1) && precedes(p.vote1, p.view) &&
         precedes(p.prev_vote1, p.view) && precedes(p.vote4, p.view);
}

View view_of(const Message& m) {
  return std::visit([](const auto& x) { return x.view; }, m);
}

Slot slot_of(const Message& m) {
  return std::visit(
      [](const auto& x) -> Slot {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Vote>) {
          return 0;
        } else {
          return x.slot;
        }
      },
      m);
}

std::string kind_of(const Message& m) {
  struct {
    std::string operator()(const Proposal&) const { return "PROPOSAL"; }
    std::string operator()(const Vote& v) const { return "VOTE" + std::to_string(v.phase); }
    std::string operator()(const SlotVote&) const { return "VOTE"; }
    std::string operator()(const Suggest&) const { return "SUGGEST"; }
    std::string operator()(const Proof&) const { return "PROOF"; }
    std::string operator()(const ViewChange&) const { return "VC"; }
  } visitor;
  return std::visit(visitor, m);
}

// ---------------------------------------------------------------------------
// Canonical text encoding.

std::string encode(const Value& v) { return std::to_string(v.token); }

std::string encode(const std::optional<VoteRecord>& r) {
  if (!r) return "-";
  return "(" + std::to_string(r->view) + "," + encode(r->value) + ")";
}

namespace {

std::string slot_prefix(Slot slot) {
  return slot == 0 ? std::string{} : "slot=" + std::to_string(slot) + ",";
}

struct Encoder {
  std::string operator()(const Proposal& p) const {
    std::string s = "PROPOSAL(" + slot_prefix(p.slot) + "v=" + std::to_string(p.view) +
                    ",val=" + encode(p.value);
    if (p.slot != 0) {
      s += ",parent=" + encode(p.parent) + ",payload=" + std::to_string(p.payload);
    }
    return s + ")";
  }
  std::string operator()(const Vote& v) const {
    return "VOTE" + std::to_string(v.phase) + "(v=" + std::to_string(v.view) +
           ",val=" + encode(v.value) + ")";
  }
  std::string operator()(const SlotVote& v) const {
    return "VOTE(slot=" + std::to_string(v.slot) + ",v=" + std::to_string(v.view) +
           ",val=" + encode(v.value) + ")";
  }
  std::string operator()(const Suggest& s) const {
    return "SUGGEST(" + slot_prefix(s.slot) + "v=" + std::to_string(s.view) +
           ",vote2=" + encode(s.vote2) + ",prev2=" + encode(s.prev_vote2) +
           ",vote3=" + encode(s.vote3) + ")";
  }
  std::string operator()(const Proof& p) const {
    return "PROOF(" + slot_prefix(p.slot) + "v=" + std::to_string(p.view) +
           ",vote1=" + encode(p.vote1) + ",prev1=" + encode(p.prev_vote1) +
           ",vote4=" + encode(p.vote4) + ")";
  }
  std::string operator()(const ViewChange& v) const {
    return "VC(" + slot_prefix(v.slot) + "v=" + std::to_string(v.view) + ")";
  }
};

template <typename Int>
Int parse_int(std::string_view text) {
  Int out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("expected integer, got '" + std::string(text) + "'");
  }
  return out;
}

std::optional<VoteRecord> parse_record(std::string_view text) {
  if (text == "-") return std::nullopt;
  if (text.size() < 5 || text.front() != '(' || text.back() != ')') {
    throw ParseError("malformed vote record '" + std::string(text) + "'");
  }
  const auto inner = text.substr(1, text.size() - 2);
  const auto comma = inner.find(',');
  if (comma == std::string_view::npos) {
    throw ParseError("malformed vote record '" + std::string(text) + "'");
  }
  return VoteRecord{parse_int<View>(inner.substr(0, comma)),
                    Value{parse_int<std::uint64_t>(inner.substr(comma + 1))}};
}

/// Splits `k=v,k=(a,b),...` at top-level commas.
std::map<std::string, std::string, std::less<>> parse_fields(std::string_view body) {
  std::map<std::string, std::string, std::less<>> fields;
  int depth = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    const auto item = body.substr(start, end - start);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected key=value, got '" + std::string(item) + "'");
    }
    fields.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '(') ++depth;
    if (body[i] == ')') --depth;
    if (body[i] == ',' && depth == 0) {
      flush(i);
      start = i + 1;
    }
  }
  if (!body.empty()) flush(body.size());
  return fields;
}

class FieldReader {
 public:
  explicit FieldReader(std::map<std::string, std::string, std::less<>> fields)
      : fields_(std::move(fields)) {}

  template <typename Int>
  Int integer(std::string_view key, std::optional<Int> fallback = std::nullopt) {
    auto it = fields_.find(key);
    if (it == fields_.end()) {
      if (fallback) return *fallback;
      throw ParseError("missing field '" + std::string(key) + "'");
    }
    auto out = parse_int<Int>(it->second);
    fields_.erase(it);
    return out;
  }

  std::optional<VoteRecord> record(std::string_view key) {
    auto it = fields_.find(key);
    if (it == fields_.end()) throw ParseError("missing field '" + std::string(key) + "'");
    auto out = parse_record(it->second);
    fields_.erase(it);
    return out;
  }

  void finish() const {
    if (!fields_.empty()) throw ParseError("unexpected field '" + fields_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string, std::less<>> fields_;
};

}  // namespace

std::string encode(const Message& m) { return std::visit(Encoder{}, m); }

Message decode_message(std::string_view text) {
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') {
    throw ParseError("malformed message '" + std::string(text) + "'");
  }
  const auto name = text.substr(0, open);
  FieldReader in(parse_fields(text.substr(open + 1, text.size() - open - 2)));
  const auto slot = in.integer<Slot>("slot", Slot{0});
  Message out;
  if (name == "PROPOSAL") {
    Proposal p;
    p.slot = slot;
    p.view = in.integer<View>("v");
    p.value = Value{in.integer<std::uint64_t>("val")};
    if (slot != 0) {
      p.parent = Value{in.integer<std::uint64_t>("parent")};
      p.payload = in.integer<std::uint64_t>("payload");
    }
    out = p;
  } else if (name.size() == 5 && name.substr(0, 4) == "VOTE" && name[4] >= '1' && name[4] <= '4') {
    if (slot != 0) throw ParseError("phase votes carry no slot");
    out = Vote{name[4] - '0', in.integer<View>("v"), Value{in.integer<std::uint64_t>("val")}};
  } else if (name == "VOTE") {
    if (slot == 0) throw ParseError("slot vote requires slot >= 1");
    out = SlotVote{slot, in.integer<View>("v"), Value{in.integer<std::uint64_t>("val")}};
  } else if (name == "SUGGEST") {
    Suggest s;
    s.slot = slot;
    s.view = in.integer<View>("v");
    s.vote2 = in.record("vote2");
    s.prev_vote2 = in.record("prev2");
    s.vote3 = in.record("vote3");
    out = s;
  } else if (name == "PROOF") {
    Proof p;
    p.slot = slot;
    p.view = in.integer<View>("v");
    p.vote1 = in.record("vote1");
    p.prev_vote1 = in.record("prev1");
    p.vote4 = in.record("vote4");
    out = p;
  } else if (name == "VC") {
    out = ViewChange{slot, in.integer<View>("v")};
  } else {
    throw ParseError("unknown message kind '" + std::string(name) + "'");
  }
  in.finish();
  return out;
}

Value block_value(Slot slot, Value parent, std::uint64_t payload) {
  // splitmix64 over the three fields.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(slot);
  h = mix(h ^ parent.token);
  h = mix(h ^ payload);
  // Reserve small tokens for single-shot values and zero for genesis.
  return Value{h | (1ULL << 63)};
}

}  // namespace tetrabft
