#include "tetrabft/explorer.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tetrabft {
namespace {

constexpr int kHonest = 3;
constexpr int kMaxViews = 4;

using Key = unsigned __int128;

struct KeyHash {
  std::size_t operator()(Key k) const {
    auto lo = static_cast<std::uint64_t>(k);
    auto hi = static_cast<std::uint64_t>(k >> 64);
    std::uint64_t x = lo ^ (hi * 0x9e3779b97f4a7c15ULL);
    x ^= x >> 31;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 29;
    return static_cast<std::size_t>(x);
  }
};

/// Open-addressing set of non-zero keys; 16 bytes per slot.
class VisitedSet {
 public:
  VisitedSet() : slots_(1u << 16) {}

  bool insert(Key k) {
    if ((size_ + 1) * 10 > slots_.size() * 7) grow();
    if (place(slots_, k)) {
      ++size_;
      return true;
    }
    return false;
  }

 private:
  static bool place(std::vector<Key>& table, Key k) {
    const std::size_t mask = table.size() - 1;
    for (std::size_t i = KeyHash{}(k) & mask;; i = (i + 1) & mask) {
      if (table[i] == 0) {
        table[i] = k;
        return true;
      }
      if (table[i] == k) return false;
    }
  }

  void grow() {
    std::vector<Key> bigger(slots_.size() * 2);
    for (Key k : slots_) {
      if (k != 0) place(bigger, k);
    }
    slots_.swap(bigger);
  }

  std::vector<Key> slots_;
  std::size_t size_ = 0;
};

// Exploration proceeds view by view. A view-v action reads only view-v votes
// and the histories nodes carry into v, and both rules are monotone in the
// records they see, so any execution can be reordered to finish view v before
// anyone enters v + 1 while keeping every action enabled. The state therefore
// keeps each node's vote history, the values already decidable, and the
// current view's votes and proposal.
struct NodeState {
  VoteHistory history;                 // votes before the current view
  std::array<std::uint8_t, 4> votes{};  // current view, [phase-1] = value, 0 none
};

struct State {
  std::uint8_t view = 0;
  std::uint8_t decided = 0;  // bit x: value x decidable in an earlier view
  std::array<NodeState, kHonest> nodes{};
  std::uint8_t proposal = 0;  // honest leader's value in the current view
};

enum class Kind { advance, propose, vote };

struct Action {
  Kind kind = Kind::advance;
  int node = -1;  // honest index
  int view = 0;
  int phase = 0;
  int value = 0;
};

unsigned record_code(const std::optional<VoteRecord>& r) {
  return r ? 1 + r->view * 3 + static_cast<unsigned>(r->value.token - 1) : 0;
}

unsigned history_code(const VoteHistory& h) {
  unsigned k = 0;
  for (int phase = 1; phase <= 4; ++phase) k = (k << 4) | record_code(h.highest(phase));
  k = (k << 4) | record_code(h.prev(1));
  k = (k << 4) | record_code(h.prev(2));
  return k;
}

Key pack(const State& s) {
  Key k = 1;
  auto put = [&k](unsigned bits, unsigned value) { k = (k << bits) | value; };
  put(2, s.view);
  put(4, s.decided);
  for (const auto& n : s.nodes) {
    put(24, history_code(n.history));
    for (auto value : n.votes) put(2, value);
  }
  put(2, s.proposal);
  return k;
}

class Model {
 public:
  explicit Model(const ExploreConfig& c) : cfg_(c), committee_(c.n, c.f) {
    if (c.n != 4 || c.f != 1) throw std::invalid_argument("explorer supports n=4, f=1 only");
    if (c.values < 1 || c.values > 3) throw std::invalid_argument("explorer supports 1..3 values");
    if (c.max_view >= kMaxViews) throw std::invalid_argument("explorer supports views 0..3");
    byz_ = c.byzantine.value_or(leader_of(c.max_view, c.n));
    if (byz_ >= c.n) throw std::invalid_argument("byzantine id out of range");
    active_ = !c.no_byzantine;
    int h = 0;
    for (NodeId id = 0; id < c.n; ++id) {
      if (id != byz_) ids_[h++] = id;
    }
    if (active_ && cfg_.lying_history) build_byzantine_records();
    for (const auto& name : c.invariants) {
      if (name != "agreement" && name != "within_view" && name != "cross_view" && name != "acceptance") {
        throw std::invalid_argument("unknown invariant: " + name);
      }
    }
  }

  [[nodiscard]] int max_view() const { return static_cast<int>(cfg_.max_view); }
  [[nodiscard]] int values() const { return static_cast<int>(cfg_.values); }

  [[nodiscard]] int honest_index(NodeId id) const {
    for (int h = 0; h < kHonest; ++h) {
      if (ids_[h] == id) return h;
    }
    return -1;
  }

  [[nodiscard]] int input(int h) const { return static_cast<int>(ids_[h] % cfg_.values) + 1; }

  [[nodiscard]] int leader(int v) const {
    return honest_index(leader_of(static_cast<View>(v), cfg_.n));
  }

  [[nodiscard]] int vote_count(const State& s, int phase, int value) const {
    int count = (active_ && cfg_.equivocate) ? 1 : 0;
    for (const auto& n : s.nodes) count += n.votes[phase - 1] == value ? 1 : 0;
    return count;
  }

  /// Bit x set when value x has a vote-4 quorum in the current view.
  [[nodiscard]] std::uint8_t decidable_now(const State& s) const {
    std::uint8_t mask = 0;
    for (int x = 1; x <= values(); ++x) {
      if (committee_.is_quorum(static_cast<std::size_t>(vote_count(s, 4, x)))) mask |= static_cast<std::uint8_t>(1u << x);
    }
    return mask;
  }

  [[nodiscard]] std::optional<State> apply(const State& s, const Action& a) {
    if (a.view != s.view) return std::nullopt;
    State next = s;
    const int v = s.view;
    switch (a.kind) {
      case Kind::advance: {
        if (v >= max_view()) return std::nullopt;
        next.decided |= decidable_now(s);
        for (auto& n : next.nodes) {
          for (int phase = 1; phase <= 4; ++phase) {
            if (n.votes[phase - 1] != 0) {
              n.history.record(phase, static_cast<View>(v), Value{n.votes[phase - 1]});
            }
          }
          n.votes = {};
        }
        next.proposal = 0;
        next.view = static_cast<std::uint8_t>(v + 1);
        return next;
      }
      case Kind::propose: {
        if (a.node < 0 || a.node != leader(v) || s.proposal != 0) return std::nullopt;
        if (a.value < 1 || a.value > values()) return std::nullopt;
        if (v == 0 ? a.value != input(a.node) : !leader_may_propose(s, a.value)) return std::nullopt;
        next.proposal = static_cast<std::uint8_t>(a.value);
        return next;
      }
      case Kind::vote: {
        if (a.node < 0 || a.node >= kHonest || a.phase < 1 || a.phase > 4) return std::nullopt;
        if (a.value < 1 || a.value > values() || s.nodes[a.node].votes[a.phase - 1] != 0) return std::nullopt;
        if (a.phase == 1) {
          const bool proposed = leader(v) < 0 ? active_ : s.proposal == a.value;
          if (!proposed) return std::nullopt;
          if (v > 0 && !follower_accepts(s, a.value)) return std::nullopt;
        } else if (!committee_.is_quorum(static_cast<std::size_t>(vote_count(s, a.phase - 1, a.value)))) {
          return std::nullopt;
        }
        next.nodes[a.node].votes[a.phase - 1] = static_cast<std::uint8_t>(a.value);
        return next;
      }
    }
    return std::nullopt;
  }

  void successors(const State& s, std::vector<std::pair<Action, State>>& out) {
    out.clear();
    auto attempt = [&](const Action& a) {
      if (auto next = apply(s, a)) out.emplace_back(a, *next);
    };
    const int v = s.view;
    for (int h = 0; h < kHonest; ++h) {
      for (int phase = 1; phase <= 4; ++phase) {
        for (int x = 1; x <= values(); ++x) attempt({Kind::vote, h, v, phase, x});
      }
    }
    for (int x = 1; x <= values(); ++x) attempt({Kind::propose, leader(v), v, 0, x});
    attempt({Kind::advance, -1, v, 0, 0});
  }

  [[nodiscard]] bool checks(const std::string& name) const {
    return cfg_.invariants.empty() ||
           std::find(cfg_.invariants.begin(), cfg_.invariants.end(), name) != cfg_.invariants.end();
  }

  [[nodiscard]] std::optional<std::string> violation(const State& s) {
    const std::uint8_t all = s.decided | decidable_now(s);
    if (checks("agreement") && (all & (all - 1))) return "agreement";
    if (checks("within_view")) {
      if (auto broken = within_view(s)) return broken;
    }
    if (checks("cross_view") && s.decided != 0) {
      for (const auto& n : s.nodes) {
        const int x = n.votes[0];
        if (x != 0 && !((s.decided >> x) & 1u)) return "cross_view";
      }
    }
    if (checks("acceptance") && s.view > 0 && just_entered(s)) {
      for (int x = 1; x <= values(); ++x) {
        if (honest_suggests_qualify(s, x) && !honest_proofs_accept(s, x)) return "acceptance";
      }
    }
    return std::nullopt;
  }

  [[nodiscard]] static bool just_entered(const State& s) {
    if (s.proposal != 0) return false;
    return std::all_of(s.nodes.begin(), s.nodes.end(), [](const NodeState& n) {
      return std::all_of(n.votes.begin(), n.votes.end(), [](std::uint8_t x) { return x == 0; });
    });
  }

  [[nodiscard]] static std::optional<std::string> within_view(const State& s) {
    for (int phase = 2; phase <= 4; ++phase) {
      int seen = 0;
      for (const auto& n : s.nodes) {
        const int x = n.votes[phase - 1];
        if (x == 0) continue;
        if (seen != 0 && seen != x) return "within_view";
        seen = x;
      }
    }
    return std::nullopt;
  }

  [[nodiscard]] std::string describe(const Action& a) const {
    std::ostringstream os;
    switch (a.kind) {
      case Kind::advance: os << "all enter view " << a.view + 1; break;
      case Kind::propose: os << "node " << ids_[a.node] << " propose view " << a.view << " value " << a.value; break;
      case Kind::vote:
        os << "node " << ids_[a.node] << " vote" << a.phase << " view " << a.view << " value " << a.value;
        break;
    }
    return os.str();
  }

  [[nodiscard]] std::optional<Action> parse(const std::string& text) const {
    std::istringstream is(text);
    std::string w0, w1, w2, w3;
    Action a;
    if (!(is >> w0)) return std::nullopt;
    if (w0 == "all") {
      if (!(is >> w1 >> w2 >> a.view) || w1 != "enter" || w2 != "view" || a.view < 1) return std::nullopt;
      --a.view;
      a.kind = Kind::advance;
      return a;
    }
    NodeId id = 0;
    if (w0 != "node" || !(is >> id >> w1 >> w2 >> a.view >> w3 >> a.value)) return std::nullopt;
    if (w2 != "view" || w3 != "value") return std::nullopt;
    a.node = honest_index(id);
    if (a.node < 0) return std::nullopt;
    if (w1 == "propose") {
      a.kind = Kind::propose;
    } else if (w1.size() == 5 && w1.rfind("vote", 0) == 0 && w1[4] >= '1' && w1[4] <= '4') {
      a.kind = Kind::vote;
      a.phase = w1[4] - '0';
    } else {
      return std::nullopt;
    }
    return a;
  }

 private:
  [[nodiscard]] Key cache_key(const State& s, int value) const {
    Key k = (static_cast<Key>(s.view) << 4) | static_cast<Key>(value);
    for (const auto& n : s.nodes) k = (k << 24) | history_code(n.history);
    return k;
  }

  bool follower_accepts(const State& s, int value) {
    const Key key = cache_key(s, value);
    if (auto it = follower_cache_.find(key); it != follower_cache_.end()) return it->second;
    const auto v = static_cast<View>(s.view);
    ProofSet proofs;
    for (int h = 0; h < kHonest; ++h) proofs[ids_[h]] = make_proof(s.nodes[h].history, 0, v);
    const Value val{static_cast<std::uint64_t>(value)};
    bool ok = node_check_safe(proofs, v, val, committee_, cfg_.mutation);
    if (!ok && active_ && cfg_.lying_history) {
      for (const auto& p : byz_proofs_[v]) {
        proofs[byz_] = p;
        if (node_check_safe(proofs, v, val, committee_, cfg_.mutation)) {
          ok = true;
          break;
        }
      }
    }
    follower_cache_.emplace(key, ok);
    return ok;
  }

  // Suggests and proofs of the honest nodes alone: a value the first admit
  // must pass the second, or an honest leader's proposal can stall.
  bool honest_suggests_qualify(const State& s, int value) {
    const Key key = cache_key(s, value);
    if (auto it = honest_leader_cache_.find(key); it != honest_leader_cache_.end()) return it->second;
    const auto v = static_cast<View>(s.view);
    SuggestSet suggests;
    for (int h = 0; h < kHonest; ++h) suggests[ids_[h]] = make_suggest(s.nodes[h].history, 0, v);
    const bool ok = leader_value_qualifies(suggests, v, Value{static_cast<std::uint64_t>(value)}, committee_);
    honest_leader_cache_.emplace(key, ok);
    return ok;
  }

  bool honest_proofs_accept(const State& s, int value) {
    const Key key = cache_key(s, value);
    if (auto it = honest_follower_cache_.find(key); it != honest_follower_cache_.end()) return it->second;
    const auto v = static_cast<View>(s.view);
    ProofSet proofs;
    for (int h = 0; h < kHonest; ++h) proofs[ids_[h]] = make_proof(s.nodes[h].history, 0, v);
    const bool ok = node_check_safe(proofs, v, Value{static_cast<std::uint64_t>(value)}, committee_, cfg_.mutation);
    honest_follower_cache_.emplace(key, ok);
    return ok;
  }

  bool leader_may_propose(const State& s, int value) {
    const Key key = cache_key(s, value);
    if (auto it = leader_cache_.find(key); it != leader_cache_.end()) return it->second;
    const auto v = static_cast<View>(s.view);
    SuggestSet suggests;
    for (int h = 0; h < kHonest; ++h) suggests[ids_[h]] = make_suggest(s.nodes[h].history, 0, v);
    const Value val{static_cast<std::uint64_t>(value)};
    bool ok = leader_value_qualifies(suggests, v, val, committee_);
    if (!ok && active_ && cfg_.lying_history) {
      for (const auto& sg : byz_suggests_[v]) {
        suggests[byz_] = sg;
        if (leader_value_qualifies(suggests, v, val, committee_)) {
          ok = true;
          break;
        }
      }
    }
    leader_cache_.emplace(key, ok);
    return ok;
  }

  void build_byzantine_records() {
    for (int v = 1; v <= max_view(); ++v) {
      std::vector<std::optional<VoteRecord>> records{std::nullopt};
      for (int w = 0; w < v; ++w) {
        for (int x = 1; x <= values(); ++x) {
          records.push_back(VoteRecord{static_cast<View>(w), Value{static_cast<std::uint64_t>(x)}});
        }
      }
      for (const auto& a : records) {
        for (const auto& b : records) {
          for (const auto& c : records) {
            Suggest sg{0, static_cast<View>(v), a, b, c};
            if (well_formed(sg)) byz_suggests_[v].push_back(sg);
            Proof pf{0, static_cast<View>(v), a, b, c};
            if (well_formed(pf)) byz_proofs_[v].push_back(pf);
          }
        }
      }
    }
  }

  ExploreConfig cfg_;
  Committee committee_;
  NodeId byz_ = 0;
  bool active_ = true;
  std::array<NodeId, kHonest> ids_{};
  std::array<std::vector<Suggest>, kMaxViews> byz_suggests_;
  std::array<std::vector<Proof>, kMaxViews> byz_proofs_;
  std::unordered_map<Key, bool, KeyHash> follower_cache_;
  std::unordered_map<Key, bool, KeyHash> leader_cache_;
  std::unordered_map<Key, bool, KeyHash> honest_leader_cache_;
  std::unordered_map<Key, bool, KeyHash> honest_follower_cache_;
};

std::optional<std::string> replay(Model& model, const std::vector<Action>& actions) {
  State s;
  for (const auto& a : actions) {
    auto next = model.apply(s, a);
    if (!next) return std::nullopt;
    s = *next;
  }
  return model.violation(s);
}

std::vector<Action> minimize(Model& model, std::vector<Action> actions) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = actions.size(); i-- > 0;) {
      auto shorter = actions;
      shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(i));
      if (replay(model, shorter)) {
        actions = std::move(shorter);
        changed = true;
      }
    }
  }
  return actions;
}

}  // namespace

ExploreResult bounded_explore(const ExploreConfig& config) {
  Model model(config);
  ExploreResult result;

  struct Frame {
    std::vector<std::pair<Action, State>> next;
    std::size_t index = 0;
  };

  VisitedSet visited;
  std::uint8_t decidable = 0;
  std::vector<Frame> stack;
  std::vector<Action> path;

  const State root;
  visited.insert(pack(root));
  result.states = 1;
  stack.emplace_back();
  model.successors(root, stack.back().next);

  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.index == top.next.size()) {
      stack.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    auto [action, state] = top.next[top.index++];
    ++result.transitions;
    if (!visited.insert(pack(state))) continue;
    ++result.states;
    path.push_back(action);
    decidable |= state.decided | model.decidable_now(state);
    if (auto broken = model.violation(state)) {
      result.violation = true;
      result.invariant = *broken;
      result.raw_counterexample_length = path.size();
      for (const auto& a : minimize(model, path)) result.counterexample.push_back(model.describe(a));
      break;
    }
    if (result.states >= config.max_states) {
      result.complete = false;
      const auto& root_frame = stack.front();
      result.explored_fraction = root_frame.next.empty()
                                     ? 1.0
                                     : static_cast<double>(root_frame.index - 1) /
                                           static_cast<double>(root_frame.next.size());
      break;
    }
    stack.emplace_back();
    model.successors(state, stack.back().next);
  }

  for (int x = 1; x <= static_cast<int>(config.values); ++x) {
    if ((decidable >> x) & 1u) result.decidable_values.push_back(Value{static_cast<std::uint64_t>(x)});
  }
  return result;
}

std::optional<std::string> replay_counterexample(const ExploreConfig& config,
                                                 const std::vector<std::string>& actions) {
  Model model(config);
  std::vector<Action> parsed;
  for (const auto& text : actions) {
    auto a = model.parse(text);
    if (!a) return std::nullopt;
    parsed.push_back(*a);
  }
  return replay(model, parsed);
}

}  // namespace tetrabft
