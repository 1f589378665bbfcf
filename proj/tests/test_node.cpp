#include <doctest.h>

#include <algorithm>

#include "tetrabft/node.hpp"

using namespace tetrabft;

namespace {

const Value A{1};
const Value B{2};
constexpr Tick kDelta = 4;

Node make(NodeId id, Value init = A) {
  NodeConfig c;
  c.id = id;
  c.committee = Committee(4, 1);
  c.delta_bound = kDelta;
  c.initial_value = init;
  return Node(c);
}

bool sends(const Effects& fx, const Message& m, std::optional<NodeId> to = std::nullopt) {
  return std::find(fx.outbound.begin(), fx.outbound.end(), Outbound{to, m}) != fx.outbound.end();
}

Proof empty_proof(View v) { return Proof{0, v, std::nullopt, std::nullopt, std::nullopt}; }
Suggest empty_suggest(View v) { return Suggest{0, v, std::nullopt, std::nullopt, std::nullopt}; }

/// Moves `node` to view v with three view-change messages.
Effects enter(Node& node, View v) {
  Effects fx;
  for (NodeId from : {0u, 1u, 3u}) fx.append(node.deliver(ViewChange{0, v}, from));
  return fx;
}

}  // namespace

TEST_CASE("view 0 start") {
  SUBCASE("leader proposes its initial value") {
    Node n = make(0, B);
    const Effects fx = n.start();
    CHECK(fx.outbound == std::vector<Outbound>{{std::nullopt, Proposal{0, 0, B, {}, 0}}});
    CHECK(fx.set_timer == 9 * kDelta);
  }
  SUBCASE("others only arm the timer") {
    Node n = make(2);
    const Effects fx = n.start();
    CHECK(fx.outbound.empty());
    CHECK(fx.set_timer == 9 * kDelta);
  }
}

TEST_CASE("entering a later view reports the history") {
  Node n = make(2);
  n.start();
  enter(n, 1);
  REQUIRE(n.current_view() == 1);
  for (NodeId from : {0u, 1u, 3u}) n.deliver(empty_proof(1), from);
  Effects fx = n.deliver(Proposal{0, 1, A, {}, 0}, 1);
  CHECK(sends(fx, Vote{1, 1, A}));
  for (NodeId from : {0u, 1u, 3u}) fx = n.deliver(Vote{1, 1, A}, from);
  CHECK(sends(fx, Vote{2, 1, A}));

  fx = enter(n, 2);
  CHECK(n.current_view() == 2);
  CHECK(sends(fx, Proof{0, 2, VoteRecord{1, A}, std::nullopt, std::nullopt}));
  CHECK(sends(fx, Suggest{0, 2, VoteRecord{1, A}, std::nullopt, std::nullopt}, NodeId{2}));
  CHECK(fx.set_timer == 9 * kDelta);
}

TEST_CASE("leader collects suggests") {
  Node n = make(1, B);
  n.start();
  enter(n, 1);
  Effects fx = n.deliver(empty_suggest(1), 0);
  CHECK(fx.outbound.empty());
  fx = n.deliver(empty_suggest(1), 2);
  CHECK(fx.outbound.empty());
  fx = n.deliver(empty_suggest(1), 2);
  CHECK(fx.outbound.empty());
  fx = n.deliver(empty_suggest(1), 3);
  CHECK(fx.outbound == std::vector<Outbound>{{std::nullopt, Proposal{0, 1, B, {}, 0}}});
  fx = n.deliver(empty_suggest(1), 1);
  CHECK(fx.outbound.empty());
}

TEST_CASE("suggest to a non-leader is ignored") {
  Node n = make(2);
  n.start();
  enter(n, 1);
  const Effects fx = n.deliver(empty_suggest(1), 0);
  CHECK(fx.outbound.empty());
  CHECK(fx.notes.size() == 1);
}

TEST_CASE("proposal handling") {
  SUBCASE("view 0 is always safe") {
    Node n = make(1);
    n.start();
    CHECK(sends(n.deliver(Proposal{0, 0, A, {}, 0}, 0), Vote{1, 0, A}));
  }
  SUBCASE("proposal from a non-leader is ignored") {
    Node n = make(1);
    n.start();
    CHECK(n.deliver(Proposal{0, 0, A, {}, 0}, 2).outbound.empty());
  }
  SUBCASE("second differing proposal is ignored") {
    Node n = make(1);
    n.start();
    n.deliver(Proposal{0, 0, A, {}, 0}, 0);
    const Effects fx = n.deliver(Proposal{0, 0, B, {}, 0}, 0);
    CHECK(fx.outbound.empty());
    CHECK(fx.notes.size() == 1);
  }
}

TEST_CASE("vote-1 waits for a proof quorum, whatever the arrival order") {
  const Message proposal = Proposal{0, 1, A, {}, 0};
  std::vector<std::pair<Message, NodeId>> events = {
      {proposal, 1}, {empty_proof(1), 0}, {empty_proof(1), 1}, {empty_proof(1), 3}};
  std::vector<std::size_t> order = {0, 1, 2, 3};
  int orders = 0;
  do {
    Node n = make(2);
    n.start();
    enter(n, 1);
    std::vector<Outbound> votes;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& [msg, from] = events[order[i]];
      const Effects fx = n.deliver(msg, from);
      for (const auto& o : fx.outbound) {
        if (std::holds_alternative<Vote>(o.msg)) {
          CHECK(i == events.size() - 1);
          votes.push_back(o);
        }
      }
    }
    CHECK(votes == std::vector<Outbound>{{std::nullopt, Vote{1, 1, A}}});
    ++orders;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(orders == 24);
}

TEST_CASE("vote quorums cascade to a decision") {
  Node n = make(3);
  n.start();
  Effects fx;
  fx = n.deliver(Vote{1, 0, A}, 0);
  fx = n.deliver(Vote{1, 0, A}, 1);
  CHECK(fx.outbound.empty());
  fx = n.deliver(Vote{1, 0, A}, 2);
  CHECK(sends(fx, Vote{2, 0, A}));
  for (NodeId from : {0u, 1u, 2u}) n.deliver(Vote{3, 0, A}, from);
  CHECK(n.history().highest(4) == VoteRecord{0, A});
  n.deliver(Vote{4, 0, A}, 0);
  n.deliver(Vote{4, 0, A}, 1);
  fx = n.deliver(Vote{4, 0, A}, 2);
  CHECK(fx.decided == A);
  CHECK(n.decided() == A);
  CHECK_FALSE(n.deliver(Vote{4, 0, A}, 3).decided);
}

TEST_CASE("split votes do not reach a quorum") {
  Node n = make(3);
  n.start();
  n.deliver(Vote{1, 0, A}, 0);
  n.deliver(Vote{1, 0, A}, 1);
  const Effects fx = n.deliver(Vote{1, 0, B}, 2);
  CHECK(fx.outbound.empty());
  // A sender counts once per phase.
  CHECK(n.deliver(Vote{1, 0, A}, 1).outbound.empty());
  CHECK(n.deliver(Vote{1, 0, A}, 2).outbound.empty());
}

TEST_CASE("timer fires a view change for the next view") {
  SUBCASE("view 0") {
    Node n = make(1);
    n.start();
    CHECK(n.on_timer().outbound == std::vector<Outbound>{{std::nullopt, ViewChange{0, 1}}});
    CHECK(n.on_timer().outbound.empty());
  }
  SUBCASE("decided nodes stay quiet") {
    Node n = make(1);
    n.start();
    for (int phase = 1; phase <= 4; ++phase) {
      for (NodeId from : {0u, 2u, 3u}) n.deliver(Vote{phase, 0, A}, from);
    }
    REQUIRE(n.decided());
    CHECK(n.on_timer().outbound.empty());
  }
  SUBCASE("view 3") {
    Node n = make(1);
    n.start();
    enter(n, 3);
    CHECK(n.on_timer().outbound == std::vector<Outbound>{{std::nullopt, ViewChange{0, 4}}});
  }
}

TEST_CASE("view-change echo and switch") {
  Node n = make(2);
  n.start();
  CHECK(n.deliver(ViewChange{0, 1}, 0).outbound.empty());
  Effects fx = n.deliver(ViewChange{0, 1}, 1);
  CHECK(fx.outbound == std::vector<Outbound>{{std::nullopt, ViewChange{0, 1}}});
  CHECK(n.highest_vc_sent() == 1);
  fx = n.deliver(ViewChange{0, 1}, 3);
  CHECK(n.current_view() == 1);
  CHECK(sends(fx, empty_proof(1)));
  CHECK(sends(fx, empty_suggest(1), NodeId{1}));
  CHECK(fx.set_timer == 9 * kDelta);

  enter(n, 2);
  REQUIRE(n.current_view() == 2);
  for (NodeId from : {0u, 1u, 3u}) n.deliver(ViewChange{0, 1}, from);
  CHECK(n.current_view() == 2);
}

TEST_CASE("messages for a view not yet entered are replayed on entry") {
  Node n = make(2);
  n.start();
  for (NodeId from : {0u, 1u, 3u}) n.deliver(empty_proof(1), from);
  n.deliver(Proposal{0, 1, A, {}, 0}, 1);
  const Effects fx = enter(n, 1);
  CHECK(sends(fx, Vote{1, 1, A}));
}

TEST_CASE("storage stays bounded under view-change floods") {
  Node n = make(2);
  n.start();
  const std::size_t persistent = n.persistent_size();
  for (View v = 1; v < 200; ++v) {
    n.deliver(ViewChange{0, v}, 0);
    for (int phase = 1; phase <= 4; ++phase) n.deliver(Vote{phase, v, A}, 0);
    n.deliver(empty_proof(v), 3);
    CHECK(n.volatile_size() <= n.volatile_bound());
    CHECK(n.persistent_size() == persistent);
  }
  for (View v = 1; v < 60; ++v) enter(n, v);
  CHECK(n.volatile_size() <= n.volatile_bound());
  CHECK(n.persistent_size() == persistent);
}
