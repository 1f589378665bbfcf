#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "tetrabft/types.hpp"

using namespace tetrabft;

namespace {

const Value A{1};
const Value B{2};
const Value C{3};

}  // namespace

TEST_CASE("quorum and blocking thresholds") {
  CHECK(is_quorum(3, 4, 1));
  CHECK_FALSE(is_quorum(2, 4, 1));
  CHECK(is_quorum(7, 10, 3));
  CHECK(is_blocking(2, 4, 1));
  CHECK_FALSE(is_blocking(1, 4, 1));
  CHECK(is_blocking(4, 10, 3));
}

TEST_CASE("thresholds match set cardinality for every small committee") {
  for (std::uint32_t n = 1; n <= 12; ++n) {
    for (std::uint32_t f = 0; 3 * f < n; ++f) {
      const Committee c(n, f);
      for (std::uint32_t count = 0; count <= n; ++count) {
        // A quorum is any set that leaves at most f nodes out.
        CHECK(is_quorum(count, n, f) == (n - count <= f));
        CHECK(c.is_quorum(count) == is_quorum(count, n, f));
        // A blocking set cannot consist of faulty nodes alone.
        CHECK(is_blocking(count, n, f) == (count > f));
        CHECK(c.is_blocking(count) == is_blocking(count, n, f));
      }
    }
  }
}

TEST_CASE("committee rejects n <= 3f") {
  CHECK_THROWS_AS(Committee(3, 1), std::invalid_argument);
  CHECK_THROWS_AS(Committee(6, 2), std::invalid_argument);
  CHECK_NOTHROW(Committee(4, 1));
  CHECK_NOTHROW(Committee(1, 0));
}

TEST_CASE("record_vote keeps the highest vote and the previous differing one") {
  VoteHistory h;
  h = record_vote(h, 1, 2, A);
  CHECK(h.highest(1) == VoteRecord{2, A});
  CHECK_FALSE(h.prev(1));

  SUBCASE("new value moves the old highest to prev") {
    h = record_vote(h, 1, 5, B);
    CHECK(h.highest(1) == VoteRecord{5, B});
    CHECK(h.prev(1) == VoteRecord{2, A});
  }
  SUBCASE("same value leaves prev alone") {
    h = record_vote(h, 1, 5, A);
    CHECK(h.highest(1) == VoteRecord{5, A});
    CHECK_FALSE(h.prev(1));
  }
  SUBCASE("phases 3 and 4 keep no prev") {
    h = record_vote(h, 3, 1, A);
    h = record_vote(h, 3, 2, B);
    CHECK(h.highest(3) == VoteRecord{2, B});
    CHECK_FALSE(h.prev(3));
  }
}

TEST_CASE("record_vote rejects protocol violations") {
  VoteHistory h = record_vote({}, 2, 4, A);
  CHECK_THROWS_AS(h.record(2, 3, A), ProtocolViolation);
  CHECK_THROWS_AS(h.record(2, 4, B), ProtocolViolation);
  CHECK_THROWS_AS(h.record(0, 4, B), std::out_of_range);
  CHECK_NOTHROW(h.record(2, 4, A));
}

TEST_CASE("vote history matches the full-log reference") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    VoteHistory h;
    oracle::LogHistory log;
    std::array<View, 4> view{};
    std::array<std::optional<Value>, 4> at_view{};
    const int steps = static_cast<int>(rng() % 30);
    for (int i = 0; i < steps; ++i) {
      const int phase = static_cast<int>(rng() % 4) + 1;
      auto& cur = view[phase - 1];
      auto& cur_val = at_view[phase - 1];
      const View step = static_cast<View>(rng() % 3);
      if (step > 0) cur_val.reset();
      cur += step;
      const Value val = cur_val ? *cur_val : Value{rng() % 3 + 1};
      cur_val = val;
      h.record(phase, cur, val);
      log.record(phase, cur, val);
    }
    for (int phase = 1; phase <= 4; ++phase) {
      CHECK(h.highest(phase) == log.highest(phase));
      if (phase <= 2) {
        CHECK(h.prev(phase) == log.prev(phase));
      } else {
        CHECK_FALSE(h.prev(phase));
      }
    }
    CHECK(h.well_formed());
  }
}

TEST_CASE("vote history serialization has constant size") {
  VoteHistory h;
  const auto empty = h.serialize();
  for (View v = 0; v < 1000; ++v) h.record(1 + static_cast<int>(v % 4), v, Value{v % 3 + 1});
  CHECK(h.serialize().size() == empty.size());
  CHECK(empty.size() == VoteHistory::kSerializedSize);
}

TEST_CASE("message encoding round-trips") {
  const std::vector<Message> msgs = {
      Proposal{0, 3, A, {}, 0},
      Proposal{4, 1, Value{99}, Value{12}, 77},
      Vote{2, 3, A},
      SlotVote{7, 2, B},
      Suggest{0, 2, VoteRecord{1, A}, VoteRecord{0, B}, VoteRecord{1, A}},
      Suggest{3, 1, std::nullopt, std::nullopt, std::nullopt},
      Proof{0, 5, VoteRecord{4, C}, VoteRecord{2, A}, std::nullopt},
      ViewChange{0, 4},
      ViewChange{2, 1},
  };
  for (const auto& m : msgs) {
    CHECK(decode_message(encode(m)) == m);
  }
  CHECK(encode(Vote{2, 3, A}) == "VOTE2(v=3,val=1)");
  CHECK(encode(ViewChange{0, 4}) == "VC(v=4)");
  CHECK(encode(ViewChange{2, 1}) == "VC(slot=2,v=1)");
  CHECK(kind_of(Vote{4, 0, A}) == "VOTE4");
  CHECK(kind_of(SlotVote{1, 0, A}) == "VOTE");
  CHECK_THROWS_AS(decode_message("VOTE5(v=1,val=1)"), ParseError);
  CHECK_THROWS_AS(decode_message("HELLO"), ParseError);
}

TEST_CASE("suggest and proof well-formedness") {
  CHECK(well_formed(Suggest{0, 2, VoteRecord{1, A}, VoteRecord{0, B}, std::nullopt}));
  CHECK_FALSE(well_formed(Suggest{0, 2, VoteRecord{1, A}, VoteRecord{1, B}, std::nullopt}));
  CHECK_FALSE(well_formed(Suggest{0, 2, VoteRecord{1, A}, VoteRecord{0, A}, std::nullopt}));
  CHECK_FALSE(well_formed(Suggest{0, 2, std::nullopt, VoteRecord{0, A}, std::nullopt}));
  CHECK_FALSE(well_formed(Proof{0, 2, VoteRecord{2, A}, std::nullopt, std::nullopt}));
  CHECK_FALSE(well_formed(Proof{0, 2, std::nullopt, std::nullopt, VoteRecord{3, A}}));
  CHECK(well_formed(make_proof(record_vote(record_vote({}, 1, 0, A), 1, 1, B), 0, 2)));
}

TEST_CASE("block values commit to slot, parent and payload") {
  const Value b1 = block_value(1, kGenesis, 5);
  CHECK(b1 == block_value(1, kGenesis, 5));
  CHECK(b1 != block_value(2, kGenesis, 5));
  CHECK(b1 != block_value(1, Value{3}, 5));
  CHECK(b1 != block_value(1, kGenesis, 6));
  CHECK(b1 != kGenesis);
}
