#include <doctest.h>

#include <sstream>

#include "tetrabft/scenario.hpp"
#include "tetrabft/simnet.hpp"
#include "tetrabft/trace.hpp"

using namespace tetrabft;

TEST_CASE("scenario keys, sections and defaults") {
  const Scenario s = parse_scenario_text(
      "# comment\n"
      "n = 7\nf = 2\ndelta = 5\ndelay = 2\ngst = 40\n"
      "byzantine = 3\ninputs = 4\nseed = 9\nvc_window = 3\n"
      "[adversary]\nstrategy = equivocate_votes\nsplit = random\n"
      "[drop_rules]\nrule = kind=VC view=2 from=1,2 delay=3\n");
  CHECK(s.n == 7);
  CHECK(s.f == 2);
  CHECK(s.delta_bound == 5);
  CHECK(s.delay == 2);
  CHECK(s.gst == 40);
  CHECK(s.byzantine == std::vector<NodeId>{3});
  CHECK(s.inputs == std::vector<Value>(7, Value{4}));
  CHECK(s.seed == 9);
  CHECK(s.vc_window == 3);
  CHECK(s.adversary.strategy == "equivocate_votes");
  CHECK(s.adversary.text("split", "half") == "random");
  REQUIRE(s.drop_rules.size() == 1);
  const DropRule& r = s.drop_rules[0];
  CHECK(r.kind == "VC");
  CHECK(r.view == View{2});
  CHECK(r.from == std::set<NodeId>{1, 2});
  CHECK(r.delay == Tick{3});
  CHECK(r.matches(ViewChange{0, 2}, 1, 0));
  CHECK_FALSE(r.matches(ViewChange{0, 3}, 1, 0));
  CHECK_FALSE(r.matches(ViewChange{0, 2}, 3, 0));

  const Scenario d = parse_scenario_text("");
  CHECK(d.n == 4);
  CHECK(d.mode == Mode::single_shot);
  CHECK(d.inputs.size() == 4);
}

TEST_CASE("malformed scenarios are rejected") {
  const char* bad[] = {
      "n = 3\nf = 1\n",
      "bogus = 1\n",
      "n = four\n",
      "n = 4\nn = 4\n",
      "delay = 9\ndelta = 4\n",
      "byzantine = 1,2\n",
      "byzantine = 7\n",
      "inputs = 1,2\n",
      "[nowhere]\n",
      "[adversary]\nstrategy = teleport\n",
      "[adversary]\nstrategy = silent\nrate = 3\n",
      "[drop_rules]\nrule = colour=red\n",
      "mode = multi\nslots = 0\n",
      "mode = multi\nbyzantine = 1\n[adversary]\nstrategy = vc_spammer\n",
      "mutation = flip\n",
      "expect_termination = maybe\n",
      "just words\n",
  };
  for (const std::string text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_scenario_text(text), ConfigError);
  }
}

TEST_CASE("mutation names round-trip") {
  for (RuleMutation m : {RuleMutation::none, RuleMutation::drop_two_blocking_sets,
                         RuleMutation::drop_blocking_claim}) {
    CHECK(parse_mutation(to_string(m)) == m);
  }
}

TEST_CASE("trace text format round-trips") {
  Scenario s = parse_scenario_text("n = 4\nf = 1\nbyzantine = 2\ngst = 20\nseed = 5\n"
                                   "[adversary]\nstrategy = lying_history\n");
  const Trace trace = run(s);
  REQUIRE(trace.events.size() > 50);
  std::stringstream buf;
  write_trace(buf, trace);
  const Trace back = read_trace(buf);
  CHECK(back.header == trace.header);
  REQUIRE(back.events.size() == trace.events.size());
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    CAPTURE(format_event(trace.events[i]));
    CHECK(back.events[i] == trace.events[i]);
  }
}

TEST_CASE("malformed trace lines are rejected") {
  std::stringstream missing_header("t=0 DECIDE node=0 value=1\n");
  CHECK_THROWS_AS(read_trace(missing_header), ParseError);
  CHECK_THROWS_AS(parse_event("t=x DECIDE node=0"), ParseError);
  CHECK_THROWS_AS(parse_event("t=1 LEAP node=0"), std::exception);
}
