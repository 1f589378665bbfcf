#include <doctest.h>

#include "pipeline_checks.hpp"
#include "tetrabft/simnet.hpp"

using namespace tetrabft;

TEST_CASE("good-case pipeline matches its golden trace") {
  const Trace t = run(load_scenario(pipeline::scenario_path("pipeline_good_case")));
  CHECK(pipeline::trace_text(t) == pipeline::read_file(pipeline::golden_path("pipeline_good_case")));
  for (const auto& p : pipeline::check_good_case(t, 10)) FAIL_CHECK(p);
}

TEST_CASE("slot-1 failure matches its golden trace") {
  const Trace t = run(load_scenario(pipeline::scenario_path("pipeline_slot_failure")));
  CHECK(pipeline::trace_text(t) == pipeline::read_file(pipeline::golden_path("pipeline_slot_failure")));
  const auto r = pipeline::check_slot_failure(t);
  for (const auto& p : r.problems) FAIL_CHECK(p);
  CHECK(r.switch_at == 37);
  CHECK(r.renotarized_at == 40);
}

TEST_CASE("the pipeline checks notice a broken run") {
  Trace t = run(load_scenario(pipeline::scenario_path("pipeline_slot_failure")));
  std::erase_if(t.events, [](const TraceEvent& e) { return e.kind == EventKind::notarize && e.view == 1; });
  CHECK_FALSE(pipeline::check_slot_failure(t).problems.empty());

  Trace g = run(load_scenario(pipeline::scenario_path("pipeline_good_case")));
  for (auto& e : g.events) {
    if (e.kind == EventKind::finalize && e.slot == 2) ++e.t;
  }
  CHECK_FALSE(pipeline::check_good_case(g, 10).empty());
}
