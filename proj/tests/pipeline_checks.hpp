// Structural checks of the two multi-shot example runs, shared by the golden
// tests and the acceptance binary. Each returns the list of broken expectations.
#pragma once

#include <string>
#include <vector>

#include "tetrabft/trace.hpp"

namespace tetrabft::pipeline {

/// Path of a shipped scenario or golden trace under the source tree.
std::string scenario_path(const std::string& name);
std::string golden_path(const std::string& name);

/// Text of a trace exactly as written to disk.
std::string trace_text(const Trace& trace);
std::string read_file(const std::string& path);

/// Good case: one notarization per delay; slot s finalizes when s + 3 is notarized.
std::vector<std::string> check_good_case(const Trace& trace, Slot slots);

/// Slot-1 failure: view change of slot 1, proofs and suggest at the switch,
/// a new slot-1 block notarized within 5 delta, slot 4 back at view 0.
struct SlotFailure {
  std::vector<std::string> problems;
  Tick switch_at = 0;
  Tick renotarized_at = 0;
};
SlotFailure check_slot_failure(const Trace& trace);

}  // namespace tetrabft::pipeline
