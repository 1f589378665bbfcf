// Offline property checks over traces. Every check is a pure function of the
// trace; a failing verdict carries a small witness subsequence.
#pragma once

#include <string>
#include <vector>

#include "tetrabft/trace.hpp"

namespace tetrabft {

struct Verdict {
  std::string property;
  bool pass = true;
  /// False when the property's precondition does not hold (vacuous pass).
  bool applicable = true;
  std::string detail;
  /// Witness events; replaying them under the same header fails again.
  std::vector<TraceEvent> counterexample;
};

Verdict check_agreement(const Trace& trace);
Verdict check_validity(const Trace& trace);
/// Vacuous unless the header expects termination and the run outlasts GST.
Verdict check_termination(const Trace& trace);
/// Finalized chains never diverge and each node extends its own chain by one slot.
Verdict check_consistency(const Trace& trace);
Verdict check_storage_bound(const Trace& trace);
/// No honest vote-1 for another value in a later view once a value is decided
/// (per slot for multi-shot, with finalization standing in for decision).
Verdict check_cross_view(const Trace& trace);
/// Honest vote-2..4 of one view carry one value; multi-shot: honest
/// notarizations of one (slot, view) agree.
Verdict check_within_view(const Trace& trace);
Verdict check_one_vote(const Trace& trace);
Verdict check_post_gst_delivery(const Trace& trace);
Verdict check_authentication(const Trace& trace);
Verdict check_quorum_causality(const Trace& trace);

const std::vector<std::string>& all_properties();
/// Throws std::invalid_argument for unknown names.
Verdict check_property(const Trace& trace, const std::string& name);
std::vector<Verdict> check_all(const Trace& trace);
std::vector<Verdict> check_all(const Trace& trace, const std::vector<std::string>& properties);

/// `PASS|FAIL <property> [counterexample=<file>]`.
std::string format_verdict(const Verdict& v, const std::string& counterexample_path = {});
/// The counterexample as a standalone trace (same header).
Trace counterexample_trace(const Trace& trace, const Verdict& v);

}  // namespace tetrabft
