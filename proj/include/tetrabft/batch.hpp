// Runs a directory of scenario files and summarizes them as CSV.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tetrabft/checker.hpp"
#include "tetrabft/trace.hpp"

namespace tetrabft {

struct BatchRow {
  std::string scenario;  // file stem
  /// Single-shot: honest nodes that decided. Multi-shot: slots finalized by every honest node.
  std::size_t decided = 0;
  /// first-proposal to first-decide (or first-finalize) in ticks.
  std::optional<Tick> latency;
  std::vector<std::string> violations;
  /// Set when the scenario could not be loaded or run.
  std::string error;
};

/// Summary numbers of one trace.
BatchRow summarize(const std::string& name, const Trace& trace, const std::vector<Verdict>& verdicts);

/// Runs every *.cfg in `dir` (sorted by name) on up to `threads` workers,
/// writes `<stem>.trace` and `summary.csv` into `out_dir`, and returns the rows
/// in file order. Throws std::runtime_error when `dir` is unreadable.
std::vector<BatchRow> run_batch(const std::string& dir, const std::string& out_dir, unsigned threads = 0);

std::string csv_header();
std::string csv_row(const BatchRow& row);

}  // namespace tetrabft
