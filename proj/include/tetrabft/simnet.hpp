// Deterministic discrete-event simulation of a partially synchronous network.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "tetrabft/adversary.hpp"
#include "tetrabft/scenario.hpp"
#include "tetrabft/trace.hpp"

namespace tetrabft {

struct RunStats {
  std::uint64_t events = 0;
  Tick end_time = 0;
  bool hit_horizon = false;
  bool hit_event_cap = false;
};

struct RunResult {
  Trace trace;
  RunStats stats;
};

/// Runs the scenario to quiescence, the horizon or the event cap. A pure
/// function of the scenario. Throws ConfigError for an invalid scenario and
/// ForgeryError if an adversary tries to impersonate another node.
RunResult simulate(const Scenario& scenario);
/// Builds each Byzantine node with `factory` instead of the configured strategy.
using AdversaryFactory = std::function<std::unique_ptr<Adversary>(const AdversaryContext&)>;
RunResult simulate(const Scenario& scenario, const AdversaryFactory& factory);
Trace run(const Scenario& scenario);

TraceHeader header_for(const Scenario& scenario);

/// Named trace instants: first-proposal, first-decide, last-decide, first-vc,
/// first-notarize, first-finalize. Only honest nodes count.
std::optional<Tick> event_time(const Trace& trace, const std::string& name);
bool is_event_name(const std::string& name);

struct Latency {
  Tick ticks = 0;
  /// Message delays; set only under the constant delay model when the tick
  /// difference is a whole number of delays.
  std::optional<std::int64_t> delays;
};

/// Throws std::invalid_argument for unknown names and std::runtime_error when
/// an event does not occur in the trace.
Latency measure_latency(const Trace& trace, const std::string& from, const std::string& to);

}  // namespace tetrabft
