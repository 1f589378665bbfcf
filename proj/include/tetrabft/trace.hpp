// Simulation traces: one event per line, `t=<tick> <EVENT> key=value ...`,
// preceded by a CONFIG line describing the run.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tetrabft/types.hpp"

namespace tetrabft {

enum class EventKind {
  send,
  deliver,
  drop,
  timer_set,
  timer_fire,
  timer_cancel,
  decide,
  notarize,
  finalize,
  adversary,
  storage,
  note,
  end,
};

std::string to_string(EventKind kind);
EventKind event_kind_from(std::string_view name);

struct TraceEvent {
  Tick t = 0;
  EventKind kind = EventKind::note;
  NodeId node = 0;
  /// Destination of a SEND, origin of a DELIVER / DROP.
  std::optional<NodeId> peer;
  /// Per-copy message id linking SEND to DELIVER / DROP.
  std::uint64_t id = 0;
  std::optional<Message> msg;
  Slot slot = 0;
  View view = 0;
  Value value;
  Tick deadline = 0;
  // STORAGE samples.
  std::size_t persistent = 0;
  std::size_t volatile_size = 0;
  std::size_t volatile_bound = 0;
  std::size_t active_slots = 0;
  /// Free text of NOTE and ADVERSARY events.
  std::string text;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceHeader {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::vector<NodeId> byzantine;
  std::vector<Value> inputs;
  Tick delta_bound = 1;
  Tick delay = 1;
  bool constant_delay = true;
  Tick gst = 0;
  bool multi_shot = false;
  Slot slots = 0;
  bool expect_termination = false;
  std::uint64_t seed = 0;

  [[nodiscard]] bool is_honest(NodeId id) const;
  [[nodiscard]] std::vector<NodeId> honest() const;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceEvent> events;
};

std::string format_header(const TraceHeader& h);
std::string format_event(const TraceEvent& e);
TraceHeader parse_header(std::string_view line);
TraceEvent parse_event(std::string_view line);

void write_trace(std::ostream& out, const Trace& trace);
/// Throws ParseError on malformed content.
Trace read_trace(std::istream& in);
void save_trace(const std::string& path, const Trace& trace);
Trace load_trace(const std::string& path);

}  // namespace tetrabft
