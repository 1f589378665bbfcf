#include "tetrabft/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

namespace tetrabft {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 13> kKindNames{{
    {EventKind::send, "SEND"},
    {EventKind::deliver, "DELIVER"},
    {EventKind::drop, "DROP"},
    {EventKind::timer_set, "TIMER_SET"},
    {EventKind::timer_fire, "TIMER_FIRE"},
    {EventKind::timer_cancel, "TIMER_CANCEL"},
    {EventKind::decide, "DECIDE"},
    {EventKind::notarize, "NOTARIZE"},
    {EventKind::finalize, "FINALIZE"},
    {EventKind::adversary, "ADVERSARY"},
    {EventKind::storage, "STORAGE"},
    {EventKind::note, "NOTE"},
    {EventKind::end, "END"},
}};

template <typename Int>
Int to_int(std::string_view text, std::string_view key) {
  Int out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("bad integer for '" + std::string(key) + "': '" + std::string(text) + "'");
  }
  return out;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& items, Fn&& fn) {
  if (items.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fn(items[i]);
  }
  return out;
}

template <typename T, typename Fn>
std::vector<T> split_list(std::string_view text, Fn&& fn) {
  std::vector<T> out;
  if (text == "-" || text.empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(fn(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Splits `t=<tick> NAME k=v k=v ...`; a `text=` field swallows the rest of the line.
struct Fields {
  Tick t = 0;
  std::string name;
  std::map<std::string, std::string, std::less<>> kv;

  [[nodiscard]] bool has(std::string_view key) const { return kv.count(key) != 0; }
  [[nodiscard]] const std::string& get(std::string_view key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing field '" + std::string(key) + "'");
    return it->second;
  }
  template <typename Int>
  Int num(std::string_view key) const {
    return to_int<Int>(get(key), key);
  }
};

Fields split_line(std::string_view line) {
  Fields out;
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    const auto start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    return line.substr(start, pos - start);
  };
  const auto first = next_token();
  if (first.substr(0, 2) != "t=") throw ParseError("event line must start with t=");
  out.t = to_int<Tick>(first.substr(2), "t");
  out.name = std::string(next_token());
  if (out.name.empty()) throw ParseError("missing event name");
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    if (line.substr(pos, 5) == "text=") {
      out.kv.emplace("text", std::string(line.substr(pos + 5)));
      break;
    }
    const auto token = next_token();
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value: '" + std::string(token) + "'");
    if (!out.kv.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1))).second) {
      throw ParseError("duplicate field '" + std::string(token.substr(0, eq)) + "'");
    }
  }
  return out;
}

}  // namespace

std::string to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return std::string(name);
  }
  return "?";
}

EventKind event_kind_from(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ParseError("unknown event '" + std::string(name) + "'");
}

bool TraceHeader::is_honest(NodeId id) const {
  return std::find(byzantine.begin(), byzantine.end(), id) == byzantine.end();
}

std::vector<NodeId> TraceHeader::honest() const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < n; ++i) {
    if (is_honest(i)) out.push_back(i);
  }
  return out;
}

std::string format_header(const TraceHeader& h) {
  std::ostringstream out;
  out << "t=0 CONFIG n=" << h.n << " f=" << h.f
      << " byzantine=" << join(h.byzantine, [](NodeId id) { return std::to_string(id); })
      << " inputs=" << join(h.inputs, [](Value v) { return encode(v); })
      << " delta=" << h.delta_bound << " delay=" << h.delay
      << " delay_model=" << (h.constant_delay ? "constant" : "uniform") << " gst=" << h.gst
      << " mode=" << (h.multi_shot ? "multi" : "single") << " slots=" << h.slots
      << " expect_termination=" << (h.expect_termination ? 1 : 0) << " seed=" << h.seed;
  return out.str();
}

TraceHeader parse_header(std::string_view line) {
  const auto f = split_line(line);
  if (f.name != "CONFIG") throw ParseError("trace must begin with a CONFIG line");
  TraceHeader h;
  h.n = f.num<std::uint32_t>("n");
  h.f = f.num<std::uint32_t>("f");
  h.byzantine = split_list<NodeId>(f.get("byzantine"), [](std::string_view s) {
    return to_int<NodeId>(s, "byzantine");
  });
  h.inputs = split_list<Value>(f.get("inputs"), [](std::string_view s) {
    return Value{to_int<std::uint64_t>(s, "inputs")};
  });
  h.delta_bound = f.num<Tick>("delta");
  h.delay = f.num<Tick>("delay");
  const auto& model = f.get("delay_model");
  if (model != "constant" && model != "uniform") throw ParseError("bad delay_model");
  h.constant_delay = model == "constant";
  h.gst = f.num<Tick>("gst");
  const auto& mode = f.get("mode");
  if (mode != "single" && mode != "multi") throw ParseError("bad mode");
  h.multi_shot = mode == "multi";
  h.slots = f.num<Slot>("slots");
  h.expect_termination = f.num<int>("expect_termination") != 0;
  h.seed = f.num<std::uint64_t>("seed");
  return h;
}

std::string format_event(const TraceEvent& e) {
  std::ostringstream out;
  out << "t=" << e.t << ' ' << to_string(e.kind);
  if (e.kind == EventKind::end) return out.str();
  out << " node=" << e.node;
  switch (e.kind) {
    case EventKind::send:
      out << " to=" << e.peer.value_or(0) << " id=" << e.id << " msg=" << encode(*e.msg);
      break;
    case EventKind::deliver:
    case EventKind::drop:
      out << " from=" << e.peer.value_or(0) << " id=" << e.id << " msg=" << encode(*e.msg);
      break;
    case EventKind::timer_set:
      out << " slot=" << e.slot << " deadline=" << e.deadline;
      break;
    case EventKind::timer_fire:
    case EventKind::timer_cancel:
      out << " slot=" << e.slot;
      break;
    case EventKind::decide:
      out << " view=" << e.view << " val=" << encode(e.value);
      break;
    case EventKind::notarize:
    case EventKind::finalize:
      out << " slot=" << e.slot << " view=" << e.view << " val=" << encode(e.value);
      break;
    case EventKind::storage:
      out << " view=" << e.view << " persistent=" << e.persistent << " volatile=" << e.volatile_size
          << " bound=" << e.volatile_bound << " slots=" << e.active_slots;
      break;
    case EventKind::adversary:
    case EventKind::note:
      out << " text=" << e.text;
      break;
    case EventKind::end:
      break;
  }
  return out.str();
}

TraceEvent parse_event(std::string_view line) {
  const auto f = split_line(line);
  TraceEvent e;
  e.t = f.t;
  e.kind = event_kind_from(f.name);
  if (e.kind == EventKind::end) return e;
  e.node = f.num<NodeId>("node");
  switch (e.kind) {
    case EventKind::send:
      e.peer = f.num<NodeId>("to");
      e.id = f.num<std::uint64_t>("id");
      e.msg = decode_message(f.get("msg"));
      break;
    case EventKind::deliver:
    case EventKind::drop:
      e.peer = f.num<NodeId>("from");
      e.id = f.num<std::uint64_t>("id");
      e.msg = decode_message(f.get("msg"));
      break;
    case EventKind::timer_set:
      e.slot = f.num<Slot>("slot");
      e.deadline = f.num<Tick>("deadline");
      break;
    case EventKind::timer_fire:
    case EventKind::timer_cancel:
      e.slot = f.num<Slot>("slot");
      break;
    case EventKind::decide:
      e.view = f.num<View>("view");
      e.value = Value{f.num<std::uint64_t>("val")};
      break;
    case EventKind::notarize:
    case EventKind::finalize:
      e.slot = f.num<Slot>("slot");
      e.view = f.num<View>("view");
      e.value = Value{f.num<std::uint64_t>("val")};
      break;
    case EventKind::storage:
      e.view = f.num<View>("view");
      e.persistent = f.num<std::size_t>("persistent");
      e.volatile_size = f.num<std::size_t>("volatile");
      e.volatile_bound = f.num<std::size_t>("bound");
      e.active_slots = f.num<std::size_t>("slots");
      break;
    case EventKind::adversary:
    case EventKind::note:
      e.text = f.has("text") ? f.get("text") : std::string{};
      break;
    case EventKind::end:
      break;
  }
  return e;
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << format_header(trace.header) << '\n';
  for (const auto& e : trace.events) out << format_event(e) << '\n';
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      if (!have_header) {
        trace.header = parse_header(line);
        have_header = true;
      } else {
        trace.events.push_back(parse_event(line));
      }
    } catch (const ParseError& err) {
      throw ParseError("line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (!have_header) throw ParseError("empty trace");
  return trace;
}

void save_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trace(out, trace);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return read_trace(in);
}

}  // namespace tetrabft
