// Simulation configuration and its `key = value` file format.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tetrabft/safety.hpp"
#include "tetrabft/types.hpp"

namespace tetrabft {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pre-GST scheduling rule: matching messages are dropped, or held for
/// `delay` ticks when that is set.
struct DropRule {
  std::optional<std::string> kind;  // kind_of() name, e.g. VOTE or VC
  std::optional<Slot> slot;
  std::optional<View> view;
  std::set<NodeId> from;  // empty means any
  std::set<NodeId> to;
  std::optional<Tick> delay;

  [[nodiscard]] bool matches(const Message& m, NodeId sender, NodeId dest) const;
};

struct AdversaryConfig {
  std::string strategy = "silent";
  std::map<std::string, std::string> params;

  [[nodiscard]] std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
};

enum class Mode { single_shot, multi_shot };
enum class DelayModel { constant, uniform };
enum class DropPolicy { random, rules };

struct Scenario {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  Tick delta_bound = 4;
  /// Constant post-GST delay (delta_bound caps the uniform model instead).
  Tick delay = 1;
  DelayModel delay_model = DelayModel::constant;
  Tick gst = 0;
  DropPolicy drop_policy = DropPolicy::random;
  double drop_probability = 0.5;
  /// Pre-GST delivery delay is uniform in [1, pre_gst_max_delay].
  Tick pre_gst_max_delay = 8;
  std::vector<DropRule> drop_rules;
  AdversaryConfig adversary;
  std::vector<NodeId> byzantine;
  std::vector<Value> inputs;  // one per node
  std::uint64_t seed = 1;
  Tick horizon = 100000;
  std::uint64_t max_events = 2000000;
  Mode mode = Mode::single_shot;
  Slot slots = 10;
  bool expect_termination = false;
  std::size_t vc_window = 8;
  RuleMutation mutation = RuleMutation::none;

  [[nodiscard]] bool is_byzantine(NodeId id) const;
  /// Throws ConfigError when inconsistent.
  void validate() const;
};

/// Parses scenario text. Unknown keys, sections or malformed values throw
/// ConfigError. The result is validated.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Applies the TETRABFT_SEED environment override, if set.
void apply_seed_override(Scenario& s);

std::string to_string(RuleMutation m);
/// Inverse of to_string(); throws ConfigError for unknown names.
RuleMutation parse_mutation(const std::string& text);

}  // namespace tetrabft
