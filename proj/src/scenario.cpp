#include "tetrabft/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

namespace tetrabft {

namespace {

const std::map<std::string, std::set<std::string>>& strategy_params() {
  static const std::map<std::string, std::set<std::string>> kParams{
      {"silent", {}},
      {"crash_after_k", {"k"}},
      {"equivocate_votes", {"split", "alt"}},
      {"lying_leader", {"alt"}},
      {"lying_history", {"max_value", "malformed_every"}},
      {"vc_spammer", {"rate", "bursts"}},
  };
  return kParams;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int parse_num(const std::string& text, const std::string& key) {
  Int out{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("invalid integer for '" + key + "': '" + text + "'");
  }
  return out;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean for '" + key + "': '" + text + "'");
}

template <typename Int>
std::vector<Int> parse_list(const std::string& text, const std::string& key) {
  std::vector<Int> out;
  if (text.empty() || text == "-") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_num<Int>(trim(item), key));
  return out;
}

DropRule parse_rule(const std::string& text) {
  DropRule rule;
  std::stringstream ss(text);
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError("drop rule token without '=': " + token);
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "kind") {
      rule.kind = value;
    } else if (key == "slot") {
      rule.slot = parse_num<Slot>(value, key);
    } else if (key == "view") {
      rule.view = parse_num<View>(value, key);
    } else if (key == "from") {
      for (auto id : parse_list<NodeId>(value, key)) rule.from.insert(id);
    } else if (key == "to") {
      for (auto id : parse_list<NodeId>(value, key)) rule.to.insert(id);
    } else if (key == "delay") {
      rule.delay = parse_num<Tick>(value, key);
    } else {
      throw ConfigError("unknown drop rule field '" + key + "'");
    }
  }
  return rule;
}

}  // namespace

bool DropRule::matches(const Message& m, NodeId sender, NodeId dest) const {
  if (kind && kind_of(m) != *kind) return false;
  if (slot && slot_of(m) != *slot) return false;
  if (view && view_of(m) != *view) return false;
  if (!from.empty() && !from.count(sender)) return false;
  if (!to.empty() && !to.count(dest)) return false;
  return true;
}

std::int64_t AdversaryConfig::integer(const std::string& key, std::int64_t fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : parse_num<std::int64_t>(it->second, key);
}

std::string AdversaryConfig::text(const std::string& key, const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

bool Scenario::is_byzantine(NodeId id) const {
  return std::find(byzantine.begin(), byzantine.end(), id) != byzantine.end();
}

void Scenario::validate() const {
  if (n == 0 || n <= 3 * f) throw ConfigError("require n > 3f");
  if (delta_bound <= 0) throw ConfigError("delta must be positive");
  if (delay <= 0 || delay > delta_bound) throw ConfigError("require 0 < delay <= delta");
  if (gst < 0) throw ConfigError("gst must be non-negative");
  if (drop_probability < 0.0 || drop_probability > 1.0) {
    throw ConfigError("drop_probability must be in [0, 1]");
  }
  if (pre_gst_max_delay <= 0) throw ConfigError("pre_gst_max_delay must be positive");
  if (byzantine.size() > f) throw ConfigError("more byzantine nodes than f");
  std::set<NodeId> seen;
  for (auto id : byzantine) {
    if (id >= n) throw ConfigError("byzantine id out of range");
    if (!seen.insert(id).second) throw ConfigError("duplicate byzantine id");
  }
  if (inputs.size() != n) throw ConfigError("inputs must list one value per node");
  if (horizon <= 0 || max_events == 0) throw ConfigError("horizon and max_events must be positive");
  if (mode == Mode::multi_shot && slots == 0) throw ConfigError("multi-shot needs slots >= 1");
  if (vc_window == 0) throw ConfigError("vc_window must be positive");
  const auto& known = strategy_params();
  auto it = known.find(adversary.strategy);
  if (it == known.end()) throw ConfigError("unknown adversary strategy '" + adversary.strategy + "'");
  for (const auto& [key, value] : adversary.params) {
    if (!it->second.count(key)) {
      throw ConfigError("unknown parameter '" + key + "' for strategy " + adversary.strategy);
    }
  }
  if (mode == Mode::multi_shot && !byzantine.empty() && adversary.strategy != "silent") {
    throw ConfigError("multi-shot runs support only the silent adversary");
  }
}

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::string> inputs_text;
  std::set<std::string> seen_keys;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = " (line " + std::to_string(line_no) + ")";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header" + where);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "adversary" && section != "drop_rules") {
        throw ConfigError("unknown section [" + section + "]" + where);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value" + where);
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    try {
      if (section == "adversary") {
        if (key == "strategy") {
          s.adversary.strategy = value;
        } else {
          s.adversary.params[key] = value;
        }
        continue;
      }
      if (section == "drop_rules") {
        if (key != "rule") throw ConfigError("unknown key '" + key + "' in [drop_rules]");
        s.drop_rules.push_back(parse_rule(value));
        continue;
      }
      if (!seen_keys.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
      if (key == "n") {
        s.n = parse_num<std::uint32_t>(value, key);
      } else if (key == "f") {
        s.f = parse_num<std::uint32_t>(value, key);
      } else if (key == "delta") {
        s.delta_bound = parse_num<Tick>(value, key);
      } else if (key == "delay") {
        s.delay = parse_num<Tick>(value, key);
      } else if (key == "delay_model") {
        if (value == "constant") {
          s.delay_model = DelayModel::constant;
        } else if (value == "uniform") {
          s.delay_model = DelayModel::uniform;
        } else {
          throw ConfigError("unknown delay_model '" + value + "'");
        }
      } else if (key == "gst") {
        s.gst = parse_num<Tick>(value, key);
      } else if (key == "drop_policy") {
        if (value == "random") {
          s.drop_policy = DropPolicy::random;
        } else if (value == "rules") {
          s.drop_policy = DropPolicy::rules;
        } else {
          throw ConfigError("unknown drop_policy '" + value + "'");
        }
      } else if (key == "drop_probability") {
        char* end = nullptr;
        s.drop_probability = std::strtod(value.c_str(), &end);
        if (value.empty() || *end != '\0') throw ConfigError("invalid drop_probability");
      } else if (key == "pre_gst_max_delay") {
        s.pre_gst_max_delay = parse_num<Tick>(value, key);
      } else if (key == "adversary") {
        s.adversary.strategy = value;
      } else if (key == "byzantine") {
        s.byzantine = parse_list<NodeId>(value, key);
      } else if (key == "inputs") {
        inputs_text = value;
      } else if (key == "seed") {
        s.seed = parse_num<std::uint64_t>(value, key);
      } else if (key == "horizon") {
        s.horizon = parse_num<Tick>(value, key);
      } else if (key == "max_events") {
        s.max_events = parse_num<std::uint64_t>(value, key);
      } else if (key == "mode") {
        if (value == "single") {
          s.mode = Mode::single_shot;
        } else if (value == "multi") {
          s.mode = Mode::multi_shot;
        } else {
          throw ConfigError("unknown mode '" + value + "'");
        }
      } else if (key == "slots") {
        s.slots = parse_num<Slot>(value, key);
      } else if (key == "expect_termination") {
        s.expect_termination = parse_bool(value, key);
      } else if (key == "vc_window") {
        s.vc_window = parse_num<std::size_t>(value, key);
      } else if (key == "mutation") {
        s.mutation = parse_mutation(value);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& err) {
      throw ConfigError(std::string(err.what()) + where);
    }
  }

  // Inputs: a list, a single value for every node, or "distinct" (node i gets i+1).
  s.inputs.clear();
  if (!inputs_text || *inputs_text == "distinct") {
    for (NodeId i = 0; i < s.n; ++i) s.inputs.push_back(Value{inputs_text ? i + 1ULL : 1ULL});
  } else {
    const auto values = parse_list<std::uint64_t>(*inputs_text, "inputs");
    if (values.size() == 1) {
      s.inputs.assign(s.n, Value{values[0]});
    } else {
      for (auto v : values) s.inputs.push_back(Value{v});
    }
  }
  s.validate();
  return s;
}

Scenario parse_scenario_text(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario " + path);
  return parse_scenario(in);
}

void apply_seed_override(Scenario& s) {
  if (const char* env = std::getenv("TETRABFT_SEED")) {
    s.seed = parse_num<std::uint64_t>(env, "TETRABFT_SEED");
  }
}

RuleMutation parse_mutation(const std::string& text) {
  if (text == "none") return RuleMutation::none;
  if (text == "drop_two_blocking_sets") return RuleMutation::drop_two_blocking_sets;
  if (text == "drop_blocking_claim") return RuleMutation::drop_blocking_claim;
  throw ConfigError("unknown mutation '" + text + "'");
}

std::string to_string(RuleMutation m) {
  switch (m) {
    case RuleMutation::none:
      return "none";
    case RuleMutation::drop_two_blocking_sets:
      return "drop_two_blocking_sets";
    case RuleMutation::drop_blocking_claim:
      return "drop_blocking_claim";
  }
  return "?";
}

}  // namespace tetrabft
