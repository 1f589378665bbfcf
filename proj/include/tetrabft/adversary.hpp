// Byzantine behaviours for single-shot runs. Most strategies wrap an honest
// node and rewrite what it sends.
#pragma once

#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tetrabft/node.hpp"
#include "tetrabft/scenario.hpp"
#include "tetrabft/types.hpp"

namespace tetrabft {

/// Raised when a strategy tries to send under another node's identity.
class ForgeryError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct AdversaryMessage {
  std::optional<NodeId> to;  // nullopt: every node
  Message msg;
  /// Set only by strategies that try to impersonate; the simulator rejects it.
  std::optional<NodeId> claimed_sender;
};

struct AdversaryStep {
  std::vector<AdversaryMessage> outbound;
  std::optional<Tick> set_timer;
  std::vector<std::string> actions;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual AdversaryStep start() = 0;
  virtual AdversaryStep deliver(const Message& msg, NodeId from) = 0;
  virtual AdversaryStep on_timer() = 0;
};

/// Everything a strategy may know about its position in the run.
struct AdversaryContext {
  NodeId id = 0;
  Committee committee{4, 1};
  Tick delta_bound = 1;
  Value initial_value{1};
  std::uint64_t seed = 0;
  std::size_t vc_window = 8;
};

/// Throws ConfigError for unknown strategies.
std::unique_ptr<Adversary> make_adversary(const AdversaryConfig& config,
                                          const AdversaryContext& ctx);

/// A value different from `v`, used by strategies that lie.
Value alternative_value(Value v);

}  // namespace tetrabft
