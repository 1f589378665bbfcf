#include "tetrabft/adversary.hpp"

#include <algorithm>

namespace tetrabft {

Value alternative_value(Value v) { return Value{v.token == 1 ? 2ULL : 1ULL}; }

namespace {

class Silent final : public Adversary {
 public:
  AdversaryStep start() override { return {}; }
  AdversaryStep deliver(const Message&, NodeId) override { return {}; }
  AdversaryStep on_timer() override { return {}; }
};

/// Runs an honest node and lets subclasses rewrite its output.
class Wrapped : public Adversary {
 public:
  explicit Wrapped(const AdversaryContext& ctx)
      : ctx_(ctx),
        inner_(NodeConfig{ctx.id, ctx.committee, ctx.delta_bound, ctx.initial_value,
                          ctx.vc_window, RuleMutation::none}),
        rng_(ctx.seed ^ (0x9e3779b97f4a7c15ULL * (ctx.id + 1))) {}

  AdversaryStep start() override { return rewrite(inner_.start()); }
  AdversaryStep deliver(const Message& msg, NodeId from) override {
    return rewrite(inner_.deliver(msg, from));
  }
  AdversaryStep on_timer() override { return rewrite(inner_.on_timer()); }

 protected:
  virtual AdversaryStep rewrite(Effects fx) {
    AdversaryStep step;
    step.set_timer = fx.set_timer;
    for (auto& o : fx.outbound) step.outbound.push_back({o.to, std::move(o.msg), std::nullopt});
    return step;
  }

  [[nodiscard]] std::vector<NodeId> others() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < ctx_.committee.n(); ++i) {
      if (i != ctx_.id) out.push_back(i);
    }
    return out;
  }

  AdversaryContext ctx_;
  Node inner_;
  std::mt19937_64 rng_;
};

class CrashAfterK final : public Wrapped {
 public:
  CrashAfterK(const AdversaryContext& ctx, std::int64_t k) : Wrapped(ctx), k_(k) {}

  AdversaryStep deliver(const Message& msg, NodeId from) override {
    if (seen_ >= k_) return {};
    ++seen_;
    auto step = Wrapped::deliver(msg, from);
    if (seen_ == k_) step.actions.push_back("crash after " + std::to_string(k_) + " deliveries");
    return step;
  }
  AdversaryStep on_timer() override { return seen_ >= k_ ? AdversaryStep{} : Wrapped::on_timer(); }

 private:
  std::int64_t k_;
  std::int64_t seen_ = 0;
};

/// Sends each vote (and proposal) with its real value to one part of the
/// committee and a different value to the rest.
class EquivocateVotes final : public Wrapped {
 public:
  EquivocateVotes(const AdversaryContext& ctx, bool random_split, std::optional<Value> alt)
      : Wrapped(ctx), random_split_(random_split), alt_(alt) {}

 protected:
  AdversaryStep rewrite(Effects fx) override {
    AdversaryStep step;
    step.set_timer = fx.set_timer;
    for (auto& o : fx.outbound) {
      const bool is_vote = std::holds_alternative<Vote>(o.msg);
      const bool is_proposal = std::holds_alternative<Proposal>(o.msg);
      if (o.to || !(is_vote || is_proposal)) {
        step.outbound.push_back({o.to, std::move(o.msg), std::nullopt});
        continue;
      }
      Message other = o.msg;
      Value real;
      if (auto* v = std::get_if<Vote>(&other)) {
        real = v->value;
        v->value = alt_.value_or(alternative_value(real));
      } else {
        auto& p = std::get<Proposal>(other);
        real = p.value;
        p.value = alt_.value_or(alternative_value(real));
      }
      const auto peers = others();
      const std::size_t keep = (peers.size() + 1) / 2;
      std::vector<NodeId> got_other;
      step.outbound.push_back({ctx_.id, o.msg, std::nullopt});
      for (std::size_t i = 0; i < peers.size(); ++i) {
        const bool real_copy = random_split_ ? (rng_() & 1U) == 0 : i < keep;
        step.outbound.push_back({peers[i], real_copy ? o.msg : other, std::nullopt});
        if (!real_copy) got_other.push_back(peers[i]);
      }
      std::string who;
      for (auto id : got_other) who += (who.empty() ? "" : ",") + std::to_string(id);
      step.actions.push_back("equivocate " + encode(o.msg) + " vs " + encode(other) + " to " +
                             (who.empty() ? "-" : who));
    }
    return step;
  }

 private:
  bool random_split_;
  std::optional<Value> alt_;
};

/// Proposes without consulting suggests, splitting two values across the
/// committee in every view it leads.
class LyingLeader final : public Wrapped {
 public:
  LyingLeader(const AdversaryContext& ctx, std::optional<Value> alt) : Wrapped(ctx), alt_(alt) {}

 protected:
  AdversaryStep rewrite(Effects fx) override {
    AdversaryStep step;
    step.set_timer = fx.set_timer;
    for (auto& o : fx.outbound) {
      if (std::holds_alternative<Proposal>(o.msg)) continue;
      step.outbound.push_back({o.to, std::move(o.msg), std::nullopt});
    }
    const View v = inner_.current_view();
    if (leader_of(v, ctx_.committee.n()) == ctx_.id && (!led_ || *led_ < v)) {
      led_ = v;
      const Value a = ctx_.initial_value;
      const Value b = alt_.value_or(alternative_value(a));
      const auto peers = others();
      step.outbound.push_back({ctx_.id, Proposal{0, v, a, {}, 0}, std::nullopt});
      for (std::size_t i = 0; i < peers.size(); ++i) {
        const Value val = (rng_() & 1U) ? a : b;
        step.outbound.push_back({peers[i], Proposal{0, v, val, {}, 0}, std::nullopt});
      }
      step.actions.push_back("unchecked split proposal in view " + std::to_string(v));
    }
    return step;
  }

 private:
  std::optional<Value> alt_;
  std::optional<View> led_;
};

/// Replaces suggest / proof contents with fabricated vote records, a fresh
/// fabrication per destination.
class LyingHistory final : public Wrapped {
 public:
  LyingHistory(const AdversaryContext& ctx, std::uint64_t max_value, std::int64_t malformed_every)
      : Wrapped(ctx), max_value_(std::max<std::uint64_t>(max_value, 2)),
        malformed_every_(malformed_every) {}

 protected:
  AdversaryStep rewrite(Effects fx) override {
    AdversaryStep step;
    step.set_timer = fx.set_timer;
    for (auto& o : fx.outbound) {
      const bool history_msg =
          std::holds_alternative<Suggest>(o.msg) || std::holds_alternative<Proof>(o.msg);
      if (!history_msg) {
        step.outbound.push_back({o.to, std::move(o.msg), std::nullopt});
        continue;
      }
      std::vector<NodeId> dests;
      if (o.to) {
        dests.push_back(*o.to);
      } else {
        for (NodeId i = 0; i < ctx_.committee.n(); ++i) dests.push_back(i);
      }
      for (auto d : dests) {
        Message fake = fabricate(o.msg);
        step.actions.push_back("fabricated " + encode(fake) + " to " + std::to_string(d));
        step.outbound.push_back({d, std::move(fake), std::nullopt});
      }
    }
    return step;
  }

 private:
  Value random_value() { return Value{1 + rng_() % max_value_}; }

  std::optional<VoteRecord> random_record(View v, bool prefer_top) {
    if (v == 0 || rng_() % 4 == 0) return std::nullopt;
    const View view = prefer_top ? v - 1 : static_cast<View>(rng_() % v);
    return VoteRecord{view, random_value()};
  }

  /// A (vote, prev) pair; every `malformed_every_`-th pair is deliberately broken.
  std::pair<std::optional<VoteRecord>, std::optional<VoteRecord>> random_pair(View v) {
    auto vote = random_record(v, rng_() % 2 == 0);
    std::optional<VoteRecord> prev;
    ++count_;
    if (malformed_every_ > 0 && count_ % malformed_every_ == 0 && vote) {
      return {vote, VoteRecord{vote->view, vote->value}};
    }
    if (vote && vote->view > 0 && rng_() % 2 == 0) {
      Value other = random_value();
      if (other == vote->value) other = alternative_value(vote->value);
      prev = VoteRecord{static_cast<View>(rng_() % vote->view), other};
    }
    return {vote, prev};
  }

  Message fabricate(const Message& real) {
    if (const auto* s = std::get_if<Suggest>(&real)) {
      Suggest out = *s;
      std::tie(out.vote2, out.prev_vote2) = random_pair(s->view);
      out.vote3 = random_record(s->view, true);
      return out;
    }
    const auto& p = std::get<Proof>(real);
    Proof out = p;
    std::tie(out.vote1, out.prev_vote1) = random_pair(p.view);
    out.vote4 = random_record(p.view, true);
    return out;
  }

  std::uint64_t max_value_;
  std::int64_t malformed_every_;
  std::int64_t count_ = 0;
};

/// Floods view-change messages for views ahead of its own, once per delta,
/// while keeping the inner node's 9-delta timer on schedule.
class VcSpammer final : public Wrapped {
 public:
  VcSpammer(const AdversaryContext& ctx, std::int64_t rate, std::int64_t bursts)
      : Wrapped(ctx), rate_(rate), bursts_(bursts) {}

  AdversaryStep start() override {
    auto step = Wrapped::start();
    step.set_timer = ctx_.delta_bound;
    ticking_ = true;
    return step;
  }
  AdversaryStep deliver(const Message& msg, NodeId from) override {
    auto step = Wrapped::deliver(msg, from);
    // The spam tick owns the timer; restart it if it had stopped.
    step.set_timer.reset();
    if (inner_remaining_ && !ticking_) {
      step.set_timer = ctx_.delta_bound;
      ticking_ = true;
    }
    return step;
  }
  AdversaryStep on_timer() override {
    AdversaryStep step;
    ticking_ = false;
    if (inner_remaining_) {
      *inner_remaining_ -= ctx_.delta_bound;
      if (*inner_remaining_ <= 0) {
        inner_remaining_.reset();
        step = rewrite(inner_.on_timer());
      }
    }
    if (bursts_ > 0) {
      --bursts_;
      const View base = inner_.current_view();
      for (std::int64_t i = 1; i <= rate_; ++i) {
        step.outbound.push_back(
            {std::nullopt, ViewChange{0, base + static_cast<View>(i)}, std::nullopt});
      }
      step.actions.push_back("spam " + std::to_string(rate_) + " view-changes above view " +
                             std::to_string(base));
    }
    step.set_timer.reset();
    if (bursts_ > 0 || inner_remaining_) {
      step.set_timer = ctx_.delta_bound;
      ticking_ = true;
    }
    return step;
  }

 protected:
  AdversaryStep rewrite(Effects fx) override {
    if (fx.set_timer) inner_remaining_ = *fx.set_timer;
    return Wrapped::rewrite(std::move(fx));
  }

 private:
  std::int64_t rate_;
  std::int64_t bursts_;
  std::optional<Tick> inner_remaining_;
  bool ticking_ = false;
};

std::optional<Value> optional_value(const AdversaryConfig& config, const std::string& key) {
  const auto v = config.integer(key, -1);
  if (v < 0) return std::nullopt;
  return Value{static_cast<std::uint64_t>(v)};
}

}  // namespace

std::unique_ptr<Adversary> make_adversary(const AdversaryConfig& config,
                                          const AdversaryContext& ctx) {
  const auto& s = config.strategy;
  if (s == "silent") return std::make_unique<Silent>();
  if (s == "crash_after_k") return std::make_unique<CrashAfterK>(ctx, config.integer("k", 5));
  if (s == "equivocate_votes") {
    const auto split = config.text("split", "half");
    if (split != "half" && split != "random") throw ConfigError("split must be half or random");
    return std::make_unique<EquivocateVotes>(ctx, split == "random", optional_value(config, "alt"));
  }
  if (s == "lying_leader") return std::make_unique<LyingLeader>(ctx, optional_value(config, "alt"));
  if (s == "lying_history") {
    return std::make_unique<LyingHistory>(
        ctx, static_cast<std::uint64_t>(config.integer("max_value", 3)),
        config.integer("malformed_every", 4));
  }
  if (s == "vc_spammer") {
    return std::make_unique<VcSpammer>(ctx, config.integer("rate", 3), config.integer("bursts", 40));
  }
  throw ConfigError("unknown adversary strategy '" + s + "'");
}

}  // namespace tetrabft
