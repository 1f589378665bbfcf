// tetrabft: run scenarios, batch suites, check traces, explore small models
// and measure latencies. Exit 0 on success, 1 on any FAIL, 2 on usage errors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tetrabft/adversary.hpp"
#include "tetrabft/batch.hpp"
#include "tetrabft/checker.hpp"
#include "tetrabft/explorer.hpp"
#include "tetrabft/scenario.hpp"
#include "tetrabft/simnet.hpp"

namespace {

using namespace tetrabft;

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const std::string& scenario_path, const std::string& trace_out) {
  Scenario s = load_scenario(scenario_path);
  apply_seed_override(s);
  const RunResult r = simulate(s);
  save_trace(trace_out, r.trace);
  const BatchRow row = summarize(std::filesystem::path(scenario_path).stem().string(), r.trace, {});
  std::cout << "events=" << r.stats.events << " end=" << r.stats.end_time
            << " decided=" << row.decided;
  if (row.latency) std::cout << " latency=" << *row.latency;
  if (r.stats.hit_horizon) std::cout << " horizon=reached";
  if (r.stats.hit_event_cap) std::cout << " event_cap=reached";
  std::cout << '\n';
  return kOk;
}

int cmd_batch(const std::string& dir, const std::string& out, unsigned threads) {
  const auto rows = run_batch(dir, out, threads);
  int code = kOk;
  std::cout << csv_header() << '\n';
  for (const auto& row : rows) {
    std::cout << csv_row(row) << '\n';
    if (!row.error.empty()) {
      std::cerr << row.scenario << ": " << row.error << '\n';
      code = kFail;
    }
    if (!row.violations.empty()) code = kFail;
  }
  return code;
}

int cmd_check(const std::string& trace_path, const std::string& properties, const std::string& cex_dir) {
  const Trace trace = load_trace(trace_path);
  const auto names = properties.empty() ? all_properties() : split_list(properties);
  const auto verdicts = check_all(trace, names);
  const std::filesystem::path base(trace_path);
  const std::filesystem::path dir = cex_dir.empty() ? base.parent_path() : std::filesystem::path(cex_dir);
  int code = kOk;
  for (const auto& v : verdicts) {
    std::string path;
    if (!v.pass) {
      code = kFail;
      path = (dir / (base.stem().string() + "." + v.property + ".cex")).string();
      save_trace(path, counterexample_trace(trace, v));
    }
    std::cout << format_verdict(v, path) << '\n';
  }
  return code;
}

struct ExploreArgs {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t values = 2;
  View views = 2;
  std::string menu = "equivocate,lying_history";
  std::string mutation = "none";
  std::string invariants;
  std::optional<NodeId> byzantine;
  std::uint64_t max_states = ExploreConfig{}.max_states;
  std::string cex_out;
};

int cmd_explore(const ExploreArgs& a) {
  ExploreConfig c;
  c.n = a.n;
  c.f = a.f;
  c.values = a.values;
  c.max_view = a.views;
  c.byzantine = a.byzantine;
  c.mutation = parse_mutation(a.mutation);
  c.invariants = split_list(a.invariants);
  c.max_states = a.max_states;
  c.equivocate = false;
  c.lying_history = false;
  for (const auto& item : split_list(a.menu)) {
    if (item == "equivocate") {
      c.equivocate = true;
    } else if (item == "lying_history") {
      c.lying_history = true;
    } else if (item == "silent") {
      c.no_byzantine = true;
    } else {
      throw ConfigError("unknown adversary menu item '" + item + "'");
    }
  }
  const ExploreResult r = bounded_explore(c);
  std::cout << "states=" << r.states << " transitions=" << r.transitions
            << " complete=" << (r.complete ? "yes" : "no");
  if (!r.complete) std::cout << " explored_fraction=" << r.explored_fraction;
  std::cout << " decidable=";
  for (std::size_t i = 0; i < r.decidable_values.size(); ++i) {
    std::cout << (i ? "," : "") << encode(r.decidable_values[i]);
  }
  std::cout << '\n';
  if (!r.violation) {
    std::cout << (r.complete ? "PASS" : "PARTIAL") << " explore\n";
    return kOk;
  }
  std::cout << "FAIL " << r.invariant;
  if (!a.cex_out.empty()) {
    std::ofstream out(a.cex_out);
    for (const auto& step : r.counterexample) out << step << '\n';
    std::cout << " counterexample=" << a.cex_out << '\n';
  } else {
    std::cout << '\n';
    for (const auto& step : r.counterexample) std::cout << "  " << step << '\n';
  }
  return kFail;
}

int cmd_latency(const std::string& trace_path, const std::string& from, const std::string& to, bool ticks) {
  if (!is_event_name(from) || !is_event_name(to)) throw CLI::ValidationError("unknown event name");
  const Latency l = measure_latency(load_trace(trace_path), from, to);
  if (l.delays && !ticks) {
    std::cout << *l.delays << '\n';
  } else {
    std::cout << l.ticks << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TetraBFT simulator and checker"};
  app.require_subcommand(1, 1);

  std::string scenario_path, trace_out;
  auto* run = app.add_subcommand("run", "simulate one scenario and write its trace");
  run->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--trace-out", trace_out, "trace output file")->required();

  std::string dir, out;
  unsigned threads = 0;
  auto* batch = app.add_subcommand("batch", "run every *.cfg of a directory");
  batch->add_option("--dir", dir, "scenario directory")->required()->check(CLI::ExistingDirectory);
  batch->add_option("--out", out, "output directory for traces and summary.csv")->required();
  batch->add_option("--threads", threads, "worker threads (0 = hardware)");

  std::string trace_path, properties, cex_dir;
  auto* check = app.add_subcommand("check", "check a trace against properties");
  check->add_option("--trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  check->add_option("--properties", properties, "comma-separated property names");
  check->add_option("--counterexample-dir", cex_dir, "where counterexample traces go");

  ExploreArgs ex;
  auto* explore = app.add_subcommand("explore", "bounded-exhaustive safety exploration");
  explore->add_option("--n", ex.n);
  explore->add_option("--f", ex.f);
  explore->add_option("--values", ex.values);
  explore->add_option("--views", ex.views, "highest view explored (views 0..N)");
  explore->add_option("--adversary-menu", ex.menu, "equivocate,lying_history or silent");
  explore->add_option("--mutation", ex.mutation, "none|drop_two_blocking_sets|drop_blocking_claim");
  explore->add_option("--invariants", ex.invariants, "agreement,within_view,cross_view");
  explore->add_option("--byzantine", ex.byzantine, "faulty node id");
  explore->add_option("--max-states", ex.max_states);
  explore->add_option("--counterexample-out", ex.cex_out, "file for the counterexample steps");

  std::string from, to;
  bool ticks = false;
  auto* latency = app.add_subcommand("latency", "time between two named trace events");
  latency->add_option("--trace", trace_path, "trace file")->required()->check(CLI::ExistingFile);
  latency->add_option("--from", from, "event name")->required();
  latency->add_option("--to", to, "event name")->required();
  latency->add_flag("--ticks", ticks, "print ticks even when the delay count is known");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*run) return cmd_run(scenario_path, trace_out);
    if (*batch) return cmd_batch(dir, out, threads);
    if (*check) return cmd_check(trace_path, properties, cex_dir);
    if (*explore) return cmd_explore(ex);
    if (*latency) return cmd_latency(trace_path, from, to, ticks);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kUsage;
  } catch (const ForgeryError& e) {
    std::cerr << "forgery: " << e.what() << '\n';
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}
