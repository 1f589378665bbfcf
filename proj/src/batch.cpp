#include "tetrabft/batch.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tetrabft/scenario.hpp"
#include "tetrabft/simnet.hpp"

namespace tetrabft {

namespace fs = std::filesystem;

BatchRow summarize(const std::string& name, const Trace& trace, const std::vector<Verdict>& verdicts) {
  BatchRow row;
  row.scenario = name;
  const auto& h = trace.header;
  if (h.multi_shot) {
    std::map<NodeId, std::set<Slot>> finalized;
    for (const auto& e : trace.events) {
      if (e.kind == EventKind::finalize && h.is_honest(e.node)) finalized[e.node].insert(e.slot);
    }
    std::size_t common = 0;
    bool first = true;
    for (NodeId id : h.honest()) {
      const std::size_t count = finalized[id].size();
      common = first ? count : std::min(common, count);
      first = false;
    }
    row.decided = common;
  } else {
    std::set<NodeId> deciders;
    for (const auto& e : trace.events) {
      if (e.kind == EventKind::decide && h.is_honest(e.node)) deciders.insert(e.node);
    }
    row.decided = deciders.size();
  }
  const auto from = event_time(trace, "first-proposal");
  const auto to = event_time(trace, h.multi_shot ? "first-finalize" : "first-decide");
  if (from && to) row.latency = *to - *from;
  for (const auto& v : verdicts) {
    if (!v.pass) row.violations.push_back(v.property);
  }
  return row;
}

std::string csv_header() { return "scenario,decided,latency,violations"; }

std::string csv_row(const BatchRow& row) {
  std::ostringstream os;
  os << row.scenario << ',' << row.decided << ',';
  if (row.latency) os << *row.latency;
  os << ',';
  if (!row.error.empty()) {
    os << "error";
  } else {
    for (std::size_t i = 0; i < row.violations.size(); ++i) os << (i ? ";" : "") << row.violations[i];
  }
  return os.str();
}

std::vector<BatchRow> run_batch(const std::string& dir, const std::string& out_dir, unsigned threads) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw std::runtime_error("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(out_dir);

  std::vector<BatchRow> rows(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const std::string stem = files[i].stem().string();
      try {
        Scenario s = load_scenario(files[i].string());
        apply_seed_override(s);
        const Trace trace = run(s);
        save_trace((fs::path(out_dir) / (stem + ".trace")).string(), trace);
        rows[i] = summarize(stem, trace, check_all(trace));
      } catch (const std::exception& e) {
        rows[i].scenario = stem;
        rows[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(files.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ofstream csv(fs::path(out_dir) / "summary.csv");
  csv << csv_header() << '\n';
  for (const auto& row : rows) csv << csv_row(row) << '\n';
  return rows;
}

}  // namespace tetrabft
