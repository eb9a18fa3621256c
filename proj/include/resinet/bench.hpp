#pragma once

#include <atomic>
#include <filesystem>
#include <iomanip>
#include <thread>

#include "resinet/cegar.hpp"

namespace resinet {

struct SuiteEntry {
  std::string name;
  Network net;
  Query query;
  std::string expected;  // SAT / UNSAT from the manifest
};

inline std::vector<SuiteEntry> load_suite(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ParseError(cat("cannot open ", manifest_path.string()));
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(cat("manifest: ", e.what()));
  }
  if (!manifest.contains("instances") || !manifest["instances"].is_array()) {
    throw ParseError("manifest: missing instances array");
  }
  std::vector<SuiteEntry> suite;
  for (const auto& ji : manifest["instances"]) {
    SuiteEntry e;
    e.name = ji.at("name").get<std::string>();
    e.net = load_network((fs::path(dir) / ji.at("net").get<std::string>()).string());
    ParsedQuery pq = load_query((fs::path(dir) / ji.at("query").get<std::string>()).string());
    auto [n2, q2] = prepare_query(e.net, pq);
    e.net = std::move(n2);
    e.query = std::move(q2);
    e.expected = ji.at("verdict").get<std::string>();
    suite.push_back(std::move(e));
  }
  return suite;
}

struct CompareOptions {
  std::vector<Mode> modes{Mode::kPlain, Mode::kAr, Mode::kAr4};
  double timeout_sec = 60;
  int64_t max_states = 0;
  int workers = 1;
};

struct CompareRow {
  std::string instance;
  Mode mode = Mode::kPlain;
  VerdictKind verdict = VerdictKind::kUnsat;
  SearchStats stats;
  int refinements = 0;
  double wall_ms = 0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<std::string> disagreements;
  nlohmann::json summary;
  bool agree() const { return disagreements.empty(); }
};

// Everything except wall_ms is deterministic, so two runs of the same suite
// differ only in that column.
inline std::string compare_csv(const CompareResult& result) {
  std::ostringstream out;
  out << "instance,mode,verdict,visited_states,splits,propagations,prune_hits,lp_solves,"
         "refinements,wall_ms\n";
  for (const CompareRow& r : result.rows) {
    out << r.instance << ',' << mode_name(r.mode) << ',' << verdict_name(r.verdict) << ','
        << r.stats.visited_states << ',' << r.stats.splits << ',' << r.stats.propagations << ','
        << r.stats.prune_hits << ',' << r.stats.lp_solves << ',' << r.refinements << ','
        << std::fixed << std::setprecision(3) << r.wall_ms << '\n';
  }
  return out.str();
}

inline CompareResult compare_suite(const std::vector<SuiteEntry>& suite,
                                   const CompareOptions& opts) {
  struct Task {
    size_t instance;
    size_t mode;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < suite.size(); ++i) {
    for (size_t m = 0; m < opts.modes.size(); ++m) tasks.push_back(Task{i, m});
  }

  CompareResult result;
  result.rows.resize(tasks.size());
  std::atomic<size_t> cursor{0};
  const int workers = std::max(1, opts.workers);
  auto worker = [&] {
    while (true) {
      const size_t at = cursor.fetch_add(1);
      if (at >= tasks.size()) return;
      const Task task = tasks[at];
      const SuiteEntry& entry = suite[task.instance];
      RunOptions ro;
      ro.mode = opts.modes[task.mode];
      ro.timeout_sec = opts.timeout_sec;
      ro.max_states = opts.max_states;
      const RunReport report = run(entry.net, entry.query, ro);
      CompareRow row;
      row.instance = entry.name;
      row.mode = ro.mode;
      row.verdict = report.verdict.kind;
      row.stats = report.stats;
      row.refinements = report.refinements;
      row.wall_ms = report.wall_ms;
      result.rows[at] = std::move(row);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Verdict checks: every solved row must match the manifest label, and the
  // modes must agree with each other (timeouts are budget misses, not
  // disagreements).
  for (const CompareRow& r : result.rows) {
    if (r.verdict == VerdictKind::kTimeout) continue;
    for (const SuiteEntry& e : suite) {
      if (e.name != r.instance) continue;
      if (verdict_name(r.verdict) != e.expected) {
        result.disagreements.push_back(
            cat(r.instance, ": ", mode_name(r.mode), " says ", verdict_name(r.verdict),
                ", manifest says ", e.expected));
      }
      break;
    }
  }

  // Per-mode totals plus the solved-more-quickly tally. A mode wins an
  // instance only when it beats every other solved mode by more than the
  // five second tie window.
  constexpr double kTieWindowMs = 5000.0;
  nlohmann::json per_mode = nlohmann::json::object();
  for (size_t m = 0; m < opts.modes.size(); ++m) {
    int solved = 0, sats = 0, unsats = 0, timeouts = 0, wins = 0;
    SearchStats total;
    double wall = 0;
    for (size_t i = 0; i < suite.size(); ++i) {
      const CompareRow& r = result.rows[i * opts.modes.size() + m];
      wall += r.wall_ms;
      total.add(r.stats);
      if (r.verdict == VerdictKind::kTimeout) {
        ++timeouts;
        continue;
      }
      ++solved;
      (r.verdict == VerdictKind::kSat ? sats : unsats) += 1;
      bool win = true;
      for (size_t m2 = 0; m2 < opts.modes.size(); ++m2) {
        if (m2 == m) continue;
        const CompareRow& o = result.rows[i * opts.modes.size() + m2];
        if (o.verdict == VerdictKind::kTimeout) continue;  // beating a timeout counts
        if (r.wall_ms + kTieWindowMs >= o.wall_ms) win = false;
      }
      if (win && opts.modes.size() > 1) ++wins;
    }
    per_mode[mode_name(opts.modes[m])] = {{"solved", solved},
                                          {"sat", sats},
                                          {"unsat", unsats},
                                          {"timeouts", timeouts},
                                          {"faster_by_margin", wins},
                                          {"visited_states", total.visited_states},
                                          {"splits", total.splits},
                                          {"propagations", total.propagations},
                                          {"prune_hits", total.prune_hits},
                                          {"lp_solves", total.lp_solves},
                                          {"wall_ms", wall}};
  }
  result.summary = {{"instances", suite.size()},
                    {"modes", per_mode},
                    {"disagreements", result.disagreements}};
  return result;
}

}  // namespace resinet
