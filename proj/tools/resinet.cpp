#include <iostream>

#include <CLI11.hpp>

#include "resinet/resinet.hpp"

namespace {

constexpr int kExitSat = 10;
constexpr int kExitUnsat = 20;
constexpr int kExitTimeout = 30;
constexpr int kExitError = 1;
constexpr int kExitDisagreement = 2;

int cmd_verify(const std::string& net_path, const std::string& query_path,
               const std::string& mode_str, double timeout, int64_t max_states, bool json_out,
               const std::string& trace_path, uint64_t seed) {
  resinet::Network net = resinet::load_network(net_path);
  resinet::ParsedQuery pq = resinet::load_query(query_path);
  auto [prepared_net, query] = resinet::prepare_query(net, pq);

  std::optional<resinet::TraceWriter> trace;
  resinet::RunOptions opts;
  opts.mode = resinet::parse_mode(mode_str);
  opts.timeout_sec = timeout;
  opts.max_states = max_states;
  opts.seed = seed;
  if (!trace_path.empty()) {
    trace.emplace(trace_path);
    opts.trace = &*trace;
  }

  const resinet::RunReport report = resinet::run(prepared_net, query, opts);
  if (json_out) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << resinet::verdict_name(report.verdict.kind) << '\n';
    if (report.verdict.is_sat()) {
      std::cout << "witness:";
      for (double v : report.verdict.witness) std::cout << ' ' << v;
      std::cout << '\n';
    }
    std::cout << "iterations " << report.iterations << ", refinements " << report.refinements
              << ", visited " << report.stats.visited_states << ", splits " << report.stats.splits
              << ", propagations " << report.stats.propagations << ", prune hits "
              << report.stats.prune_hits << ", lp solves " << report.stats.lp_solves << ", "
              << report.wall_ms << " ms\n";
  }
  switch (report.verdict.kind) {
    case resinet::VerdictKind::kSat: return kExitSat;
    case resinet::VerdictKind::kUnsat: return kExitUnsat;
    default: return kExitTimeout;
  }
}

int cmd_gen(const std::string& out_dir, int count, uint64_t seed, int max_inputs, int max_relus) {
  resinet::GenOptions opts;
  opts.out_dir = out_dir;
  opts.count = count;
  opts.seed = seed;
  opts.max_inputs = max_inputs;
  opts.max_relus = max_relus;
  const auto suite = resinet::generate_suite(opts);
  std::cout << "wrote " << suite.size() << " instances to " << out_dir << '\n';
  return 0;
}

int cmd_compare(const std::string& suite_dir, const std::string& modes_csv, double timeout,
                int64_t max_states, int workers, const std::string& csv_path, bool json_out) {
  resinet::CompareOptions opts;
  opts.modes.clear();
  std::stringstream ss(modes_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) opts.modes.push_back(resinet::parse_mode(item));
  }
  if (opts.modes.empty()) throw resinet::ParseError("no modes given");
  opts.timeout_sec = timeout;
  opts.max_states = max_states;
  opts.workers = workers;

  const auto suite = resinet::load_suite(suite_dir);
  const resinet::CompareResult result = resinet::compare_suite(suite, opts);
  const std::string csv = resinet::compare_csv(result);
  if (csv_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(csv_path);
    if (!out) throw resinet::Error(resinet::cat("cannot write ", csv_path));
    out << csv;
  }
  if (json_out) {
    std::cout << result.summary.dump(2) << '\n';
  } else {
    for (const auto& d : result.disagreements) std::cerr << "disagreement: " << d << '\n';
  }
  return result.agree() ? 0 : kExitDisagreement;
}

int cmd_validate_trace(const std::string& trace_path, bool json_out) {
  const resinet::ValidationReport report = resinet::validate_trace_file(trace_path);
  if (json_out) {
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& i : report.issues) {
      issues.push_back({{"event", i.event_index}, {"message", i.message}});
    }
    std::cout << nlohmann::json{{"events", report.events},
                                {"lp_replays", report.lp_replays},
                                {"propagation_checks", report.propagation_checks},
                                {"ok", report.ok()},
                                {"issues", issues}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << report.events << " events, " << report.lp_replays << " lp replays, "
              << report.propagation_checks << " propagation checks\n";
    for (const auto& i : report.issues) {
      std::cerr << "event " << i.event_index << ": " << i.message << '\n';
    }
    std::cout << (report.ok() ? "trace ok" : "trace corrupt") << '\n';
  }
  return report.ok() ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sound and complete relu network verifier with residual reasoning"};
  app.require_subcommand(1);

  std::string net_path, query_path, mode = "ar4", trace_path;
  double timeout = 0;
  int64_t max_states = 0;
  bool json_out = false;
  uint64_t seed = 1;

  auto* verify = app.add_subcommand("verify", "decide a box/threshold property");
  verify->add_option("net", net_path, "network json file")->required();
  verify->add_option("query", query_path, "query json file")->required();
  verify->add_option("--mode", mode, "plain, ar or ar4")->capture_default_str();
  verify->add_option("--timeout", timeout, "wall clock budget in seconds, 0 = none");
  verify->add_option("--max-states", max_states, "state cap per iteration, 0 = none");
  verify->add_flag("--json", json_out, "print the full report as json");
  verify->add_option("--trace", trace_path, "write a jsonl trace to this path");
  verify->add_option("--seed", seed, "recorded in the report; the engine is deterministic");

  std::string out_dir, suite_dir, modes_csv = "plain,ar,ar4", csv_path;
  int count = 500, max_inputs = 4, max_relus = 10, workers = 1;

  auto* gen = app.add_subcommand("gen", "generate a labeled instance suite");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--count", count, "number of instances")->capture_default_str();
  gen->add_option("--seed", seed, "suite seed")->capture_default_str();
  gen->add_option("--max-inputs", max_inputs, "input dimension cap")->capture_default_str();
  gen->add_option("--max-relus", max_relus, "hidden neuron cap")->capture_default_str();

  auto* compare = app.add_subcommand("compare", "run modes across a suite and tabulate");
  compare->add_option("--suite", suite_dir, "directory with manifest.json")->required();
  compare->add_option("--modes", modes_csv, "comma separated modes")->capture_default_str();
  compare->add_option("--timeout", timeout, "per run wall clock budget in seconds");
  compare->add_option("--max-states", max_states, "state cap per iteration");
  compare->add_option("--workers", workers, "parallel workers")->capture_default_str();
  compare->add_option("--out", csv_path, "write the csv here instead of stdout");
  compare->add_flag("--json", json_out, "print the summary as json");

  auto* validate = app.add_subcommand("validate-trace", "replay and check a jsonl trace");
  validate->add_option("trace", trace_path, "trace file")->required();
  validate->add_flag("--json", json_out, "print the report as json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(verify)) {
      return cmd_verify(net_path, query_path, mode, timeout, max_states, json_out, trace_path,
                        seed);
    }
    if (app.got_subcommand(gen)) {
      return cmd_gen(out_dir, count, seed, max_inputs, max_relus);
    }
    if (app.got_subcommand(compare)) {
      return cmd_compare(suite_dir, modes_csv, timeout, max_states, workers, csv_path, json_out);
    }
    return cmd_validate_trace(trace_path, json_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
