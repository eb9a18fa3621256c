#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace resinet;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("resinet_tools_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path out_path = dir / "cli_stdout.txt";
  const fs::path err_path = dir / "cli_stderr.txt";
  const std::string cmd = (env.empty() ? "" : env + " ") + RESINET_CLI_PATH + (" " + args) +
                          " > " + out_path.string() + " 2> " + err_path.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  CliResult r;
  r.code = WEXITSTATUS(rc);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::vector<SuiteEntry> to_suite(const std::vector<GenInstance>& instances) {
  std::vector<SuiteEntry> suite;
  for (const auto& inst : instances) {
    suite.push_back(SuiteEntry{inst.name, inst.net, inst.query, verdict_name(inst.expected)});
  }
  return suite;
}

// CSV rows with the wall clock column dropped, for determinism comparisons.
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    REQUIRE(cut != std::string::npos);
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("generate_suite is deterministic and honours its caps") {
  GenOptions opts;
  opts.count = 30;
  opts.seed = 7;
  const auto a = generate_suite(opts);
  const auto b = generate_suite(opts);
  REQUIRE(a.size() == 30);
  REQUIRE(b.size() == 30);

  CHECK(a[0].name == "inst_000");
  CHECK(a[29].name == "inst_029");
  for (size_t i = 0; i < a.size(); ++i) {
    INFO("instance " << i);
    CHECK(a[i].net.input_width <= opts.max_inputs);
    CHECK(count_relus(a[i].net) <= opts.max_relus);
    CHECK(serialize_network(a[i].net) == serialize_network(b[i].net));
    CHECK(a[i].query.output_threshold == b[i].query.output_threshold);
    CHECK(a[i].expected == b[i].expected);

    // Calibrated labels: outside the mid-range fifths the parity decides.
    if (i % 5 != 0) {
      CHECK(a[i].expected == (i % 2 == 0 ? VerdictKind::kSat : VerdictKind::kUnsat));
    }
  }

  GenOptions other = opts;
  other.seed = 8;
  const auto c = generate_suite(other);
  bool any_difference = false;
  for (size_t i = 0; i < c.size(); ++i) {
    if (serialize_network(a[i].net) != serialize_network(c[i].net)) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("suites round-trip through a directory") {
  const fs::path dir = fresh_dir("roundtrip");
  GenOptions opts;
  opts.count = 12;
  opts.seed = 3;
  opts.out_dir = dir.string();
  const auto written = generate_suite(opts);
  REQUIRE(fs::exists(dir / "manifest.json"));
  REQUIRE(fs::exists(dir / "inst_000.net.json"));
  REQUIRE(fs::exists(dir / "inst_011.query.json"));

  const auto loaded = load_suite(dir.string());
  REQUIRE(loaded.size() == written.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    INFO("instance " << i);
    CHECK(loaded[i].name == written[i].name);
    CHECK(loaded[i].expected == verdict_name(written[i].expected));
    CHECK(same_network(loaded[i].net, written[i].net, 0.0));
    CHECK(loaded[i].query.output_threshold == written[i].query.output_threshold);
    CHECK(loaded[i].query.input_lower == written[i].query.input_lower);
  }

  SECTION("two generations produce byte-identical manifests") {
    const fs::path dir2 = fresh_dir("roundtrip2");
    GenOptions opts2 = opts;
    opts2.out_dir = dir2.string();
    generate_suite(opts2);
    CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));
    CHECK(slurp(dir / "inst_005.net.json") == slurp(dir2 / "inst_005.net.json"));
    CHECK(slurp(dir / "inst_005.query.json") == slurp(dir2 / "inst_005.query.json"));
  }

  SECTION("a missing manifest is a parse error") {
    CHECK_THROWS_AS(load_suite((dir / "nowhere").string()), ParseError);
  }
}

TEST_CASE("compare_suite matches manifest labels across modes") {
  GenOptions gopts;
  gopts.count = 9;
  gopts.seed = 11;
  gopts.max_relus = 8;
  const auto suite = to_suite(generate_suite(gopts));

  CompareOptions copts;
  copts.workers = 2;
  copts.timeout_sec = 0;
  const auto result = compare_suite(suite, copts);
  REQUIRE(result.rows.size() == suite.size() * 3);
  CHECK(result.agree());

  for (size_t i = 0; i < suite.size(); ++i) {
    for (size_t m = 0; m < 3; ++m) {
      const CompareRow& row = result.rows[i * 3 + m];
      CHECK(row.instance == suite[i].name);
      CHECK(row.mode == copts.modes[m]);
      CHECK(verdict_name(row.verdict) == suite[i].expected);
    }
  }

  const auto& modes = result.summary.at("modes");
  for (const char* name : {"plain", "ar", "ar4"}) {
    INFO("mode " << name);
    CHECK(modes.at(name).at("solved") == static_cast<int>(suite.size()));
    CHECK(modes.at(name).at("timeouts") == 0);
  }

  SECTION("csv is shaped and deterministic up to wall time") {
    const std::string csv = compare_csv(result);
    std::istringstream in(csv);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header ==
          "instance,mode,verdict,visited_states,splits,propagations,prune_hits,lp_solves,"
          "refinements,wall_ms");
    size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) {
      ++lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 9);
    }
    CHECK(lines == result.rows.size());

    const auto again = compare_suite(suite, copts);
    CHECK(strip_wall(compare_csv(again)) == strip_wall(csv));
  }

  SECTION("a tampered label is flagged") {
    auto bad = suite;
    bad[0].expected = bad[0].expected == "SAT" ? "UNSAT" : "SAT";
    const auto flagged = compare_suite(bad, copts);
    CHECK_FALSE(flagged.agree());
    CHECK(flagged.disagreements.size() >= 1);
  }
}

TEST_CASE("cli verify reports verdicts through exit codes") {
  const fs::path dir = fresh_dir("cli_verify");
  const fs::path net_path = dir / "net.json";
  const fs::path query_path = dir / "query.json";
  save_network(example_network(), net_path.string());

  SECTION("unsat exits 20") {
    save_query(example_query(14.0), query_path.string());
    const auto r = run_cli("verify " + net_path.string() + " " + query_path.string(), dir);
    CHECK(r.code == 20);
    CHECK(r.out.find("UNSAT") != std::string::npos);
  }

  SECTION("sat exits 10 and prints a witness") {
    save_query(example_query(8.0), query_path.string());
    for (const std::string mode : {"plain", "ar", "ar4"}) {
      const auto r = run_cli(
          "verify " + net_path.string() + " " + query_path.string() + " --mode " + mode, dir);
      INFO("mode " << mode);
      CHECK(r.code == 10);
      CHECK(r.out.find("SAT") != std::string::npos);
      CHECK(r.out.find("witness:") != std::string::npos);
    }
  }

  SECTION("json reports carry the run report") {
    save_query(example_query(8.0), query_path.string());
    const auto r =
        run_cli("verify " + net_path.string() + " " + query_path.string() + " --json", dir);
    CHECK(r.code == 10);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("verdict") == "SAT");
    CHECK(j.at("mode") == "ar4");
    CHECK(j.contains("witness"));
    CHECK(j.at("stats").contains("lp_solves"));
  }

  SECTION("a state cap exits 30") {
    save_query(example_query(14.0), query_path.string());
    const auto r = run_cli(
        "verify " + net_path.string() + " " + query_path.string() + " --max-states 1", dir);
    CHECK(r.code == 30);
    CHECK(r.out.find("TIMEOUT") != std::string::npos);
  }

  SECTION("less-than queries negate the network") {
    nlohmann::json lt{{"input_lower", {0.0, 0.0}},
                      {"input_upper", {1.0, 1.0}},
                      {"output_lt", -5.0}};
    {
      std::ofstream out(query_path);
      out << lt.dump() << '\n';
    }
    // The output never drops below -3, so "output < -5" is unsat.
    const auto r = run_cli("verify " + net_path.string() + " " + query_path.string(), dir);
    CHECK(r.code == 20);

    lt["output_lt"] = 20.0;
    {
      std::ofstream out(query_path);
      out << lt.dump() << '\n';
    }
    const auto r2 = run_cli("verify " + net_path.string() + " " + query_path.string(), dir);
    CHECK(r2.code == 10);
  }

  SECTION("errors exit 1") {
    save_query(example_query(14.0), query_path.string());
    const auto missing = run_cli("verify " + (dir / "nope.json").string() + " " +
                                     query_path.string(), dir);
    CHECK(missing.code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);

    const auto bad_mode = run_cli(
        "verify " + net_path.string() + " " + query_path.string() + " --mode bogus", dir);
    CHECK(bad_mode.code == 1);
  }

  SECTION("RESINET_LOG=info surfaces refinement progress") {
    save_query(example_query(14.0), query_path.string());
    const auto quiet = run_cli("verify " + net_path.string() + " " + query_path.string(), dir);
    CHECK(quiet.err.empty());
    const auto chatty = run_cli("verify " + net_path.string() + " " + query_path.string(), dir,
                                "RESINET_LOG=info");
    CHECK(chatty.err.find("[resinet]") != std::string::npos);
    CHECK(chatty.err.find("spurious witness") != std::string::npos);
  }
}

TEST_CASE("cli traces validate and corrupt traces are rejected") {
  const fs::path dir = fresh_dir("cli_trace");
  const fs::path net_path = dir / "net.json";
  const fs::path query_path = dir / "query.json";
  const fs::path trace_path = dir / "run.trace.jsonl";
  save_network(example_network(), net_path.string());
  save_query(example_query(14.0), query_path.string());

  const auto r = run_cli("verify " + net_path.string() + " " + query_path.string() + " --trace " +
                             trace_path.string(),
                         dir);
  REQUIRE(r.code == 20);
  REQUIRE(fs::exists(trace_path));

  const auto ok = run_cli("validate-trace " + trace_path.string() + " --json", dir);
  CHECK(ok.code == 0);
  const auto report = nlohmann::json::parse(ok.out);
  CHECK(report.at("ok") == true);
  CHECK(report.at("events").get<int>() > 0);
  CHECK(report.at("lp_replays").get<int>() > 0);

  SECTION("flipping a propagated phase breaks the replay") {
    auto events = read_trace_file(trace_path.string());
    bool flipped = false;
    std::ofstream out(trace_path, std::ios::trunc);
    for (auto& e : events) {
      if (!flipped && e.value("event", "") == "propagate") {
        e["phase"] = e.at("phase") == "active" ? "inactive" : "active";
        flipped = true;
      }
      out << e.dump() << '\n';
    }
    out.close();
    REQUIRE(flipped);
    const auto bad = run_cli("validate-trace " + trace_path.string(), dir);
    CHECK(bad.code == 1);
    CHECK(bad.out.find("trace corrupt") != std::string::npos);
  }

  SECTION("non-json lines are a parse error") {
    std::ofstream out(trace_path, std::ios::app);
    out << "not json\n";
    out.close();
    const auto bad = run_cli("validate-trace " + trace_path.string(), dir);
    CHECK(bad.code == 1);
    CHECK(bad.err.find("error:") != std::string::npos);
  }
}

TEST_CASE("cli gen and compare work end to end") {
  const fs::path dir = fresh_dir("cli_gen");
  const fs::path suite_dir = dir / "suite";

  const auto gen = run_cli("gen --out " + suite_dir.string() + " --count 6 --seed 5", dir);
  REQUIRE(gen.code == 0);
  CHECK(gen.out.find("wrote 6 instances") != std::string::npos);
  REQUIRE(fs::exists(suite_dir / "manifest.json"));

  const fs::path csv_path = dir / "rows.csv";
  const auto cmp = run_cli("compare --suite " + suite_dir.string() +
                               " --modes plain,ar4 --workers 2 --out " + csv_path.string() +
                               " --json",
                           dir);
  CHECK(cmp.code == 0);
  const auto summary = nlohmann::json::parse(cmp.out);
  CHECK(summary.at("instances") == 6);
  CHECK(summary.at("modes").contains("plain"));
  CHECK(summary.at("modes").contains("ar4"));
  CHECK(summary.at("disagreements").empty());

  const std::string csv = slurp(csv_path);
  CHECK(csv.rfind("instance,mode,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 6 * 2);

  SECTION("a tampered manifest label makes compare exit 2") {
    auto manifest = nlohmann::json::parse(slurp(suite_dir / "manifest.json"));
    auto& first = manifest.at("instances").at(0);
    first["verdict"] = first.at("verdict") == "SAT" ? "UNSAT" : "SAT";
    {
      std::ofstream out(suite_dir / "manifest.json", std::ios::trunc);
      out << manifest.dump(2) << '\n';
    }
    const auto bad = run_cli("compare --suite " + suite_dir.string() + " --modes ar4", dir);
    CHECK(bad.code == 2);
    CHECK(bad.err.find("disagreement") != std::string::npos);
  }
}
