#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace resinet;
using namespace testutil;

TEST_CASE("verify refutes the example query above the reachable maximum") {
  const Network net = example_network();
  GammaContext ctx;
  const auto res = verify(net, example_query(14.0), ctx);
  CHECK(res.verdict.kind == VerdictKind::kUnsat);
  CHECK(res.stats.visited_states >= 1);
  CHECK(res.stats.splits >= 1);
  CHECK(res.stats.lp_solves >= 1);

  // Every failure with a non-empty branch learns; plain clauses carry no
  // rename metadata.
  CHECK_FALSE(ctx.gamma.empty());
  CHECK(ctx.next_clause_id == static_cast<int>(ctx.gamma.size()));
  for (size_t i = 0; i < ctx.gamma.size(); ++i) {
    CHECK(ctx.gamma[i].id == static_cast<int>(i));
    CHECK(ctx.gamma[i].renames.empty());
  }
  // Sibling phases get forced from fresh failure clauses.
  CHECK(res.stats.propagations >= 1);
  CHECK(res.stats.prune_hits == 0);
}

TEST_CASE("verify finds witnesses below the maximum") {
  const Network net = example_network();

  for (const double threshold : {-1.0, 5.0, 8.0, 8.999}) {
    GammaContext ctx;
    const auto res = verify(net, example_query(threshold), ctx);
    INFO("threshold " << threshold);
    REQUIRE(res.verdict.kind == VerdictKind::kSat);
    CHECK(check_witness(net, example_query(threshold), res.verdict.witness));
  }
}

TEST_CASE("the exact maximum is not exceeded") {
  // max over the box is 9 at (0, 1); "output > 9" must be refuted.
  const Network net = example_network();
  GammaContext ctx;
  const auto res = verify(net, example_query(9.0), ctx);
  CHECK(res.verdict.kind == VerdictKind::kUnsat);
}

TEST_CASE("verify is deterministic") {
  const Network net = example_network();

  SECTION("unsat stats repeat exactly") {
    GammaContext c1, c2;
    const auto r1 = verify(net, example_query(14.0), c1);
    const auto r2 = verify(net, example_query(14.0), c2);
    CHECK(r1.stats.visited_states == r2.stats.visited_states);
    CHECK(r1.stats.splits == r2.stats.splits);
    CHECK(r1.stats.propagations == r2.stats.propagations);
    CHECK(r1.stats.lp_solves == r2.stats.lp_solves);
    CHECK(c1.gamma.size() == c2.gamma.size());
  }

  SECTION("sat witnesses repeat exactly") {
    GammaContext c1, c2;
    const auto r1 = verify(net, example_query(8.0), c1);
    const auto r2 = verify(net, example_query(8.0), c2);
    REQUIRE(r1.verdict.kind == VerdictKind::kSat);
    REQUIRE(r2.verdict.kind == VerdictKind::kSat);
    CHECK(r1.verdict.witness == r2.verdict.witness);
  }
}

TEST_CASE("budget limits produce timeouts") {
  const Network net = example_network();

  SECTION("state cap") {
    GammaContext ctx;
    SearchLimits limits;
    limits.max_states = 1;
    const auto res = verify(net, example_query(14.0), ctx, limits);
    CHECK(res.verdict.kind == VerdictKind::kTimeout);
    CHECK(res.stats.visited_states == 2);
  }

  SECTION("expired deadline") {
    GammaContext ctx;
    SearchLimits limits;
    limits.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
    const auto res = verify(net, example_query(8.0), ctx, limits);
    CHECK(res.verdict.kind == VerdictKind::kTimeout);
    CHECK(res.stats.visited_states == 1);
  }
}

TEST_CASE("initial splits constrain the search") {
  // With v24 and v25 forced inactive the output tops out at 0, so a query
  // that is satisfiable on the full box becomes unsat.
  const Network net = example_network();
  const Query q = example_query(8.0);

  GammaContext free_ctx;
  REQUIRE(verify(net, q, free_ctx).verdict.kind == VerdictKind::kSat);

  GammaContext ctx;
  VerifyOptions opts;
  opts.initial_splits = {SplitRecord{NeuronId{2, kV24}, Phase::kInactive},
                         SplitRecord{NeuronId{2, kV25}, Phase::kInactive}};
  const auto res = verify(net, q, ctx, {}, opts);
  CHECK(res.verdict.kind == VerdictKind::kUnsat);

  SECTION("unknown uids are rejected") {
    GammaContext bad;
    VerifyOptions bad_opts;
    bad_opts.initial_splits = {SplitRecord{NeuronId{2, 77}, Phase::kActive}};
    CHECK_THROWS_AS(verify(net, q, bad, {}, bad_opts), EngineError);
  }
}

TEST_CASE("propagation can be disabled") {
  const Network net = example_network();
  GammaContext ctx;
  VerifyOptions opts;
  opts.propagate = false;
  const auto res = verify(net, example_query(14.0), ctx, {}, opts);
  CHECK(res.verdict.kind == VerdictKind::kUnsat);
  CHECK(res.stats.propagations == 0);
  CHECK(res.stats.prune_hits == 0);
  CHECK_FALSE(ctx.gamma.empty());  // learning is independent of propagation
}

TEST_CASE("traced runs record the search structure") {
  const Network net = example_network();
  GammaContext ctx;
  TraceWriter trace = TraceWriter::in_memory();
  VerifyOptions opts;
  opts.trace = &trace;
  opts.iteration = 5;
  opts.initial_splits = {SplitRecord{NeuronId{1, kV11}, Phase::kActive}};
  const auto res = verify(net, example_query(14.0), ctx, {}, opts);
  REQUIRE(res.verdict.kind == VerdictKind::kUnsat);

  const auto& events = trace.events();
  REQUIRE_FALSE(events.empty());
  int64_t last_seq = -1;
  int64_t failures = 0, splits = 0, guesses = 0, backtracks = 0;
  for (const auto& e : events) {
    CHECK(e.at("iteration") == 5);
    const int64_t seq = e.at("seq").get<int64_t>();
    CHECK(seq > last_seq);
    last_seq = seq;
    const std::string kind = e.at("event");
    if (kind == "split") {
      ++splits;
      CHECK(e.contains("uid"));
      CHECK(e.contains("layer"));
      CHECK((e.at("phase") == "active" || e.at("phase") == "inactive"));
      if (e.at("guess").get<bool>()) ++guesses;
    } else if (kind == "failure") {
      ++failures;
      CHECK(e.contains("reason"));
      CHECK(e.contains("learned"));
    } else if (kind == "backtrack") {
      ++backtracks;
      CHECK(e.contains("depth"));
    } else if (kind == "propagate") {
      CHECK(e.contains("uid"));
      CHECK(e.contains("clause"));
      CHECK(e.contains("pruned"));
    } else {
      FAIL("unexpected event kind " << kind);
    }
  }
  CHECK(events[0].at("event") == "split");
  CHECK(events[0].at("initial") == true);
  CHECK(failures >= 1);
  CHECK(backtracks >= 1);
  CHECK(guesses == res.stats.splits);
  CHECK(splits >= guesses);
}

TEST_CASE("random queries verify deterministically") {
  std::mt19937_64 rng(2026);
  for (int round = 0; round < 10; ++round) {
    const Network net = random_network(rng);
    const Query q = random_box(rng, net.input_width, 0.5);
    GammaContext c1, c2;
    SearchLimits limits;
    limits.max_states = 20000;
    const auto r1 = verify(net, q, c1, limits);
    const auto r2 = verify(net, q, c2, limits);
    INFO("round " << round);
    CHECK(r1.verdict.kind == r2.verdict.kind);
    CHECK(r1.stats.visited_states == r2.stats.visited_states);
    CHECK(r1.stats.splits == r2.stats.splits);
    if (r1.verdict.kind == VerdictKind::kSat) {
      CHECK(check_witness(net, q, r1.verdict.witness));
      CHECK(r1.verdict.witness == r2.verdict.witness);
    }
  }
}
