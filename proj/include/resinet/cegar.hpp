#pragma once

#include <algorithm>

#include "resinet/search.hpp"

namespace resinet {

enum class Mode { kPlain, kAr, kAr4 };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kPlain: return "plain";
    case Mode::kAr: return "ar";
    default: return "ar4";
  }
}

inline Mode parse_mode(const std::string& s) {
  if (s == "plain") return Mode::kPlain;
  if (s == "ar") return Mode::kAr;
  if (s == "ar4") return Mode::kAr4;
  throw ParseError(cat("unknown mode: ", s, " (expected plain, ar or ar4)"));
}

struct RunOptions {
  Mode mode = Mode::kAr4;
  double timeout_sec = 0;   // 0 = unlimited
  int64_t max_states = 0;   // per verify call, 0 = unlimited
  uint64_t seed = 0;        // recorded only; the solve path is deterministic
  TraceWriter* trace = nullptr;
  MergePolicy policy;       // abstraction policy override, default saturation
};

struct RunReport {
  Verdict verdict = Verdict::unsat();
  SearchStats stats;
  int iterations = 0;
  int refinements = 0;
  int spurious_witnesses = 0;
  double wall_ms = 0;
  Mode mode = Mode::kAr4;

  nlohmann::json to_json() const {
    nlohmann::json j{{"verdict", verdict_name(verdict.kind)},
                     {"mode", mode_name(mode)},
                     {"iterations", iterations},
                     {"refinements", refinements},
                     {"spurious_witnesses", spurious_witnesses},
                     {"wall_ms", wall_ms},
                     {"stats",
                      {{"visited_states", stats.visited_states},
                       {"splits", stats.splits},
                       {"propagations", stats.propagations},
                       {"prune_hits", stats.prune_hits},
                       {"lp_solves", stats.lp_solves}}}};
    if (verdict.is_sat()) j["witness"] = verdict.witness;
    return j;
  }
};

// A spurious witness satisfies the abstract network but not the original.
inline bool is_real_sat(const Network& original, const Query& q, const Vec& witness) {
  return check_witness(original, q, witness);
}

namespace detail {

inline nlohmann::json uids_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) layers.push_back(layer.uids);
  return {{"inputs", net.input_uids}, {"layers", layers}};
}

inline nlohmann::json classes_json(const Classification& classes) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [uid, cls] : classes) j[std::to_string(uid)] = class_name(cls);
  return j;
}

}  // namespace detail

// Top-level entry point. plain verifies the network as-is. ar abstracts to
// saturation and refines on spurious witnesses with residual state thrown
// away between iterations. ar4 keeps the clause store, renaming it across
// each refinement and propagating under the guard.
inline RunReport run(const Network& net, const Query& q, const RunOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  SearchLimits limits;
  limits.max_states = opts.max_states;
  if (opts.timeout_sec > 0) {
    limits.deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(opts.timeout_sec));
  }

  RunReport report;
  report.mode = opts.mode;
  const auto finish = [&](Verdict v) {
    report.verdict = std::move(v);
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                               start)
                         .count();
    if (opts.trace) {
      nlohmann::json e = report.to_json();
      e["event"] = "verdict";
      opts.trace->event(std::move(e));
    }
    return report;
  };

  if (opts.trace) {
    opts.trace->event({{"event", "run_start"},
                       {"mode", mode_name(opts.mode)},
                       {"network", serialize_network(net)},
                       {"query", serialize_query(q)},
                       {"timeout_sec", opts.timeout_sec},
                       {"max_states", opts.max_states}});
  }

  if (opts.mode == Mode::kPlain) {
    GammaContext ctx;
    if (opts.trace) {
      opts.trace->event({{"event", "iteration"},
                         {"index", 0},
                         {"network", serialize_network(net)},
                         {"query", serialize_query(q)},
                         {"uids", detail::uids_json(net)},
                         {"classes", nullptr},
                         {"record_len", 0},
                         {"undone", nullptr}});
    }
    VerifyOptions vopts;
    vopts.propagate = true;
    vopts.trace = opts.trace;
    VerifyResult vr = verify(net, q, ctx, limits, vopts);
    report.stats = vr.stats;
    report.iterations = 1;
    return finish(vr.verdict);
  }

  // Merging is only an over-approximation when every merge source is
  // nonnegative. Relu outputs are, raw inputs are not, so the box is shifted
  // to the origin first; witnesses map back by adding the lower corner.
  const auto [base, bq] = shift_box_to_origin(net, q);
  Network pure = purify(base);
  Classification classes = classify(pure);
  auto [cur, record] =
      abstract_to_saturation(pure, classes, opts.policy ? opts.policy : default_merge_policy);

  GammaContext ctx;
  ctx.abstraction_record = &record;
  std::optional<MergeEntry> undone;
  for (int it = 0;; ++it) {
    if (opts.trace) {
      nlohmann::json e{{"event", "iteration"},
                       {"index", it},
                       {"network", serialize_network(cur)},
                       {"query", serialize_query(bq)},
                       {"uids", detail::uids_json(cur)},
                       {"classes", detail::classes_json(classes)},
                       {"record_len", record.size()},
                       {"undone", nullptr}};
      if (undone) {
        e["undone"] = {{"merged_uid", undone->merged.uid},
                       {"layer", undone->merged.layer},
                       {"left_uid", undone->left.uid},
                       {"right_uid", undone->right.uid}};
      }
      opts.trace->event(std::move(e));
    }

    if (opts.mode == Mode::kAr) ctx.gamma.clear();
    ctx.iteration = it;
    VerifyOptions vopts;
    vopts.propagate = opts.mode == Mode::kAr4;
    vopts.classes = &classes;
    vopts.trace = opts.trace;
    vopts.iteration = it;
    VerifyResult vr = verify(cur, bq, ctx, limits, vopts);
    report.stats.add(vr.stats);
    ++report.iterations;

    if (vr.verdict.is_timeout()) return finish(Verdict::timeout());
    if (vr.verdict.is_unsat()) return finish(Verdict::unsat());

    Vec w = std::move(vr.verdict.witness);
    for (size_t i = 0; i < w.size(); ++i) {
      w[i] = std::min(std::max(w[i] + q.input_lower[i], q.input_lower[i]), q.input_upper[i]);
    }
    if (is_real_sat(net, q, w)) return finish(Verdict::sat(std::move(w)));
    ++report.spurious_witnesses;
    log_line(LogLevel::kInfo, cat("iteration ", it, ": spurious witness, refining"));
    if (record.empty()) {
      throw EngineError(
          "spurious witness on a network with no abstraction left; "
          "the success tolerance does not cover this instance");
    }
    RefineResult rr = refine_last(cur, record);
    cur = std::move(rr.net);
    record = std::move(rr.record);
    undone = std::move(rr.undone);
    ++report.refinements;
    if (opts.mode == Mode::kAr4) rename_after_refinement(ctx, *undone, classes);
  }
}

}  // namespace resinet
