#pragma once

#include <chrono>

#include "resinet/lp.hpp"
#include "resinet/property.hpp"
#include "resinet/residual.hpp"
#include "resinet/trace.hpp"

namespace resinet {

struct SearchStats {
  int64_t visited_states = 0;  // search-tree nodes entered
  int64_t splits = 0;          // case-split guesses (one per pair guessed)
  int64_t propagations = 0;    // literals forced from gamma
  int64_t prune_hits = 0;      // forced from clauses carrying rename metadata
  int64_t lp_solves = 0;       // actual simplex runs, cache hits excluded

  void add(const SearchStats& o) {
    visited_states += o.visited_states;
    splits += o.splits;
    propagations += o.propagations;
    prune_hits += o.prune_hits;
    lp_solves += o.lp_solves;
  }
};

struct SearchLimits {
  int64_t max_states = 0;  // 0 = unlimited
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct VerifyOptions {
  bool propagate = true;
  const Classification* classes = nullptr;  // learn metadata; null for plain nets
  std::vector<SplitRecord> initial_splits;  // recorded and asserted before the search
  TraceWriter* trace = nullptr;
  int iteration = 0;  // trace tag
};

struct VerifyResult {
  Verdict verdict;
  SearchStats stats;
};

namespace detail {

enum class Outcome { kSat, kUnsat, kTimeout };

class SearchEngine {
 public:
  SearchEngine(const Network& net, const Query& q, GammaContext& ctx,
               const SearchLimits& limits, const VerifyOptions& opts)
      : net_(net), query_(q), ctx_(ctx), limits_(limits), opts_(opts) {}

  SearchStats stats;
  Vec witness;

  void apply_phase(Tableau& t, const ReluPair& p, Phase phase) {
    if (phase == Phase::kActive) {
      t.assert_lower(p.b_var, 0.0);
      Vec link(static_cast<size_t>(t.num_vars()), 0.0);
      link[static_cast<size_t>(p.f_var)] = 1.0;
      link[static_cast<size_t>(p.b_var)] = -1.0;
      t.add_row(std::move(link), 0.0);
    } else {
      t.assert_upper(p.b_var, 0.0);
      t.assert_upper(p.f_var, 0.0);
    }
  }

  // A relu-consistent LP point is only a candidate. The witness is its input
  // part clamped into the box (basic variables may drift a solver tolerance
  // past a bound), and it counts only if the exact forward pass clears the
  // threshold, which is the same judgement check_witness applies afterwards.
  bool check_success(const Tableau& t) {
    const Vec& a = t.assignment();
    for (const ReluPair& p : t.relus) {
      const double want = std::max(0.0, a[static_cast<size_t>(p.b_var)]);
      if (std::abs(a[static_cast<size_t>(p.f_var)] - want) > kSuccessTol) return false;
    }
    Vec x;
    x.reserve(t.input_vars.size());
    for (int v : t.input_vars) {
      x.push_back(std::min(std::max(a[static_cast<size_t>(v)], t.lower(v)), t.upper(v)));
    }
    if (!check_witness(net_, query_, x)) return false;
    witness = std::move(x);
    return true;
  }

  const ReluPair* pick_split(const Tableau& t) const {
    for (const ReluPair& p : t.relus) {
      if (branch_has(ctx_, p.neuron.uid)) continue;
      if (t.lower(p.b_var) < -kEps && t.upper(p.b_var) > kEps) return &p;
    }
    return nullptr;
  }

  Outcome node(Tableau& t) {
    ++stats.visited_states;
    while (true) {
      if (out_of_budget_()) return Outcome::kTimeout;
      if (opts_.propagate && run_propagation_(t)) return Outcome::kUnsat;

      if (!t.solved()) ++stats.lp_solves;
      if (t.solve() == LpStatus::kInfeasible) {
        fail_branch_("lp", true);
        return Outcome::kUnsat;
      }
      if (check_success(t)) {
        trace_({{"event", "success"}, {"witness", witness}});
        return Outcome::kSat;
      }

      const ReluPair* pick = pick_split(t);
      if (!pick) {
        throw EngineError("search: feasible branch has no acceptable witness and no splittable pair");
      }
      const size_t mark = ctx_.branch_record.size();
      ++stats.splits;
      trace_({{"event", "split"},
              {"uid", pick->neuron.uid},
              {"layer", pick->neuron.layer},
              {"phase", "active"},
              {"guess", true}});
      Tableau child = t;
      record_split(ctx_, pick->neuron, Phase::kActive);
      apply_phase(child, *pick, Phase::kActive);
      const Outcome active = node(child);
      if (active != Outcome::kUnsat) return active;
      pop_branch_to(ctx_, mark);
      trace_({{"event", "backtrack"}, {"depth", mark}});

      if (opts_.propagate) {
        if (run_propagation_(t)) return Outcome::kUnsat;
        // The failure usually forces the sibling phase; then this node just
        // carries on under it instead of spawning a second child.
        if (branch_has(ctx_, pick->neuron.uid)) continue;
      }
      trace_({{"event", "split"},
              {"uid", pick->neuron.uid},
              {"layer", pick->neuron.layer},
              {"phase", "inactive"},
              {"guess", false}});
      Tableau sibling = t;
      record_split(ctx_, pick->neuron, Phase::kInactive);
      apply_phase(sibling, *pick, Phase::kInactive);
      const Outcome inactive = node(sibling);
      if (inactive != Outcome::kUnsat) return inactive;
      // Both phases exhausted. Failures deeper down already learned their
      // clauses; the node itself just closes.
      pop_branch_to(ctx_, mark);
      trace_({{"event", "backtrack"}, {"depth", mark}});
      return Outcome::kUnsat;
    }
  }

 private:
  bool out_of_budget_() const {
    if (limits_.max_states > 0 && stats.visited_states > limits_.max_states) return true;
    if (limits_.deadline && std::chrono::steady_clock::now() > *limits_.deadline) return true;
    return false;
  }

  // Runs unit propagation and applies the results; true means conflict.
  bool run_propagation_(Tableau& t) {
    const PropagationResult res = propagate(ctx_);
    for (const ForcedLiteral& f : res.forced) {
      const ReluPair* p = t.find_relu(f.literal.neuron.uid);
      if (!p) throw EngineError(cat("propagate forced unknown uid ", f.literal.neuron.uid));
      record_split(ctx_, f.literal.neuron, literal_phase(f.literal));
      apply_phase(t, *p, literal_phase(f.literal));
      ++stats.propagations;
      if (f.pruned) ++stats.prune_hits;
      trace_({{"event", "propagate"},
              {"uid", f.literal.neuron.uid},
              {"layer", f.literal.neuron.layer},
              {"phase", phase_name(literal_phase(f.literal))},
              {"clause", f.clause_id},
              {"pruned", f.pruned}});
    }
    if (res.conflict) {
      fail_branch_(cat("conflict with clause ", res.conflict_clause), false);
      return true;
    }
    return false;
  }

  // Only LP-refuted branches learn a clause. A conflicted branch extends the
  // negation of the clause it falsified, so anything learned from it would be
  // subsumed; and its LP relaxation may still be feasible, which would break
  // the invariant that every learned clause's negation is LP-infeasible on
  // its source network.
  void fail_branch_(const std::string& reason, bool learn) {
    std::optional<Clause> learned;
    if (learn) learned = learn_on_failure(ctx_);
    nlohmann::json e{{"event", "failure"}, {"reason", reason}};
    e["learned"] = learned ? clause_json(*learned) : nlohmann::json();
    trace_(std::move(e));
  }

  void trace_(nlohmann::json e) {
    if (!opts_.trace) return;
    e["iteration"] = opts_.iteration;
    opts_.trace->event(std::move(e));
  }

  const Network& net_;
  const Query& query_;
  GammaContext& ctx_;
  const SearchLimits& limits_;
  const VerifyOptions& opts_;
};

}  // namespace detail

// Complete search over one network. gamma in ctx persists across calls;
// branch_record is reset here. Sound and complete up to the limits and the
// kStrict margin: kUnsat only after the tree is exhausted, kSat only with a
// concrete in-box assignment whose exact forward pass clears the threshold.
inline VerifyResult verify(const Network& net, const Query& q, GammaContext& ctx,
                           const SearchLimits& limits = {}, const VerifyOptions& opts = {}) {
  validate_query(net, q);
  ctx.branch_record.clear();
  set_current_network(ctx, net, opts.classes);

  Tableau t = encode(net, q);
  detail::SearchEngine engine(net, q, ctx, limits, opts);
  for (const SplitRecord& s : opts.initial_splits) {
    const ReluPair* p = t.find_relu(s.neuron.uid);
    if (!p) throw EngineError(cat("initial split on unknown uid ", s.neuron.uid));
    record_split(ctx, s.neuron, s.phase);
    engine.apply_phase(t, *p, s.phase);
    if (opts.trace) {
      opts.trace->event({{"event", "split"},
                         {"uid", s.neuron.uid},
                         {"layer", s.neuron.layer},
                         {"phase", phase_name(s.phase)},
                         {"guess", false},
                         {"initial", true},
                         {"iteration", opts.iteration}});
    }
  }

  const detail::Outcome out = engine.node(t);
  VerifyResult res{Verdict::unsat(), engine.stats};
  if (out == detail::Outcome::kSat) {
    res.verdict = Verdict::sat(engine.witness);
  } else if (out == detail::Outcome::kTimeout) {
    res.verdict = Verdict::timeout();
  }
  return res;
}

}  // namespace resinet
