#pragma once

#include "resinet/cegar.hpp"

namespace resinet {

struct TraceIssue {
  size_t event_index = 0;
  std::string message;
};

struct ValidationReport {
  size_t events = 0;
  size_t lp_replays = 0;
  size_t propagation_checks = 0;
  std::vector<TraceIssue> issues;
  bool ok() const { return issues.empty(); }
};

namespace detail {

inline NeuronClass class_from_name(const std::string& s) {
  if (s == "pos_inc") return {Sign::kPos, Influence::kInc};
  if (s == "pos_dec") return {Sign::kPos, Influence::kDec};
  if (s == "neg_inc") return {Sign::kNeg, Influence::kInc};
  if (s == "neg_dec") return {Sign::kNeg, Influence::kDec};
  throw ParseError(cat("unknown class name: ", s));
}

inline PhaseLiteral literal_from_json(const nlohmann::json& j) {
  return PhaseLiteral{NeuronId{j.at("layer").get<int>(), j.at("uid").get<int>()},
                      j.at("positive").get<bool>()};
}

}  // namespace detail

// Semantic replay of a JSONL trace. Rebuilds the clause store event by
// event, re-runs unit propagation and the guard at every propagate event,
// replays every lp failure as an infeasible tableau, and checks witnesses
// against the traced networks. Any mismatch means the trace (or the engine
// that wrote it) is corrupt.
inline ValidationReport validate_trace(const std::vector<nlohmann::json>& events) {
  ValidationReport report;
  report.events = events.size();

  Network original;
  Network cur;
  bool have_original = false;
  bool have_net = false;
  Query query;       // the query the run was started with
  Query iter_query;  // the box actually encoded this iteration
  std::string mode = "plain";
  Classification classes;
  GammaContext replica;

  const auto issue = [&](size_t at, std::string msg) {
    report.issues.push_back(TraceIssue{at, std::move(msg)});
  };

  for (size_t at = 0; at < events.size(); ++at) {
    const nlohmann::json& e = events[at];
    const std::string type = e.value("event", "");
    try {
      if (type == "run_start") {
        original = parse_network(e.at("network"));
        have_original = true;
        mode = e.at("mode").get<std::string>();
        query.input_lower = e.at("query").at("input_lower").get<Vec>();
        query.input_upper = e.at("query").at("input_upper").get<Vec>();
        query.output_threshold = e.at("query").at("output_gt").get<double>();
        iter_query = query;
      } else if (type == "iteration") {
        cur = parse_network(e.at("network"));
        cur.input_uids = e.at("uids").at("inputs").get<std::vector<int>>();
        int max_uid = -1;
        for (size_t l = 0; l < cur.layers.size(); ++l) {
          cur.layers[l].uids = e.at("uids").at("layers").at(l).get<std::vector<int>>();
          for (int u : cur.layers[l].uids) max_uid = std::max(max_uid, u);
        }
        for (int u : cur.input_uids) max_uid = std::max(max_uid, u);
        cur.next_uid = max_uid + 1;
        have_net = true;

        // Abstraction runs on the origin-shifted box; the event records the
        // box the engine actually encoded.
        if (e.contains("query") && e.at("query").is_object()) {
          iter_query.input_lower = e.at("query").at("input_lower").get<Vec>();
          iter_query.input_upper = e.at("query").at("input_upper").get<Vec>();
          iter_query.output_threshold = e.at("query").at("output_gt").get<double>();
        }

        classes.clear();
        if (e.contains("classes") && e.at("classes").is_object()) {
          for (const auto& [key, val] : e.at("classes").items()) {
            classes[std::stoi(key)] = detail::class_from_name(val.get<std::string>());
          }
        }
        if (e.contains("undone") && e.at("undone").is_object()) {
          const auto& u = e.at("undone");
          MergeEntry me;
          me.merged = NeuronId{u.at("layer").get<int>(), u.at("merged_uid").get<int>()};
          me.left = NeuronId{u.at("layer").get<int>(), u.at("left_uid").get<int>()};
          me.right = NeuronId{u.at("layer").get<int>(), u.at("right_uid").get<int>()};
          if (mode == "ar4") rename_after_refinement(replica, me, classes);
        }
        if (mode != "ar4") replica.gamma.clear();
        replica.branch_record.clear();
        set_current_network(replica, cur, classes.empty() ? nullptr : &classes);
      } else if (type == "split") {
        const NeuronId n{e.at("layer").get<int>(), e.at("uid").get<int>()};
        const Phase p =
            e.at("phase").get<std::string>() == "active" ? Phase::kActive : Phase::kInactive;
        if (branch_has(replica, n.uid)) {
          issue(at, cat("split on uid ", n.uid, " which is already split"));
        } else {
          record_split(replica, n, p);
        }
      } else if (type == "propagate") {
        const NeuronId n{e.at("layer").get<int>(), e.at("uid").get<int>()};
        const Phase p =
            e.at("phase").get<std::string>() == "active" ? Phase::kActive : Phase::kInactive;
        const int clause_id = e.at("clause").get<int>();
        const bool pruned = e.at("pruned").get<bool>();
        ++report.propagation_checks;
        const PropagationResult res = propagate(replica);
        const ForcedLiteral* found = nullptr;
        for (const ForcedLiteral& f : res.forced) {
          if (f.literal.neuron.uid == n.uid) {
            found = &f;
            break;
          }
        }
        if (!found) {
          issue(at, cat("forced literal on uid ", n.uid, " is not reproducible"));
        } else {
          if (literal_phase(found->literal) != p) {
            issue(at, cat("uid ", n.uid, " forced to the opposite phase on replay"));
          }
          if (found->clause_id != clause_id) {
            issue(at, cat("uid ", n.uid, " forced by clause ", found->clause_id,
                          " on replay, trace says ", clause_id));
          }
          if (found->pruned != pruned) {
            issue(at, cat("uid ", n.uid, ": prune flag mismatch on replay"));
          }
        }
        if (!branch_has(replica, n.uid)) record_split(replica, n, p);
      } else if (type == "failure") {
        const std::string reason = e.value("reason", "");
        const bool learned_present = e.contains("learned") && !e.at("learned").is_null();
        if (reason != "lp") {
          // Conflicted branches learn nothing; the conflict itself must be
          // reproducible from the replica's clause store.
          if (learned_present) {
            issue(at, "conflict failure unexpectedly learned a clause");
          }
          const PropagationResult res = propagate(replica);
          if (!res.conflict) {
            issue(at, "conflict failure does not reproduce a conflict");
          }
          continue;
        }
        if (!have_net) {
          issue(at, "lp failure before any iteration event");
          continue;
        }
        ++report.lp_replays;
        Tableau t = encode(cur, iter_query);
        bool applied = true;
        for (const SplitRecord& s : current_splits(replica)) {
          const ReluPair* pr = t.find_relu(s.neuron.uid);
          if (!pr) {
            issue(at, cat("branch uid ", s.neuron.uid, " missing from the tableau"));
            applied = false;
            break;
          }
          if (s.phase == Phase::kActive) {
            t.assert_lower(pr->b_var, 0.0);
            Vec link(static_cast<size_t>(t.num_vars()), 0.0);
            link[static_cast<size_t>(pr->f_var)] = 1.0;
            link[static_cast<size_t>(pr->b_var)] = -1.0;
            t.add_row(std::move(link), 0.0);
          } else {
            t.assert_upper(pr->b_var, 0.0);
            t.assert_upper(pr->f_var, 0.0);
          }
        }
        if (applied && t.solve() != LpStatus::kInfeasible) {
          issue(at, "refuted branch is feasible on replay");
        }
        if (!learned_present) {
          if (!replica.branch_record.empty()) {
            issue(at, "lp failure learned nothing on a nonempty branch");
          }
          continue;
        }
        const auto& learned = e.at("learned");
        std::vector<PhaseLiteral> lits;
        for (const auto& jl : learned.at("literals")) {
          lits.push_back(detail::literal_from_json(jl));
        }
        if (lits != replica.branch_record) {
          issue(at, "learned clause does not match the branch record");
        }
        Clause c;
        c.id = learned.at("id").get<int>();
        if (c.id != replica.next_clause_id) {
          issue(at, cat("clause id ", c.id, " out of sequence, expected ",
                        replica.next_clause_id));
        }
        replica.next_clause_id = c.id + 1;
        c.literals = lits;
        c.learn_splits = current_splits(replica);
        c.learn_hidden = replica.current_hidden;
        c.learned_iteration = learned.value("learned_iteration", 0);
        replica.gamma.push_back(std::move(c));
      } else if (type == "backtrack") {
        const size_t depth = e.at("depth").get<size_t>();
        if (depth > replica.branch_record.size()) {
          issue(at, "backtrack beyond the branch record");
        } else {
          pop_branch_to(replica, depth);
        }
      } else if (type == "success") {
        if (!have_net) {
          issue(at, "success before any iteration event");
          continue;
        }
        const Vec witness = e.at("witness").get<Vec>();
        if (static_cast<int>(witness.size()) != cur.input_width) {
          issue(at, "witness dimension mismatch");
          continue;
        }
        // The LP assignment satisfies the relus within kSuccessTol, so the
        // exact forward pass can drift a little; anything beyond this slack
        // is corruption, not rounding.
        const double out = evaluate(cur, witness);
        if (out < iter_query.output_threshold + kStrict - 1e-3) {
          issue(at, cat("success witness evaluates to ", out, ", below the threshold"));
        }
      } else if (type == "verdict") {
        if (e.at("verdict").get<std::string>() == "SAT" && have_original) {
          const Vec witness = e.at("witness").get<Vec>();
          if (!check_witness(original, query, witness)) {
            issue(at, "final SAT witness fails on the original network");
          }
        }
      } else {
        issue(at, cat("unknown event type: ", type));
      }
    } catch (const std::exception& ex) {
      issue(at, cat("event replay error: ", ex.what()));
    }
  }
  return report;
}

inline ValidationReport validate_trace_file(const std::string& path) {
  return validate_trace(read_trace_file(path));
}

}  // namespace resinet
