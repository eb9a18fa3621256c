#pragma once

#include <map>
#include <optional>

#include <json.hpp>

#include "resinet/abstraction.hpp"

namespace resinet {

enum class Phase { kActive, kInactive };

inline const char* phase_name(Phase p) { return p == Phase::kActive ? "active" : "inactive"; }

// A phase literal over a hidden neuron: positive means "active".
struct PhaseLiteral {
  NeuronId neuron;
  bool positive = true;
  bool operator==(const PhaseLiteral&) const = default;
};

inline Phase literal_phase(const PhaseLiteral& lit) {
  return lit.positive ? Phase::kActive : Phase::kInactive;
}

// The phase decision a literal blocks; record_split stores negations, so a
// branch is refuted exactly when all its stored literals are falsified.
inline PhaseLiteral blocking_literal(const NeuronId& n, Phase chosen) {
  return PhaseLiteral{n, chosen == Phase::kInactive};
}

struct SplitRecord {
  NeuronId neuron;
  Phase phase;
  bool operator==(const SplitRecord&) const = default;
};

// Hidden-neuron inventory of the network a clause was learned on.
struct HiddenInfo {
  NeuronId neuron;
  NeuronClass cls;
};

// One refinement a clause survived: the undone merge plus its class data.
struct RenameEntry {
  NeuronId abstract_neuron;
  NeuronId left;
  NeuronId right;
  Influence influence;
};

struct Clause {
  int id = -1;
  std::vector<PhaseLiteral> literals;
  // Guard metadata, frozen at learn time.
  std::vector<SplitRecord> learn_splits;
  std::vector<HiddenInfo> learn_hidden;
  std::vector<RenameEntry> renames;
  int learned_iteration = 0;
};

// Residual state threaded through a CEGAR run. gamma is the clause store,
// branch_record the blocking literals of the current branch, and
// abstraction_record points at the driver's merge history.
struct GammaContext {
  std::vector<Clause> gamma;
  std::vector<PhaseLiteral> branch_record;
  const AbstractionRecord* abstraction_record = nullptr;
  std::vector<HiddenInfo> current_hidden;
  int iteration = 0;
  int next_clause_id = 0;
};

// Caches the hidden-neuron inventory used as learn metadata. classes may be
// null when the network is not pure (plain mode); clauses learned then carry
// no metadata and are never guarded, which is fine because they also never
// cross a refinement.
inline void set_current_network(GammaContext& ctx, const Network& net,
                                const Classification* classes) {
  ctx.current_hidden.clear();
  for (int l = 1; l < net.depth(); ++l) {
    for (int i = 0; i < net.width(l); ++i) {
      const NeuronId id = net.id_at(l, i);
      NeuronClass cls{Sign::kPos, Influence::kInc};
      if (classes) {
        const auto it = classes->find(id.uid);
        if (it == classes->end()) {
          throw EngineError(cat("set_current_network: uid ", id.uid, " missing from classes"));
        }
        cls = it->second;
      }
      ctx.current_hidden.push_back(HiddenInfo{id, cls});
    }
  }
}

inline bool branch_has(const GammaContext& ctx, int uid) {
  for (const auto& lit : ctx.branch_record) {
    if (lit.neuron.uid == uid) return true;
  }
  return false;
}

// Appends the negation of the chosen phase to branch_record.
inline void record_split(GammaContext& ctx, const NeuronId& n, Phase chosen) {
  if (branch_has(ctx, n.uid)) {
    throw EngineError(cat("record_split: uid ", n.uid, " already split on this branch"));
  }
  ctx.branch_record.push_back(blocking_literal(n, chosen));
}

inline void pop_branch_to(GammaContext& ctx, size_t mark) {
  if (mark > ctx.branch_record.size()) {
    throw EngineError("pop_branch_to: mark beyond branch_record");
  }
  ctx.branch_record.resize(mark);
}

// The splits currently applied, i.e. the negations of branch_record.
inline std::vector<SplitRecord> current_splits(const GammaContext& ctx) {
  std::vector<SplitRecord> out;
  out.reserve(ctx.branch_record.size());
  for (const auto& lit : ctx.branch_record) {
    out.push_back(SplitRecord{lit.neuron, lit.positive ? Phase::kInactive : Phase::kActive});
  }
  return out;
}

// Failure rule: the current branch is refuted, so its blocking literals form
// a valid clause. An empty branch means the whole query is refuted; no clause
// is learned and the caller reports UNSAT for the run.
inline std::optional<Clause> learn_on_failure(GammaContext& ctx) {
  if (ctx.branch_record.empty()) return std::nullopt;
  Clause c;
  c.id = ctx.next_clause_id++;
  c.literals = ctx.branch_record;
  c.learn_splits = current_splits(ctx);
  c.learn_hidden = ctx.current_hidden;
  c.learned_iteration = ctx.iteration;
  ctx.gamma.push_back(c);
  return c;
}

// Clause renaming after undoing one merge. For an inc neuron only negative
// literals survive (split into one per refined neuron); for dec only positive
// ones. Clauses holding the unsupported polarity are dropped. On top of the
// splitting rule, any clause with a literal of unsafe polarity on a neuron in
// a layer after the refined one is dropped too: abstraction only raises inc
// values and lowers dec values downstream, so r on an inc neuron or not-r on
// a dec neuron cannot be assumed valid once an upstream merge is undone.
// Everything kept is therefore valid for the refined network. branch_record
// is cleared because the new iteration starts a fresh search.
inline void rename_after_refinement(GammaContext& ctx, const MergeEntry& undone,
                                    const Classification& classes) {
  const auto cls_it = classes.find(undone.merged.uid);
  if (cls_it == classes.end()) {
    throw EngineError(cat("rename: uid ", undone.merged.uid, " missing from classes"));
  }
  const Influence inf = cls_it->second.influence;
  const bool supported_positive = inf == Influence::kDec;
  const int refined_layer = undone.merged.layer;

  std::vector<Clause> kept;
  kept.reserve(ctx.gamma.size());
  for (auto& c : ctx.gamma) {
    bool drop = false;
    bool touched = false;
    std::vector<PhaseLiteral> lits;
    lits.reserve(c.literals.size() + 1);
    for (const auto& lit : c.literals) {
      if (lit.neuron.uid == undone.merged.uid) {
        if (lit.positive != supported_positive) {
          drop = true;
          break;
        }
        touched = true;
        lits.push_back(PhaseLiteral{undone.left, lit.positive});
        lits.push_back(PhaseLiteral{undone.right, lit.positive});
      } else {
        lits.push_back(lit);
      }
    }
    if (!drop) {
      for (const auto& lit : lits) {
        if (lit.neuron.layer <= refined_layer) continue;
        const auto it = classes.find(lit.neuron.uid);
        if (it == classes.end()) {
          throw EngineError(cat("rename: uid ", lit.neuron.uid, " missing from classes"));
        }
        const bool unsafe = it->second.influence == Influence::kInc ? lit.positive : !lit.positive;
        if (unsafe) {
          drop = true;
          break;
        }
      }
    }
    if (drop) continue;
    c.literals = std::move(lits);
    if (touched) {
      c.renames.push_back(RenameEntry{undone.merged, undone.left, undone.right, inf});
    }
    kept.push_back(std::move(c));
  }
  ctx.gamma = std::move(kept);
  ctx.branch_record.clear();
}

namespace detail {

inline bool splits_contain(const std::vector<SplitRecord>& splits, int uid, Phase p) {
  for (const auto& s : splits) {
    if (s.neuron.uid == uid && s.phase == p) return true;
  }
  return false;
}

// Guard for one rename entry of a metadata clause. forced_uid is the refined
// neuron the caller is about to force; it must still be unsplit.
inline bool guard_holds_for(const Clause& c, const RenameEntry& entry,
                            const std::vector<SplitRecord>& branch,
                            const std::vector<HiddenInfo>& current_hidden, int forced_uid) {
  const int refined_layer = entry.abstract_neuron.layer;
  const Phase learn_phase = entry.influence == Influence::kInc ? Phase::kActive : Phase::kInactive;

  // (ii), learn side: the abstract neuron must have been split to its
  // characteristic phase when the clause was learned.
  if (!splits_contain(c.learn_splits, entry.abstract_neuron.uid, learn_phase)) return false;

  for (const auto& s : c.learn_splits) {
    if (s.neuron.uid == entry.abstract_neuron.uid) continue;
    if (s.neuron.layer < refined_layer ||
        (s.neuron.layer == refined_layer && s.neuron.uid != entry.abstract_neuron.uid)) {
      // (i): earlier-layer and same-layer context must be reproduced exactly.
      if (!splits_contain(branch, s.neuron.uid, s.phase)) return false;
    } else if (s.neuron.layer > refined_layer) {
      // (iii), learn side: strictly later splits must all sit on the safe
      // phase of their class.
      bool found = false;
      for (const auto& h : c.learn_hidden) {
        if (h.neuron.uid == s.neuron.uid) {
          const Phase safe =
              h.cls.influence == Influence::kInc ? Phase::kActive : Phase::kInactive;
          found = s.phase == safe;
          break;
        }
      }
      if (!found) return false;
    }
  }
  // (iii), learn side continued: every later-layer hidden neuron of the
  // learn-time network must actually have been split (to its safe phase).
  for (const auto& h : c.learn_hidden) {
    if (h.neuron.layer <= refined_layer) continue;
    const Phase safe = h.cls.influence == Influence::kInc ? Phase::kActive : Phase::kInactive;
    if (!splits_contain(c.learn_splits, h.neuron.uid, safe)) return false;
  }

  // (ii), current side: of the refined pair, the partner of the literal being
  // forced must already sit on the learn phase, and the forced one must still
  // be free.
  for (const auto& lit : c.literals) {
    const int uid = lit.neuron.uid;
    if (uid != entry.left.uid && uid != entry.right.uid) continue;
    if (uid == forced_uid) {
      for (const auto& s : branch) {
        if (s.neuron.uid == uid) return false;
      }
    } else if (!splits_contain(branch, uid, learn_phase)) {
      return false;
    }
  }

  // (iii), current side: every later-layer hidden neuron of the current
  // network must be split to the safe phase of its class. The neuron about
  // to be forced is exempt here just as in (ii): it cannot be split yet.
  for (const auto& h : current_hidden) {
    if (h.neuron.layer <= refined_layer || h.neuron.uid == forced_uid) continue;
    const Phase safe = h.cls.influence == Influence::kInc ? Phase::kActive : Phase::kInactive;
    if (!splits_contain(branch, h.neuron.uid, safe)) return false;
  }
  return true;
}

}  // namespace detail

// Full guard: every refinement the clause crossed must pass.
inline bool guard_holds(const GammaContext& ctx, const Clause& c,
                        const std::vector<SplitRecord>& branch, int forced_uid) {
  for (const auto& entry : c.renames) {
    if (!detail::guard_holds_for(c, entry, branch, ctx.current_hidden, forced_uid)) return false;
  }
  return true;
}

struct ForcedLiteral {
  PhaseLiteral literal;
  int clause_id = -1;
  bool pruned = false;  // true when the clause carries rename metadata
};

struct PropagationResult {
  std::vector<ForcedLiteral> forced;
  bool conflict = false;
  int conflict_clause = -1;
};

// Unit propagation over gamma relative to the current branch. Metadata
// clauses additionally need their guard to hold. Forced literals are
// returned, not applied; the engine records and asserts them. A clause with
// every literal falsified (or two clauses forcing opposite phases) reports a
// conflict, which the engine treats as a branch failure. Conflicts skip the
// guard: the rename filter keeps only clauses valid for the current network,
// so a fully falsified clause refutes the branch no matter how it got here.
inline PropagationResult propagate(const GammaContext& ctx) {
  PropagationResult res;
  std::map<int, Phase> assigned;
  for (const auto& s : current_splits(ctx)) assigned[s.neuron.uid] = s.phase;

  std::vector<SplitRecord> branch = current_splits(ctx);
  bool changed = true;
  while (changed && !res.conflict) {
    changed = false;
    for (const auto& c : ctx.gamma) {
      bool satisfied = false;
      int unassigned = 0;
      const PhaseLiteral* unit = nullptr;
      for (const auto& lit : c.literals) {
        const auto it = assigned.find(lit.neuron.uid);
        if (it == assigned.end()) {
          ++unassigned;
          unit = &lit;
        } else if (it->second == literal_phase(lit)) {
          satisfied = true;
          break;
        }
      }
      if (satisfied) continue;
      if (unassigned == 0) {
        res.conflict = true;
        res.conflict_clause = c.id;
        break;
      }
      if (unassigned > 1) continue;
      if (!c.renames.empty() && !guard_holds(ctx, c, branch, unit->neuron.uid)) continue;
      const Phase p = literal_phase(*unit);
      assigned[unit->neuron.uid] = p;
      branch.push_back(SplitRecord{unit->neuron, p});
      res.forced.push_back(ForcedLiteral{*unit, c.id, !c.renames.empty()});
      changed = true;
    }
  }
  return res;
}

inline nlohmann::json literal_json(const PhaseLiteral& lit) {
  return {{"uid", lit.neuron.uid}, {"layer", lit.neuron.layer}, {"positive", lit.positive}};
}

inline nlohmann::json clause_json(const Clause& c) {
  nlohmann::json lits = nlohmann::json::array();
  for (const auto& lit : c.literals) lits.push_back(literal_json(lit));
  nlohmann::json renames = nlohmann::json::array();
  for (const auto& r : c.renames) {
    renames.push_back({{"abstract_uid", r.abstract_neuron.uid},
                       {"layer", r.abstract_neuron.layer},
                       {"left_uid", r.left.uid},
                       {"right_uid", r.right.uid},
                       {"influence", r.influence == Influence::kInc ? "inc" : "dec"}});
  }
  return {{"id", c.id},
          {"literals", lits},
          {"renames", renames},
          {"learned_iteration", c.learned_iteration}};
}

}  // namespace resinet
