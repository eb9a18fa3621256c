#pragma once

#include <functional>
#include <memory>
#include <random>

#include "resinet/preprocess.hpp"

namespace resinet {

struct CannotRefineError : Error {
  using Error::Error;
};

// One merge step: the triple for clause renaming plus the exact pre-merge
// network (max/min are not invertible, so undo works from snapshots).
struct MergeEntry {
  NeuronId merged;
  NeuronId left;
  NeuronId right;
  Network before;
};

using AbstractionRecord = std::vector<MergeEntry>;

inline bool can_abstract(const Network& net, const Classification& classes,
                         const NeuronId& v1, const NeuronId& v2) {
  if (v1.layer != v2.layer || v1.uid == v2.uid) return false;
  if (v1.layer < 1 || v1.layer >= net.depth()) return false;  // hidden layers only
  if (net.index_in_layer(v1) < 0 || net.index_in_layer(v2) < 0) return false;
  const auto c1 = classes.find(v1.uid);
  const auto c2 = classes.find(v2.uid);
  if (c1 == classes.end() || c2 == classes.end()) return false;
  return c1->second == c2->second;
}

// Merges v2 into v1's slot: incoming weights and bias take the max (inc) or
// min (dec) of the pair, outgoing weights the sum. The merged neuron gets a
// fresh uid and inherits the shared class.
inline std::pair<Network, MergeEntry> merge_pair(const Network& net, Classification& classes,
                                                 const NeuronId& v1, const NeuronId& v2) {
  if (!can_abstract(net, classes, v1, v2)) {
    throw EngineError(cat("merge_pair precondition violated for uids ", v1.uid, ", ", v2.uid));
  }
  const NeuronClass cls = classes.at(v1.uid);
  const bool take_max = cls.influence == Influence::kInc;

  Network after = net;
  const int l = v1.layer;
  Layer& cur = after.layer(l);
  Layer& next = after.layer(l + 1);
  const auto i = static_cast<size_t>(after.index_in_layer(v1));
  const auto j = static_cast<size_t>(after.index_in_layer(v2));

  for (size_t p = 0; p < cur.weights[i].size(); ++p) {
    cur.weights[i][p] = take_max ? std::max(cur.weights[i][p], cur.weights[j][p])
                                 : std::min(cur.weights[i][p], cur.weights[j][p]);
  }
  cur.biases[i] = take_max ? std::max(cur.biases[i], cur.biases[j])
                           : std::min(cur.biases[i], cur.biases[j]);
  const int merged_uid = after.fresh_uid();
  cur.uids[i] = merged_uid;

  for (size_t s = 0; s < next.weights.size(); ++s) {
    next.weights[s][i] += next.weights[s][j];
    next.weights[s].erase(next.weights[s].begin() + static_cast<long>(j));
  }
  cur.weights.erase(cur.weights.begin() + static_cast<long>(j));
  cur.biases.erase(cur.biases.begin() + static_cast<long>(j));
  cur.uids.erase(cur.uids.begin() + static_cast<long>(j));

  classes[merged_uid] = cls;
  MergeEntry entry{NeuronId{l, merged_uid}, v1, v2, net};
  return {std::move(after), std::move(entry)};
}

// A policy proposes the next pair to merge, or nothing to stop.
using MergePolicy = std::function<std::optional<std::pair<NeuronId, NeuronId>>(
    const Network&, const Classification&)>;

// First can_abstract pair in layer-major, index-minor order.
inline std::optional<std::pair<NeuronId, NeuronId>> default_merge_policy(
    const Network& net, const Classification& classes) {
  for (int l = 1; l < net.depth(); ++l) {
    for (int i = 0; i < net.width(l); ++i) {
      for (int j = i + 1; j < net.width(l); ++j) {
        const NeuronId a = net.id_at(l, i);
        const NeuronId b = net.id_at(l, j);
        if (can_abstract(net, classes, a, b)) return std::make_pair(a, b);
      }
    }
  }
  return std::nullopt;
}

// Replays a fixed list of merges, then stops.
inline MergePolicy make_scripted_policy(std::vector<std::pair<NeuronId, NeuronId>> pairs) {
  auto pos = std::make_shared<size_t>(0);
  return [pairs = std::move(pairs), pos](const Network&,
                                         const Classification&)
             -> std::optional<std::pair<NeuronId, NeuronId>> {
    if (*pos >= pairs.size()) return std::nullopt;
    return pairs[(*pos)++];
  };
}

// Uniformly random can_abstract pair; used by the fuzz suite.
inline MergePolicy make_seeded_policy(uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const Network& net,
               const Classification& classes) -> std::optional<std::pair<NeuronId, NeuronId>> {
    std::vector<std::pair<NeuronId, NeuronId>> candidates;
    for (int l = 1; l < net.depth(); ++l) {
      for (int i = 0; i < net.width(l); ++i) {
        for (int j = i + 1; j < net.width(l); ++j) {
          const NeuronId a = net.id_at(l, i);
          const NeuronId b = net.id_at(l, j);
          if (can_abstract(net, classes, a, b)) candidates.emplace_back(a, b);
        }
      }
    }
    if (candidates.empty()) return std::nullopt;
    std::uniform_int_distribution<size_t> dist(0, candidates.size() - 1);
    return candidates[dist(*rng)];
  };
}

// Applies the policy until it offers no pair. With the default policy this
// runs until no two hidden neurons can be merged.
inline std::pair<Network, AbstractionRecord> abstract_to_saturation(
    const Network& net, Classification& classes, const MergePolicy& policy) {
  Network cur = net;
  AbstractionRecord record;
  while (auto pick = policy(cur, classes)) {
    auto [next, entry] = merge_pair(cur, classes, pick->first, pick->second);
    cur = std::move(next);
    record.push_back(std::move(entry));
  }
  return {std::move(cur), std::move(record)};
}

struct RefineResult {
  Network net;
  AbstractionRecord record;
  MergeEntry undone;
};

// Undoes the most recent merge exactly by restoring its snapshot.
inline RefineResult refine_last(const Network& net, const AbstractionRecord& record) {
  (void)net;
  if (record.empty()) {
    throw CannotRefineError("refine_last: no merges left to undo");
  }
  RefineResult out{record.back().before, record, record.back()};
  out.record.pop_back();
  return out;
}

}  // namespace resinet
