#pragma once

#include <map>
#include <optional>

#include "resinet/network.hpp"

namespace resinet {

enum class Sign { kPos, kNeg };
enum class Influence { kInc, kDec };

struct NeuronClass {
  Sign sign = Sign::kPos;
  Influence influence = Influence::kInc;

  bool operator==(const NeuronClass&) const = default;
};

inline const char* class_name(const NeuronClass& c) {
  if (c.sign == Sign::kPos) {
    return c.influence == Influence::kInc ? "pos_inc" : "pos_dec";
  }
  return c.influence == Influence::kInc ? "neg_inc" : "neg_dec";
}

struct NotPureError : Error {
  NeuronId neuron;
  NotPureError(NeuronId id, const std::string& what) : Error(what), neuron(id) {}
};

// Keyed by uid; covers hidden neurons and the output neuron.
using Classification = std::map<int, NeuronClass>;

// Backward sign propagation from the single output. Edges with |w| <= kEps are
// class-neutral. Throws NotPureError when a hidden neuron has mixed outgoing
// signs or mixed implied influences.
inline Classification classify(const Network& net) {
  Classification out;
  const int output_layer = net.depth();
  out[net.uid_at(output_layer, 0)] = NeuronClass{Sign::kPos, Influence::kInc};

  for (int l = net.depth() - 1; l >= 1; --l) {
    const Layer& next = net.layer(l + 1);
    for (int k = 0; k < net.width(l); ++k) {
      bool any_pos = false;
      bool any_neg = false;
      std::optional<Influence> vote;
      bool mixed_vote = false;
      for (int s = 0; s < next.width(); ++s) {
        const double w = next.weights[static_cast<size_t>(s)][static_cast<size_t>(k)];
        if (std::abs(w) <= kEps) continue;
        const Influence succ = out.at(net.uid_at(l + 1, s)).influence;
        const bool pos_edge = w > 0.0;
        const Influence implied =
            pos_edge == (succ == Influence::kInc) ? Influence::kInc : Influence::kDec;
        (pos_edge ? any_pos : any_neg) = true;
        if (!vote.has_value()) {
          vote = implied;
        } else if (*vote != implied) {
          mixed_vote = true;
        }
      }
      const NeuronId id = net.id_at(l, k);
      if (any_pos && any_neg) {
        throw NotPureError(id, cat("neuron layer ", l, " index ", k,
                                   " has outgoing edges of both signs"));
      }
      if (mixed_vote) {
        throw NotPureError(id, cat("neuron layer ", l, " index ", k,
                                   " influences the output in both directions"));
      }
      out[id.uid] = NeuronClass{any_neg ? Sign::kNeg : Sign::kPos,
                                vote.value_or(Influence::kInc)};
    }
  }
  return out;
}

namespace detail {

// Buckets of the purification split, indexed by (edge sign, successor influence).
// 0: w>=0 to inc, 1: w>=0 to dec, 2: w<0 to inc, 3: w<0 to dec.
inline int bucket_of(bool pos_edge, Influence succ) {
  if (pos_edge) return succ == Influence::kInc ? 0 : 1;
  return succ == Influence::kInc ? 2 : 3;
}

inline Influence bucket_influence(int b) {
  return (b == 0 || b == 3) ? Influence::kInc : Influence::kDec;
}

}  // namespace detail

// Splits every hidden neuron into per-(sign, influence) copies, last hidden
// layer first, so that every copy has a unique class. Copies duplicate the
// full incoming edge set and the bias; each outgoing edge lands on exactly
// one copy. Near-zero edges never force a copy of their own; they ride along
// with the neuron's first copy.
inline Network purify(const Network& net) {
  Network out = net;
  std::vector<Influence> next_inf{Influence::kInc};  // output neuron

  for (int l = out.depth() - 1; l >= 1; --l) {
    Layer& cur = out.layer(l);
    Layer& next = out.layer(l + 1);

    std::vector<Vec> new_rows;
    Vec new_biases;
    std::vector<int> new_uids;
    std::vector<Influence> new_inf;
    std::vector<std::pair<int, int>> copy_src;  // (original index, bucket)
    std::vector<int> first_copy(static_cast<size_t>(cur.width()), -1);

    for (int k = 0; k < cur.width(); ++k) {
      const auto ki = static_cast<size_t>(k);
      bool present[4] = {false, false, false, false};
      for (int s = 0; s < next.width(); ++s) {
        const double w = next.weights[static_cast<size_t>(s)][ki];
        if (std::abs(w) <= kEps) continue;
        present[detail::bucket_of(w > 0.0, next_inf[static_cast<size_t>(s)])] = true;
      }
      std::vector<int> buckets;
      for (int b = 0; b < 4; ++b) {
        if (present[b]) buckets.push_back(b);
      }
      if (buckets.empty()) buckets.push_back(0);

      first_copy[ki] = static_cast<int>(copy_src.size());
      for (int b : buckets) {
        copy_src.emplace_back(k, b);
        new_rows.push_back(cur.weights[ki]);
        new_biases.push_back(cur.biases[ki]);
        new_uids.push_back(buckets.size() == 1 ? cur.uids[ki] : out.fresh_uid());
        new_inf.push_back(detail::bucket_influence(b));
      }
    }

    for (int s = 0; s < next.width(); ++s) {
      const auto si = static_cast<size_t>(s);
      Vec row(copy_src.size(), 0.0);
      for (size_t c = 0; c < copy_src.size(); ++c) {
        const auto [k, b] = copy_src[c];
        const double w = next.weights[si][static_cast<size_t>(k)];
        if (std::abs(w) <= kEps) {
          if (static_cast<int>(c) == first_copy[static_cast<size_t>(k)]) row[c] = w;
        } else if (detail::bucket_of(w > 0.0, next_inf[si]) == b) {
          row[c] = w;
        }
      }
      next.weights[si] = std::move(row);
    }

    cur.weights = std::move(new_rows);
    cur.biases = std::move(new_biases);
    cur.uids = std::move(new_uids);
    next_inf = std::move(new_inf);
  }
  return out;
}

}  // namespace resinet
