#pragma once

#include "resinet/lp.hpp"
#include "resinet/property.hpp"

namespace resinet {

// Reference decision procedure, independent of the search engine. Enumerates
// every relu phase pattern and solves the resulting LP; deliberately shares
// no split or branching code with the engine. Exponential in the number of
// hidden neurons, hence the hard cap.
inline int count_relus(const Network& net) {
  int k = 0;
  for (int l = 1; l < net.depth(); ++l) k += net.width(l);
  return k;
}

inline Verdict brute_force_verify(const Network& net, const Query& q, int max_relus = 20) {
  validate_query(net, q);
  const int k = count_relus(net);
  if (k > max_relus || k > 62) {
    throw Error(cat("brute_force_verify: ", k, " relus exceeds the cap of ", max_relus));
  }

  bool fragile = false;
  for (uint64_t mask = 0; mask < (uint64_t{1} << k); ++mask) {
    Tableau t = encode(net, q);
    for (int i = 0; i < k; ++i) {
      const ReluPair& p = t.relus[static_cast<size_t>(i)];
      if (mask & (uint64_t{1} << i)) {
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
    if (t.solve() == LpStatus::kInfeasible) continue;

    Vec x;
    x.reserve(t.input_vars.size());
    for (int v : t.input_vars) x.push_back(t.assignment()[static_cast<size_t>(v)]);
    if (check_witness(net, q, x)) return Verdict::sat(x);
    // Feasible pattern whose exact forward pass lands inside the strict
    // margin: the instance is too close to the threshold to label reliably.
    fragile = true;
  }
  if (fragile) {
    throw Error("brute_force_verify: instance margin too small for a reliable verdict");
  }
  return Verdict::unsat();
}

struct GridResult {
  double best_value = -kInf;
  Vec best_input;
  bool exceeds = false;
};

// Dense sampling cross-check for low-dimensional boxes. Can prove SAT by
// exhibiting a witness, never UNSAT.
inline GridResult grid_search(const Network& net, const Query& q, int per_dim = 9) {
  validate_query(net, q);
  const int d = q.dim();
  if (d > 4) throw Error(cat("grid_search: dimension ", d, " exceeds the cap of 4"));
  if (per_dim < 2) per_dim = 2;

  GridResult best;
  Vec x(static_cast<size_t>(d), 0.0);
  std::vector<int> idx(static_cast<size_t>(d), 0);
  while (true) {
    for (size_t i = 0; i < x.size(); ++i) {
      const double lo = q.input_lower[i];
      const double hi = q.input_upper[i];
      x[i] = lo + (hi - lo) * idx[i] / (per_dim - 1);
    }
    const double out = evaluate(net, x);
    if (out > best.best_value) {
      best.best_value = out;
      best.best_input = x;
    }
    int pos = 0;
    while (pos < d && ++idx[static_cast<size_t>(pos)] == per_dim) {
      idx[static_cast<size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == d) break;
  }
  best.exceeds = best.best_value > q.output_threshold + kEps;
  return best;
}

}  // namespace resinet
