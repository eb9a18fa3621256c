#pragma once

#include <fstream>
#include <optional>

#include <json.hpp>

#include "resinet/network.hpp"

namespace resinet {

// The property phi: exists x with l <= x <= u and N(x) > c.
// UNSAT means the network is safe (output never exceeds c on the box).
struct Query {
  Vec input_lower;
  Vec input_upper;
  double output_threshold = 0.0;

  int dim() const { return static_cast<int>(input_lower.size()); }
};

enum class VerdictKind { kSat, kUnsat, kTimeout };

struct Verdict {
  VerdictKind kind = VerdictKind::kUnsat;
  Vec witness;  // meaningful only for SAT

  static Verdict sat(Vec w) { return Verdict{VerdictKind::kSat, std::move(w)}; }
  static Verdict unsat() { return Verdict{VerdictKind::kUnsat, {}}; }
  static Verdict timeout() { return Verdict{VerdictKind::kTimeout, {}}; }

  bool is_sat() const { return kind == VerdictKind::kSat; }
  bool is_unsat() const { return kind == VerdictKind::kUnsat; }
  bool is_timeout() const { return kind == VerdictKind::kTimeout; }
};

inline const char* verdict_name(VerdictKind k) {
  switch (k) {
    case VerdictKind::kSat: return "SAT";
    case VerdictKind::kUnsat: return "UNSAT";
    case VerdictKind::kTimeout: return "TIMEOUT";
  }
  return "?";
}

inline void validate_query(const Network& net, const Query& q) {
  if (q.input_lower.size() != q.input_upper.size()) {
    throw ParseError("query bound vectors differ in length");
  }
  if (q.dim() != net.input_width) {
    throw ParseError(cat("query has ", q.dim(), " input bounds, network expects ",
                         net.input_width));
  }
  for (size_t i = 0; i < q.input_lower.size(); ++i) {
    if (q.input_lower[i] > q.input_upper[i]) {
      throw ParseError(cat("query bound ", i, ": lower ", q.input_lower[i],
                           " exceeds upper ", q.input_upper[i]));
    }
  }
}

// True iff x lies in the box and the output strictly clears the threshold.
// Values within kEps of the threshold count as boundary and are rejected,
// so float noise cannot manufacture a witness.
inline bool check_witness(const Network& net, const Query& q, const Vec& x) {
  if (static_cast<int>(x.size()) != net.input_width) {
    throw Error(cat("witness has ", x.size(), " components, network expects ",
                    net.input_width));
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < q.input_lower[i] || x[i] > q.input_upper[i]) return false;
  }
  return evaluate(net, x) > q.output_threshold + kEps;
}

// Queries of the form y < c reduce to the canonical y > c form by negating
// the output layer's weights and bias and flipping the threshold sign.
inline Network negate_output(const Network& net) {
  Network out = net;
  Layer& last = out.layers.back();
  for (Vec& row : last.weights) {
    for (double& w : row) w = -w;
  }
  for (double& b : last.biases) b = -b;
  return out;
}

// Exact input reparameterization x = x' + l: the box's lower corner folds
// into the first weight layer's biases and the box itself moves to the
// origin, so every input variable ranges over [0, u - l]. Values are
// unchanged; witnesses of the shifted pair map back by adding l. Merging
// only over-approximates when every merge source is nonnegative, which relu
// outputs guarantee for deep layers and this shift guarantees for inputs.
inline std::pair<Network, Query> shift_box_to_origin(const Network& net, const Query& q) {
  validate_query(net, q);
  Network out = net;
  Query oq = q;
  Layer& first = out.layer(1);
  for (int k = 0; k < first.width(); ++k) {
    const auto ki = static_cast<size_t>(k);
    double fold = 0.0;
    for (size_t p = 0; p < q.input_lower.size(); ++p) {
      fold += first.weights[ki][p] * q.input_lower[p];
    }
    first.biases[ki] += fold;
  }
  for (size_t i = 0; i < q.input_lower.size(); ++i) {
    oq.input_upper[i] -= oq.input_lower[i];
    oq.input_lower[i] = 0.0;
  }
  return {std::move(out), std::move(oq)};
}

// Parses a query; an "output_lt" key is accepted as the y < c form and is
// normalized against the network by negate_output (see prepare_query).
struct ParsedQuery {
  Query q;
  bool less_than = false;
};

inline ParsedQuery parse_query(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("input_lower") || !j.contains("input_upper")) {
    throw ParseError("query json must contain input_lower and input_upper");
  }
  const auto vec_of = [&](const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array()) throw ParseError(cat("query ", key, " must be an array"));
    Vec v;
    for (const auto& e : a) {
      if (!e.is_number()) throw ParseError(cat("query ", key, ": non-numeric bound"));
      v.push_back(e.get<double>());
    }
    return v;
  };
  ParsedQuery pq;
  pq.q.input_lower = vec_of("input_lower");
  pq.q.input_upper = vec_of("input_upper");
  if (j.contains("output_gt")) {
    if (!j["output_gt"].is_number()) throw ParseError("query output_gt must be a number");
    pq.q.output_threshold = j["output_gt"].get<double>();
  } else if (j.contains("output_lt")) {
    if (!j["output_lt"].is_number()) throw ParseError("query output_lt must be a number");
    pq.q.output_threshold = -j["output_lt"].get<double>();
    pq.less_than = true;
  } else {
    throw ParseError("query json must contain output_gt (or output_lt)");
  }
  return pq;
}

inline ParsedQuery parse_query_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(cat("query json: ", e.what()));
  }
  return parse_query(j);
}

inline ParsedQuery load_query(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(cat("cannot open query file: ", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_query_text(buf.str());
}

// Applies the y < c reduction when needed and validates the pair.
inline std::pair<Network, Query> prepare_query(const Network& net, const ParsedQuery& pq) {
  Network out = pq.less_than ? negate_output(net) : net;
  validate_query(out, pq.q);
  return {std::move(out), pq.q};
}

inline nlohmann::json serialize_query(const Query& q) {
  return nlohmann::json{{"input_lower", q.input_lower},
                        {"input_upper", q.input_upper},
                        {"output_gt", q.output_threshold}};
}

inline void save_query(const Query& q, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(cat("cannot write query file: ", path));
  out << serialize_query(q).dump(2) << "\n";
}

}  // namespace resinet
