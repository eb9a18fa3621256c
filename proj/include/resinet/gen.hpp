#pragma once

#include <filesystem>
#include <random>

#include "resinet/oracle.hpp"

namespace resinet {

struct GenOptions {
  int count = 500;
  uint64_t seed = 1;
  int max_inputs = 4;
  int max_relus = 10;
  std::string out_dir;  // empty keeps the suite in memory
};

struct GenInstance {
  std::string name;
  Network net;
  Query query;
  VerdictKind expected;
};

namespace detail {

// Interval-arithmetic bound on the network output over the box. Used only
// here, to place guaranteed-UNSAT thresholds; the engine never tightens
// bounds this way.
inline double interval_upper_bound(const Network& net, const Query& q) {
  Vec lo = q.input_lower;
  Vec hi = q.input_upper;
  for (int l = 1; l <= net.depth(); ++l) {
    const Layer& layer = net.layer(l);
    Vec nlo(static_cast<size_t>(layer.width())), nhi(static_cast<size_t>(layer.width()));
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      double a = layer.biases[k];
      double b = layer.biases[k];
      for (size_t p = 0; p < layer.weights[k].size(); ++p) {
        const double w = layer.weights[k][p];
        a += w * (w >= 0 ? lo[p] : hi[p]);
        b += w * (w >= 0 ? hi[p] : lo[p]);
      }
      if (layer.activation == Activation::kRelu) {
        a = std::max(0.0, a);
        b = std::max(0.0, b);
      }
      nlo[k] = a;
      nhi[k] = b;
    }
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  return hi[0];
}

inline double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace detail

/// Deterministic suite: each instance draws from its own substream, so the
// bytes written depend on (seed, index) only. Even indices get a threshold
// just under an observed output (guaranteed SAT), odd ones a threshold above
// the interval bound (guaranteed UNSAT), and every fifth sits mid-range with
// the oracle deciding. The oracle labels every instance either way and the
// guaranteed labels double as a generator self-check.
inline std::vector<GenInstance> generate_suite(const GenOptions& opts) {
  std::vector<GenInstance> suite;
  suite.reserve(static_cast<size_t>(opts.count));
  for (int i = 0; i < opts.count; ++i) {
    std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(i) + 1));
    auto uni = [&](double a, double b) {
      return std::uniform_real_distribution<double>(a, b)(rng);
    };

    const int d = std::uniform_int_distribution<int>(1, opts.max_inputs)(rng);
    const int hidden_layers = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<int> widths;
    int budget = opts.max_relus;
    for (int h = 0; h < hidden_layers; ++h) {
      const int remaining = hidden_layers - h - 1;
      const int hi = std::min(8, std::max(1, budget - remaining));
      const int w = std::uniform_int_distribution<int>(1, hi)(rng);
      widths.push_back(w);
      budget -= w;
    }

    Network net;
    net.input_width = d;
    int prev = d;
    for (int h = 0; h <= hidden_layers; ++h) {
      Layer layer;
      layer.activation = h == hidden_layers ? Activation::kIdentity : Activation::kRelu;
      const int width = h == hidden_layers ? 1 : widths[static_cast<size_t>(h)];
      for (int k = 0; k < width; ++k) {
        Vec row;
        for (int p = 0; p < prev; ++p) row.push_back(detail::round3(uni(-4.0, 4.0)));
        layer.weights.push_back(std::move(row));
        layer.biases.push_back(detail::round3(uni(-1.0, 1.0)));
      }
      net.layers.push_back(std::move(layer));
      prev = width;
    }
    assign_uids(net);

    Query q;
    q.input_lower.assign(static_cast<size_t>(d), 0.0);
    q.input_upper.assign(static_cast<size_t>(d), 1.0);

    double observed_max = -kInf;
    Vec x(static_cast<size_t>(d));
    for (int s = 0; s < 64; ++s) {
      for (int p = 0; p < d; ++p) {
        x[static_cast<size_t>(p)] =
            uni(q.input_lower[static_cast<size_t>(p)], q.input_upper[static_cast<size_t>(p)]);
      }
      observed_max = std::max(observed_max, evaluate(net, x));
    }
    const double upper = detail::interval_upper_bound(net, q);
    const double span = std::max(1.0, upper - observed_max);
    const double margin = std::max(0.1, 0.01 * span);

    VerdictKind guaranteed;
    if (i % 5 == 0) {
      q.output_threshold = detail::round3((observed_max + upper) / 2.0);
      guaranteed = VerdictKind::kTimeout;  // stands for "unknown" here
    } else if (i % 2 == 0) {
      q.output_threshold = detail::round3(observed_max - margin);
      guaranteed = VerdictKind::kSat;
    } else {
      q.output_threshold = detail::round3(upper + margin);
      guaranteed = VerdictKind::kUnsat;
    }

    Verdict label = Verdict::unsat();
    for (int attempt = 0;; ++attempt) {
      try {
        label = brute_force_verify(net, q, opts.max_relus);
        break;
      } catch (const Error&) {
        // Margin too thin: move the threshold and retry, then give up on
        // the mid-range idea and pin the instance UNSAT.
        if (guaranteed != VerdictKind::kTimeout || attempt >= 1) throw;
        q.output_threshold = detail::round3(upper + margin);
        guaranteed = VerdictKind::kUnsat;
      }
    }
    if (guaranteed == VerdictKind::kSat && !label.is_sat()) {
      throw EngineError(cat("generator self-check failed: instance ", i, " should be SAT"));
    }
    if (guaranteed == VerdictKind::kUnsat && !label.is_unsat()) {
      throw EngineError(cat("generator self-check failed: instance ", i, " should be UNSAT"));
    }

    GenInstance inst;
    inst.name = cat("inst_", i < 10 ? "00" : i < 100 ? "0" : "", i);
    inst.net = std::move(net);
    inst.query = q;
    inst.expected = label.kind;
    suite.push_back(std::move(inst));
  }

  if (!opts.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);
    nlohmann::json manifest{{"seed", opts.seed}, {"count", opts.count}};
    nlohmann::json list = nlohmann::json::array();
    for (const GenInstance& inst : suite) {
      const std::string net_file = inst.name + ".net.json";
      const std::string query_file = inst.name + ".query.json";
      save_network(inst.net, (fs::path(opts.out_dir) / net_file).string());
      save_query(inst.query, (fs::path(opts.out_dir) / query_file).string());
      list.push_back({{"name", inst.name},
                      {"net", net_file},
                      {"query", query_file},
                      {"verdict", verdict_name(inst.expected)},
                      {"inputs", inst.net.input_width},
                      {"relus", count_relus(inst.net)}});
    }
    manifest["instances"] = std::move(list);
    std::ofstream out(fs::path(opts.out_dir) / "manifest.json");
    if (!out) throw Error(cat("cannot write manifest in ", opts.out_dir));
    out << manifest.dump(2) << '\n';
  }
  return suite;
}

}  // namespace resinet
