#pragma once

#include <random>

#include "resinet/resinet.hpp"

namespace testutil {

using namespace resinet;

// Two-input network used throughout: four relu neurons feeding five relu
// neurons feeding one output. Maximum over [0,1]^2 is 9, reached at (0,1).
inline Network example_network() {
  Network net;
  net.input_width = 2;
  Layer l1;
  l1.activation = Activation::kRelu;
  l1.weights = {{1, 0}, {2, 0}, {0, 2}, {0, 1}};
  l1.biases = {0, 0, 0, 0};
  Layer l2;
  l2.activation = Activation::kRelu;
  l2.weights = {{3, 0, -1, 0}, {2, 0, -2, 0}, {0, 1, 0, 0}, {0, 0, 0, 8}, {0, 0, 0, 1}};
  l2.biases = {0, 0, 0, 0, 0};
  Layer out;
  out.activation = Activation::kIdentity;
  out.weights = {{1, 1, -4, 1, 1}};
  out.biases = {0};
  net.layers = {l1, l2, out};
  assign_uids(net);
  return net;
}

// Uids assigned layer-major: inputs 0..1, first hidden 2..5, second 6..10.
constexpr int kV11 = 2, kV12 = 3, kV13 = 4, kV14 = 5;
constexpr int kV21 = 6, kV22 = 7, kV23 = 8, kV24 = 9, kV25 = 10;

inline Query example_query(double threshold = 14.0) {
  Query q;
  q.input_lower = {0.0, 0.0};
  q.input_upper = {1.0, 1.0};
  q.output_threshold = threshold;
  return q;
}

// The two merges from the worked example, in the order that makes the first
// refinement recover the network with only the (v24, v25) merge left.
inline MergePolicy example_merge_policy() {
  return make_scripted_policy({{NeuronId{2, kV24}, NeuronId{2, kV25}},
                               {NeuronId{2, kV21}, NeuronId{2, kV22}}});
}

inline Network random_network(std::mt19937_64& rng, int max_inputs = 3, int max_layers = 3,
                              int max_width = 4) {
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const int d = std::uniform_int_distribution<int>(1, max_inputs)(rng);
  const int hidden = std::uniform_int_distribution<int>(1, max_layers)(rng);
  Network net;
  net.input_width = d;
  int prev = d;
  for (int h = 0; h <= hidden; ++h) {
    Layer layer;
    layer.activation = h == hidden ? Activation::kIdentity : Activation::kRelu;
    const int width = h == hidden ? 1 : std::uniform_int_distribution<int>(1, max_width)(rng);
    for (int k = 0; k < width; ++k) {
      Vec row;
      for (int p = 0; p < prev; ++p) row.push_back(uni(-2.0, 2.0));
      layer.weights.push_back(std::move(row));
      layer.biases.push_back(uni(-1.0, 1.0));
    }
    net.layers.push_back(std::move(layer));
    prev = width;
  }
  assign_uids(net);
  return net;
}

inline Query random_box(std::mt19937_64& rng, int dim, double threshold) {
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  Query q;
  for (int p = 0; p < dim; ++p) {
    const double c = uni(-1.0, 1.0);
    const double h = uni(0.1, 1.0);
    q.input_lower.push_back(c - h);
    q.input_upper.push_back(c + h);
  }
  q.output_threshold = threshold;
  return q;
}

inline Vec random_point(std::mt19937_64& rng, const Query& q) {
  Vec x;
  for (size_t i = 0; i < q.input_lower.size(); ++i) {
    x.push_back(std::uniform_real_distribution<double>(q.input_lower[i], q.input_upper[i])(rng));
  }
  return x;
}

}  // namespace testutil
