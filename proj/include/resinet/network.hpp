#pragma once

#include <fstream>
#include <utility>

#include <json.hpp>

#include "resinet/common.hpp"

namespace resinet {

enum class Activation { kRelu, kIdentity };

// Identifies a neuron by its layer (0 = input layer, i >= 1 = weight layer i)
// and a uid that stays stable while the network is abstracted and refined.
// Positions inside a layer shift when neurons are merged; uids never do.
struct NeuronId {
  int layer = -1;
  int uid = -1;

  bool operator==(const NeuronId&) const = default;
};

struct Layer {
  std::vector<Vec> weights;  // weights[k][p]: edge from previous-layer neuron p into neuron k
  Vec biases;
  Activation activation = Activation::kRelu;
  std::vector<int> uids;  // stable id per neuron, parallel to weights rows

  int width() const { return static_cast<int>(weights.size()); }
};

struct Network {
  int input_width = 0;
  std::vector<int> input_uids;
  std::vector<Layer> layers;  // hidden layers followed by the identity output layer
  int next_uid = 0;           // uid allocator for merged/copied neurons

  int depth() const { return static_cast<int>(layers.size()); }

  // Width of layer index l, where 0 is the input layer.
  int width(int l) const {
    return l == 0 ? input_width : layers[static_cast<size_t>(l - 1)].width();
  }

  Layer& layer(int l) { return layers[static_cast<size_t>(l - 1)]; }
  const Layer& layer(int l) const { return layers[static_cast<size_t>(l - 1)]; }

  int uid_at(int l, int index) const {
    return l == 0 ? input_uids[static_cast<size_t>(index)]
                  : layer(l).uids[static_cast<size_t>(index)];
  }

  NeuronId id_at(int l, int index) const { return NeuronId{l, uid_at(l, index)}; }

  // Position of a uid within its layer, or -1.
  int index_in_layer(const NeuronId& id) const {
    const auto& uids = id.layer == 0 ? input_uids : layer(id.layer).uids;
    for (size_t k = 0; k < uids.size(); ++k) {
      if (uids[k] == id.uid) return static_cast<int>(k);
    }
    return -1;
  }

  int fresh_uid() { return next_uid++; }
};

inline void assign_uids(Network& net) {
  int uid = 0;
  net.input_uids.resize(static_cast<size_t>(net.input_width));
  for (auto& u : net.input_uids) u = uid++;
  for (auto& layer : net.layers) {
    layer.uids.resize(layer.weights.size());
    for (auto& u : layer.uids) u = uid++;
  }
  net.next_uid = uid;
}

inline void validate_network(const Network& net) {
  if (net.input_width <= 0) throw ParseError("network has no input neurons");
  if (net.layers.empty()) throw ParseError("network has no layers");
  int prev = net.input_width;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& layer = net.layers[i];
    const bool last = i + 1 == net.layers.size();
    if (layer.weights.empty()) {
      throw ParseError(cat("layer ", i + 1, " is empty"));
    }
    if (layer.biases.size() != layer.weights.size()) {
      throw ParseError(cat("layer ", i + 1, ": ", layer.weights.size(), " weight rows but ",
                           layer.biases.size(), " biases"));
    }
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      if (static_cast<int>(layer.weights[k].size()) != prev) {
        throw ParseError(cat("layer ", i + 1, " row ", k, ": expected ", prev,
                             " columns, got ", layer.weights[k].size()));
      }
    }
    if (last) {
      if (layer.activation != Activation::kIdentity) {
        throw ParseError("output layer must have identity activation");
      }
      if (layer.width() != 1) {
        throw ParseError(cat("output layer must have exactly one neuron, got ", layer.width()));
      }
    } else if (layer.activation != Activation::kRelu) {
      throw ParseError(cat("hidden layer ", i + 1, " must have relu activation"));
    }
    prev = layer.width();
  }
}

struct EvalTrace {
  std::vector<Vec> pre;   // pre-activation per weight layer
  std::vector<Vec> post;  // after activation
  double output = 0.0;
};

inline double evaluate(const Network& net, const Vec& input, EvalTrace* trace = nullptr) {
  if (static_cast<int>(input.size()) != net.input_width) {
    throw Error(cat("input has ", input.size(), " components, network expects ",
                    net.input_width));
  }
  if (trace != nullptr) {
    trace->pre.clear();
    trace->post.clear();
  }
  Vec cur = input;
  for (const Layer& layer : net.layers) {
    Vec pre(layer.weights.size(), 0.0);
    for (size_t k = 0; k < layer.weights.size(); ++k) {
      double sum = layer.biases[k];
      const Vec& row = layer.weights[k];
      for (size_t p = 0; p < row.size(); ++p) sum += row[p] * cur[p];
      pre[k] = sum;
    }
    Vec post = pre;
    if (layer.activation == Activation::kRelu) {
      for (double& v : post) v = std::max(0.0, v);
    }
    if (trace != nullptr) {
      trace->pre.push_back(pre);
      trace->post.push_back(post);
    }
    cur = std::move(post);
  }
  const double out = cur[0];
  if (trace != nullptr) trace->output = out;
  return out;
}

inline Network parse_network(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
    throw ParseError("network json must be an object with a \"layers\" array");
  }
  Network net;
  size_t index = 0;
  for (const auto& jl : j["layers"]) {
    Layer layer;
    if (!jl.is_object() || !jl.contains("weights") || !jl.contains("biases") ||
        !jl.contains("activation")) {
      throw ParseError(cat("layer ", index + 1,
                           ": expected object with weights, biases, activation"));
    }
    const std::string act = jl["activation"].get<std::string>();
    if (act == "relu") {
      layer.activation = Activation::kRelu;
    } else if (act == "identity") {
      layer.activation = Activation::kIdentity;
    } else {
      throw ParseError(cat("layer ", index + 1, ": unsupported activation \"", act, "\""));
    }
    if (!jl["weights"].is_array() || !jl["biases"].is_array()) {
      throw ParseError(cat("layer ", index + 1, ": weights/biases must be arrays"));
    }
    for (const auto& row : jl["weights"]) {
      if (!row.is_array()) throw ParseError(cat("layer ", index + 1, ": weight row not an array"));
      Vec r;
      for (const auto& w : row) {
        if (!w.is_number()) throw ParseError(cat("layer ", index + 1, ": non-numeric weight"));
        r.push_back(w.get<double>());
      }
      layer.weights.push_back(std::move(r));
    }
    for (const auto& b : jl["biases"]) {
      if (!b.is_number()) throw ParseError(cat("layer ", index + 1, ": non-numeric bias"));
      layer.biases.push_back(b.get<double>());
    }
    if (layer.weights.empty()) throw ParseError(cat("layer ", index + 1, " is empty"));
    net.layers.push_back(std::move(layer));
    ++index;
  }
  net.input_width = static_cast<int>(net.layers.front().weights.front().size());
  assign_uids(net);
  validate_network(net);
  return net;
}

inline Network parse_network_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(cat("network json: ", e.what()));
  }
  return parse_network(j);
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(cat("cannot open network file: ", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network_text(buf.str());
}

inline nlohmann::json serialize_network(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : net.layers) {
    nlohmann::json jl;
    jl["weights"] = layer.weights;
    jl["biases"] = layer.biases;
    jl["activation"] = layer.activation == Activation::kRelu ? "relu" : "identity";
    layers.push_back(jl);
  }
  return nlohmann::json{{"layers", layers}};
}

inline std::string serialize_network_text(const Network& net) {
  return serialize_network(net).dump(2) + "\n";
}

inline void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(cat("cannot write network file: ", path));
  out << serialize_network_text(net);
}

// Value-level equality: weights, biases, activations. Ignores uids.
inline bool same_network(const Network& a, const Network& b, double tol = 0.0) {
  if (a.input_width != b.input_width || a.depth() != b.depth()) return false;
  for (int i = 0; i < a.depth(); ++i) {
    const Layer& la = a.layers[static_cast<size_t>(i)];
    const Layer& lb = b.layers[static_cast<size_t>(i)];
    if (la.activation != lb.activation || la.width() != lb.width()) return false;
    for (size_t k = 0; k < la.weights.size(); ++k) {
      if (std::abs(la.biases[k] - lb.biases[k]) > tol) return false;
      for (size_t p = 0; p < la.weights[k].size(); ++p) {
        if (std::abs(la.weights[k][p] - lb.weights[k][p]) > tol) return false;
      }
    }
  }
  return true;
}

}  // namespace resinet
