#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/numerics.hpp"

namespace dualabsa {

struct EncoderConfig {
  int d = 200;
  int heads = 8;
  int layers = 3;
  int ffn_dim = 25;
  FfnActivation activation = FfnActivation::Relu;
  double dropout = 0.5;

  static EncoderConfig from(const ModelConfig& config) {
    const ModelConfig c = config.resolved();
    return {c.hidden, c.heads, c.layers, c.ffn_dim, c.ffn_activation, c.dropout};
  }

  void validate() const {
    if (d <= 0 || heads <= 0 || layers < 1 || ffn_dim <= 0) throw ConfigError("encoder sizes must be positive");
    if (d % heads != 0) throw ConfigError("d (" + std::to_string(d) + ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
};

/// One encoder layer's output plus the mask it was computed under.
template <typename Scalar>
struct LayerState {
  Var<Scalar> S;
  std::vector<bool> mask;
};

/// Attention weights per head ([n x n] each), recorded on request.
template <typename Scalar>
struct AttentionTrace {
  std::vector<MatrixX<Scalar>> weights;
};

inline std::string encoder_prefix(int layer) { return "enc" + std::to_string(layer); }

template <typename Scalar>
void add_encoder_layer_params(ParamStore<Scalar>& store, const std::string& prefix, const EncoderConfig& c, Rng& rng) {
  for (const char* proj : {".q.W", ".k.W", ".v.W", ".o.W"}) store.add_xavier(prefix + proj, c.d, c.d, rng);
  store.add_constant(prefix + ".ln1.gain", Shape{c.d}, Scalar(1));
  store.add_zeros(prefix + ".ln1.bias", Shape{c.d});
  store.add_xavier(prefix + ".ffn1.W", c.d, c.ffn_dim, rng);
  store.add_zeros(prefix + ".ffn1.b", Shape{c.ffn_dim});
  store.add_xavier(prefix + ".ffn2.W", c.ffn_dim, c.d, rng);
  store.add_zeros(prefix + ".ffn2.b", Shape{c.d});
  store.add_constant(prefix + ".ln2.gain", Shape{c.d}, Scalar(1));
  store.add_zeros(prefix + ".ln2.bias", Shape{c.d});
}

template <typename Scalar>
void add_encoder_params(ParamStore<Scalar>& store, const EncoderConfig& c, Rng& rng) {
  c.validate();
  for (int l = 1; l <= c.layers; ++l) add_encoder_layer_params(store, encoder_prefix(l), c, rng);
}

inline constexpr double kLayerNormEps = 1e-5;

/// Scaled dot-product attention over `heads` slices, masked keys excluded,
/// heads joined and projected, then LayerNorm(dropout(r) + x).
template <typename Scalar>
Var<Scalar> multi_head_attention(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> x,
                                 const std::vector<bool>& mask, const EncoderConfig& c, AttentionTrace<Scalar>* trace = nullptr) {
  c.validate();
  if (x.value().cols() != c.d) throw DimensionError("attention input " + to_string(x.shape()) + " for d=" + std::to_string(c.d));
  const Index n = x.value().rows();
  if (!mask.empty() && static_cast<Index>(mask.size()) != n) throw DimensionError("attention mask length mismatch");
  const Var<Scalar> Q = matmul(x, g.parameter(store, prefix + ".q.W"));
  const Var<Scalar> K = matmul(x, g.parameter(store, prefix + ".k.W"));
  const Var<Scalar> V = matmul(x, g.parameter(store, prefix + ".v.W"));
  const int dk = c.d / c.heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dk));
  std::vector<Var<Scalar>> heads;
  for (int h = 0; h < c.heads; ++h) {
    const Var<Scalar> scores = scale(matmul_nt(slice_cols(Q, h * dk, dk), slice_cols(K, h * dk, dk)), inv_sqrt);
    const Var<Scalar> weights = softmax(scores, mask);
    if (trace) trace->weights.push_back(weights.mat());
    heads.push_back(matmul(weights, slice_cols(V, h * dk, dk)));
  }
  const Var<Scalar> joined = heads.size() == 1 ? heads.front() : concat(heads);
  const Var<Scalar> r = dropout(matmul(joined, g.parameter(store, prefix + ".o.W")), c.dropout, g.training());
  return layer_norm(r + x, g.parameter(store, prefix + ".ln1.gain"), g.parameter(store, prefix + ".ln1.bias"),
                    static_cast<Scalar>(kLayerNormEps));
}

/// e = act(a W1 + b1) W2 + b2, then LayerNorm(dropout(e) + a).
template <typename Scalar>
Var<Scalar> feed_forward(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> a, const EncoderConfig& c) {
  Var<Scalar> inner = linear(g, store, prefix + ".ffn1", a);
  if (c.activation == FfnActivation::Relu) inner = relu(inner);
  const Var<Scalar> e = dropout(linear(g, store, prefix + ".ffn2", inner), c.dropout, g.training());
  return layer_norm(e + a, g.parameter(store, prefix + ".ln2.gain"), g.parameter(store, prefix + ".ln2.bias"),
                    static_cast<Scalar>(kLayerNormEps));
}

template <typename Scalar>
Var<Scalar> encoder_layer(Graph<Scalar>& g, ParamStore<Scalar>& store, int layer, Var<Scalar> x, const std::vector<bool>& mask,
                          const EncoderConfig& c, AttentionTrace<Scalar>* trace = nullptr) {
  const std::string prefix = encoder_prefix(layer);
  return feed_forward(g, store, prefix, multi_head_attention(g, store, prefix, x, mask, c, trace), c);
}

/// Runs every layer; layer l consumes layer l-1's output (layer 1 consumes x).
template <typename Scalar>
std::vector<LayerState<Scalar>> encode_sequence(Graph<Scalar>& g, ParamStore<Scalar>& store, Var<Scalar> x, const std::vector<bool>& mask,
                                                const EncoderConfig& c) {
  std::vector<LayerState<Scalar>> states;
  Var<Scalar> S = x;
  for (int l = 1; l <= c.layers; ++l) {
    S = encoder_layer(g, store, l, S, mask, c);
    states.push_back({S, mask});
  }
  return states;
}

/// Learned absolute positions added to rows 0..n-1.
template <typename Scalar>
Var<Scalar> add_positions(Graph<Scalar>& g, ParamStore<Scalar>& store, Var<Scalar> x) {
  const Var<Scalar> table = g.parameter(store, "position.table");
  const Index n = x.value().rows();
  if (n > table.value().rows())
    throw DimensionError("sentence of " + std::to_string(n) + " tokens exceeds max_positions " + std::to_string(table.value().rows()));
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[i] = i;
  return x + gather_rows(table, std::move(rows));
}

}  // namespace dualabsa
