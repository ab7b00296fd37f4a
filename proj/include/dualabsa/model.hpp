#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/data.hpp"
#include "dualabsa/embedding.hpp"
#include "dualabsa/numerics.hpp"
#include "dualabsa/pair_encoder.hpp"
#include "dualabsa/seq_encoder.hpp"
#include "dualabsa/tagging.hpp"
#include "dualabsa/vocab.hpp"

namespace dualabsa {

/// Flat indices i * n + j of the strict upper triangle, row-major.
inline std::vector<Index> upper_cells(int n) {
  std::vector<Index> cells;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) cells.push_back(static_cast<Index>(i) * n + j);
  return cells;
}

/// Per-token logits over {O, B-A, I-A, B-O, I-O}.
template <typename Scalar>
Var<Scalar> term_head(Graph<Scalar>& g, ParamStore<Scalar>& store, Var<Scalar> S) {
  return linear(g, store, "head.term", S);
}

/// Logits over {NONE, POS, NEU, NEG} for every cell j > i, in upper_cells
/// order. Empty for a one-token sentence.
template <typename Scalar>
std::optional<Var<Scalar>> pair_head(Graph<Scalar>& g, ParamStore<Scalar>& store, Var<Scalar> P) {
  const int n = static_cast<int>(P.shape().front());
  if (n < 2) return std::nullopt;
  return linear(g, store, "head.pair", gather_rows(P, upper_cells(n)));
}

/// Polarity logits read from the diagonal cells (i, i), used for one-token
/// aspects in aspect-sentiment mode.
template <typename Scalar>
Var<Scalar> diagonal_head(Graph<Scalar>& g, ParamStore<Scalar>& store, Var<Scalar> P) {
  const int n = static_cast<int>(P.shape().front());
  std::vector<Index> diag;
  for (int i = 0; i < n; ++i) diag.push_back(static_cast<Index>(i) * n + i);
  return linear(g, store, "head.diag", gather_rows(P, diag));
}

template <typename Scalar>
struct LossParts {
  Var<Scalar> total;
  Var<Scalar> term;
  Var<Scalar> pola;
};

/// L = L_term + L_pola. L_term sums token cross-entropy over the diagonal
/// labels; L_pola sums cell cross-entropy over the strict upper triangle
/// (NONE trained as class 0, weighted by none_weight) plus, when given, the
/// diagonal polarity cells. Without polarity logits L_pola is exactly 0.
template <typename Scalar>
LossParts<Scalar> joint_loss(Var<Scalar> term_logits, std::optional<Var<Scalar>> pair_logits, std::optional<Var<Scalar>> diag_logits,
                             const TagGrid& grid, double none_weight = 1.0) {
  auto& g = *term_logits.graph;
  const int n = grid.size();
  if (term_logits.value().rows() != n)
    throw DimensionError("joint_loss: " + std::to_string(term_logits.value().rows()) + " token rows for a grid of " + std::to_string(n));
  std::vector<int> diag_gold;
  for (DiagLabel l : grid.diag_labels()) diag_gold.push_back(static_cast<int>(l));
  const Var<Scalar> term = cross_entropy(term_logits, diag_gold);

  auto weights_for = [&](const std::vector<int>& gold) {
    std::vector<Scalar> w;
    if (none_weight == 1.0) return w;
    for (int label : gold) w.push_back(label == 0 ? static_cast<Scalar>(none_weight) : Scalar(1));
    return w;
  };
  std::vector<Var<Scalar>> pieces;
  if (pair_logits) {
    std::vector<int> gold;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) gold.push_back(static_cast<int>(grid.pair(i, j)));
    pieces.push_back(cross_entropy(*pair_logits, gold, weights_for(gold)));
  }
  if (diag_logits) {
    std::vector<int> gold;
    for (int i = 0; i < n; ++i) gold.push_back(static_cast<int>(grid.diag_polarity(i)));
    pieces.push_back(cross_entropy(*diag_logits, gold, weights_for(gold)));
  }
  Var<Scalar> pola = pieces.empty() ? g.constant(Tensor<Scalar>::scalar(Scalar(0))) : pieces.front();
  for (std::size_t k = 1; k < pieces.size(); ++k) pola = pola + pieces[k];
  return {term + pola, term, pola};
}

namespace detail {

/// Index of the largest entry among columns [first, cols); ties go to the lowest.
template <typename Scalar>
int argmax_from(const MatrixX<Scalar>& m, Index row, Index first) {
  Index best = first;
  for (Index c = first + 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, best)) best = c;
  return static_cast<int>(best);
}

}  // namespace detail

/// Dual-encoder tagger: token representation, sequence encoder, pair encoder
/// and the tagging heads, with every parameter in one store.
template <typename Scalar>
class Model {
 public:
  struct Outputs {
    TokenRep<Scalar> tokens;
    std::vector<Var<Scalar>> sequence;  // S_1 .. S_L
    std::vector<Var<Scalar>> pairs;     // P_1 .. P_L, empty without the pair encoder
    Var<Scalar> term_logits;
    std::optional<Var<Scalar>> pair_logits;
    std::optional<Var<Scalar>> diag_logits;
  };

  Model(const ModelConfig& config, Vocab vocab, const MatrixX<double>& word_table)
      : config_(config.resolved()), vocab_(std::move(vocab)), store_(config.seed) {
    Rng rng = Rng(config_.seed).split("init");
    add_token_params(store_, config_, vocab_, word_table, rng);
    if (config_.positions) store_.add_uniform("position.table", Shape{config_.max_positions, config_.hidden}, 0.1, rng);
    add_encoder_params(store_, encoder(), rng);
    if (config_.pair_encoder) add_pair_params(store_, config_, rng);
    store_.add_xavier("head.term.W", config_.hidden, kDiagLabelCount, rng);
    store_.add_zeros("head.term.b", Shape{kDiagLabelCount});
    if (config_.pair_encoder) {
      store_.add_xavier("head.pair.W", config_.pair_channels(), kPairLabelCount, rng);
      store_.add_zeros("head.pair.b", Shape{kPairLabelCount});
      if (config_.task == Task::Aesc) {
        store_.add_xavier("head.diag.W", config_.pair_channels(), kPairLabelCount, rng);
        store_.add_zeros("head.diag.b", Shape{kPairLabelCount});
      }
    }
  }

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore<Scalar>& params() { return store_; }
  const ParamStore<Scalar>& params() const { return store_; }
  EncoderConfig encoder() const { return EncoderConfig::from(config_); }

  Outputs forward(Graph<Scalar>& g, const Example& example) {
    Outputs out;
    out.tokens = token_representation(g, store_, config_, vocab_, example);
    Var<Scalar> S = out.tokens.projected;
    if (config_.positions) S = add_positions(g, store_, S);
    const std::vector<bool> mask(static_cast<std::size_t>(example.size()), true);
    const EncoderConfig enc = encoder();
    std::optional<Var<Scalar>> P;
    for (int l = 1; l <= config_.layers; ++l) {
      if (config_.pair_encoder) {
        const std::string prefix = pair_prefix(l);
        const Var<Scalar> S_pair = pair_init(g, store_, prefix + ".init", S);
        P = mdgru_multi(g, store_, prefix, S_pair, P, config_.directions, config_.share_directions, config_.workers);
        out.pairs.push_back(*P);
      }
      S = encoder_layer(g, store_, l, S, mask, enc);
      if (config_.interaction && l < config_.layers) S = interaction(g, store_, pair_prefix(l) + ".inter", *P, S);
      out.sequence.push_back(S);
    }
    out.term_logits = term_head(g, store_, S);
    if (config_.pair_encoder) {
      out.pair_logits = pair_head(g, store_, *P);
      if (config_.task == Task::Aesc) out.diag_logits = diagonal_head(g, store_, *P);
    }
    return out;
  }

  LossParts<Scalar> loss(const Outputs& out, const TagGrid& grid) const {
    return joint_loss(out.term_logits, out.pair_logits, out.diag_logits, grid, config_.none_weight);
  }

  /// Argmax grid. Aspect-sentiment cells never predict NONE, so every
  /// extracted aspect receives a polarity.
  TagGrid predict_grid(const Outputs& out) const {
    const int n = static_cast<int>(out.term_logits.value().rows());
    TagGrid grid(n);
    const auto& term = out.term_logits.mat();
    for (int i = 0; i < n; ++i) grid.set_diag(i, static_cast<DiagLabel>(detail::argmax_from<Scalar>(term, i, 0)));
    const Index first = config_.task == Task::Aesc ? 1 : 0;
    if (out.pair_logits) {
      const auto& cells = out.pair_logits->mat();
      Index row = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) grid.set_pair(i, j, static_cast<PairLabel>(detail::argmax_from<Scalar>(cells, row++, first)));
    }
    if (out.diag_logits) {
      const auto& diag = out.diag_logits->mat();
      for (int i = 0; i < n; ++i) grid.set_diag_polarity(i, static_cast<PairLabel>(detail::argmax_from<Scalar>(diag, i, first)));
    }
    return grid;
  }

  Decoded predict(const Example& example) {
    Graph<Scalar> g(false);
    return decode_grid(predict_grid(forward(g, example)), config_.task, config_.bio_repair);
  }

 private:
  ModelConfig config_;
  Vocab vocab_;
  ParamStore<Scalar> store_;
};

}  // namespace dualabsa
