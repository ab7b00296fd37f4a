#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/data.hpp"
#include "dualabsa/errors.hpp"
#include "dualabsa/numerics.hpp"
#include "dualabsa/vocab.hpp"

namespace dualabsa {

/// Parameters of one LSTM direction: x W + h U + b, gates ordered i, f, g, o.
template <typename Scalar>
void add_lstm_params(ParamStore<Scalar>& store, const std::string& prefix, int input, int hidden, Rng& rng) {
  store.add_xavier(prefix + ".W", input, 4 * hidden, rng);
  store.add_xavier(prefix + ".U", hidden, 4 * hidden, rng);
  store.add_zeros(prefix + ".b", Shape{4 * hidden});
}

/// Word table (frozen), char encoder, contextual width and the projection to
/// the model dimension.
template <typename Scalar>
void add_token_params(ParamStore<Scalar>& store, const ModelConfig& config, const Vocab& vocab, const MatrixX<double>& word_table,
                      Rng& rng) {
  if (word_table.rows() != static_cast<Index>(vocab.word_count()) || word_table.cols() != config.word_dim)
    throw DimensionError("word table is " + std::to_string(word_table.rows()) + "x" + std::to_string(word_table.cols()) +
                         ", expected " + std::to_string(vocab.word_count()) + "x" + std::to_string(config.word_dim));
  store.add("word.table", Tensor<Scalar>(Shape{word_table.rows(), word_table.cols()}, word_table.cast<Scalar>()), false);
  if (config.use_char) {
    store.add_uniform("char.table", Shape{static_cast<Index>(vocab.char_count()), config.char_embed_dim}, 0.1, rng);
    add_lstm_params(store, "char.fwd", config.char_embed_dim, config.char_hidden, rng);
    add_lstm_params(store, "char.bwd", config.char_embed_dim, config.char_hidden, rng);
  }
  store.add_xavier("token.proj.W", config.token_dim(), config.hidden, rng);
  store.add_zeros("token.proj.b", Shape{config.hidden});
}

/// Character BiLSTM over every token at once. Shorter tokens stop updating
/// their state once exhausted, so each row ends on its own last character.
/// Returns [tokens, 2 * hidden]: final forward state then final backward state.
template <typename Scalar>
Var<Scalar> encode_chars(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::vector<std::vector<int>>& chars, int hidden) {
  const auto n = static_cast<Index>(chars.size());
  std::size_t longest = 0;
  for (const auto& c : chars) longest = std::max(longest, c.size());
  const Var<Scalar> table = g.parameter(store, "char.table");

  auto run = [&](const std::string& prefix, bool reverse) {
    const Var<Scalar> W = g.parameter(store, prefix + ".W");
    const Var<Scalar> U = g.parameter(store, prefix + ".U");
    const Var<Scalar> b = g.parameter(store, prefix + ".b");
    Var<Scalar> h = g.constant(Tensor<Scalar>(Shape{n, hidden}));
    Var<Scalar> c = h;
    for (std::size_t t = 0; t < longest; ++t) {
      std::vector<Index> ids(static_cast<std::size_t>(n), Vocab::kPad);
      std::vector<bool> active(static_cast<std::size_t>(n), false);
      for (Index r = 0; r < n; ++r) {
        const auto& word = chars[r];
        if (t >= word.size()) continue;
        active[r] = true;
        ids[r] = word[reverse ? word.size() - 1 - t : t];
      }
      const Var<Scalar> x = gather_rows(table, ids);
      const Var<Scalar> gates = add_bias(matmul(x, W) + matmul(h, U), b);
      const Var<Scalar> in = sigmoid(slice_cols(gates, 0, hidden));
      const Var<Scalar> forget = sigmoid(slice_cols(gates, hidden, hidden));
      const Var<Scalar> cand = tanh(slice_cols(gates, 2 * hidden, hidden));
      const Var<Scalar> out = sigmoid(slice_cols(gates, 3 * hidden, hidden));
      const Var<Scalar> c_next = mul(forget, c) + mul(in, cand);
      const Var<Scalar> h_next = mul(out, tanh(c_next));
      c = select_rows(c_next, c, active);
      h = select_rows(h_next, h, active);
    }
    return h;
  };
  return concat<Scalar>({run("char.fwd", false), run("char.bwd", true)});
}

/// Pieces of the token representation, kept for inspection.
template <typename Scalar>
struct TokenRep {
  std::optional<Var<Scalar>> chars;
  Var<Scalar> words;
  std::optional<Var<Scalar>> contextual;
  Var<Scalar> joined;     // [n, token_dim]: chars, words, contextual
  Var<Scalar> projected;  // [n, hidden]
};

template <typename Scalar>
TokenRep<Scalar> token_representation(Graph<Scalar>& g, ParamStore<Scalar>& store, const ModelConfig& config, const Vocab& vocab,
                                      const Example& example) {
  if (example.tokens.empty()) throw DimensionError("example " + example.id + " has no tokens");
  TokenRep<Scalar> rep;
  std::vector<Var<Scalar>> parts;
  if (config.use_char) {
    rep.chars = encode_chars(g, store, vocab.char_indices(example.tokens), config.char_hidden);
    parts.push_back(*rep.chars);
  }
  std::vector<Index> ids;
  for (int id : vocab.word_indices(example.tokens)) ids.push_back(id);
  rep.words = gather_rows(g.parameter(store, "word.table"), ids);
  parts.push_back(rep.words);
  if (config.plm_dim > 0) {
    if (!example.contextual)
      throw AlignmentError("example " + example.id + " has no contextual vectors but the model expects " +
                           std::to_string(config.plm_dim));
    const auto& m = *example.contextual;
    if (m.rows() != example.size() || m.cols() != config.plm_dim)
      throw AlignmentError("example " + example.id + " contextual vectors are " + std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()) + ", expected " + std::to_string(example.size()) + "x" +
                           std::to_string(config.plm_dim));
    rep.contextual = g.constant(Tensor<Scalar>::from_matrix(m.cast<Scalar>()));
    parts.push_back(*rep.contextual);
  }
  rep.joined = parts.size() == 1 ? parts.front() : concat(parts);
  rep.projected = linear(g, store, "token.proj", rep.joined);
  return rep;
}

}  // namespace dualabsa
