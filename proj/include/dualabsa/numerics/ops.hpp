#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dualabsa/numerics/graph.hpp"

namespace dualabsa {

namespace detail {

template <typename Scalar>
Graph<Scalar>& graph_of(Var<Scalar> a, Var<Scalar> b) {
  if (a.graph != b.graph) throw std::invalid_argument("operands belong to different graphs");
  return *a.graph;
}

template <typename Scalar>
void require_same_shape(const char* op, Var<Scalar> a, Var<Scalar> b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

}  // namespace detail

/// Matrix product over the last axis of `a`; `b` must be two-dimensional.
template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b);
  if (b.value().rank() != 2 || a.value().cols() != b.value().rows())
    throw DimensionError("matmul: shape mismatch " + to_string(a.shape()) + " x " + to_string(b.shape()));
  Shape out = a.shape();
  out.back() = b.value().cols();
  MatrixX<Scalar> product = a.mat() * b.mat();
  return g.record("matmul", Tensor<Scalar>(out, std::move(product)), {a, b}, [ia = a.id, ib = b.id](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) g.grad(ia).noalias() += G * g.value(ib).matrix().transpose();
    if (g.requires_grad(ib)) g.grad(ib).noalias() += g.value(ia).matrix().transpose() * G;
  });
}

/// a * b^T for two matrices sharing their column count.
template <typename Scalar>
Var<Scalar> matmul_nt(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b);
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.value().cols() != b.value().cols())
    throw DimensionError("matmul_nt: shape mismatch " + to_string(a.shape()) + " x " + to_string(b.shape()) + "^T");
  MatrixX<Scalar> product = a.mat() * b.mat().transpose();
  return g.record("matmul_nt", Tensor<Scalar>::from_matrix(std::move(product)), {a, b},
                  [ia = a.id, ib = b.id](Graph<Scalar>& g, int self) {
                    const auto& G = g.grad(self);
                    if (g.requires_grad(ia)) g.grad(ia).noalias() += G * g.value(ib).matrix();
                    if (g.requires_grad(ib)) g.grad(ib).noalias() += G.transpose() * g.value(ia).matrix();
                  });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b);
  detail::require_same_shape("add", a, b);
  MatrixX<Scalar> sum = a.mat() + b.mat();
  return g.record("add", Tensor<Scalar>(a.shape(), std::move(sum)), {a, b}, [ia = a.id, ib = b.id](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) g.grad(ia) += G;
    if (g.requires_grad(ib)) g.grad(ib) += G;
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

/// Adds a bias vector (length = last dimension) to every row.
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> a, Var<Scalar> bias) {
  auto& g = detail::graph_of(a, bias);
  if (bias.value().size() != a.value().cols())
    throw DimensionError("add_bias: bias " + to_string(bias.shape()) + " does not match " + to_string(a.shape()));
  MatrixX<Scalar> out = a.mat();
  out.rowwise() += Eigen::Map<const RowVectorX<Scalar>>(bias.mat().data(), bias.value().size());
  return g.record("add_bias", Tensor<Scalar>(a.shape(), std::move(out)), {a, bias},
                  [ia = a.id, ib = bias.id](Graph<Scalar>& g, int self) {
                    const auto& G = g.grad(self);
                    if (g.requires_grad(ia)) g.grad(ia) += G;
                    if (g.requires_grad(ib)) g.grad(ib).reshaped(1, G.cols()) += G.colwise().sum();
                  });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b);
  detail::require_same_shape("mul", a, b);
  MatrixX<Scalar> out = a.mat().cwiseProduct(b.mat());
  return g.record("mul", Tensor<Scalar>(a.shape(), std::move(out)), {a, b}, [ia = a.id, ib = b.id](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    if (g.requires_grad(ia)) g.grad(ia) += G.cwiseProduct(g.value(ib).matrix());
    if (g.requires_grad(ib)) g.grad(ib) += G.cwiseProduct(g.value(ia).matrix());
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar factor) {
  MatrixX<Scalar> out = a.mat() * factor;
  return a.graph->record("scale", Tensor<Scalar>(a.shape(), std::move(out)), {a}, [ia = a.id, factor](Graph<Scalar>& g, int self) {
    g.grad(ia) += g.grad(self) * factor;
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  MatrixX<Scalar> out = a.mat().cwiseMax(Scalar(0));
  return a.graph->record("relu", Tensor<Scalar>(a.shape(), std::move(out)), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    const auto& x = g.value(ia).matrix();
    g.grad(ia) += (x.array() > Scalar(0)).select(g.grad(self), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  MatrixX<Scalar> out = a.mat().array().tanh().matrix();
  return a.graph->record("tanh", Tensor<Scalar>(a.shape(), std::move(out)), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self).matrix().array();
    g.grad(ia).array() += g.grad(self).array() * (Scalar(1) - y.square());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  MatrixX<Scalar> out = (Scalar(1) / (Scalar(1) + (-a.mat().array()).exp())).matrix();
  return a.graph->record("sigmoid", Tensor<Scalar>(a.shape(), std::move(out)), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self).matrix().array();
    g.grad(ia).array() += g.grad(self).array() * y * (Scalar(1) - y);
  });
}

/// Concatenation along the last axis; all leading dimensions must agree.
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  Index total = 0;
  for (const auto& p : parts) {
    if (p.graph != parts.front().graph) throw std::invalid_argument("operands belong to different graphs");
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin()))
      throw DimensionError("concat: shape mismatch " + to_string(first) + " vs " + to_string(s));
    total += s.back();
  }
  Shape out_shape = first;
  out_shape.back() = total;
  Tensor<Scalar> out(out_shape);
  std::vector<std::pair<int, Index>> layout;
  Index offset = 0;
  for (const auto& p : parts) {
    out.matrix().middleCols(offset, p.value().cols()) = p.mat();
    layout.emplace_back(p.id, offset);
    offset += p.value().cols();
  }
  return parts.front().graph->record("concat", std::move(out), parts, [layout](Graph<Scalar>& g, int self) {
    const auto& G = g.grad(self);
    for (auto [id, off] : layout)
      if (g.requires_grad(id)) g.grad(id) += G.middleCols(off, g.value(id).cols());
  });
}

/// Same values, row-major order, under a new shape of equal element count.
template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> a, Shape shape) {
  Tensor<Scalar> out = a.value().reshaped(std::move(shape));
  return a.graph->record("reshape", std::move(out), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    auto& dst = g.grad(ia);
    const auto& src = g.grad(self);
    Eigen::Map<MatrixX<Scalar>>(dst.data(), dst.rows(), dst.cols()) +=
        Eigen::Map<const MatrixX<Scalar>>(src.data(), dst.rows(), dst.cols());
  });
}

/// Columns [start, start + count) of the last axis.
template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Index start, Index count) {
  if (start < 0 || count <= 0 || start + count > a.value().cols())
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + count) + ") out of " +
                         to_string(a.shape()));
  Shape out_shape = a.shape();
  out_shape.back() = count;
  MatrixX<Scalar> out = a.mat().middleCols(start, count);
  return a.graph->record("slice_cols", Tensor<Scalar>(out_shape, std::move(out)), {a},
                         [ia = a.id, start, count](Graph<Scalar>& g, int self) {
                           g.grad(ia).middleCols(start, count) += g.grad(self);
                         });
}

/// Rows of a 2-D table selected by index (embedding lookup). Output is [m, k].
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::vector<Index> rows) {
  const Index limit = table.value().rows();
  MatrixX<Scalar> out(static_cast<Index>(rows.size()), table.value().cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= limit)
      throw DimensionError("gather_rows: index " + std::to_string(rows[r]) + " out of " + to_string(table.shape()));
    out.row(static_cast<Index>(r)) = table.mat().row(rows[r]);
  }
  return table.graph->record("gather_rows", Tensor<Scalar>::from_matrix(std::move(out)), {table},
                             [it = table.id, rows = std::move(rows)](Graph<Scalar>& g, int self) {
                               const auto& G = g.grad(self);
                               auto& dt = g.grad(it);
                               for (std::size_t r = 0; r < rows.size(); ++r) dt.row(rows[r]) += G.row(static_cast<Index>(r));
                             });
}

/// Row r of the result is row r of `taken` where keep[r], else row r of `kept`.
template <typename Scalar>
Var<Scalar> select_rows(Var<Scalar> taken, Var<Scalar> kept, std::vector<bool> keep) {
  auto& g = detail::graph_of(taken, kept);
  detail::require_same_shape("select_rows", taken, kept);
  if (static_cast<Index>(keep.size()) != taken.value().rows()) throw DimensionError("select_rows: mask length mismatch");
  MatrixX<Scalar> out = kept.mat();
  for (std::size_t r = 0; r < keep.size(); ++r)
    if (keep[r]) out.row(static_cast<Index>(r)) = taken.mat().row(static_cast<Index>(r));
  return g.record("select_rows", Tensor<Scalar>(taken.shape(), std::move(out)), {taken, kept},
                  [ia = taken.id, ib = kept.id, keep = std::move(keep)](Graph<Scalar>& g, int self) {
                    const auto& G = g.grad(self);
                    for (std::size_t r = 0; r < keep.size(); ++r) {
                      int target = keep[r] ? ia : ib;
                      if (g.requires_grad(target)) g.grad(target).row(static_cast<Index>(r)) += G.row(static_cast<Index>(r));
                    }
                  });
}

namespace detail {

template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& x, const std::vector<bool>& keep_cols) {
  MatrixX<Scalar> y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    Scalar peak = -std::numeric_limits<Scalar>::infinity();
    for (Index c = 0; c < x.cols(); ++c)
      if (keep_cols.empty() || keep_cols[c]) peak = std::max(peak, x(r, c));
    if (!std::isfinite(peak)) throw NumericError("softmax: row " + std::to_string(r) + " has no finite unmasked entry");
    Scalar total = 0;
    for (Index c = 0; c < x.cols(); ++c) {
      Scalar e = (keep_cols.empty() || keep_cols[c]) ? std::exp(x(r, c) - peak) : Scalar(0);
      y(r, c) = e;
      total += e;
    }
    y.row(r) /= total;
  }
  return y;
}

}  // namespace detail

/// Softmax over the last axis, max-subtracted. Columns with keep_cols[c] == false
/// are treated as -inf scores (zero weight).
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a, std::vector<bool> keep_cols = {}) {
  if (!keep_cols.empty() && static_cast<Index>(keep_cols.size()) != a.value().cols())
    throw DimensionError("softmax: mask length mismatch");
  MatrixX<Scalar> y = detail::softmax_rows<Scalar>(a.mat(), keep_cols);
  return a.graph->record("softmax", Tensor<Scalar>(a.shape(), std::move(y)), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self).matrix();
    const auto& G = g.grad(self);
    RowVectorX<Scalar> dots = G.cwiseProduct(y).rowwise().sum().transpose();
    g.grad(ia).array() += y.array() * (G.colwise() - dots.transpose()).array();
  });
}

/// Sum over rows of weight_r * -log softmax(logits_r)[gold_r]. Rows with gold < 0
/// are ignored. Empty `weights` means all ones. Returns a scalar.
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, std::vector<int> gold, std::vector<Scalar> weights = {}) {
  const auto& z = logits.mat();
  if (static_cast<Index>(gold.size()) != z.rows())
    throw DimensionError("cross_entropy: " + std::to_string(gold.size()) + " labels for " + to_string(logits.shape()));
  if (!weights.empty() && weights.size() != gold.size()) throw DimensionError("cross_entropy: weight count mismatch");
  MatrixX<Scalar> probs(z.rows(), z.cols());
  Scalar loss = 0;
  for (Index r = 0; r < z.rows(); ++r) {
    const int label = gold[r];
    if (label < 0) continue;
    if (label >= z.cols())
      throw LabelError("cross_entropy: gold label " + std::to_string(label) + " outside [0, " + std::to_string(z.cols()) + ")");
    const Scalar peak = z.row(r).maxCoeff();
    const Scalar log_total = peak + std::log((z.row(r).array() - peak).exp().sum());
    probs.row(r) = (z.row(r).array() - log_total).exp().matrix();
    const Scalar w = weights.empty() ? Scalar(1) : weights[r];
    loss += w * (log_total - z(r, label));
  }
  return logits.graph->record(
      "cross_entropy", Tensor<Scalar>::scalar(loss), {logits},
      [il = logits.id, gold = std::move(gold), weights = std::move(weights), probs = std::move(probs)](Graph<Scalar>& g, int self) {
        const Scalar upstream = g.grad(self)(0, 0);
        auto& dz = g.grad(il);
        for (Index r = 0; r < probs.rows(); ++r) {
          if (gold[r] < 0) continue;
          const Scalar w = (weights.empty() ? Scalar(1) : weights[r]) * upstream;
          dz.row(r) += w * probs.row(r);
          dz(r, gold[r]) -= w;
        }
      });
}

/// Single-distribution form: logits of shape [c] and one gold index.
template <typename Scalar>
Var<Scalar> cross_entropy(Var<Scalar> logits, int gold) {
  if (logits.value().rows() != 1) throw DimensionError("cross_entropy: expected one row of logits, got " + to_string(logits.shape()));
  if (gold < 0) throw LabelError("cross_entropy: gold label " + std::to_string(gold) + " is negative");
  return cross_entropy(logits, std::vector<int>{gold});
}

/// Normalises each vector along the last axis to zero mean and unit
/// population variance, then applies gain and bias.
template <typename Scalar>
Var<Scalar> layer_norm(Var<Scalar> x, Var<Scalar> gain, Var<Scalar> bias, Scalar eps) {
  auto& g = detail::graph_of(x, gain);
  const Index d = x.value().cols();
  if (gain.value().size() != d || bias.value().size() != d)
    throw DimensionError("layer_norm: gain/bias " + to_string(gain.shape()) + " for input " + to_string(x.shape()));
  const auto& X = x.mat();
  MatrixX<Scalar> normed(X.rows(), d);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    const Scalar mean = X.row(r).mean();
    const Scalar var = (X.row(r).array() - mean).square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    normed.row(r) = (X.row(r).array() - mean) * inv_std(r);
  }
  MatrixX<Scalar> out = normed;
  for (Index r = 0; r < out.rows(); ++r)
    out.row(r) = out.row(r).cwiseProduct(gain.mat().reshaped(1, d)) + bias.mat().reshaped(1, d);
  return g.record("layer_norm", Tensor<Scalar>(x.shape(), std::move(out)), {x, gain, bias},
                  [ix = x.id, ig = gain.id, ib = bias.id, normed = std::move(normed), inv_std = std::move(inv_std)](
                      Graph<Scalar>& g, int self) {
                    const auto& G = g.grad(self);
                    const Index d = G.cols();
                    if (g.requires_grad(ig)) g.grad(ig).reshaped(1, d) += G.cwiseProduct(normed).colwise().sum();
                    if (g.requires_grad(ib)) g.grad(ib).reshaped(1, d) += G.colwise().sum();
                    if (!g.requires_grad(ix)) return;
                    const auto gain_row = g.value(ig).matrix().reshaped(1, d);
                    auto& dx = g.grad(ix);
                    for (Index r = 0; r < G.rows(); ++r) {
                      RowVectorX<Scalar> dn = G.row(r).cwiseProduct(gain_row);
                      const Scalar mean_dn = dn.mean();
                      const Scalar mean_dn_n = dn.cwiseProduct(normed.row(r)).mean();
                      dx.row(r).array() += inv_std(r) * (dn.array() - mean_dn - normed.row(r).array() * mean_dn_n);
                    }
                  });
}

/// Inverted dropout: kept values are divided by (1 - rate). Identity (the same
/// node) when not training or rate == 0. The mask comes from the graph's rng.
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> x, double rate, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  auto& g = *x.graph;
  g.mark_stochastic();
  MatrixX<Scalar> mask(x.value().rows(), x.value().cols());
  const Scalar keep_scale = Scalar(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = g.rng().bernoulli(rate) ? Scalar(0) : keep_scale;
  MatrixX<Scalar> out = x.mat().cwiseProduct(mask);
  return g.record("dropout", Tensor<Scalar>(x.shape(), std::move(out)), {x},
                  [ix = x.id, mask = std::move(mask)](Graph<Scalar>& g, int self) {
                    g.grad(ix) += g.grad(self).cwiseProduct(mask);
                  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  return a.graph->record("sum", Tensor<Scalar>::scalar(a.mat().sum()), {a}, [ia = a.id](Graph<Scalar>& g, int self) {
    g.grad(ia).array() += g.grad(self)(0, 0);
  });
}

/// out[i, j] = a[i] + b[j] for a, b of shape [n, k]; result shape [n, n, k].
template <typename Scalar>
Var<Scalar> outer_sum(Var<Scalar> a, Var<Scalar> b) {
  auto& g = detail::graph_of(a, b);
  detail::require_same_shape("outer_sum", a, b);
  if (a.value().rank() != 2) throw DimensionError("outer_sum: expected [n, k], got " + to_string(a.shape()));
  const Index n = a.value().rows();
  const Index k = a.value().cols();
  MatrixX<Scalar> out(n * n, k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) out.row(i * n + j) = a.mat().row(i) + b.mat().row(j);
  return g.record("outer_sum", Tensor<Scalar>(Shape{n, n, k}, std::move(out)), {a, b},
                  [ia = a.id, ib = b.id, n](Graph<Scalar>& g, int self) {
                    const auto& G = g.grad(self);
                    const bool need_a = g.requires_grad(ia);
                    const bool need_b = g.requires_grad(ib);
                    for (Index i = 0; i < n; ++i)
                      for (Index j = 0; j < n; ++j) {
                        if (need_a) g.grad(ia).row(i) += G.row(i * n + j);
                        if (need_b) g.grad(ib).row(j) += G.row(i * n + j);
                      }
                  });
}

/// For a grid [n, n, k]: out[i] = channelwise max over j >= i of m[i, j].
/// Ties route the gradient to the smallest j.
template <typename Scalar>
Var<Scalar> row_max_upper(Var<Scalar> m) {
  const Shape& s = m.shape();
  if (s.size() != 3 || s[0] != s[1]) throw DimensionError("row_max_upper: expected [n, n, k], got " + to_string(s));
  const Index n = s[0];
  const Index k = s[2];
  MatrixX<Scalar> out(n, k);
  std::vector<Index> argmax(static_cast<std::size_t>(n * k));
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < k; ++c) {
      Index best = i;
      for (Index j = i + 1; j < n; ++j)
        if (m.mat()(i * n + j, c) > m.mat()(i * n + best, c)) best = j;
      out(i, c) = m.mat()(i * n + best, c);
      argmax[static_cast<std::size_t>(i * k + c)] = best;
    }
  return m.graph->record("row_max_upper", Tensor<Scalar>::from_matrix(std::move(out)), {m},
                         [im = m.id, n, k, argmax = std::move(argmax)](Graph<Scalar>& g, int self) {
                           const auto& G = g.grad(self);
                           auto& dm = g.grad(im);
                           for (Index i = 0; i < n; ++i)
                             for (Index c = 0; c < k; ++c) dm(i * n + argmax[static_cast<std::size_t>(i * k + c)], c) += G(i, c);
                         });
}

/// Affine map x W + b with parameters looked up by name.
template <typename Scalar>
Var<Scalar> linear(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> x) {
  return add_bias(matmul(x, g.parameter(store, prefix + ".W")), g.parameter(store, prefix + ".b"));
}

}  // namespace dualabsa
