#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/numerics.hpp"
#include "dualabsa/wavefront.hpp"

namespace dualabsa {

/// Scan origin corner and sweep: DownRight starts at (0, 0).
enum class ScanDirection { DownRight, UpLeft, DownLeft, UpRight };

inline std::string_view to_string(ScanDirection d) {
  switch (d) {
    case ScanDirection::DownRight: return "down-right";
    case ScanDirection::UpLeft: return "up-left";
    case ScanDirection::DownLeft: return "down-left";
    case ScanDirection::UpRight: return "up-right";
  }
  return "?";
}

/// uni = {DownRight}; bi adds UpLeft; quad adds DownLeft and UpRight.
inline std::vector<ScanDirection> scan_directions(DirectionMode mode) {
  static constexpr std::array<ScanDirection, 4> all = {ScanDirection::DownRight, ScanDirection::UpLeft, ScanDirection::DownLeft,
                                                       ScanDirection::UpRight};
  return {all.begin(), all.begin() + direction_count(mode)};
}

/// Grid cell visited at canonical position (a, b) of a scan. Canonical
/// predecessors (a-1, b) and (a, b-1) are the scan's row and column neighbours.
inline std::pair<int, int> scan_cell(ScanDirection d, int n, int a, int b) {
  switch (d) {
    case ScanDirection::DownRight: return {a, b};
    case ScanDirection::UpLeft: return {n - 1 - a, n - 1 - b};
    case ScanDirection::DownLeft: return {a, n - 1 - b};
    case ScanDirection::UpRight: return {n - 1 - a, b};
  }
  return {a, b};
}

inline std::string pair_prefix(int layer) { return "pair" + std::to_string(layer); }

template <typename Scalar>
void add_gru_params(ParamStore<Scalar>& store, const std::string& prefix, int input, int hidden, Rng& rng) {
  store.add_xavier(prefix + ".Wx", input, 3 * hidden, rng);
  store.add_zeros(prefix + ".bx", Shape{3 * hidden});
  store.add_xavier(prefix + ".U", hidden, 3 * hidden, rng);
  store.add_uniform(prefix + ".ctx.v", Shape{3, hidden}, 0.1, rng);
  store.add_zeros(prefix + ".ctx.b", Shape{3});
}

template <typename Scalar>
void add_pair_init_params(ParamStore<Scalar>& store, const std::string& prefix, int d, int d_pair, Rng& rng) {
  // First layer acts on [S_i; S_j]; its weight is kept as the two row blocks.
  const double limit = std::sqrt(6.0 / static_cast<double>(2 * d + d_pair));
  store.add_uniform(prefix + ".W1_row", Shape{d, d_pair}, limit, rng);
  store.add_uniform(prefix + ".W1_col", Shape{d, d_pair}, limit, rng);
  store.add_zeros(prefix + ".b1", Shape{d_pair});
  store.add_xavier(prefix + ".W2", d_pair, d_pair, rng);
  store.add_zeros(prefix + ".b2", Shape{d_pair});
}

/// Per-layer pair parameters: MLP init, one GRU per scan direction (or one
/// shared), and the pair-to-sequence map for every layer but the last.
template <typename Scalar>
void add_pair_params(ParamStore<Scalar>& store, const ModelConfig& config, Rng& rng) {
  const ModelConfig c = config.resolved();
  const int scans = c.share_directions ? 1 : direction_count(c.directions);
  for (int l = 1; l <= c.layers; ++l) {
    const std::string prefix = pair_prefix(l);
    add_pair_init_params(store, prefix + ".init", c.hidden, c.pair_dim, rng);
    for (int k = 0; k < scans; ++k) add_gru_params(store, prefix + ".gru" + std::to_string(k), c.pair_dim, c.pair_hidden, rng);
    if (c.interaction && l < c.layers) store.add_xavier(prefix + ".inter.W", c.pair_channels(), c.hidden, rng);
  }
}

/// S'[i, j] = relu(relu([S_i; S_j] W1 + b1) W2 + b2), shape [n, n, d_pair].
template <typename Scalar>
Var<Scalar> pair_init(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> S) {
  const Var<Scalar> rows = matmul(S, g.parameter(store, prefix + ".W1_row"));
  const Var<Scalar> cols = matmul(S, g.parameter(store, prefix + ".W1_col"));
  const Var<Scalar> hidden = relu(add_bias(outer_sum(rows, cols), g.parameter(store, prefix + ".b1")));
  return relu(add_bias(matmul(hidden, g.parameter(store, prefix + ".W2")), g.parameter(store, prefix + ".b2")));
}

namespace detail {

template <typename Scalar>
struct ScanTape {
  MatrixX<Scalar> alpha;  // [cells, 3] context weights
  MatrixX<Scalar> hc;     // mixed context
  MatrixX<Scalar> z;
  MatrixX<Scalar> r;
  MatrixX<Scalar> cand;
  std::vector<std::array<int, 2>> neighbours;  // row and column neighbour cell, -1 outside the grid
};

template <typename Scalar>
RowVectorX<Scalar> logistic(const RowVectorX<Scalar>& x) {
  return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
}

}  // namespace detail

/// Fused 2D GRU scan.
///
/// xproj [n, n, 3h] holds the input projections for the update, reset and
/// candidate gates; prev [n, n, h] is the previous layer (absent means zeros);
/// U [h, 3h]; ctx_v [3, h]; ctx_b [3]. Each cell mixes its three contexts
/// (previous layer, row neighbour, column neighbour) with softmax weights over
/// v_k . c_k + b_k into hc, then takes one GRU step:
///   z = sig(x_z + hc U_z), r = sig(x_r + hc U_r), cand = tanh(x_c + (r * hc) U_c)
///   H = (1 - z) * hc + z * cand
template <typename Scalar>
Var<Scalar> mdgru_scan(Var<Scalar> xproj, std::optional<Var<Scalar>> prev, Var<Scalar> U, Var<Scalar> ctx_v, Var<Scalar> ctx_b,
                       ScanDirection dir, int workers = 1) {
  using Row = RowVectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  auto& graph = *xproj.graph;
  const Shape& xs = xproj.shape();
  if (xs.size() != 3 || xs[0] != xs[1] || xs[2] % 3 != 0) throw DimensionError("mdgru: xproj must be [n, n, 3h], got " + to_string(xs));
  const int n = static_cast<int>(xs[0]);
  const Index h = xs[2] / 3;
  if (U.shape() != Shape{h, 3 * h}) throw DimensionError("mdgru: U must be [h, 3h], got " + to_string(U.shape()));
  if (ctx_v.value().size() != 3 * h || ctx_b.value().size() != 3) throw DimensionError("mdgru: context gates must be [3, h] and [3]");
  if (prev && prev->shape() != Shape{n, n, h}) throw DimensionError("mdgru: previous layer must be " + to_string(Shape{n, n, h}));

  const Matrix& X = xproj.mat();
  const Matrix& Um = U.mat();
  const Eigen::Map<const Matrix> V(ctx_v.mat().data(), 3, h);
  const Scalar* beta = ctx_b.mat().data();
  const Matrix* P = prev ? &prev->mat() : nullptr;
  const Index cells = static_cast<Index>(n) * n;

  Matrix H = Matrix::Zero(cells, h);
  detail::ScanTape<Scalar> tape{Matrix(cells, 3), Matrix(cells, h), Matrix(cells, h), Matrix(cells, h), Matrix(cells, h),
                                std::vector<std::array<int, 2>>(static_cast<std::size_t>(cells))};

  auto step = [&](int a, int b) {
    const auto [i, j] = scan_cell(dir, n, a, b);
    const int idx = i * n + j;
    std::array<int, 2> nb = {-1, -1};
    if (a > 0) {
      const auto [ri, rj] = scan_cell(dir, n, a - 1, b);
      nb[0] = ri * n + rj;
    }
    if (b > 0) {
      const auto [ci, cj] = scan_cell(dir, n, a, b - 1);
      nb[1] = ci * n + cj;
    }
    tape.neighbours[idx] = nb;
    const Row zero = Row::Zero(h);
    const Row c[3] = {P ? Row(P->row(idx)) : zero, nb[0] >= 0 ? Row(H.row(nb[0])) : zero, nb[1] >= 0 ? Row(H.row(nb[1])) : zero};
    Scalar s[3];
    for (int k = 0; k < 3; ++k) s[k] = V.row(k).dot(c[k]) + beta[k];
    const Scalar peak = std::max({s[0], s[1], s[2]});
    Scalar total = 0;
    for (Scalar& v : s) total += (v = std::exp(v - peak));
    Row hc = Row::Zero(h);
    for (int k = 0; k < 3; ++k) {
      tape.alpha(idx, k) = s[k] / total;
      hc += tape.alpha(idx, k) * c[k];
    }
    const Row gates = hc * Um.leftCols(2 * h);
    const Row z = detail::logistic<Scalar>(X.row(idx).head(h) + gates.head(h));
    const Row r = detail::logistic<Scalar>(X.row(idx).segment(h, h) + gates.tail(h));
    const Row cand = (X.row(idx).tail(h) + r.cwiseProduct(hc) * Um.rightCols(h)).array().tanh().matrix();
    H.row(idx) = (Scalar(1) - z.array()).matrix().cwiseProduct(hc) + z.cwiseProduct(cand);
    tape.hc.row(idx) = hc;
    tape.z.row(idx) = z;
    tape.r.row(idx) = r;
    tape.cand.row(idx) = cand;
  };
  run_plan(wavefront_schedule(n, workers), step);

  std::vector<Var<Scalar>> inputs = {xproj, U, ctx_v, ctx_b};
  if (prev) inputs.push_back(*prev);
  const int prev_id = prev ? prev->id : -1;
  auto backward = [ix = xproj.id, iu = U.id, iv = ctx_v.id, ib = ctx_b.id, prev_id, n, h, dir,
                   tape = std::move(tape)](Graph<Scalar>& g, int self) {
    const Matrix& Hv = g.value(self).matrix();
    const Matrix& Um = g.value(iu).matrix();
    const Eigen::Map<const Matrix> V(g.value(iv).matrix().data(), 3, h);
    const Matrix* P = prev_id >= 0 ? &g.value(prev_id).matrix() : nullptr;
    Matrix dH = g.grad(self);
    Matrix dX = Matrix::Zero(Hv.rows(), 3 * h);
    Matrix dU = Matrix::Zero(h, 3 * h);
    Matrix dV = Matrix::Zero(3, h);
    Row dbeta = Row::Zero(3);
    Matrix dP = Matrix::Zero(P ? Hv.rows() : 0, h);
    const Row zero = Row::Zero(h);
    // Canonical row-major order is a valid forward order, so its reverse
    // visits every cell after all cells that read it.
    for (int a = n - 1; a >= 0; --a)
      for (int b = n - 1; b >= 0; --b) {
        const auto [i, j] = scan_cell(dir, n, a, b);
        const int idx = i * n + j;
        const auto nb = tape.neighbours[idx];
        const Row c[3] = {P ? Row(P->row(idx)) : zero, nb[0] >= 0 ? Row(Hv.row(nb[0])) : zero, nb[1] >= 0 ? Row(Hv.row(nb[1])) : zero};
        const Row dh = dH.row(idx);
        const Row hc = tape.hc.row(idx);
        const Row z = tape.z.row(idx);
        const Row r = tape.r.row(idx);
        const Row cand = tape.cand.row(idx);

        const Row dcand_pre = dh.cwiseProduct(z).cwiseProduct((Scalar(1) - cand.array().square()).matrix());
        const Row dz_pre = dh.cwiseProduct(cand - hc).cwiseProduct(z.cwiseProduct((Scalar(1) - z.array()).matrix()));
        const Row d_rh = dcand_pre * Um.rightCols(h).transpose();
        const Row dr_pre = d_rh.cwiseProduct(hc).cwiseProduct(r.cwiseProduct((Scalar(1) - r.array()).matrix()));
        Row dhc = dh.cwiseProduct((Scalar(1) - z.array()).matrix()) + d_rh.cwiseProduct(r) + dz_pre * Um.leftCols(h).transpose() +
                  dr_pre * Um.middleCols(h, h).transpose();

        dX.row(idx).head(h) += dz_pre;
        dX.row(idx).segment(h, h) += dr_pre;
        dX.row(idx).tail(h) += dcand_pre;
        dU.leftCols(h).noalias() += hc.transpose() * dz_pre;
        dU.middleCols(h, h).noalias() += hc.transpose() * dr_pre;
        dU.rightCols(h).noalias() += r.cwiseProduct(hc).transpose() * dcand_pre;

        Scalar dalpha[3];
        Scalar weighted = 0;
        for (int k = 0; k < 3; ++k) {
          dalpha[k] = dhc.dot(c[k]);
          weighted += tape.alpha(idx, k) * dalpha[k];
        }
        for (int k = 0; k < 3; ++k) {
          const Scalar alpha = tape.alpha(idx, k);
          const Scalar ds = alpha * (dalpha[k] - weighted);
          dV.row(k) += ds * c[k];
          dbeta(k) += ds;
          const Row dc = alpha * dhc + ds * V.row(k);
          if (k == 0 && P) dP.row(idx) += dc;
          if (k > 0 && nb[k - 1] >= 0) dH.row(nb[k - 1]) += dc;
        }
      }
    if (g.requires_grad(ix)) g.grad(ix) += dX;
    if (g.requires_grad(iu)) g.grad(iu) += dU;
    if (g.requires_grad(iv)) g.grad(iv).reshaped(3, h) += dV;
    if (g.requires_grad(ib)) g.grad(ib).reshaped(1, 3) += dbeta;
    if (P && g.requires_grad(prev_id)) g.grad(prev_id) += dP;
  };
  return graph.record("mdgru_scan", Tensor<Scalar>(Shape{n, n, h}, std::move(H)), inputs, std::move(backward));
}

/// One scan over S' [n, n, d_pair] with the GRU parameters under `prefix`.
template <typename Scalar>
Var<Scalar> mdgru_forward(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> S_pair,
                          std::optional<Var<Scalar>> prev, ScanDirection dir, int workers = 1) {
  const Var<Scalar> xproj = add_bias(matmul(S_pair, g.parameter(store, prefix + ".Wx")), g.parameter(store, prefix + ".bx"));
  return mdgru_scan(xproj, prev, g.parameter(store, prefix + ".U"), g.parameter(store, prefix + ".ctx.v"),
                    g.parameter(store, prefix + ".ctx.b"), dir, workers);
}

/// All scans of a mode, concatenated in scan_directions order. Scan k reads
/// channels [k h, (k + 1) h) of the previous layer's grid.
template <typename Scalar>
Var<Scalar> mdgru_multi(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& layer_prefix, Var<Scalar> S_pair,
                        std::optional<Var<Scalar>> prev, DirectionMode mode, bool share, int workers = 1) {
  const auto dirs = scan_directions(mode);
  std::vector<Var<Scalar>> outs;
  Index h = 0;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const std::string prefix = layer_prefix + ".gru" + std::to_string(share ? 0 : k);
    if (h == 0) h = g.value(g.parameter(store, prefix + ".U").id).rows();
    std::optional<Var<Scalar>> slice;
    if (prev) {
      if (prev->value().cols() != h * static_cast<Index>(dirs.size()))
        throw DimensionError("mdgru_multi: previous layer has " + std::to_string(prev->value().cols()) + " channels, expected " +
                             std::to_string(h * static_cast<Index>(dirs.size())));
      slice = slice_cols(*prev, static_cast<Index>(k) * h, h);
    }
    outs.push_back(mdgru_forward(g, store, prefix, S_pair, slice, dirs[k], workers));
  }
  return outs.size() == 1 ? outs.front() : concat(outs);
}

/// S + g where g_i is the channelwise max over j >= i of P[i, j] W.
template <typename Scalar>
Var<Scalar> interaction(Graph<Scalar>& g, ParamStore<Scalar>& store, const std::string& prefix, Var<Scalar> P, Var<Scalar> S) {
  return S + row_max_upper(matmul(P, g.parameter(store, prefix + ".W")));
}

}  // namespace dualabsa
