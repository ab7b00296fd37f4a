#pragma once

#include <cmath>
#include <vector>

namespace dualabsa::reference {

/// Plain row-major buffer for the reference loop.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Grid() = default;
  Grid(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

/// Direct triple loop over the 2D GRU recurrence in grid coordinates.
///
/// step_i/step_j give the sweep direction (+1 walks down/right). The row
/// neighbour of (i, j) is (i - step_i, j), the column neighbour (i, j - step_j).
/// s_pair is [n*n, d], prev is [n*n, h] or empty, Wx [d, 3h], bx [1, 3h],
/// U [h, 3h], ctx_v [3, h], ctx_b [1, 3]. Returns [n*n, h].
inline Grid mdgru_naive(int n, int step_i, int step_j, const Grid& s_pair, const Grid& prev, const Grid& Wx, const Grid& bx,
                        const Grid& U, const Grid& ctx_v, const Grid& ctx_b) {
  const int h = U.rows;
  const int d = s_pair.cols;
  Grid out(n * n, h);
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  const int i0 = step_i > 0 ? 0 : n - 1;
  const int j0 = step_j > 0 ? 0 : n - 1;
  for (int ii = 0; ii < n; ++ii) {
    const int i = i0 + step_i * ii;
    for (int jj = 0; jj < n; ++jj) {
      const int j = j0 + step_j * jj;
      const int cell = i * n + j;

      std::vector<double> x(3 * h);
      for (int q = 0; q < 3 * h; ++q) {
        double acc = bx.at(0, q);
        for (int p = 0; p < d; ++p) acc += s_pair.at(cell, p) * Wx.at(p, q);
        x[q] = acc;
      }

      std::vector<std::vector<double>> ctx(3, std::vector<double>(h, 0.0));
      if (!prev.data.empty())
        for (int q = 0; q < h; ++q) ctx[0][q] = prev.at(cell, q);
      const int ri = i - step_i;
      if (ri >= 0 && ri < n)
        for (int q = 0; q < h; ++q) ctx[1][q] = out.at(ri * n + j, q);
      const int cj = j - step_j;
      if (cj >= 0 && cj < n)
        for (int q = 0; q < h; ++q) ctx[2][q] = out.at(i * n + cj, q);

      double score[3];
      double best = -1e300;
      for (int k = 0; k < 3; ++k) {
        score[k] = ctx_b.at(0, k);
        for (int q = 0; q < h; ++q) score[k] += ctx_v.at(k, q) * ctx[k][q];
        if (score[k] > best) best = score[k];
      }
      double norm = 0.0;
      for (double& s : score) norm += (s = std::exp(s - best));

      std::vector<double> mixed(h, 0.0);
      for (int k = 0; k < 3; ++k)
        for (int q = 0; q < h; ++q) mixed[q] += score[k] / norm * ctx[k][q];

      std::vector<double> update(h), reset(h), reset_mixed(h);
      for (int q = 0; q < h; ++q) {
        double zu = x[q], rr = x[h + q];
        for (int p = 0; p < h; ++p) {
          zu += mixed[p] * U.at(p, q);
          rr += mixed[p] * U.at(p, h + q);
        }
        update[q] = sigmoid(zu);
        reset[q] = sigmoid(rr);
      }
      for (int q = 0; q < h; ++q) reset_mixed[q] = reset[q] * mixed[q];
      for (int q = 0; q < h; ++q) {
        double cc = x[2 * h + q];
        for (int p = 0; p < h; ++p) cc += reset_mixed[p] * U.at(p, 2 * h + q);
        const double candidate = std::tanh(cc);
        out.at(cell, q) = (1.0 - update[q]) * mixed[q] + update[q] * candidate;
      }
    }
  }
  return out;
}

}  // namespace dualabsa::reference
