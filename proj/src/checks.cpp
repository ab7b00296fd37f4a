#include "dualabsa/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "dualabsa/embedding_io.hpp"
#include "dualabsa/model.hpp"
#include "dualabsa/reference/mdgru_reference.hpp"

namespace dualabsa {

bool same_annotation(const Decoded& a, const Decoded& b) {
  return a.aspects == b.aspects && a.opinions == b.opinions && a.triplets == b.triplets && a.aspect_sentiments == b.aspect_sentiments;
}

RoundTripSummary grid_round_trip(const std::vector<Example>& examples, Task task) {
  RoundTripSummary s;
  for (const auto& ex : examples) {
    ++s.examples;
    try {
      const TagGrid grid = encode_example(ex, task);
      // Strict decoding: a well-formed grid must not need repair.
      if (same_annotation(decode_grid(grid, task, BioRepair::DropOrphan), gold_view(ex, task)))
        ++s.exact;
      else
        s.mismatches.push_back(ex.id);
    } catch (const EncodingConflict& e) {
      s.conflicts.push_back(ex.id + ": " + e.what());
    }
  }
  return s;
}

ModelConfig micro_model_config() {
  ModelConfig c;
  c.word_dim = 6;
  c.char_embed_dim = 4;
  c.char_hidden = 3;
  c.hidden = 8;
  c.heads = 2;
  c.layers = 2;
  c.pair_hidden = 4;
  c.directions = DirectionMode::Quad;
  c.max_positions = 8;
  c.dropout = 0.0;
  return c.resolved();
}

Example micro_example() {
  return parse_line("The battery life is not great####[([1, 2], [4, 5], 'NEG')]", Task::Aste, 1);
}

GradCheckReport micro_gradcheck(double h, double tol, double floor) {
  const ModelConfig c = micro_model_config();
  const std::vector<Example> corpus{micro_example()};
  const Vocab vocab = Vocab::build({&corpus});
  Rng words = Rng(c.seed).split("words");
  Model<double> model(c, vocab, build_word_table(WordVectors{c.word_dim, {}}, vocab, words).table);
  // Nonzero biases so no gradient path is trivially zero.
  Rng rng = Rng(c.seed).split("biases");
  for (auto& e : model.params().entries())
    if (e.trainable && e.name.find(".b") != std::string::npos && e.name.find(".W") == std::string::npos)
      for (double& v : e.value.values()) v = rng.uniform(-0.2, 0.2);
  const TagGrid grid = encode_example(corpus[0], Task::Aste);
  return grad_check(
      [&](Graph<double>& g) {
        const auto out = model.forward(g, corpus[0]);
        return model.loss(out, grid).total;
      },
      model.params(), h, tol, floor);
}

namespace {

reference::Grid to_grid(const MatrixX<double>& m) {
  reference::Grid g(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  std::copy(m.data(), m.data() + m.size(), g.data.begin());
  return g;
}

std::pair<int, int> sweep(ScanDirection d) {
  switch (d) {
    case ScanDirection::DownRight: return {1, 1};
    case ScanDirection::UpLeft: return {-1, -1};
    case ScanDirection::DownLeft: return {1, -1};
    case ScanDirection::UpRight: return {-1, 1};
  }
  return {1, 1};
}

Tensor<double> random_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

}  // namespace

double mdgru_equivalence(int max_n, int seeds, std::uint64_t base_seed) {
  const int d = 3, h = 4;
  double worst = 0.0;
  for (int s = 0; s < seeds; ++s)
    for (int n = 1; n <= max_n; ++n) {
      Rng rng = Rng(base_seed).split("equiv/" + std::to_string(s) + "/" + std::to_string(n));
      ParamStore<double> store;
      add_gru_params(store, "gru", d, h, rng);
      for (const char* b : {"gru.bx", "gru.ctx.b"})
        for (double& v : store.value(b).values()) v = rng.uniform(-0.5, 0.5);
      const Tensor<double> input = random_tensor(Shape{n, n, d}, rng);
      const Tensor<double> prev = random_tensor(Shape{n, n, h}, rng);
      for (ScanDirection dir : scan_directions(DirectionMode::Quad))
        for (bool with_prev : {false, true}) {
          const auto [si, sj] = sweep(dir);
          const reference::Grid expected =
              reference::mdgru_naive(n, si, sj, to_grid(input.matrix()), with_prev ? to_grid(prev.matrix()) : reference::Grid{},
                                     to_grid(store.value("gru.Wx").matrix()), to_grid(store.value("gru.bx").matrix()),
                                     to_grid(store.value("gru.U").matrix()), to_grid(store.value("gru.ctx.v").matrix()),
                                     to_grid(store.value("gru.ctx.b").matrix()));
          for (int workers : {1, 3}) {
            Graph<double> g;
            std::optional<Var<double>> p;
            if (with_prev) p = g.constant(prev);
            const MatrixX<double> got = mdgru_forward(g, store, "gru", g.constant(input), p, dir, workers).mat();
            for (Index k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got.data()[k] - expected.data[k]));
          }
        }
    }
  return worst;
}

BenchRow bench_mdgru(int n, int workers, DirectionMode mode, int repeats, int d_pair, int hidden, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("bench: n must be at least 1");
  if (workers < 1) throw std::invalid_argument("bench: workers must be at least 1");
  Rng rng = Rng(seed).split("bench");
  ParamStore<double> store;
  const auto dirs = scan_directions(mode);
  for (std::size_t k = 0; k < dirs.size(); ++k) add_gru_params(store, "bench.gru" + std::to_string(k), d_pair, hidden, rng);
  const Tensor<double> input = random_tensor(Shape{n, n, d_pair}, rng);

  auto timed = [&](int w, MatrixX<double>& out) {
    double best = 0.0;
    for (int r = 0; r < std::max(1, repeats); ++r) {
      Graph<double> g;
      const auto start = std::chrono::steady_clock::now();
      const auto P = mdgru_multi(g, store, "bench", g.constant(input), std::optional<Var<double>>{}, mode, false, w);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (r == 0 || seconds < best) best = seconds;
      out = P.mat();
    }
    return best;
  };

  BenchRow row{n, mode, workers};
  MatrixX<double> sequential, wavefront;
  row.sequential_seconds = timed(1, sequential);
  if (workers == 1) {
    row.wavefront_seconds = row.sequential_seconds;
    row.speedup = 1.0;
    wavefront = sequential;
  } else {
    row.wavefront_seconds = timed(workers, wavefront);
    row.speedup = row.sequential_seconds / row.wavefront_seconds;
  }
  row.max_deviation = (sequential - wavefront).cwiseAbs().maxCoeff();
  return row;
}

std::string bench_csv_header() { return "n,mode,workers,sequential_seconds,wavefront_seconds,speedup,max_deviation"; }

std::string bench_csv_row(const BenchRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%s,%d,%.6g,%.6g,%.4f,%.3g", r.n, std::string(to_string(r.mode)).c_str(), r.workers,
                r.sequential_seconds, r.wavefront_seconds, r.speedup, r.max_deviation);
  return buf;
}

}  // namespace dualabsa
