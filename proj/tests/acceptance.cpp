// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "dualabsa/checks.hpp"
#include "dualabsa/cli.hpp"
#include "dualabsa/log.hpp"
#include "dualabsa/pair_encoder.hpp"
#include "dualabsa/training.hpp"
#include "support/toy_model.hpp"

using namespace dualabsa;
namespace fs = std::filesystem;

namespace {

const std::string kData = DUALABSA_TEST_DATA;
const std::string kToy = kData + "/toy_train.txt";

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

std::string fixed(double v, int decimals) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(decimals) << v;
  return s.str();
}

fs::path work_dir() {
  static const fs::path dir = fs::temp_directory_path() / ("dualabsa_acceptance_" + std::to_string(::getpid()));
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dualabsa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

/// Column `name` of every data row in a CSV with a header line.
std::vector<std::string> csv_column(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) header.push_back(cell);
  }
  const auto col = std::find(header.begin(), header.end(), name) - header.begin();
  std::vector<std::string> values;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream r(line);
    for (std::string cell; std::getline(r, cell, ',');) cells.push_back(cell);
    values.push_back(col < static_cast<long>(cells.size()) ? cells[col] : "");
  }
  return values;
}

/// Small and fast toy-corpus training flags.
std::vector<std::string> small_train(const fs::path& out, std::vector<std::string> extra = {}) {
  std::vector<std::string> args{"train", "--train", kToy, "--dev", kToy, "--out", out.string(), "--hidden", "8",
                                "--heads", "2", "--pair-hidden", "4", "--word-dim", "6", "--set", "char_hidden=4",
                                "--set", "char_embed_dim=4", "--epochs", "3", "--batch", "4", "--seed", "7"};
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
  const GradCheckReport r = micro_gradcheck(1e-5, 1e-4);
  Outcome o;
  o.pass = r.passed && r.max_rel_error <= 1e-4;
  o.summary = "max relative error " + fmt(r.max_rel_error) + " over " + std::to_string(r.elements_checked) + " parameter elements (" +
              std::to_string(r.kink_elements) + " at activation kinks), worst " + r.worst_param + "[" +
              std::to_string(r.worst_index) + "]";
  return o;
}

struct Split {
  std::string label;
  fs::path path;
};

/// The public corpus when its directory is given, else the bundled subset.
std::vector<Split> corpus_splits(bool& external) {
  std::vector<Split> splits;
  const char* root = std::getenv("ASTE_DATA_DIR");
  external = root && *root;
  const fs::path base = external ? fs::path(root) : fs::path(kData) / "fixture";
  const std::vector<std::string> sets =
      external ? std::vector<std::string>{"14lap", "14res", "15res", "16res"} : std::vector<std::string>{"14lap", "14res"};
  for (const auto& s : sets)
    for (const char* part : {"train", "dev", "test"}) splits.push_back({s + "/" + part, base / s / (std::string(part) + "_triplets.txt")});
  return splits;
}

Outcome tagging_round_trip() {
  bool external = false;
  Outcome o;
  std::size_t examples = 0, exact = 0, mismatches = 0, conflicts = 0;
  for (const auto& split : corpus_splits(external)) {
    const RoundTripSummary s = grid_round_trip(parse_dataset(split.path, Task::Aste), Task::Aste);
    examples += s.examples;
    exact += s.exact;
    mismatches += s.mismatches.size();
    conflicts += s.conflicts.size();
    for (const auto& id : s.mismatches) o.details.push_back("mismatch " + split.label + " " + id);
    for (const auto& c : s.conflicts) o.details.push_back("conflict " + split.label + " " + c);
  }
  o.pass = mismatches == 0;
  o.summary = std::string(external ? "public corpus: " : "bundled subset: ") + std::to_string(exact) + "/" +
              std::to_string(examples - conflicts) + " conflict-free examples exact, " + std::to_string(conflicts) +
              " conflicts listed below";
  return o;
}

Outcome dataset_statistics() {
  bool external = false;
  corpus_splits(external);
  Outcome o;
  o.pass = true;
  // file -> (sentences, triplets)
  std::map<std::string, std::pair<std::size_t, std::size_t>> expected;
  fs::path base;
  if (external) {
    base = std::getenv("ASTE_DATA_DIR");
    expected = {{"14res/train_triplets.txt", {1266, 2338}}, {"14res/dev_triplets.txt", {310, 577}}, {"14res/test_triplets.txt", {492, 994}},
                {"14lap/train_triplets.txt", {906, 1460}},  {"14lap/dev_triplets.txt", {219, 346}}, {"14lap/test_triplets.txt", {328, 543}},
                {"15res/train_triplets.txt", {605, 1013}},  {"15res/dev_triplets.txt", {148, 249}}, {"15res/test_triplets.txt", {322, 485}},
                {"16res/train_triplets.txt", {857, 1394}},  {"16res/dev_triplets.txt", {210, 339}}, {"16res/test_triplets.txt", {326, 514}}};
  } else {
    base = fs::path(kData) / "fixture";
    std::ifstream manifest(base / "fixture_manifest.txt");
    std::string line, file;
    std::size_t sentences = 0, triplets = 0;
    while (std::getline(manifest, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream(line) >> file >> sentences >> triplets;
      expected[file] = {sentences, triplets};
    }
  }
  if (expected.empty()) {
    o.pass = false;
    o.summary = "no expected counts found";
    return o;
  }
  for (const auto& [file, want] : expected) {
    const CorpusStats got = corpus_stats(parse_dataset(base / file, Task::Aste), Task::Aste);
    const bool ok = got.sentences == want.first && got.triplets == want.second;
    o.pass = o.pass && ok;
    o.details.push_back(std::string(ok ? "ok   " : "DIFF ") + file + ": " + std::to_string(got.sentences) + "/" +
                        std::to_string(got.triplets) + " (expected " + std::to_string(want.first) + "/" + std::to_string(want.second) + ")");
  }
  o.summary = std::string(external ? "public corpus, " : "bundled subset against its manifest, ") + std::to_string(expected.size()) +
              " files";
  return o;
}

Outcome overfit() {
  const fs::path out = work_dir() / "overfit";
  const CliRun run = cli({"train", "--train", kToy, "--dev", kToy, "--out", out.string(), "--hidden", "64", "--pair-hidden", "16",
                          "--epochs", "500"});
  Outcome o;
  if (run.code != kExitOk) {
    o.summary = "training exited " + std::to_string(run.code) + ": " + run.err;
    return o;
  }
  const std::string log = slurp(out / "train_log.csv");
  const auto epochs = csv_column(log, "epoch");
  const auto f1 = csv_column(log, "dev_f1");
  int first = 0;
  for (std::size_t r = 0; r < f1.size() && first == 0; ++r)
    if (!f1[r].empty() && std::stod(f1[r]) == 1.0) first = std::stoi(epochs[r]);

  const CliRun eval = cli({"eval", "--model", (out / "model.ckpt").string(), "--data", kToy, "--out", (out / "eval").string()});
  const auto names = csv_column(slurp(out / "eval" / "eval_report.csv"), "metric");
  const auto scores = csv_column(slurp(out / "eval" / "eval_report.csv"), "f1");
  double final_f1 = -1.0;
  for (std::size_t r = 0; r < names.size(); ++r)
    if (names[r] == "ASTE") final_f1 = std::stod(scores[r]);

  o.pass = first > 0 && eval.code == kExitOk && final_f1 == 1.0;
  o.summary = first > 0 ? "training triplet F1 first reaches 1 at epoch " + std::to_string(first) + ", final model F1 " + fmt(final_f1)
                        : "training triplet F1 never reached 1 in 500 epochs (final " + fmt(final_f1) + ")";
  return o;
}

Outcome mdgru_checks() {
  const double naive_gap = mdgru_equivalence(6, 100);

  Rng rng(64);
  ParamStore<double> store;
  add_gru_params(store, "gru", 4, 6, rng);
  for (const char* b : {"gru.bx", "gru.ctx.b"})
    for (double& v : store.value(b).values()) v = rng.uniform(-0.5, 0.5);
  const int n = 64;
  Tensor<double> input(Shape{n, n, 4}), prev(Shape{n, n, 6});
  for (double& v : input.values()) v = rng.uniform(-1.0, 1.0);
  for (double& v : prev.values()) v = rng.uniform(-1.0, 1.0);
  bool invariant = true;
  for (ScanDirection dir : scan_directions(DirectionMode::Quad)) {
    MatrixX<double> outs[2];
    for (int k = 0; k < 2; ++k) {
      Graph<double> g;
      outs[k] = mdgru_forward(g, store, "gru", g.constant(input), std::optional{g.constant(prev)}, dir, k == 0 ? 1 : 4).mat();
    }
    invariant = invariant && outs[0] == outs[1];
  }
  Outcome o;
  o.pass = naive_gap <= 1e-12 && invariant;
  o.summary = "max gap to the naive loop " + fmt(naive_gap) + " (n = 1..6, 100 seeds); n = 64 with 1 vs 4 workers " +
              (invariant ? "bitwise identical" : "DIFFERS");
  return o;
}

ModelConfig toy_model_config(bool pair_encoder) {
  ModelConfig c = micro_model_config();
  c.max_positions = 64;
  c.pair_encoder = pair_encoder;
  return c;
}

Outcome loss_decomposition() {
  const auto corpus = parse_dataset(kToy, Task::Aste);
  double worst = 0.0;
  {
    auto model = testing::make_model(toy_model_config(true), corpus);
    for (const auto& ex : corpus) {
      Graph<double> g;
      const auto parts = model.loss(model.forward(g, ex), encode_example(ex, Task::Aste));
      worst = std::max(worst, std::abs(parts.total.value().item() - (parts.term.value().item() + parts.pola.value().item())));
    }
  }
  auto model = testing::make_model(toy_model_config(false), corpus);
  std::size_t pair_params = 0;
  for (const auto& e : model.params().entries())
    if (e.name.starts_with("pair") || e.name.starts_with("head.pair")) ++pair_params;
  double max_pola = 0.0, grad_gap = 0.0;
  for (const auto& ex : corpus) {
    const TagGrid grid = encode_example(ex, Task::Aste);
    std::vector<MatrixX<double>> from_total, from_term;
    for (bool total : {true, false}) {
      model.params().zero_grad();
      Graph<double> g;
      const auto parts = model.loss(model.forward(g, ex), grid);
      max_pola = std::max(max_pola, std::abs(parts.pola.value().item()));
      g.backward(total ? parts.total : parts.term);
      for (const auto& e : model.params().entries()) (total ? from_total : from_term).push_back(e.grad.matrix());
    }
    for (std::size_t k = 0; k < from_total.size(); ++k)
      grad_gap = std::max(grad_gap, (from_total[k] - from_term[k]).cwiseAbs().maxCoeff());
  }
  Outcome o;
  o.pass = worst <= 1e-12 && max_pola == 0.0 && pair_params == 0 && grad_gap == 0.0;
  o.summary = "|total - (term + pola)| <= " + fmt(worst) + " on " + std::to_string(corpus.size()) +
              " examples; without the pair encoder: pola " + fmt(max_pola) + ", " + std::to_string(pair_params) +
              " pair parameters, gradient of total vs term differs by " + fmt(grad_gap);
  return o;
}

Outcome direction_modes() {
  Rng rng(51);
  ParamStore<double> store;
  const int h = 16;
  for (int k = 0; k < 4; ++k) add_gru_params(store, "layer.gru" + std::to_string(k), 5, h, rng);
  Tensor<double> input(Shape{6, 6, 5});
  for (double& v : input.values()) v = rng.uniform(-1.0, 1.0);
  Outcome o;
  o.pass = true;
  MatrixX<double> uni;
  std::string channels;
  for (auto mode : {DirectionMode::Uni, DirectionMode::Bi, DirectionMode::Quad}) {
    Graph<double> g;
    const auto out = mdgru_multi(g, store, "layer", g.constant(input), std::optional<Var<double>>{}, mode, false);
    const Index c = out.shape().back();
    o.pass = o.pass && c == h * direction_count(mode);
    channels += std::string(channels.empty() ? "" : "/") + std::to_string(c);
    if (mode == DirectionMode::Uni)
      uni = out.mat();
    else
      o.pass = o.pass && out.mat().leftCols(h) == uni;
  }
  std::string trained;
  for (const char* mode : {"uni", "bi", "quad"}) {
    const CliRun run = cli(small_train(work_dir() / ("mode_" + std::string(mode)), {"--directions", mode}));
    const bool ok = run.code == kExitOk;
    o.pass = o.pass && ok;
    trained += std::string(trained.empty() ? "" : ", ") + mode + (ok ? " ok" : " exit " + std::to_string(run.code));
    if (!ok) o.details.push_back(run.err);
  }
  o.summary = "channels " + channels + " for h = " + std::to_string(h) + ", prefixes bitwise equal; toy training: " + trained;
  return o;
}

// Precision, recall and F1 (percent) as published; each row is one
// (results table, model, dataset) cell group.
struct ReportedScore {
  const char* where;
  double p, r, f1;
};

constexpr ReportedScore kReportedScores[] = {
    // ASTE V2 test
    {"V2 CMLA+ 14Rest", 39.18, 47.13, 42.79}, {"V2 CMLA+ 14Lap", 30.09, 36.92, 33.16},
    {"V2 CMLA+ 15Rest", 34.56, 39.84, 37.01}, {"V2 CMLA+ 16Rest", 41.34, 42.10, 41.72},
    {"V2 RINANTE+ 14Rest", 31.42, 39.38, 34.95}, {"V2 RINANTE+ 14Lap", 21.71, 18.66, 20.07},
    {"V2 RINANTE+ 15Rest", 29.88, 30.06, 29.97}, {"V2 RINANTE+ 16Rest", 25.68, 22.30, 23.87},
    {"V2 Li-unified-R 14Rest", 41.04, 67.35, 51.00}, {"V2 Li-unified-R 14Lap", 40.56, 44.28, 42.34},
    {"V2 Li-unified-R 15Rest", 44.72, 51.39, 47.82}, {"V2 Li-unified-R 16Rest", 37.33, 54.51, 44.31},
    {"V2 Peng et al. 14Rest", 43.24, 63.66, 51.46}, {"V2 Peng et al. 14Lap", 37.38, 50.38, 42.87},
    {"V2 Peng et al. 15Rest", 48.07, 57.51, 52.32}, {"V2 Peng et al. 16Rest", 46.96, 64.24, 54.21},
    {"V2 OTE-MTL 14Rest", 63.07, 58.25, 60.56}, {"V2 OTE-MTL 14Lap", 54.26, 41.07, 46.75},
    {"V2 OTE-MTL 15Rest", 60.88, 42.68, 50.18}, {"V2 OTE-MTL 16Rest", 65.65, 54.28, 59.42},
    {"V2 GTS-BiLSTM 14Rest", 71.41, 53.00, 60.84}, {"V2 GTS-BiLSTM 14Lap", 58.02, 40.11, 47.43},
    {"V2 GTS-BiLSTM 15Rest", 64.57, 44.33, 52.57}, {"V2 GTS-BiLSTM 16Rest", 70.17, 55.95, 62.26},
    {"V2 JET-t 14Rest", 66.76, 49.09, 56.58}, {"V2 JET-t 14Lap", 52.00, 35.91, 42.48},
    {"V2 JET-t 15Rest", 59.77, 42.27, 49.52}, {"V2 JET-t 16Rest", 63.59, 50.97, 56.59},
    {"V2 JET-o 14Rest", 61.50, 55.13, 58.14}, {"V2 JET-o 14Lap", 53.03, 33.89, 41.35},
    {"V2 JET-o 15Rest", 64.37, 44.33, 52.50}, {"V2 JET-o 16Rest", 70.94, 57.00, 63.21},
    {"V2 GTS+BERT 14Rest", 71.76, 59.09, 64.81}, {"V2 GTS+BERT 14Lap", 57.12, 53.42, 55.21},
    {"V2 GTS+BERT 15Rest", 54.71, 55.05, 54.88}, {"V2 GTS+BERT 16Rest", 65.89, 66.27, 66.08},
    {"V2 JET-t+BERT 14Rest", 63.44, 54.12, 58.41}, {"V2 JET-t+BERT 14Lap", 53.53, 43.28, 47.86},
    {"V2 JET-t+BERT 15Rest", 68.20, 42.89, 52.66}, {"V2 JET-t+BERT 16Rest", 65.28, 51.95, 57.85},
    {"V2 JET-o+BERT 14Rest", 70.56, 55.94, 62.40}, {"V2 JET-o+BERT 14Lap", 55.39, 47.33, 51.04},
    {"V2 JET-o+BERT 15Rest", 64.45, 51.96, 57.53}, {"V2 JET-o+BERT 16Rest", 70.42, 58.37, 63.83},
    {"V2 Huang et al.+BERT 14Rest", 63.59, 73.44, 68.16}, {"V2 Huang et al.+BERT 14Lap", 57.84, 59.33, 58.58},
    {"V2 Huang et al.+BERT 15Rest", 54.53, 63.30, 58.59}, {"V2 Huang et al.+BERT 16Rest", 63.57, 71.98, 67.52},
    {"V2 dual-encoder+BERT 14Rest", 67.95, 71.23, 69.55}, {"V2 dual-encoder+BERT 14Lap", 62.12, 56.38, 59.11},
    {"V2 dual-encoder+BERT 15Rest", 58.55, 60.00, 59.27}, {"V2 dual-encoder+BERT 16Rest", 70.65, 70.23, 70.44},
    {"V2 dual-encoder+ALBERT 14Rest", 75.20, 74.45, 74.82}, {"V2 dual-encoder+ALBERT 14Lap", 66.67, 60.26, 63.30},
    {"V2 dual-encoder+ALBERT 15Rest", 66.74, 69.69, 67.67}, {"V2 dual-encoder+ALBERT 16Rest", 71.40, 74.32, 72.01},
    // ASTE V1 test
    {"V1 CMLA+ 14Rest", 40.11, 46.63, 43.12}, {"V1 CMLA+ 14Lap", 31.40, 34.60, 32.90},
    {"V1 CMLA+ 15Rest", 34.40, 37.60, 35.90}, {"V1 CMLA+ 16Rest", 43.60, 39.80, 41.60},
    {"V1 RINANTE+ 14Rest", 31.07, 37.63, 34.03}, {"V1 RINANTE+ 14Lap", 23.10, 17.70, 20.00},
    {"V1 RINANTE+ 15Rest", 29.40, 26.90, 28.00}, {"V1 RINANTE+ 16Rest", 27.10, 20.50, 23.30},
    {"V1 Li-unified-R 14Rest", 41.44, 68.79, 51.68}, {"V1 Li-unified-R 14Lap", 42.25, 42.78, 42.47},
    {"V1 Li-unified-R 15Rest", 43.34, 50.73, 46.69}, {"V1 Li-unified-R 16Rest", 38.19, 53.47, 44.51},
    {"V1 Peng et al. 14Rest", 44.18, 62.99, 51.89}, {"V1 Peng et al. 14Lap", 40.40, 47.24, 43.50},
    {"V1 Peng et al. 15Rest", 40.97, 54.68, 46.79}, {"V1 Peng et al. 16Rest", 46.76, 62.97, 53.62},
    {"V1 JET-t 14Rest", 70.39, 51.68, 59.72}, {"V1 JET-t 14Lap", 57.98, 36.33, 44.67},
    {"V1 JET-t 15Rest", 61.99, 43.74, 51.29}, {"V1 JET-t 16Rest", 68.99, 51.18, 58.77},
    {"V1 JET-o 14Rest", 62.26, 56.84, 59.43}, {"V1 JET-o 14Lap", 52.01, 39.59, 44.96},
    {"V1 JET-o 15Rest", 63.25, 46.15, 53.37}, {"V1 JET-o 16Rest", 66.58, 57.85, 61.91},
    {"V1 JET-t+BERT 14Rest", 70.20, 53.02, 60.41}, {"V1 JET-t+BERT 14Lap", 51.48, 42.65, 46.65},
    {"V1 JET-t+BERT 15Rest", 62.14, 47.25, 53.68}, {"V1 JET-t+BERT 16Rest", 71.12, 57.20, 63.41},
    {"V1 JET-o+BERT 14Rest", 67.97, 60.32, 63.92}, {"V1 JET-o+BERT 14Lap", 58.47, 43.67, 50.00},
    {"V1 JET-o+BERT 15Rest", 58.35, 51.43, 54.67}, {"V1 JET-o+BERT 16Rest", 64.77, 61.29, 62.98},
    {"V1 dual-encoder+BERT 14Rest", 73.96, 67.87, 70.78}, {"V1 dual-encoder+BERT 14Lap", 65.21, 60.82, 62.94},
    {"V1 dual-encoder+BERT 15Rest", 64.86, 63.30, 64.07}, {"V1 dual-encoder+BERT 16Rest", 73.71, 76.56, 75.11},
    {"V1 dual-encoder+ALBERT 14Rest", 77.32, 75.52, 76.41}, {"V1 dual-encoder+ALBERT 14Lap", 68.65, 61.22, 64.72},
    {"V1 dual-encoder+ALBERT 15Rest", 68.36, 66.81, 67.18}, {"V1 dual-encoder+ALBERT 16Rest", 73.18, 73.33, 73.25},
    // 14Lap V2 test: encoder choice, structure ablation, scan directions
    {"14Lap XLNet", 63.24, 51.20, 56.59}, {"14Lap BERT", 62.12, 56.38, 59.11},
    {"14Lap RoBERTa", 61.79, 58.60, 60.15}, {"14Lap ALBERT", 66.67, 60.26, 63.30},
    {"14Lap default setting", 66.67, 60.26, 63.30}, {"14Lap w/o pair encoder", 58.16, 59.15, 58.65},
    {"14Lap w/o interaction", 64.55, 58.88, 61.58},
    {"14Lap uni-directional", 63.51, 59.52, 61.45}, {"14Lap bi-directional", 64.96, 58.60, 61.61},
    {"14Lap quad-directional", 66.67, 60.26, 63.30},
};

/// Smallest (tp, predicted, gold) whose percentages equal P and R to within
/// 5e-4 points, so rounding them gives back the published two decimals.
std::array<std::size_t, 3> counts_for(double p, double r) {
  auto denominator = [](std::size_t tp, double pct) {
    const auto d = static_cast<std::size_t>(std::llround(100.0 * static_cast<double>(tp) / pct));
    return std::abs(100.0 * static_cast<double>(tp) / static_cast<double>(d) - pct) <= 5e-4 ? d : 0;
  };
  for (std::size_t tp = 1; tp < 1000000; ++tp) {
    const std::size_t pred = denominator(tp, p), gold = denominator(tp, r);
    if (pred && gold) return {tp, pred, gold};
  }
  throw std::runtime_error("no counts for P " + fmt(p) + " R " + fmt(r));
}

/// One example whose predicted and gold triplet sets realise the counts.
std::pair<Decoded, Decoded> synthetic_sets(std::size_t tp, std::size_t pred, std::size_t gold) {
  auto triplet = [](std::size_t k) {
    const int i = static_cast<int>(k);
    return Triplet{Span{i, i, SpanKind::Aspect}, Span{i + 1, i + 1, SpanKind::Opinion}, Polarity::Pos};
  };
  Decoded p, g;
  for (std::size_t k = 0; k < gold; ++k) g.triplets.insert(triplet(k));
  for (std::size_t k = 0; k < tp; ++k) p.triplets.insert(triplet(k));
  for (std::size_t k = 0; k < pred - tp; ++k) p.triplets.insert(triplet(gold + k));
  return {p, g};
}

Outcome metric_arithmetic() {
  Outcome o;
  std::size_t reproduced = 0;
  double formula_gap = 0.0;
  for (const ReportedScore& row : kReportedScores) {
    const auto [tp, pred, gold] = counts_for(row.p, row.r);
    const auto [p, g] = synthetic_sets(tp, pred, gold);
    const MetricReport m = score({p}, {g}, ScoreMode::Aste);
    const double f1 = 100.0 * m.f1;
    const double harmonic = 2.0 * (100.0 * m.precision) * (100.0 * m.recall) / (100.0 * m.precision + 100.0 * m.recall);
    formula_gap = std::max(formula_gap, std::abs(f1 - harmonic));
    if (std::abs(f1 - row.f1) <= 0.01) {
      ++reproduced;
    } else {
      o.details.push_back(std::string(row.where) + ": P " + fixed(row.p, 2) + " R " + fixed(row.r, 2) + " -> F1 " + fixed(f1, 2) +
                          ", published " + fixed(row.f1, 2) + " (counts " + std::to_string(tp) + "/" + std::to_string(pred) + "/" +
                          std::to_string(gold) + ")");
    }
  }
  const std::size_t total = std::size(kReportedScores);
  o.pass = reproduced == total;
  o.summary = std::to_string(reproduced) + "/" + std::to_string(total) +
              " published rows reproduced within 0.01; score() agrees with 2PR/(P+R) to " + fmt(formula_gap) +
              " on every row. Published F1 values that their own P and R cannot produce:";
  return o;
}

Outcome determinism() {
  std::string logs[2], reports[2], dev[2], ckpt[2];
  Outcome o;
  for (int k = 0; k < 2; ++k) {
    const fs::path out = work_dir() / ("determinism_" + std::to_string(k));
    const CliRun train = cli(small_train(out));
    const CliRun eval = cli({"eval", "--model", (out / "model.ckpt").string(), "--data", kToy, "--out", (out / "eval").string()});
    if (train.code != kExitOk || eval.code != kExitOk) {
      o.summary = "run " + std::to_string(k) + " failed: " + train.err + eval.err;
      return o;
    }
    logs[k] = slurp(out / "train_log.csv");
    dev[k] = slurp(out / "dev_report.csv");
    reports[k] = slurp(out / "eval" / "eval_report.csv");
    ckpt[k] = slurp(out / "model.ckpt");
  }
  o.pass = !logs[0].empty() && logs[0] == logs[1] && dev[0] == dev[1] && reports[0] == reports[1] && ckpt[0] == ckpt[1];
  o.summary = std::string("train logs ") + (logs[0] == logs[1] ? "identical" : "DIFFER") + ", dev reports " +
              (dev[0] == dev[1] ? "identical" : "DIFFER") + ", evaluation reports " + (reports[0] == reports[1] ? "identical" : "DIFFER") +
              ", checkpoints " + (ckpt[0] == ckpt[1] ? "identical" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
  std::vector<int> only, known;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--known-unattainable", known,
                 "Criteria still run and reported, but a FAIL does not change the exit status");
  CLI11_PARSE(app, argc, argv);

  log::set_warning_sink([](const std::string&) {});

  const std::vector<Criterion> criteria{
      {1, "gradient fidelity", 60, gradient_fidelity},
      {2, "tagging round trip", 10, tagging_round_trip},
      {3, "dataset statistics", 0, dataset_statistics},
      {4, "overfit toy corpus", 300, overfit},
      {5, "2D-GRU equivalence", 0, mdgru_checks},
      {6, "loss decomposition", 0, loss_decomposition},
      {7, "directional modes", 0, direction_modes},
      {8, "metric arithmetic", 0, metric_arithmetic},
      {9, "determinism", 0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0 || seconds <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    const bool excused = !pass && std::find(known.begin(), known.end(), c.id) != known.end();
    if (!pass && !excused) ++failures;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << (excused ? " (known unattainable)" : "") << " " << c.name
              << ": " << o.summary << " [" << fixed(seconds, 1) << " s"
              << (c.budget_seconds > 0 ? " of " + fixed(c.budget_seconds, 0) + " s" : "") << "]\n";
    for (const auto& d : o.details) std::cout << "    " << d << "\n";
    std::cout.flush();
  }
  fs::remove_all(work_dir());
  return failures == 0 ? 0 : 1;
}
