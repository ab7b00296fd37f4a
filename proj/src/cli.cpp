#include "dualabsa/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dualabsa/checkpoint.hpp"
#include "dualabsa/checks.hpp"
#include "dualabsa/embedding_io.hpp"
#include "dualabsa/log.hpp"
#include "dualabsa/training.hpp"

namespace dualabsa {

namespace {

namespace fs = std::filesystem;

/// Bad flag combination or value; exits with the usage code.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Missing input file or inconsistent inputs; exits with the data code.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using RunFields = std::map<std::string, std::string>;

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "dualabsa-out";
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw InputError(what + " '" + path + "' does not exist");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

/// The manifest is a config file: run.* lines name the command and its inputs,
/// the rest is the fully resolved model configuration.
void write_manifest(const fs::path& dir, const std::string& command, const RunFields& run, const std::optional<ModelConfig>& config) {
  fs::create_directories(dir);
  std::string text = "# dualabsa run manifest\nrun.command=" + command + "\nrun.out=" + dir.string() + "\n";
  for (const auto& [key, value] : run) text += "run." + key + "=" + value + "\n";
  if (config) text += to_config_text(*config);
  write_file(dir / (command + ".manifest"), text);
}

std::pair<ModelConfig, RunFields> read_manifest(const std::string& path) {
  require_file(path, "manifest");
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  RunFields run;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (!line.starts_with("run.")) continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) run[line.substr(4, eq - 4)] = line.substr(eq + 1);
  }
  return {parse_config_text(text), run};
}

/// Fills `value` from the manifest when the flag was not given.
void from_manifest(std::string& value, const RunFields& run, const std::string& key) {
  if (!value.empty()) return;
  if (auto it = run.find(key); it != run.end()) value = it->second;
}

std::vector<Example> load_examples(const std::string& path, Task task, const std::string& contextual, int& plm_dim) {
  require_file(path, "dataset");
  auto examples = parse_dataset(path, task);
  if (!contextual.empty()) {
    require_file(contextual, "contextual vectors");
    const int p = attach_contextual(examples, load_contextual(contextual));
    if (plm_dim > 0 && p != plm_dim && !examples.empty())
      throw AlignmentError(path + ": contextual vectors have dimension " + std::to_string(p) + ", expected " + std::to_string(plm_dim));
    if (!examples.empty()) plm_dim = p;
  }
  return examples;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config_path, manifest, train, dev, out, contextual_train, contextual_dev;
  std::vector<std::pair<std::string, std::string>> overrides;
};

template <typename Scalar>
int run_train(const ModelConfig& config, const TrainArgs& a, const fs::path& dir, std::ostream& out, std::ostream& err) {
  int plm_dim = 0;
  const auto train_set = load_examples(a.train, config.task, a.contextual_train, plm_dim);
  std::vector<Example> dev_set;
  if (!a.dev.empty()) dev_set = load_examples(a.dev, config.task, a.contextual_dev, plm_dim);
  if (!a.contextual_train.empty() && !a.dev.empty() && a.contextual_dev.empty())
    throw AlignmentError("contextual vectors were given for the training set but not for the dev set");
  ModelConfig c = config;
  c.plm_dim = plm_dim;
  c = c.resolved();

  const Vocab vocab = Vocab::build({&train_set, &dev_set});
  Rng word_rng = Rng(c.seed).split("words");
  WordTable table = c.word_vectors.empty() ? build_word_table(WordVectors{c.word_dim, {}}, vocab, word_rng)
                                           : load_word_embeddings(c.word_vectors, c.word_dim, vocab, word_rng);
  err << "vocabulary: " << vocab.word_count() << " words, " << vocab.char_count() << " characters; " << table.from_file
      << " pretrained rows\n";
  Model<Scalar> model(c, vocab, table.table);

  TrainOptions options;
  options.on_epoch = [&](int epoch, const std::optional<MetricReport>& dev, bool best) {
    err << "epoch " << epoch;
    if (dev) err << "  dev P " << dev->precision << " R " << dev->recall << " F1 " << dev->f1 << (best ? "  (best)" : "");
    err << "\n";
  };
  const TrainResult result = train(model, train_set, dev_set, options);
  write_file(dir / "train_log.csv", train_log_csv(result.log));
  write_checkpoint(dir / "model.ckpt", make_checkpoint(model));
  out << "steps: " << result.log.size() << "\n";
  out << "skipped examples: " << result.skipped << "\n";
  if (!dev_set.empty() && result.best_epoch > 0) {
    const EvaluationReport report = evaluate_model(model, dev_set);
    write_file(dir / "dev_report.csv", report.to_csv());
    out << "best epoch: " << result.best_epoch << "\n" << report.to_table();
  }
  out << "checkpoint: " << (dir / "model.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  ModelConfig config;
  RunFields previous;
  TrainArgs args = a;
  if (!args.manifest.empty()) {
    std::tie(config, previous) = read_manifest(args.manifest);
    from_manifest(args.train, previous, "train");
    from_manifest(args.dev, previous, "dev");
    from_manifest(args.contextual_train, previous, "contextual_train");
    from_manifest(args.contextual_dev, previous, "contextual_dev");
  }
  if (!args.config_path.empty()) {
    require_file(args.config_path, "config");
    config = load_config(args.config_path);
  }
  for (const auto& [key, value] : args.overrides) apply_setting(config, key, value);
  // plm_dim follows the attached contextual vectors, never the config.
  config.plm_dim = 0;
  config = config.resolved();

  const fs::path dir = output_dir(args.out);
  write_manifest(dir, "train",
                 {{"train", args.train}, {"dev", args.dev}, {"contextual_train", args.contextual_train}, {"contextual_dev", args.contextual_dev}},
                 config);
  return config.precision == 32 ? run_train<float>(config, args, dir, out, err) : run_train<double>(config, args, dir, out, err);
}

// ---------------------------------------------------------------- eval / predict

struct ModelArgs {
  std::string manifest, model, data, task, contextual, out;
};

ModelArgs resolve_model_args(ModelArgs a) {
  if (!a.manifest.empty()) {
    const auto [config, previous] = read_manifest(a.manifest);
    from_manifest(a.model, previous, "model");
    from_manifest(a.data, previous, "data");
    from_manifest(a.task, previous, "task");
    from_manifest(a.contextual, previous, "contextual");
  }
  require_file(a.model, "model checkpoint");
  require_file(a.data, "dataset");
  return a;
}

template <typename Scalar>
std::pair<Model<Scalar>, std::vector<Example>> load_for_inference(const Checkpoint& ckpt, const ModelArgs& a) {
  if (!a.task.empty() && parse_task(a.task) != ckpt.config.task)
    throw CheckpointError("checkpoint was trained for task " + std::string(to_string(ckpt.config.task)) + ", not " + a.task);
  if (ckpt.config.plm_dim > 0 && a.contextual.empty())
    throw AlignmentError("checkpoint expects contextual vectors of dimension " + std::to_string(ckpt.config.plm_dim) +
                         "; pass --contextual");
  int plm_dim = ckpt.config.plm_dim;
  auto examples = load_examples(a.data, ckpt.config.task, a.contextual, plm_dim);
  if (plm_dim != ckpt.config.plm_dim)
    throw AlignmentError("contextual vectors have dimension " + std::to_string(plm_dim) + " but the checkpoint expects " +
                         std::to_string(ckpt.config.plm_dim));
  return {restore_model<Scalar>(ckpt), std::move(examples)};
}

RunFields model_run_fields(const ModelArgs& a, const Checkpoint& ckpt) {
  return {{"model", a.model}, {"data", a.data}, {"task", std::string(to_string(ckpt.config.task))}, {"contextual", a.contextual}};
}

template <typename Scalar>
int run_eval(const Checkpoint& ckpt, const ModelArgs& a, const fs::path& dir, std::ostream& out) {
  auto [model, examples] = load_for_inference<Scalar>(ckpt, a);
  const EvaluationReport report = evaluate_model(model, examples);
  write_file(dir / "eval_report.csv", report.to_csv());
  out << report.to_table();
  return kExitOk;
}

int cmd_eval(const ModelArgs& raw, std::ostream& out) {
  const ModelArgs a = resolve_model_args(raw);
  const Checkpoint ckpt = read_checkpoint(a.model);
  const fs::path dir = output_dir(a.out);
  write_manifest(dir, "eval", model_run_fields(a, ckpt), ckpt.config);
  return ckpt.config.precision == 32 ? run_eval<float>(ckpt, a, dir, out) : run_eval<double>(ckpt, a, dir, out);
}

Example as_example(const Example& source, const Decoded& d, Task task) {
  Example ex;
  ex.id = source.id;
  ex.tokens = source.tokens;
  if (task == Task::Aste)
    ex.triplets.assign(d.triplets.begin(), d.triplets.end());
  else
    ex.aspects.assign(d.aspect_sentiments.begin(), d.aspect_sentiments.end());
  return ex;
}

template <typename Scalar>
int run_predict(const Checkpoint& ckpt, const ModelArgs& a, const fs::path& dir, std::ostream& out) {
  auto [model, examples] = load_for_inference<Scalar>(ckpt, a);
  std::string text;
  for (const auto& ex : examples) text += format_line(as_example(ex, model.predict(ex), ckpt.config.task), ckpt.config.task) + "\n";
  write_file(dir / "predictions.txt", text);
  out << text;
  return kExitOk;
}

int cmd_predict(const ModelArgs& raw, std::ostream& out) {
  const ModelArgs a = resolve_model_args(raw);
  const Checkpoint ckpt = read_checkpoint(a.model);
  const fs::path dir = output_dir(a.out);
  write_manifest(dir, "predict", model_run_fields(a, ckpt), ckpt.config);
  return ckpt.config.precision == 32 ? run_predict<float>(ckpt, a, dir, out) : run_predict<double>(ckpt, a, dir, out);
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string mode, task = "aste", out;
  std::vector<std::string> data;
  int max_n = 6;
  int seeds = 100;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  const fs::path dir = output_dir(a.out);
  RunFields run{{"mode", a.mode}};
  for (std::size_t k = 0; k < a.data.size(); ++k) run["data" + std::to_string(k)] = a.data[k];
  if (a.mode == "mdgru-equiv") {
    run["max_n"] = std::to_string(a.max_n);
    run["seeds"] = std::to_string(a.seeds);
  }
  write_manifest(dir, "check", run, std::nullopt);
  char line[256];

  if (a.mode == "gridroundtrip") {
    if (a.data.empty()) throw UsageError("gridroundtrip needs at least one --data file");
    const Task task = parse_task(a.task);
    std::size_t mismatches = 0;
    out << "file                                      examples  exact  mismatches  conflicts\n";
    for (const auto& path : a.data) {
      require_file(path, "dataset");
      const RoundTripSummary s = grid_round_trip(parse_dataset(path, task), task);
      std::snprintf(line, sizeof line, "%-40s %9zu %6zu %11zu %10zu\n", path.c_str(), s.examples, s.exact, s.mismatches.size(),
                    s.conflicts.size());
      out << line;
      for (const auto& id : s.mismatches) out << "  mismatch: line " << id << "\n";
      for (const auto& c : s.conflicts) out << "  conflict: line " << c << "\n";
      mismatches += s.mismatches.size();
    }
    out << (mismatches == 0 ? "PASS" : "FAIL") << " gridroundtrip: " << mismatches << " mismatches\n";
    return mismatches == 0 ? kExitOk : kExitDataError;
  }
  if (a.mode == "gradcheck") {
    const GradCheckReport r = micro_gradcheck();
    std::snprintf(line, sizeof line, "elements %lld  kinks %lld  max rel. error %.3e  at %s[%lld] (analytic %.6e, numeric %.6e)\n",
                  static_cast<long long>(r.elements_checked), static_cast<long long>(r.kink_elements), r.max_rel_error, r.worst_param.c_str(),
                  static_cast<long long>(r.worst_index), r.worst_analytic, r.worst_numeric);
    out << line << (r.passed ? "PASS" : "FAIL") << " gradcheck (tolerance 1e-4)\n";
    return r.passed ? kExitOk : kExitDataError;
  }
  if (a.mode == "mdgru-equiv") {
    if (a.max_n < 1 || a.seeds < 1) throw UsageError("--max-n and --seeds must be positive");
    const double worst = mdgru_equivalence(a.max_n, a.seeds);
    const bool pass = worst <= 1e-12;
    std::snprintf(line, sizeof line, "n 1..%d  seeds %d  max deviation %.3e\n", a.max_n, a.seeds, worst);
    out << line << (pass ? "PASS" : "FAIL") << " mdgru-equiv (tolerance 1e-12)\n";
    return pass ? kExitOk : kExitDataError;
  }
  throw UsageError("unknown check mode '" + a.mode + "'");
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::vector<int> n{64};
  std::vector<int> workers{1, 4};
  std::string directions = "quad", out;
  int repeats = 3;
  int hidden = 16;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const DirectionMode mode = parse_direction_mode(a.directions);
  for (int n : a.n)
    if (n < 1) throw UsageError("--n must be at least 1");
  for (int w : a.workers)
    if (w < 1) throw UsageError("--workers must be at least 1");
  const fs::path dir = output_dir(a.out);
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  write_manifest(dir, "bench",
                 {{"n", join(a.n)}, {"workers", join(a.workers)}, {"directions", a.directions}, {"repeats", std::to_string(a.repeats)},
                  {"hidden", std::to_string(a.hidden)}},
                 std::nullopt);
  std::vector<BenchRow> rows;
  for (int n : a.n)
    for (int w : a.workers) {
      rows.push_back(bench_mdgru(n, w, mode, a.repeats, a.hidden, a.hidden));
      if (rows.back().max_deviation != 0.0) {
        err << "wavefront output differs from sequential at n=" << n << ", workers=" << w << " (max deviation "
            << rows.back().max_deviation << "); timings suppressed\n";
        return kExitDataError;
      }
    }
  std::string csv = bench_csv_header() + "\n";
  for (const auto& r : rows) csv += bench_csv_row(r) + "\n";
  write_file(dir / "bench.csv", csv);
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------- parser

void add_setting_option(CLI::App& app, std::vector<std::pair<std::string, std::string>>& overrides, const std::string& flag,
                        const std::string& key, const std::string& help) {
  app.add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
}

void add_switch(CLI::App& app, std::vector<std::pair<std::string, std::string>>& overrides, const std::string& flag,
                const std::string& key, const std::string& value, const std::string& help) {
  app.add_flag_callback(flag, [&overrides, key, value] { overrides.emplace_back(key, value); }, help);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Aspect sentiment triplet extraction with a dual sequence/pair encoder"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dualabsa 1.0");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, log and manifest");
  train_cmd->add_option("--train", train_args.train, "Training set");
  train_cmd->add_option("--dev", train_args.dev, "Dev set for best-checkpoint selection");
  train_cmd->add_option("--config", train_args.config_path, "key=value config file");
  train_cmd->add_option("--manifest", train_args.manifest, "Rerun from a train manifest");
  train_cmd->add_option("--out", train_args.out, std::string("Output directory (default: $") + kOutDirEnv + " or ./dualabsa-out)");
  train_cmd->add_option("--contextual-train", train_args.contextual_train, "Contextual vectors for the training set");
  train_cmd->add_option("--contextual-dev", train_args.contextual_dev, "Contextual vectors for the dev set");
  auto& ov = train_args.overrides;
  add_setting_option(*train_cmd, ov, "--seed", "seed", "Random seed");
  add_setting_option(*train_cmd, ov, "--task", "task", "aste or aesc");
  add_setting_option(*train_cmd, ov, "--directions", "directions", "uni, bi or quad");
  add_setting_option(*train_cmd, ov, "--layers", "layers", "Number of encoder layers");
  add_setting_option(*train_cmd, ov, "--hidden", "hidden", "Sequence encoder width");
  add_setting_option(*train_cmd, ov, "--heads", "heads", "Attention heads");
  add_setting_option(*train_cmd, ov, "--pair-hidden", "pair_hidden", "Hidden size per scan direction");
  add_setting_option(*train_cmd, ov, "--epochs", "epochs", "Training epochs");
  add_setting_option(*train_cmd, ov, "--max-steps", "max_steps", "Optimizer step limit (negative: none)");
  add_setting_option(*train_cmd, ov, "--lr", "lr", "Initial learning rate");
  add_setting_option(*train_cmd, ov, "--batch", "batch", "Mini-batch size");
  add_setting_option(*train_cmd, ov, "--dropout", "dropout", "Dropout rate");
  add_setting_option(*train_cmd, ov, "--workers", "workers", "Wavefront worker threads");
  add_setting_option(*train_cmd, ov, "--word-vectors", "word_vectors", "Pretrained word vectors (text)");
  add_setting_option(*train_cmd, ov, "--word-dim", "word_dim", "Word vector dimension");
  add_setting_option(*train_cmd, ov, "--precision", "precision", "32 or 64");
  add_switch(*train_cmd, ov, "--no-pair-encoder", "pair_encoder", "false", "Sequence encoder only");
  add_switch(*train_cmd, ov, "--no-interaction", "interaction", "false", "Do not feed pair states back into the sequence");
  add_switch(*train_cmd, ov, "--no-char", "use_char", "false", "Drop the character encoder");
  train_cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&ov](const std::vector<std::string>& settings) {
        for (const auto& s : settings) {
          const auto eq = s.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
          ov.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
      },
      "Any config setting as key=value");

  ModelArgs eval_args, predict_args;
  auto add_model_options = [](CLI::App* cmd, ModelArgs& a) {
    cmd->add_option("--model", a.model, "Checkpoint written by train");
    cmd->add_option("--data", a.data, "Dataset file");
    cmd->add_option("--task", a.task, "Expected task (must match the checkpoint)");
    cmd->add_option("--contextual", a.contextual, "Contextual vectors for the dataset");
    cmd->add_option("--manifest", a.manifest, "Rerun from a manifest");
    cmd->add_option("--out", a.out, "Output directory");
  };
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  add_model_options(eval_cmd, eval_args);
  auto* predict_cmd = app.add_subcommand("predict", "Write predictions in the dataset format");
  add_model_options(predict_cmd, predict_args);

  CheckArgs check_args;
  auto* check_cmd = app.add_subcommand("check", "Run a property suite");
  check_cmd->add_option("--mode", check_args.mode, "gridroundtrip, gradcheck or mdgru-equiv")
      ->required()
      ->check(CLI::IsMember({"gridroundtrip", "gradcheck", "mdgru-equiv"}));
  check_cmd->add_option("--data", check_args.data, "Dataset files (gridroundtrip)");
  check_cmd->add_option("--task", check_args.task, "aste or aesc (gridroundtrip)");
  check_cmd->add_option("--max-n", check_args.max_n, "Largest grid (mdgru-equiv)");
  check_cmd->add_option("--seeds", check_args.seeds, "Random draws (mdgru-equiv)");
  check_cmd->add_option("--out", check_args.out, "Output directory");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Time sequential against wavefront scans");
  bench_cmd->add_option("--n", bench_args.n, "Grid sizes");
  bench_cmd->add_option("--workers", bench_args.workers, "Worker counts");
  bench_cmd->add_option("--directions", bench_args.directions, "uni, bi or quad");
  bench_cmd->add_option("--repeats", bench_args.repeats, "Timed runs per setting (best kept)");
  bench_cmd->add_option("--hidden", bench_args.hidden, "Input and hidden width");
  bench_cmd->add_option("--out", bench_args.out, "Output directory");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    if (train_cmd->parsed()) {
      const bool no_pair = train_cmd->count("--no-pair-encoder") > 0;
      if (no_pair && train_cmd->count("--directions") > 0) throw UsageError("--directions has no effect with --no-pair-encoder");
      if (train_args.train.empty() && train_args.manifest.empty()) throw UsageError("train needs --train (or --manifest)");
      return cmd_train(train_args, out, err);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (predict_cmd->parsed()) return cmd_predict(predict_args, out);
    if (check_cmd->parsed()) return cmd_check(check_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CheckpointError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace dualabsa
