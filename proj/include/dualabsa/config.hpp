#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "dualabsa/tagging.hpp"

namespace dualabsa {

enum class DirectionMode { Uni, Bi, Quad };
enum class FfnActivation { Relu, None };
enum class DecaySchedule { InverseTime, Exponential };

DirectionMode parse_direction_mode(std::string_view text);
std::string_view to_string(DirectionMode mode);
int direction_count(DirectionMode mode);

/// Hyperparameters and ablation switches. Zero-valued derived sizes
/// (pair_dim, ffn_dim) resolve against `hidden` in resolved().
struct ModelConfig {
  Task task = Task::Aste;

  // token representation
  int word_dim = 100;
  int char_embed_dim = 30;
  int char_hidden = 50;  // per direction
  bool use_char = true;
  int plm_dim = 0;       // set from attached contextual vectors
  std::string word_vectors;

  // sequence encoder
  int hidden = 200;
  int layers = 3;
  int heads = 8;
  int ffn_dim = 0;
  FfnActivation ffn_activation = FfnActivation::Relu;
  bool positions = true;
  int max_positions = 512;
  double dropout = 0.5;

  // pair encoder
  bool pair_encoder = true;
  int pair_dim = 0;
  int pair_hidden = 50;  // per scan direction
  DirectionMode directions = DirectionMode::Quad;
  bool share_directions = false;
  bool interaction = true;
  int workers = 1;

  // heads and decoding
  double none_weight = 1.0;
  BioRepair bio_repair = BioRepair::OrphanToBegin;

  // optimisation
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip = 5.0;
  int batch = 24;
  double decay_rate = 0.05;
  int decay_steps = 1000;
  DecaySchedule decay = DecaySchedule::InverseTime;
  int epochs = 100;
  long max_steps = -1;  // negative: bounded by epochs only
  std::uint64_t seed = 1;
  int precision = 64;

  /// Derived sizes filled in, flags made consistent, ranges validated.
  ModelConfig resolved() const;

  int char_dim() const { return use_char ? 2 * char_hidden : 0; }
  int token_dim() const { return char_dim() + word_dim + plm_dim; }
  int pair_channels() const { return pair_hidden * direction_count(directions); }
};

/// Applies one `key=value` setting; unknown keys and bad values are ConfigErrors.
void apply_setting(ModelConfig& config, std::string_view key, std::string_view value);

/// Flat `key=value` text, `#` comments. Keys under `run.` are ignored here.
ModelConfig parse_config_text(std::string_view text);
ModelConfig load_config(const std::filesystem::path& path);

/// Every setting, one per line, in a form parse_config_text reads back.
std::string to_config_text(const ModelConfig& config);

}  // namespace dualabsa
