#include "dualabsa/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dualabsa/errors.hpp"

namespace dualabsa {

DirectionMode parse_direction_mode(std::string_view text) {
  if (text == "uni") return DirectionMode::Uni;
  if (text == "bi") return DirectionMode::Bi;
  if (text == "quad") return DirectionMode::Quad;
  throw ConfigError("unknown direction mode '" + std::string(text) + "' (expected uni, bi or quad)");
}

std::string_view to_string(DirectionMode mode) {
  switch (mode) {
    case DirectionMode::Uni: return "uni";
    case DirectionMode::Bi: return "bi";
    case DirectionMode::Quad: return "quad";
  }
  return "?";
}

int direction_count(DirectionMode mode) {
  switch (mode) {
    case DirectionMode::Uni: return 1;
    case DirectionMode::Bi: return 2;
    case DirectionMode::Quad: return 4;
  }
  return 0;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError("setting '" + std::string(key) + "': '" + std::string(value) + "' is not a valid number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("setting '" + std::string(key) + "': '" + std::string(value) + "' is not a boolean");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::function<void(ModelConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const ModelConfig&)> get;
};

template <class T>
Field number(T ModelConfig::*member) {
  return {[member](ModelConfig& c, std::string_view k, std::string_view v) { c.*member = parse_number<T>(k, v); },
          [member](const ModelConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

Field flag(bool ModelConfig::*member) {
  return {[member](ModelConfig& c, std::string_view k, std::string_view v) { c.*member = parse_bool(k, v); },
          [member](const ModelConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"task", {[](ModelConfig& c, std::string_view, std::string_view v) { c.task = parse_task(v); },
                [](const ModelConfig& c) { return std::string(to_string(c.task)); }}},
      {"word_dim", number(&ModelConfig::word_dim)},
      {"char_embed_dim", number(&ModelConfig::char_embed_dim)},
      {"char_hidden", number(&ModelConfig::char_hidden)},
      {"use_char", flag(&ModelConfig::use_char)},
      {"plm_dim", number(&ModelConfig::plm_dim)},
      {"word_vectors", {[](ModelConfig& c, std::string_view, std::string_view v) { c.word_vectors = std::string(v); },
                        [](const ModelConfig& c) { return c.word_vectors; }}},
      {"hidden", number(&ModelConfig::hidden)},
      {"layers", number(&ModelConfig::layers)},
      {"heads", number(&ModelConfig::heads)},
      {"ffn_dim", number(&ModelConfig::ffn_dim)},
      {"ffn_activation",
       {[](ModelConfig& c, std::string_view k, std::string_view v) {
          if (v == "relu")
            c.ffn_activation = FfnActivation::Relu;
          else if (v == "none")
            c.ffn_activation = FfnActivation::None;
          else
            throw ConfigError("setting '" + std::string(k) + "': expected relu or none");
        },
        [](const ModelConfig& c) { return std::string(c.ffn_activation == FfnActivation::Relu ? "relu" : "none"); }}},
      {"positions", flag(&ModelConfig::positions)},
      {"max_positions", number(&ModelConfig::max_positions)},
      {"dropout", number(&ModelConfig::dropout)},
      {"pair_encoder", flag(&ModelConfig::pair_encoder)},
      {"pair_dim", number(&ModelConfig::pair_dim)},
      {"pair_hidden", number(&ModelConfig::pair_hidden)},
      {"directions", {[](ModelConfig& c, std::string_view, std::string_view v) { c.directions = parse_direction_mode(v); },
                      [](const ModelConfig& c) { return std::string(to_string(c.directions)); }}},
      {"share_directions", flag(&ModelConfig::share_directions)},
      {"interaction", flag(&ModelConfig::interaction)},
      {"workers", number(&ModelConfig::workers)},
      {"none_weight", number(&ModelConfig::none_weight)},
      {"bio_repair",
       {[](ModelConfig& c, std::string_view k, std::string_view v) {
          if (v == "orphan_to_begin")
            c.bio_repair = BioRepair::OrphanToBegin;
          else if (v == "drop_orphan")
            c.bio_repair = BioRepair::DropOrphan;
          else
            throw ConfigError("setting '" + std::string(k) + "': expected orphan_to_begin or drop_orphan");
        },
        [](const ModelConfig& c) {
          return std::string(c.bio_repair == BioRepair::OrphanToBegin ? "orphan_to_begin" : "drop_orphan");
        }}},
      {"lr", number(&ModelConfig::lr)},
      {"beta1", number(&ModelConfig::beta1)},
      {"beta2", number(&ModelConfig::beta2)},
      {"adam_eps", number(&ModelConfig::adam_eps)},
      {"clip", number(&ModelConfig::clip)},
      {"batch", number(&ModelConfig::batch)},
      {"decay_rate", number(&ModelConfig::decay_rate)},
      {"decay_steps", number(&ModelConfig::decay_steps)},
      {"decay",
       {[](ModelConfig& c, std::string_view k, std::string_view v) {
          if (v == "inverse_time")
            c.decay = DecaySchedule::InverseTime;
          else if (v == "exponential")
            c.decay = DecaySchedule::Exponential;
          else
            throw ConfigError("setting '" + std::string(k) + "': expected inverse_time or exponential");
        },
        [](const ModelConfig& c) { return std::string(c.decay == DecaySchedule::InverseTime ? "inverse_time" : "exponential"); }}},
      {"epochs", number(&ModelConfig::epochs)},
      {"max_steps", number(&ModelConfig::max_steps)},
      {"seed", number(&ModelConfig::seed)},
      {"precision", number(&ModelConfig::precision)},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void apply_setting(ModelConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& [name, field] : fields())
    if (name == key) return field.set(config, key, value);
  throw ConfigError("unknown setting '" + std::string(key) + "'");
}

ModelConfig parse_config_text(std::string_view text) {
  ModelConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.starts_with("run.")) continue;
    try {
      apply_setting(config, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string to_config_text(const ModelConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + "=" + field.get(config) + "\n";
  return out;
}

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.pair_dim == 0) c.pair_dim = c.hidden;
  if (c.ffn_dim == 0 && c.heads > 0) c.ffn_dim = c.hidden / c.heads;
  if (!c.pair_encoder) c.interaction = false;
  require(c.word_dim > 0, "word_dim must be positive");
  require(!c.use_char || (c.char_embed_dim > 0 && c.char_hidden > 0), "char dims must be positive");
  require(c.plm_dim >= 0, "plm_dim must be non-negative");
  require(c.hidden > 0 && c.layers >= 1 && c.heads >= 1, "hidden, layers and heads must be positive");
  require(c.hidden % c.heads == 0,
          "hidden (" + std::to_string(c.hidden) + ") must be divisible by heads (" + std::to_string(c.heads) + ")");
  require(c.ffn_dim > 0, "ffn_dim must be positive");
  require(c.max_positions > 0, "max_positions must be positive");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must be in [0, 1)");
  require(c.pair_dim > 0 && c.pair_hidden > 0, "pair dims must be positive");
  require(c.workers >= 1, "workers must be at least 1");
  require(c.none_weight >= 0.0, "none_weight must be non-negative");
  require(c.lr > 0.0, "lr must be positive");
  require(c.clip > 0.0, "clip must be positive");
  require(c.batch >= 1, "batch must be at least 1");
  require(c.decay_rate >= 0.0 && c.decay_steps >= 1, "decay settings out of range");
  require(c.epochs >= 0, "epochs must be non-negative");
  require(c.precision == 32 || c.precision == 64, "precision must be 32 or 64");
  if (c.decay == DecaySchedule::Exponential) require(c.decay_rate > 0.0, "exponential decay needs a positive decay_rate");
  return c;
}

}  // namespace dualabsa
