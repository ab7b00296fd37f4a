#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dualabsa/config.hpp"
#include "dualabsa/errors.hpp"
#include "dualabsa/model.hpp"
#include "dualabsa/vocab.hpp"

namespace dualabsa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct StoredParam {
  std::string name;
  bool trainable = true;
  Shape shape;
  std::vector<double> values;  // row-major
};

/// Everything needed to rebuild a model: config text, vocabulary and every
/// named parameter at 64-bit precision.
struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  std::vector<StoredParam> params;

  const StoredParam* find(const std::string& name) const;
};

/// Binary layout (little-endian): magic "DUALABSA", u32 version, config text,
/// word list, char list, then per parameter its name, trainable flag, rank,
/// dims and values as f64.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Lines "name: checkpoint <shape> vs model <shape>" plus missing/extra names;
/// empty when the two agree.
std::vector<std::string> shape_diff(const Checkpoint& checkpoint, const std::vector<std::pair<std::string, Shape>>& expected);

template <typename Scalar>
Checkpoint make_checkpoint(const Model<Scalar>& model) {
  Checkpoint c{model.config(), model.vocab(), {}};
  for (const auto& e : model.params().entries()) {
    StoredParam p{e.name, e.trainable, e.value.shape(), {}};
    for (Scalar v : e.value.values()) p.values.push_back(static_cast<double>(v));
    c.params.push_back(std::move(p));
  }
  return c;
}

/// Builds the model the checkpoint's config describes and copies every
/// parameter in. Any shape disagreement is a CheckpointError listing each one.
template <typename Scalar>
Model<Scalar> restore_model(const Checkpoint& checkpoint) {
  const StoredParam* words = checkpoint.find("word.table");
  if (!words || words->shape.size() != 2) throw CheckpointError("checkpoint has no word.table");
  const MatrixX<double> table = Eigen::Map<const MatrixX<double>>(words->values.data(), words->shape[0], words->shape[1]);
  if (table.rows() != static_cast<Index>(checkpoint.vocab.word_count()))
    throw CheckpointError("word.table has " + std::to_string(table.rows()) + " rows but the vocabulary has " +
                          std::to_string(checkpoint.vocab.word_count()) + " words");
  Model<Scalar> model(checkpoint.config, checkpoint.vocab, table);
  std::vector<std::pair<std::string, Shape>> expected;
  for (const auto& e : model.params().entries()) expected.emplace_back(e.name, e.value.shape());
  if (const auto diff = shape_diff(checkpoint, expected); !diff.empty()) {
    std::string message = "checkpoint does not match its model configuration:";
    for (const auto& line : diff) message += "\n  " + line;
    throw CheckpointError(message);
  }
  for (auto& e : model.params().entries()) {
    const StoredParam* p = checkpoint.find(e.name);
    auto dst = e.value.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Scalar>(p->values[i]);
  }
  return model;
}

}  // namespace dualabsa
