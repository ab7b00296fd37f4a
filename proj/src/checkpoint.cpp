#include "dualabsa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace dualabsa {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'U', 'A', 'L', 'A', 'B', 'S', 'A'};
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 40;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void finish(const std::filesystem::path& path) {
    out_.flush();
    if (!out_) throw CheckpointError("write to " + path.string() + " failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw CheckpointError("cannot open checkpoint " + path_);
  }
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw CheckpointError("checkpoint " + path_ + " is truncated");
    return v;
  }
  std::uint64_t length() {
    const auto n = pod<std::uint64_t>();
    if (n > kMaxLength) throw CheckpointError("checkpoint " + path_ + " is corrupt (length " + std::to_string(n) + ")");
    return n;
  }
  std::string bytes() {
    std::string s(length(), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw CheckpointError("checkpoint " + path_ + " is truncated");
    return s;
  }
  void read_into(void* dst, std::size_t count) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (!in_) throw CheckpointError("checkpoint " + path_ + " is truncated");
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

}  // namespace

const StoredParam* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  Writer w(path);
  for (char c : kMagic) w.pod(c);
  w.pod(kCheckpointVersion);
  w.bytes(to_config_text(checkpoint.config));
  w.pod<std::uint64_t>(checkpoint.vocab.word_count());
  for (const auto& word : checkpoint.vocab.words()) w.bytes(word);
  w.pod<std::uint64_t>(checkpoint.vocab.char_count());
  for (char32_t c : checkpoint.vocab.chars()) w.pod<std::uint32_t>(c);
  w.pod<std::uint64_t>(checkpoint.params.size());
  for (const auto& p : checkpoint.params) {
    w.bytes(p.name);
    w.pod<std::uint8_t>(p.trainable ? 1 : 0);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.shape.size()));
    for (Index d : p.shape) w.pod<std::int64_t>(d);
    w.pod<std::uint64_t>(p.values.size());
    for (double v : p.values) w.pod(v);
  }
  w.finish(path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  char magic[8];
  r.read_into(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError(r.path() + " is not a dualabsa checkpoint");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  try {
    c.config = parse_config_text(r.bytes()).resolved();
  } catch (const std::exception& e) {
    throw CheckpointError("checkpoint config is invalid: " + std::string(e.what()));
  }
  std::vector<std::string> words(r.length());
  for (auto& word : words) word = r.bytes();
  std::u32string chars(r.length(), U'\0');
  for (auto& ch : chars) ch = static_cast<char32_t>(r.pod<std::uint32_t>());
  try {
    c.vocab = Vocab::from_lists(words, chars);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint vocabulary is invalid: " + std::string(e.what()));
  }
  c.params.resize(r.length());
  for (auto& p : c.params) {
    p.name = r.bytes();
    p.trainable = r.pod<std::uint8_t>() != 0;
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) throw CheckpointError("parameter '" + p.name + "' has rank " + std::to_string(rank));
    std::uint64_t expected = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.pod<std::int64_t>();
      if (d < 0 || static_cast<std::uint64_t>(d) > kMaxLength) throw CheckpointError("parameter '" + p.name + "' has a corrupt shape");
      p.shape.push_back(static_cast<Index>(d));
      expected *= static_cast<std::uint64_t>(d);
    }
    const auto count = r.length();
    if (count != expected) throw CheckpointError("parameter '" + p.name + "' holds " + std::to_string(count) + " values for shape " + to_string(p.shape));
    p.values.resize(count);
    r.read_into(p.values.data(), count * sizeof(double));
  }
  return c;
}

std::vector<std::string> shape_diff(const Checkpoint& checkpoint, const std::vector<std::pair<std::string, Shape>>& expected) {
  std::vector<std::string> diff;
  std::map<std::string, const StoredParam*> stored;
  for (const auto& p : checkpoint.params) stored.emplace(p.name, &p);
  for (const auto& [name, shape] : expected) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      diff.push_back(name + ": missing from checkpoint (model " + to_string(shape) + ")");
      continue;
    }
    if (it->second->shape != shape)
      diff.push_back(name + ": checkpoint " + to_string(it->second->shape) + " vs model " + to_string(shape));
    stored.erase(it);
  }
  for (const auto& [name, p] : stored) diff.push_back(name + ": not in model (checkpoint " + to_string(p->shape) + ")");
  return diff;
}

}  // namespace dualabsa
