#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualabsa/numerics/tensor.hpp"
#include "dualabsa/rng.hpp"

namespace dualabsa {

/// Named parameters with same-shaped gradient buffers, kept in insertion order.
template <typename Scalar>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    bool trainable = true;
  };

  explicit ParamStore(std::uint64_t rng_seed = 0) : rng_seed_(rng_seed) {}

  std::uint64_t rng_seed() const { return rng_seed_; }
  void set_rng_seed(std::uint64_t seed) { rng_seed_ = seed; }

  Tensor<Scalar>& add(const std::string& name, Tensor<Scalar> value, bool trainable = true) {
    if (index_.contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    Tensor<Scalar> grad(value.shape());
    entries_.push_back(Entry{name, std::move(value), std::move(grad), trainable});
    return entries_.back().value;
  }

  Tensor<Scalar>& add_zeros(const std::string& name, Shape shape) { return add(name, Tensor<Scalar>(std::move(shape))); }

  Tensor<Scalar>& add_constant(const std::string& name, Shape shape, Scalar value) {
    Tensor<Scalar> t(std::move(shape));
    t.matrix().setConstant(value);
    return add(name, std::move(t));
  }

  /// Glorot-uniform initialisation for a fan_in x fan_out weight.
  Tensor<Scalar>& add_xavier(const std::string& name, Index fan_in, Index fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return add_uniform(name, Shape{fan_in, fan_out}, limit, rng);
  }

  Tensor<Scalar>& add_uniform(const std::string& name, Shape shape, double limit, Rng& rng) {
    Tensor<Scalar> t(std::move(shape));
    for (Scalar& v : t.values()) v = static_cast<Scalar>(rng.uniform(-limit, limit));
    return add(name, std::move(t));
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  Entry& entry(const std::string& name) { return entries_.at(lookup(name)); }
  const Entry& entry(const std::string& name) const { return entries_.at(lookup(name)); }

  Tensor<Scalar>& value(const std::string& name) { return entry(name).value; }
  const Tensor<Scalar>& value(const std::string& name) const { return entry(name).value; }
  Tensor<Scalar>& grad(const std::string& name) { return entry(name).grad; }
  const Tensor<Scalar>& grad(const std::string& name) const { return entry(name).grad; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void zero_grad() {
    for (auto& e : entries_) e.grad.matrix().setZero();
  }

  Index trainable_count() const {
    Index total = 0;
    for (const auto& e : entries_)
      if (e.trainable) total += e.value.size();
    return total;
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::uint64_t rng_seed_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace dualabsa
