#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dualabsa/numerics/param_store.hpp"
#include "dualabsa/numerics/tensor.hpp"
#include "dualabsa/rng.hpp"

namespace dualabsa {

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while its graph lives.
template <typename Scalar>
struct Var {
  Graph<Scalar>* graph = nullptr;
  int id = -1;

  const Tensor<Scalar>& value() const { return graph->value(id); }
  const MatrixX<Scalar>& mat() const { return graph->value(id).matrix(); }
  const Shape& shape() const { return graph->value(id).shape(); }
  bool operator==(const Var&) const = default;
};

/// Define-by-run tape. Nodes are appended in evaluation order, so creation
/// order is a topological order and backward simply walks it in reverse.
template <typename Scalar>
class Graph {
 public:
  using Matrix = MatrixX<Scalar>;
  using Backward = std::function<void(Graph&, int self)>;

  explicit Graph(bool training = false, Rng rng = Rng(0)) : training_(training), rng_(std::move(rng)) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool training() const { return training_; }
  Rng& rng() { return rng_; }

  /// Set by ops that consumed randomness; finite-difference checks refuse such graphs.
  void mark_stochastic() { stochastic_ = true; }
  bool stochastic() const { return stochastic_; }

  Var<Scalar> constant(Tensor<Scalar> value) {
    nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr, 0, "constant"});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  /// Leaf bound to a stored parameter; gradients land in the store on backward().
  /// Frozen parameters become leaves that never require a gradient.
  Var<Scalar> parameter(ParamStore<Scalar>& store, const std::string& name) {
    auto key = std::make_pair(&store, name);
    if (auto it = param_nodes_.find(key); it != param_nodes_.end()) return {this, it->second};
    auto& entries = store.entries();
    std::size_t index = 0;
    while (index < entries.size() && entries[index].name != name) ++index;
    if (index == entries.size()) throw ConfigError("unknown parameter '" + name + "'");
    nodes_.push_back(Node{entries[index].value, {}, entries[index].trainable, {}, &store, index, "parameter"});
    int id = static_cast<int>(nodes_.size()) - 1;
    param_nodes_.emplace(std::move(key), id);
    return {this, id};
  }

  Var<Scalar> record(const char* op, Tensor<Scalar> value, std::initializer_list<Var<Scalar>> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}, nullptr, 0, op});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<Scalar> record(const char* op, Tensor<Scalar> value, const std::vector<Var<Scalar>>& inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : Backward{}, nullptr, 0, op});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Tensor<Scalar>& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  const char* op(int id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Matrix& grad(int id) {
    Node& node = nodes_.at(id);
    if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    return node.grad;
  }

  bool has_grad(int id) const { return nodes_.at(id).grad.size() != 0; }

  /// Reverse sweep from a scalar. Each node is visited once; parameter leaves
  /// add their gradient into the owning ParamStore.
  void backward(Var<Scalar> loss, Scalar seed = Scalar(1)) {
    if (loss.value().size() != 1) throw DimensionError("backward() needs a scalar, got " + to_string(loss.shape()));
    if (!requires_grad(loss.id)) return;
    grad(loss.id).setConstant(seed);
    for (int id = loss.id; id >= 0; --id) {
      Node& node = nodes_[id];
      if (!node.requires_grad || node.grad.size() == 0) continue;
      if (node.backward) node.backward(*this, id);
      if (node.store != nullptr) node.store->entries()[node.param_index].grad.matrix() += node.grad;
    }
  }

 private:
  struct Node {
    Tensor<Scalar> value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    ParamStore<Scalar>* store = nullptr;
    std::size_t param_index = 0;
    const char* op = "";
  };

  bool training_;
  Rng rng_;
  bool stochastic_ = false;
  std::vector<Node> nodes_;
  std::map<std::pair<ParamStore<Scalar>*, std::string>, int> param_nodes_;
};

}  // namespace dualabsa
