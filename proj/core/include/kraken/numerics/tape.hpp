#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kraken/numerics/ops.hpp"
#include "kraken/numerics/tensor.hpp"

namespace kraken {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
};

using GradientMap = std::map<std::string, Tensor>;

// Single-use reverse-mode tape. Every op computes its value eagerly with the
// kernels in ops::, so forward values are identical whether or not gradients
// are recorded. In Mode::Inference no backward closures are kept.
//
// A tape is consumed by backward(); further recording or a second backward
// throws.
class Tape {
 public:
  enum class Mode { Training, Inference };

  explicit Tape(Mode mode = Mode::Training) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Mode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Leaf that receives a gradient under `id`. Binding the same id twice
  // accumulates both gradients under that id.
  Var parameter(std::string id, Tensor value);
  Var constant(Tensor value);

  const Tensor& value(Var v) const;

  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);
  Var add(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var add_n(std::span<const Var> parts);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var gelu(Var a);
  Var softmax_rows(Var a);
  Var causal_softmax_rows(Var a, std::size_t offset);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = ops::kDefaultLayerNormEps);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var gather_rows(Var table, std::span<const std::size_t> indices);
  Var sum(Var a);
  // Mean token cross-entropy of row-wise logits. Targets < 0 are ignored.
  Var cross_entropy(Var logits, std::span<const int> targets);

  // Propagates seed_grad from `output` and returns d(output . seed)/d(param)
  // for every parameter reachable from output.
  GradientMap backward(Var output, const Tensor& seed_grad);

 private:
  struct Node;
  // Reads operand values from `nodes`, accumulates into `grads`.
  using Backward = std::function<void(const std::vector<Node>& nodes, const Tensor& grad_out,
                                      std::vector<Tensor>& grads)>;

  struct Node {
    Tensor value;
    std::string parameter_id;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);
  bool needs(Var v) const { return nodes_[v.index].requires_grad; }
  bool recording() const { return mode_ == Mode::Training; }
  void check_open() const;
  void check_var(Var v) const;

  Mode mode_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
};

// Accumulates `delta` into grads[index], allocating on first use.
void accumulate_grad(std::vector<Tensor>& grads, std::size_t index, const Tensor& delta);

}  // namespace kraken
