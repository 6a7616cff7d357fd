#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spda/nn.hpp"

namespace spda {

enum class InitKind { Uniform, One, Zero };

/// Registry entry for one trainable tensor.
struct Param {
  std::string name;
  Var var;
  bool regularized = false;  // participates in l1 / sparsity counting
  long fan_in = 0;           // scaled-uniform bound uses sqrt(s / fan_in)
  bool head = false;         // classifier-head tensor (final linear W or b)
  InitKind init = InitKind::Uniform;
};

using BufferRef = std::pair<std::string, Tensor*>;

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Var forward(const Var& x, bool training) = 0;
  virtual const char* kind() const = 0;
  virtual void register_params(std::vector<Param>&, const std::string&) {}
  virtual void register_buffers(std::vector<BufferRef>&, const std::string&) {}
};

/// An ordered layer stack with a parameter registry. The last linear layer is
/// the classifier head; its input activation is captured on every forward so
/// the zero-output property can be inspected directly.
class Model {
 public:
  void add(std::unique_ptr<Layer> layer);

  Var forward(const Tensor& x, bool training);
  /// forward + softmax cross entropy; caches the loss node for backward().
  Var loss(const Tensor& x, const std::vector<int>& labels, bool training);
  /// Reverse sweep from the cached loss. StateError without a prior loss().
  void backward();
  void zero_grad();

  std::vector<Param>& params();
  const std::vector<Param>& params() const;
  std::vector<BufferRef> buffers();
  long param_count() const;
  long regularized_count() const;

  /// Input of the classifier head from the most recent forward.
  const Var& head_input() const;

 private:
  void build_registry();

  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Param> registry_;
  long head_layer_ = -1;
  Var head_input_;
  Var last_loss_;
};

/// Alternating linear/ReLU stack over flattened input; dims = layer widths
/// including input and class count.
Model build_mlp(const std::vector<long>& dims, bool with_relu = true);

/// conv(/bn)/relu blocks, one 2x2 max-pool after the last block, then a
/// linear stack; fc_dims = hidden widths plus class count. Empty
/// conv_channels degrades to an MLP over the raw pixels. Bias-free
/// convolutions drop the per-channel shift entirely (it is redundant under
/// batch norm and a liability for dual averaging, whose first steps scale
/// position-summed bias gradients by 1/alpha).
Model build_small_cnn(long in_channels, long in_h, long in_w,
                      const std::vector<long>& conv_channels, long kernel,
                      const std::vector<long>& fc_dims, bool with_batchnorm,
                      bool with_conv_bias = true);

/// Draws every weight and bias i.i.d. from U(-b, b), b = sqrt(s / fan_in),
/// conv fan-in k*k*c, linear fan-in = input width. Batch-norm scale/shift go
/// to 1/0 and running stats to 0/1. Deterministic given seed.
void init_scaled_uniform(Model& model, double s, uint64_t seed);

/// Zeroes every trainable tensor; buffers reset to their defaults.
void set_all_zero(Model& model);

struct ZeroOutputReport {
  bool output_zero = false;     // head input activation exactly zero
  bool head_grad_zero = false;  // d loss / d head-W exactly zero
  bool body_grad_zero = false;  // d loss / d theta exactly zero for all
                                // non-head trainables
};

/// Runs one eval-mode loss/backward on the batch and inspects the zero-output
/// structure at the model's current parameters.
ZeroOutputReport zero_output_check(Model& model, const Tensor& batch);

}  // namespace spda
