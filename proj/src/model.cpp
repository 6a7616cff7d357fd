#include "spda/model.hpp"

#include <cmath>

#include "spda/errors.hpp"
#include "spda/rng.hpp"

namespace spda {

namespace {

class LinearLayer : public Layer {
 public:
  LinearLayer(long in, long out, bool head)
      : W_(parameter(Tensor({out, in}))), b_(parameter(Tensor({out}))), in_(in), head_(head) {}

  Var forward(const Var& x, bool) override { return linear(x, W_, b_); }
  const char* kind() const override { return "linear"; }

  void register_params(std::vector<Param>& out, const std::string& prefix) override {
    out.push_back({prefix + ".W", W_, true, in_, head_, InitKind::Uniform});
    out.push_back({prefix + ".b", b_, false, in_, head_, InitKind::Uniform});
  }

  bool is_head() const { return head_; }

 private:
  Var W_, b_;
  long in_;
  bool head_;
};

class Conv2dLayer : public Layer {
 public:
  Conv2dLayer(long cin, long cout, long k, bool bias)
      : K_(parameter(Tensor({cout, cin, k, k}))), b_(parameter(Tensor({cout}))),
        fan_in_(k * k * cin), bias_(bias) {}

  Var forward(const Var& x, bool) override { return conv2d(x, K_, b_); }
  const char* kind() const override { return "conv2d"; }

  void register_params(std::vector<Param>& out, const std::string& prefix) override {
    out.push_back({prefix + ".K", K_, true, fan_in_, false, InitKind::Uniform});
    if (bias_)
      out.push_back({prefix + ".b", b_, false, fan_in_, false, InitKind::Uniform});
  }

 private:
  Var K_, b_;
  long fan_in_;
  bool bias_;
};

class ReluLayer : public Layer {
 public:
  Var forward(const Var& x, bool) override { return relu(x); }
  const char* kind() const override { return "relu"; }
};

class MaxPoolLayer : public Layer {
 public:
  Var forward(const Var& x, bool) override { return maxpool2x2(x); }
  const char* kind() const override { return "maxpool"; }
};

class FlattenLayer : public Layer {
 public:
  Var forward(const Var& x, bool) override { return flatten(x); }
  const char* kind() const override { return "flatten"; }
};

class BatchNormLayer : public Layer {
 public:
  explicit BatchNormLayer(long channels)
      : gamma_(parameter(Tensor::full({channels}, 1.0))), beta_(parameter(Tensor({channels}))),
        running_mean_({channels}), running_var_(Tensor::full({channels}, 1.0)) {}

  Var forward(const Var& x, bool training) override {
    return batchnorm2d(x, gamma_, beta_, running_mean_, running_var_, training);
  }
  const char* kind() const override { return "batchnorm"; }

  void register_params(std::vector<Param>& out, const std::string& prefix) override {
    out.push_back({prefix + ".gamma", gamma_, false, 0, false, InitKind::One});
    out.push_back({prefix + ".beta", beta_, false, 0, false, InitKind::Zero});
  }

  void register_buffers(std::vector<BufferRef>& out, const std::string& prefix) override {
    out.emplace_back(prefix + ".running_mean", &running_mean_);
    out.emplace_back(prefix + ".running_var", &running_var_);
  }

 private:
  Var gamma_, beta_;
  Tensor running_mean_, running_var_;
};

}  // namespace

void Model::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  registry_.clear();
}

void Model::build_registry() {
  registry_.clear();
  head_layer_ = -1;
  for (size_t i = 0; i < layers_.size(); ++i) {
    std::string prefix = std::string(layers_[i]->kind()) + std::to_string(i);
    layers_[i]->register_params(registry_, prefix);
    if (std::string(layers_[i]->kind()) == "linear") head_layer_ = static_cast<long>(i);
  }
}

std::vector<Param>& Model::params() {
  if (registry_.empty()) build_registry();
  return registry_;
}

const std::vector<Param>& Model::params() const {
  return const_cast<Model*>(this)->params();
}

std::vector<BufferRef> Model::buffers() {
  std::vector<BufferRef> out;
  for (size_t i = 0; i < layers_.size(); ++i) {
    std::string prefix = std::string(layers_[i]->kind()) + std::to_string(i);
    layers_[i]->register_buffers(out, prefix);
  }
  return out;
}

long Model::param_count() const {
  long n = 0;
  for (const Param& p : params()) n += p.var->value.size();
  return n;
}

long Model::regularized_count() const {
  long n = 0;
  for (const Param& p : params())
    if (p.regularized) n += p.var->value.size();
  return n;
}

Var Model::forward(const Tensor& x, bool training) {
  if (layers_.empty()) throw StateError("forward on empty model");
  params();  // ensure head_layer_ resolved
  Var cur = constant(x);
  for (size_t i = 0; i < layers_.size(); ++i) {
    if (static_cast<long>(i) == head_layer_) head_input_ = cur;
    cur = layers_[i]->forward(cur, training);
  }
  return cur;
}

Var Model::loss(const Tensor& x, const std::vector<int>& labels, bool training) {
  Var logits = forward(x, training);
  last_loss_ = softmax_cross_entropy(logits, labels);
  return last_loss_;
}

void Model::backward() {
  if (!last_loss_) throw StateError("backward before any loss computation");
  spda::backward(last_loss_);
  last_loss_.reset();
}

void Model::zero_grad() {
  for (Param& p : params()) grad_buffer(p.var).zero();
}

const Var& Model::head_input() const {
  if (!head_input_) throw StateError("no forward has produced a head input yet");
  return head_input_;
}

Model build_mlp(const std::vector<long>& dims, bool with_relu) {
  if (dims.size() < 2) throw ConfigError("mlp needs at least [input, output] dims");
  Model m;
  m.add(std::make_unique<FlattenLayer>());
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    bool last = i + 2 == dims.size();
    m.add(std::make_unique<LinearLayer>(dims[i], dims[i + 1], last));
    if (with_relu && !last) m.add(std::make_unique<ReluLayer>());
  }
  return m;
}

Model build_small_cnn(long in_channels, long in_h, long in_w,
                      const std::vector<long>& conv_channels, long kernel,
                      const std::vector<long>& fc_dims, bool with_batchnorm,
                      bool with_conv_bias) {
  if (fc_dims.empty()) throw ConfigError("small_cnn needs fc dims ending in the class count");
  if (in_channels < 1 || in_h < 1 || in_w < 1 || kernel < 1)
    throw ConfigError("small_cnn: bad input geometry");
  Model m;
  long c = in_channels, h = in_h, w = in_w;
  for (long out_c : conv_channels) {
    if (out_c < 1) throw ConfigError("small_cnn: bad channel count");
    h = h - kernel + 1;
    w = w - kernel + 1;
    if (h < 1 || w < 1)
      throw DimensionError("small_cnn: spatial dims collapse at conv with kernel " +
                           std::to_string(kernel));
    m.add(std::make_unique<Conv2dLayer>(c, out_c, kernel, with_conv_bias));
    if (with_batchnorm) m.add(std::make_unique<BatchNormLayer>(out_c));
    m.add(std::make_unique<ReluLayer>());
    c = out_c;
  }
  if (!conv_channels.empty()) {
    h /= 2;
    w /= 2;
    if (h < 1 || w < 1) throw DimensionError("small_cnn: spatial dims collapse at max-pool");
    m.add(std::make_unique<MaxPoolLayer>());
  }
  m.add(std::make_unique<FlattenLayer>());
  long prev = c * h * w;
  for (size_t i = 0; i < fc_dims.size(); ++i) {
    bool last = i + 1 == fc_dims.size();
    m.add(std::make_unique<LinearLayer>(prev, fc_dims[i], last));
    if (!last) m.add(std::make_unique<ReluLayer>());
    prev = fc_dims[i];
  }
  return m;
}

void init_scaled_uniform(Model& model, double s, uint64_t seed) {
  if (s <= 0.0) throw ConfigError("init scale s must be positive");
  Rng rng(seed);
  for (Param& p : model.params()) {
    Tensor& t = p.var->value;
    switch (p.init) {
      case InitKind::Uniform: {
        double b = std::sqrt(s / static_cast<double>(p.fan_in));
        for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(-b, b);
        break;
      }
      case InitKind::One:
        t.fill(1.0);
        break;
      case InitKind::Zero:
        t.zero();
        break;
    }
  }
  for (BufferRef& b : model.buffers())
    b.second->fill(b.first.ends_with("var") ? 1.0 : 0.0);
}

void set_all_zero(Model& model) {
  for (Param& p : model.params()) p.var->value.zero();
  for (BufferRef& b : model.buffers())
    b.second->fill(b.first.ends_with("var") ? 1.0 : 0.0);
}

ZeroOutputReport zero_output_check(Model& model, const Tensor& batch) {
  model.zero_grad();
  std::vector<int> labels(static_cast<size_t>(batch.dim(0)), 0);
  model.loss(batch, labels, /*training=*/false);
  model.backward();

  ZeroOutputReport report;
  const Tensor& head_in = model.head_input()->value;
  report.output_zero = true;
  for (long i = 0; i < head_in.size(); ++i)
    if (head_in[i] != 0.0) {
      report.output_zero = false;
      break;
    }

  report.head_grad_zero = true;
  report.body_grad_zero = true;
  for (Param& p : model.params()) {
    bool head_weight = p.head && p.regularized;  // the head W, not its bias
    bool body = !p.head;
    if (!head_weight && !body) continue;
    const Tensor& g = grad_buffer(p.var);
    for (long i = 0; i < g.size(); ++i)
      if (g[i] != 0.0) {
        if (head_weight) report.head_grad_zero = false;
        if (body) report.body_grad_zero = false;
        break;
      }
  }
  return report;
}

}  // namespace spda
