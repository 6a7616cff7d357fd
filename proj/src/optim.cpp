#include "spda/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spda/errors.hpp"

namespace spda {

double soft_threshold(double x, double delta) {
  if (delta < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  if (x > delta) return x - delta;
  if (x < -delta) return x + delta;
  return 0.0;
}

Tensor soft_threshold(const Tensor& x, double delta) {
  if (delta < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  Tensor out = x;
  for (long i = 0; i < out.size(); ++i) out[i] = soft_threshold(out[i], delta);
  return out;
}

double sda_epsilon(long t) {
  double td = static_cast<double>(t);
  return 1.0 / (td + std::sqrt(td * td - td));
}

double inv_sqrt_rate(double alpha, long t) {
  return 1.0 / (alpha * std::sqrt(static_cast<double>(t)));
}

void Optimizer::set_hyper(double alpha, double lambda) {
  if (alpha <= 0.0) throw ConfigError("alpha must be positive");
  if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
  alpha_ = alpha;
  lambda_ = lambda;
}

OptimizerState Optimizer::export_state() const {
  OptimizerState s;
  s.kind = kind();
  s.t = t_;
  s.alpha = alpha_;
  s.lambda = lambda_;
  return s;
}

void Optimizer::import_state(const OptimizerState& s) {
  if (s.kind != kind()) throw StateError("optimizer state kind mismatch");
  t_ = s.t;
  alpha_ = s.alpha;
  lambda_ = s.lambda;
}

SgdOptimizer::SgdOptimizer(double alpha, LrMode mode, double eta) : mode_(mode), eta_(eta) {
  set_hyper(alpha, 0.0);
  if (mode_ == LrMode::Constant && eta_ <= 0.0)
    throw ConfigError("constant-rate SGD needs eta > 0");
}

void SgdOptimizer::step(const std::vector<ParamSlot>& slots) {
  double eta = mode_ == LrMode::InvSqrt ? inv_sqrt_rate(alpha_, t_) : eta_;
  for (const ParamSlot& s : slots) {
    Tensor& w = *s.w;
    const Tensor& g = *s.g;
    for (long i = 0; i < w.size(); ++i) w[i] -= eta * g[i];
  }
  ++t_;
}

OptimizerState SgdOptimizer::export_state() const {
  OptimizerState s = Optimizer::export_state();
  s.lr_mode = mode_;
  s.eta = eta_;
  return s;
}

void SgdOptimizer::import_state(const OptimizerState& s) {
  Optimizer::import_state(s);
  mode_ = s.lr_mode;
  eta_ = s.eta;
}

void DualAveragingBase::update_gbar(const std::vector<ParamSlot>& slots) {
  if (gbar_.empty()) {
    gbar_.reserve(slots.size());
    for (const ParamSlot& s : slots) gbar_.emplace_back(s.w->shape());
  }
  if (gbar_.size() != slots.size()) throw StateError("slot count changed mid-run");
  double keep = static_cast<double>(t_ - 1) / static_cast<double>(t_);
  double take = 1.0 / static_cast<double>(t_);
  for (size_t k = 0; k < slots.size(); ++k) {
    Tensor& gb = gbar_[k];
    const Tensor& g = *slots[k].g;
    if (!gb.same_shape(g)) {
      // A restored state carries flat blocks; adopt the slot's shape as long
      // as the element count agrees.
      if (gb.size() != g.size()) throw StateError("slot shape changed mid-run");
      gb = Tensor(g.shape(), gb.raw());
    }
    for (long i = 0; i < gb.size(); ++i) gb[i] = keep * gb[i] + take * g[i];
  }
}

OptimizerState DualAveragingBase::export_state() const {
  OptimizerState s = Optimizer::export_state();
  s.gbar = gbar_;
  return s;
}

void DualAveragingBase::import_state(const OptimizerState& s) {
  Optimizer::import_state(s);
  gbar_ = s.gbar;
}

SdaAveragedOptimizer::SdaAveragedOptimizer(double alpha) { set_hyper(alpha, 0.0); }

void SdaAveragedOptimizer::step(const std::vector<ParamSlot>& slots) {
  update_gbar(slots);
  double xi = std::sqrt(static_cast<double>(t_)) / alpha_;
  for (size_t k = 0; k < slots.size(); ++k) {
    Tensor& w = *slots[k].w;
    const Tensor& gb = gbar_[k];
    for (long i = 0; i < w.size(); ++i) w[i] = -(xi * gb[i]);
  }
  ++t_;
}

SdaPerturbedOptimizer::SdaPerturbedOptimizer(double alpha) { set_hyper(alpha, 0.0); }

void SdaPerturbedOptimizer::step(const std::vector<ParamSlot>& slots) {
  double eps = sda_epsilon(t_);
  double gamma = inv_sqrt_rate(alpha_, t_);
  double keep = 1.0 - eps;  // exactly 0 at t=1
  for (const ParamSlot& s : slots) {
    Tensor& w = *s.w;
    const Tensor& g = *s.g;
    for (long i = 0; i < w.size(); ++i) w[i] = keep * w[i] - gamma * g[i];
  }
  ++t_;
}

ProxSgdOptimizer::ProxSgdOptimizer(double alpha, double lambda) { set_hyper(alpha, lambda); }

void ProxSgdOptimizer::step(const std::vector<ParamSlot>& slots) {
  double eta = inv_sqrt_rate(alpha_, t_);
  double cut = eta * lambda_;
  for (const ParamSlot& s : slots) {
    Tensor& w = *s.w;
    const Tensor& g = *s.g;
    if (s.regularized && lambda_ > 0.0) {
      for (long i = 0; i < w.size(); ++i) {
        double u = w[i] - eta * g[i];
        if (u > cut)
          w[i] = w[i] - eta * (g[i] + lambda_);
        else if (u < -cut)
          w[i] = w[i] - eta * (g[i] - lambda_);
        else
          w[i] = 0.0;
      }
    } else {
      for (long i = 0; i < w.size(); ++i) w[i] -= eta * g[i];
    }
  }
  ++t_;
}

RdaOptimizer::RdaOptimizer(double alpha, double lambda) { set_hyper(alpha, lambda); }

void RdaOptimizer::step(const std::vector<ParamSlot>& slots) {
  update_gbar(slots);
  double xi = std::sqrt(static_cast<double>(t_)) / alpha_;
  for (size_t k = 0; k < slots.size(); ++k) {
    Tensor& w = *slots[k].w;
    const Tensor& gb = gbar_[k];
    if (slots[k].regularized && lambda_ > 0.0) {
      for (long i = 0; i < w.size(); ++i) {
        if (gb[i] > lambda_)
          w[i] = -(xi * (gb[i] - lambda_));
        else if (gb[i] < -lambda_)
          w[i] = -(xi * (gb[i] + lambda_));
        else
          w[i] = 0.0;
      }
    } else {
      for (long i = 0; i < w.size(); ++i) w[i] = -(xi * gb[i]);
    }
  }
  ++t_;
}

std::unique_ptr<Optimizer> make_optimizer(OptKind kind, double alpha, double lambda,
                                          LrMode lr_mode, double eta) {
  switch (kind) {
    case OptKind::Sgd:
      return std::make_unique<SgdOptimizer>(alpha, lr_mode, eta);
    case OptKind::SdaAveraged:
      return std::make_unique<SdaAveragedOptimizer>(alpha);
    case OptKind::SdaPerturbed:
      return std::make_unique<SdaPerturbedOptimizer>(alpha);
    case OptKind::ProxSgd:
      return std::make_unique<ProxSgdOptimizer>(alpha, lambda);
    case OptKind::Rda:
      return std::make_unique<RdaOptimizer>(alpha, lambda);
  }
  throw ConfigError("unknown optimizer kind");
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerState& state) {
  auto opt = make_optimizer(state.kind, state.alpha, state.lambda, state.lr_mode,
                            state.lr_mode == LrMode::Constant ? state.eta : 0.0);
  opt->import_state(state);
  return opt;
}

OptKind opt_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptKind::Sgd;
  if (name == "sda") return OptKind::SdaAveraged;
  if (name == "sda_perturbed") return OptKind::SdaPerturbed;
  if (name == "prox_sgd") return OptKind::ProxSgd;
  if (name == "rda") return OptKind::Rda;
  throw ConfigError("unknown optimizer kind: " + name);
}

std::string to_string(OptKind kind) {
  switch (kind) {
    case OptKind::Sgd: return "sgd";
    case OptKind::SdaAveraged: return "sda";
    case OptKind::SdaPerturbed: return "sda_perturbed";
    case OptKind::ProxSgd: return "prox_sgd";
    case OptKind::Rda: return "rda";
  }
  return "?";
}

HyperSchedule::HyperSchedule(std::vector<ScheduleStage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) throw ConfigError("schedule needs at least one stage");
  std::sort(stages_.begin(), stages_.end(),
            [](const ScheduleStage& a, const ScheduleStage& b) {
              return a.first_epoch < b.first_epoch;
            });
  if (stages_.front().first_epoch != 1) throw ConfigError("schedule must start at epoch 1");
  for (size_t i = 0; i < stages_.size(); ++i) {
    const ScheduleStage& s = stages_[i];
    if (s.last_epoch < s.first_epoch) throw ConfigError("schedule stage with empty range");
    if (s.alpha <= 0.0) throw ConfigError("schedule alpha must be positive");
    if (s.lambda < 0.0) throw ConfigError("schedule lambda must be nonnegative");
    if (i > 0 && s.first_epoch != stages_[i - 1].last_epoch + 1)
      throw ConfigError("schedule stages must tile epochs without gaps or overlap");
  }
}

long HyperSchedule::last_epoch() const {
  if (stages_.empty()) throw StateError("empty schedule");
  return stages_.back().last_epoch;
}

const ScheduleStage& HyperSchedule::at(long epoch) const {
  for (const ScheduleStage& s : stages_)
    if (epoch >= s.first_epoch && epoch <= s.last_epoch) return s;
  throw ConfigError("epoch " + std::to_string(epoch) + " outside schedule coverage");
}

void apply_hyper_schedule(const HyperSchedule& schedule, long epoch, Optimizer& opt) {
  const ScheduleStage& s = schedule.at(epoch);
  opt.set_hyper(s.alpha, s.lambda);
}

}  // namespace spda
