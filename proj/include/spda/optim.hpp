#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spda/tensor.hpp"

namespace spda {

/// sgn(x) * max(|x| - delta, 0). delta < 0 -> std::invalid_argument.
double soft_threshold(double x, double delta);
Tensor soft_threshold(const Tensor& x, double delta);

/// Perturbation coefficient of the SGD form of dual averaging:
/// eps_t = 1 / (t + sqrt(t^2 - t)); eps_1 = 1, and eps_t < 1/(2t-1) after.
double sda_epsilon(long t);

/// Decaying rate 1 / (alpha * sqrt(t)).
double inv_sqrt_rate(double alpha, long t);

/// Optimizer view of one parameter tensor. Slot order and shapes must be
/// stable across steps of the same optimizer.
struct ParamSlot {
  Tensor* w;
  const Tensor* g;
  bool regularized;
};

enum class OptKind : uint8_t {
  Sgd = 0,
  SdaAveraged = 1,
  SdaPerturbed = 2,
  ProxSgd = 3,
  Rda = 4,
};

enum class LrMode : uint8_t { InvSqrt = 0, Constant = 1 };

/// Serializable snapshot of any optimizer.
struct OptimizerState {
  OptKind kind = OptKind::Sgd;
  long t = 1;
  double alpha = 1.0;
  double lambda = 0.0;
  LrMode lr_mode = LrMode::InvSqrt;
  double eta = 0.0;
  std::vector<Tensor> gbar;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const std::vector<ParamSlot>& slots) = 0;
  virtual OptKind kind() const = 0;

  virtual long t() const { return t_; }
  virtual double alpha() const { return alpha_; }
  virtual double lambda() const { return lambda_; }
  /// Mid-run hyperparameter change; never resets t or the dual average.
  virtual void set_hyper(double alpha, double lambda);

  virtual OptimizerState export_state() const;
  virtual void import_state(const OptimizerState& s);

 protected:
  long t_ = 1;
  double alpha_ = 1.0;
  double lambda_ = 0.0;
};

/// w <- w - eta_t g, eta_t = 1/(alpha sqrt t) or a constant.
class SgdOptimizer : public Optimizer {
 public:
  explicit SgdOptimizer(double alpha, LrMode mode = LrMode::InvSqrt, double eta = 0.0);
  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return OptKind::Sgd; }
  OptimizerState export_state() const override;
  void import_state(const OptimizerState& s) override;

 private:
  LrMode mode_;
  double eta_;
};

/// Keeps the running average gradient shared by the dual-averaging family.
class DualAveragingBase : public Optimizer {
 public:
  const std::vector<Tensor>& gbar() const { return gbar_; }
  OptimizerState export_state() const override;
  void import_state(const OptimizerState& s) override;

 protected:
  /// gbar <- ((t-1)/t) gbar + (1/t) g; allocates on first step.
  void update_gbar(const std::vector<ParamSlot>& slots);
  std::vector<Tensor> gbar_;
};

/// Dual averaging in closed form: w <- -(sqrt(t)/alpha) gbar.
class SdaAveragedOptimizer : public DualAveragingBase {
 public:
  explicit SdaAveragedOptimizer(double alpha);
  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return OptKind::SdaAveraged; }
};

/// The same method as perturbed SGD: w <- (1 - eps_t) w - gamma_t g.
/// At t=1 the coefficient (1 - eps_1) is exactly 0, so w_1 is discarded.
class SdaPerturbedOptimizer : public Optimizer {
 public:
  explicit SdaPerturbedOptimizer(double alpha);
  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return OptKind::SdaPerturbed; }
};

/// SGD step plus soft-thresholding at eta_t * lambda (elementwise three-case
/// form). Non-regularized slots get the plain SGD step.
class ProxSgdOptimizer : public Optimizer {
 public:
  ProxSgdOptimizer(double alpha, double lambda);
  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return OptKind::ProxSgd; }
};

/// Dual averaging with l1: thresholds the average gradient at lambda, a
/// cutoff that does not decay with t. Non-regularized slots get the plain
/// dual-averaging update. lambda = 0 reduces bitwise to SdaAveraged.
class RdaOptimizer : public DualAveragingBase {
 public:
  RdaOptimizer(double alpha, double lambda);
  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return OptKind::Rda; }
};

std::unique_ptr<Optimizer> make_optimizer(OptKind kind, double alpha, double lambda,
                                          LrMode lr_mode = LrMode::InvSqrt, double eta = 0.0);
std::unique_ptr<Optimizer> make_optimizer(const OptimizerState& state);
OptKind opt_kind_from_string(const std::string& name);
std::string to_string(OptKind kind);

/// One (alpha, lambda) setting over an inclusive epoch range.
struct ScheduleStage {
  long first_epoch;
  long last_epoch;
  double alpha;
  double lambda;
};

/// Piecewise hyperparameter plan; stages must tile epochs 1..last without
/// gaps or overlap.
class HyperSchedule {
 public:
  HyperSchedule() = default;
  explicit HyperSchedule(std::vector<ScheduleStage> stages);
  bool empty() const { return stages_.empty(); }
  long last_epoch() const;
  const ScheduleStage& at(long epoch) const;
  const std::vector<ScheduleStage>& stages() const { return stages_; }

 private:
  std::vector<ScheduleStage> stages_;
};

/// Installs the stage covering `epoch` into the optimizer, keeping its state.
void apply_hyper_schedule(const HyperSchedule& schedule, long epoch, Optimizer& opt);

}  // namespace spda
