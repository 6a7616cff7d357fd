#pragma once

#include <cstdint>
#include <vector>

#include "spda/optim.hpp"

namespace spda {

/// Monotone per-coordinate freeze mask: a set bit pins that weight at exactly
/// zero for the rest of the run. Bits are only ever set, never cleared.
class FreezeMask {
 public:
  /// Allocates (or shape-checks) one byte-mask per slot.
  void attach(const std::vector<ParamSlot>& slots);
  /// Sets the bit of every coordinate whose weight is exactly 0.
  void admit_zeros(const std::vector<ParamSlot>& slots);
  /// Forces masked coordinates to 0.
  void apply(const std::vector<ParamSlot>& slots) const;

  long count() const;
  bool empty() const { return masks_.empty(); }
  std::vector<std::vector<uint8_t>>& data() { return masks_; }
  const std::vector<std::vector<uint8_t>>& data() const { return masks_; }

 private:
  std::vector<std::vector<uint8_t>> masks_;
};

/// Runs the wrapped optimizer, then re-zeroes masked coordinates, then admits
/// any freshly-zero weights into the mask. The wrapped optimizer keeps full
/// ownership of its state; gradients of masked coordinates still feed it.
class MaskedOptimizer : public Optimizer {
 public:
  MaskedOptimizer(Optimizer& inner, FreezeMask& mask) : inner_(inner), mask_(mask) {}

  void step(const std::vector<ParamSlot>& slots) override;
  OptKind kind() const override { return inner_.kind(); }
  long t() const override { return inner_.t(); }
  double alpha() const override { return inner_.alpha(); }
  double lambda() const override { return inner_.lambda(); }
  void set_hyper(double alpha, double lambda) override { inner_.set_hyper(alpha, lambda); }
  OptimizerState export_state() const override { return inner_.export_state(); }
  void import_state(const OptimizerState& s) override { inner_.import_state(s); }

 private:
  Optimizer& inner_;
  FreezeMask& mask_;
};

/// Masks the floor(target * N) smallest-magnitude regularized weights
/// globally; ties go to the lower flat index. Non-regularized slots get
/// all-clear masks. target outside [0,1] -> std::invalid_argument.
FreezeMask magnitude_prune(const std::vector<ParamSlot>& slots, double target_sparsity);

}  // namespace spda
