#pragma once

#include <utility>
#include <vector>

#include "spda/model.hpp"
#include "spda/tensor.hpp"

namespace spda {

struct SparsityReport {
  long zeros = 0;
  long total = 0;
  double fraction() const { return static_cast<double>(zeros) / static_cast<double>(total); }
};

/// Exact-zero fraction over regularized parameters only. This is the
/// headline sparsity number; throws ConfigError if nothing is regularized.
SparsityReport sparsity_regularized(const Model& model);

/// Exact-zero fraction over every trainable parameter.
SparsityReport sparsity_all(const Model& model);

SparsityReport sparsity(const Tensor& w);

/// Sum of |w| over regularized parameters.
double l1_norm(const Model& model);
double l1_norm(const Tensor& w);

/// Number of rows whose true label ranks inside the top k scores.
/// Ties are broken toward lower class indices.
long top_k_hits(const Tensor& logits, const std::vector<int>& labels, long k);

/// top_k_hits as a percent of the batch.
double top_k_accuracy(const Tensor& logits, const std::vector<int>& labels, long k);

/// Running average of iterates, sampled at preset step counts.
/// Gaps are floored at 1e-16 so they stay usable on a log axis.
class ConvergenceTrace {
 public:
  explicit ConvergenceTrace(std::vector<long> sample_steps);

  /// Folds w_t into the running average; call once per step in order.
  void add(const Tensor& w);
  /// True when the current step count is one of the sample steps.
  bool due() const;
  /// Records the suboptimality gap for the current step and moves on.
  void record_gap(double gap);

  const Tensor& wbar() const;
  long t() const { return t_; }
  const std::vector<std::pair<long, double>>& samples() const { return samples_; }

 private:
  std::vector<long> steps_;
  size_t next_ = 0;
  Tensor wbar_;
  long t_ = 0;
  std::vector<std::pair<long, double>> samples_;
};

/// Sample step counts spaced evenly in log10, endpoints included.
std::vector<long> log_spaced_steps(long lo, long hi, int per_decade);

/// Least-squares slope of log10(gap) against log10(t) over samples with
/// t inside [window_lo, window_hi]. Needs at least two points in window.
double fit_loglog_slope(const std::vector<std::pair<long, double>>& samples,
                        long window_lo, long window_hi);

}  // namespace spda
