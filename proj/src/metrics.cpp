#include "spda/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "spda/errors.hpp"

namespace spda {

namespace {

SparsityReport count_zeros(const Model& model, bool regularized_only) {
  SparsityReport rep;
  for (const Param& p : model.params()) {
    if (regularized_only && !p.regularized) continue;
    const Tensor& w = p.var->value;
    for (long i = 0; i < w.size(); ++i)
      if (w.data()[i] == 0.0) ++rep.zeros;
    rep.total += w.size();
  }
  if (rep.total == 0)
    throw ConfigError(regularized_only ? "model has no regularized parameters"
                                       : "model has no parameters");
  return rep;
}

}  // namespace

SparsityReport sparsity_regularized(const Model& model) { return count_zeros(model, true); }

SparsityReport sparsity_all(const Model& model) { return count_zeros(model, false); }

SparsityReport sparsity(const Tensor& w) {
  if (w.size() == 0) throw ConfigError("sparsity of an empty tensor is undefined");
  SparsityReport rep;
  rep.total = w.size();
  for (long i = 0; i < w.size(); ++i)
    if (w.data()[i] == 0.0) ++rep.zeros;
  return rep;
}

double l1_norm(const Model& model) {
  double acc = 0.0;
  for (const Param& p : model.params()) {
    if (!p.regularized) continue;
    const Tensor& w = p.var->value;
    for (long i = 0; i < w.size(); ++i) acc += std::fabs(w.data()[i]);
  }
  return acc;
}

double l1_norm(const Tensor& w) {
  double acc = 0.0;
  for (long i = 0; i < w.size(); ++i) acc += std::fabs(w.data()[i]);
  return acc;
}

long top_k_hits(const Tensor& logits, const std::vector<int>& labels, long k) {
  if (logits.rank() != 2) throw DimensionError("top-k expects logits of shape [B, C]");
  long b = logits.dim(0);
  long c = logits.dim(1);
  if (static_cast<long>(labels.size()) != b)
    throw DimensionError("top-k label count does not match batch");
  if (k < 1 || k > c) throw DimensionError("top-k k must lie in [1, C]");
  long hits = 0;
  for (long i = 0; i < b; ++i) {
    int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= c) throw std::out_of_range("top-k label outside class range");
    const double* row = logits.data() + i * c;
    double sy = row[y];
    long rank = 0;
    for (long j = 0; j < c; ++j) {
      if (row[j] > sy || (row[j] == sy && j < y)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return hits;
}

double top_k_accuracy(const Tensor& logits, const std::vector<int>& labels, long k) {
  long hits = top_k_hits(logits, labels, k);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(logits.dim(0));
}

ConvergenceTrace::ConvergenceTrace(std::vector<long> sample_steps)
    : steps_(std::move(sample_steps)) {
  if (steps_.empty()) throw ConfigError("convergence trace needs sample steps");
  if (!std::is_sorted(steps_.begin(), steps_.end()) || steps_.front() < 1)
    throw ConfigError("sample steps must be sorted and >= 1");
  if (std::adjacent_find(steps_.begin(), steps_.end()) != steps_.end())
    throw ConfigError("sample steps must be distinct");
}

void ConvergenceTrace::add(const Tensor& w) {
  if (t_ == 0) {
    wbar_ = Tensor(w.shape());
  } else if (!wbar_.same_shape(w)) {
    throw DimensionError("iterate shape changed mid-trace");
  }
  ++t_;
  double td = static_cast<double>(t_);
  for (long i = 0; i < w.size(); ++i)
    wbar_[i] = ((td - 1.0) * wbar_[i] + w.data()[i]) / td;
}

bool ConvergenceTrace::due() const {
  return next_ < steps_.size() && t_ == steps_[next_];
}

void ConvergenceTrace::record_gap(double gap) {
  if (!due()) throw StateError("record_gap called when no sample is due");
  samples_.emplace_back(t_, std::max(gap, 1e-16));
  ++next_;
}

const Tensor& ConvergenceTrace::wbar() const {
  if (t_ == 0) throw StateError("trace average requested before any iterate");
  return wbar_;
}

std::vector<long> log_spaced_steps(long lo, long hi, int per_decade) {
  if (lo < 1 || hi < lo) throw ConfigError("log_spaced_steps needs 1 <= lo <= hi");
  if (per_decade < 1) throw ConfigError("per_decade must be >= 1");
  std::vector<long> out;
  double e_lo = std::log10(static_cast<double>(lo));
  double e_hi = std::log10(static_cast<double>(hi));
  long k_lo = static_cast<long>(std::ceil(e_lo * per_decade - 1e-9));
  long k_hi = static_cast<long>(std::floor(e_hi * per_decade + 1e-9));
  out.push_back(lo);
  for (long k = k_lo; k <= k_hi; ++k) {
    long v = std::llround(std::pow(10.0, static_cast<double>(k) / per_decade));
    if (v > lo && v < hi) out.push_back(v);
  }
  if (hi > lo) out.push_back(hi);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double fit_loglog_slope(const std::vector<std::pair<long, double>>& samples,
                        long window_lo, long window_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long m = 0;
  for (const auto& [t, gap] : samples) {
    if (t < window_lo || t > window_hi) continue;
    double x = std::log10(static_cast<double>(t));
    double y = std::log10(gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw ConfigError("slope fit needs at least two samples inside the window");
  double denom = static_cast<double>(m) * sxx - sx * sx;
  if (denom <= 0.0) throw ConfigError("slope fit window has no spread in t");
  return (static_cast<double>(m) * sxy - sx * sy) / denom;
}

}  // namespace spda
