#pragma once

#include <functional>
#include <vector>

#include "spda/autodiff.hpp"

namespace spda {

// Elementwise / reduction ops. Same-shape binary ops throw DimensionError on
// mismatch. All reductions run in fixed left-to-right order.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var sum(const Var& a);
Var mean(const Var& a);
Var relu(const Var& a);

/// [m,k] x [k,n] -> [m,n]
Var matmul(const Var& a, const Var& b);

/// [batch, ...] -> [batch, rest]
Var flatten(const Var& x);

/// y = x W^T + b with x:[batch,in], W:[out,in], b:[out].
Var linear(const Var& x, const Var& W, const Var& b);

/// Cross-correlation, x:[batch,c,h,w], K:[f,c,k,k], b:[f].
/// Output spatial dims floor((h+2p-k)/stride)+1.
Var conv2d(const Var& x, const Var& K, const Var& b, long stride = 1,
           long padding = 0);

/// 2x2 max pooling, stride 2; odd trailing row/column dropped. First maximum
/// in scan order wins, so gradient routing is deterministic.
Var maxpool2x2(const Var& x);

/// Per-channel batch normalization over [batch,c,h,w]. Training mode
/// normalizes by batch statistics and folds them into the running buffers;
/// eval mode normalizes by the running buffers.
Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta,
                Tensor& running_mean, Tensor& running_var, bool training,
                double momentum = 0.1, double eps = 1e-5);

/// Mean over the batch of -log softmax(logits)[label], max-stabilized.
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels);

/// Max over all coordinates of |analytic - central difference| /
/// (|central difference| + 1e-8) for scalar-valued fn at the given point.
/// fn must be side-effect free: it is re-evaluated 2 x numel times.
double grad_check(const std::function<Var(const std::vector<Var>&)>& fn,
                  const std::vector<Tensor>& point, double eps = 1e-4);

}  // namespace spda
