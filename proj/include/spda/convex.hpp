#pragma once

#include <cstdint>
#include <vector>

#include "spda/tensor.hpp"

namespace spda {

enum class ConvexKind { LeastSquares, Logistic };

// An l1-regularized convex problem min_w s(w) + lambda * ||w||_1 over a fixed
// design matrix. For LeastSquares the smooth part is s(w) = (1/2n)||Aw - y||^2;
// for Logistic it is the mean logistic loss with labels y in {-1,+1}.
struct ConvexProblem {
  ConvexKind kind = ConvexKind::LeastSquares;
  long n = 0;
  long d = 0;
  Tensor A;  // [n, d]
  Tensor y;  // [n]
  double lambda = 0.0;
  uint64_t seed = 0;

  // Ground truth from the generator; empty for hand-built problems.
  Tensor w_true;
  std::vector<long> true_support;

  double smooth_loss(const Tensor& w) const;
  void smooth_grad(const Tensor& w, Tensor& out) const;
  // Gradient of the smooth part restricted to the given sample rows.
  void minibatch_grad(const Tensor& w, const std::vector<long>& rows, Tensor& out) const;
  double objective(const Tensor& w) const;
  // Upper bound on the Lipschitz constant of grad s, via power iteration.
  double lipschitz() const;
};

// Gaussian design, sparse +-1 ground truth on a random support of
// ceil(support_fraction * d) coordinates, y = A w_true + noise.
ConvexProblem make_synthetic_lasso(long n, long d, double support_fraction,
                                   double noise_sd, uint64_t seed);

struct OracleSolution {
  Tensor w;
  double phi = 0.0;           // objective at w
  double achieved_tol = 0.0;  // prox-gradient residual norm at exit
  long iterations = 0;
};

// High-accuracy reference minimizer (FISTA with adaptive restart). Throws
// OracleError if the residual tolerance is not reached within max_iters.
OracleSolution convex_oracle(const ConvexProblem& problem, double tol,
                             const Tensor* w_start = nullptr, long max_iters = 500000);

}  // namespace spda
