#include "spda/convex.hpp"

#include <algorithm>
#include <cmath>

#include "spda/errors.hpp"
#include "spda/optim.hpp"
#include "spda/rng.hpp"

namespace spda {

namespace {

void check_w(const ConvexProblem& p, const Tensor& w) {
  if (w.size() != p.d) throw DimensionError("weight vector has wrong length");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double ConvexProblem::smooth_loss(const Tensor& w) const {
  check_w(*this, w);
  const double* a = A.data();
  const double* wv = w.data();
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double* row = a + i * d;
    double dot = 0.0;
    for (long j = 0; j < d; ++j) dot += row[j] * wv[j];
    if (kind == ConvexKind::LeastSquares) {
      double r = dot - y.data()[i];
      acc += 0.5 * r * r;
    } else {
      // log(1 + exp(-y z)) computed stably
      double m = -y.data()[i] * dot;
      acc += (m > 0.0) ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    }
  }
  return acc / static_cast<double>(n);
}

void ConvexProblem::smooth_grad(const Tensor& w, Tensor& out) const {
  check_w(*this, w);
  if (out.size() != d) out = Tensor({d});
  out.zero();
  const double* a = A.data();
  const double* wv = w.data();
  double* g = out.data();
  double inv_n = 1.0 / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const double* row = a + i * d;
    double dot = 0.0;
    for (long j = 0; j < d; ++j) dot += row[j] * wv[j];
    double coef;
    if (kind == ConvexKind::LeastSquares) {
      coef = (dot - y.data()[i]) * inv_n;
    } else {
      coef = -y.data()[i] * sigmoid(-y.data()[i] * dot) * inv_n;
    }
    for (long j = 0; j < d; ++j) g[j] += coef * row[j];
  }
}

void ConvexProblem::minibatch_grad(const Tensor& w, const std::vector<long>& rows,
                                   Tensor& out) const {
  check_w(*this, w);
  if (rows.empty()) throw DimensionError("minibatch must be non-empty");
  if (out.size() != d) out = Tensor({d});
  out.zero();
  const double* a = A.data();
  const double* wv = w.data();
  double* g = out.data();
  double inv_m = 1.0 / static_cast<double>(rows.size());
  for (long i : rows) {
    if (i < 0 || i >= n) throw DimensionError("minibatch row out of range");
    const double* row = a + i * d;
    double dot = 0.0;
    for (long j = 0; j < d; ++j) dot += row[j] * wv[j];
    double coef;
    if (kind == ConvexKind::LeastSquares) {
      coef = (dot - y.data()[i]) * inv_m;
    } else {
      coef = -y.data()[i] * sigmoid(-y.data()[i] * dot) * inv_m;
    }
    for (long j = 0; j < d; ++j) g[j] += coef * row[j];
  }
}

double ConvexProblem::objective(const Tensor& w) const {
  double l1 = 0.0;
  for (long j = 0; j < d; ++j) l1 += std::fabs(w.data()[j]);
  return smooth_loss(w) + lambda * l1;
}

double ConvexProblem::lipschitz() const {
  // Largest eigenvalue of (1/n) A^T A by power iteration with a fixed start,
  // padded slightly so FISTA's 1/L step is always safe.
  Tensor v({d});
  for (long j = 0; j < d; ++j) v[j] = 1.0 + 1e-3 * static_cast<double>(j % 7);
  Tensor av({n});
  Tensor atav({d});
  double eig = 0.0;
  for (int it = 0; it < 50; ++it) {
    double nrm = 0.0;
    for (long j = 0; j < d; ++j) nrm += v[j] * v[j];
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) throw OracleError("power iteration collapsed");
    for (long j = 0; j < d; ++j) v[j] /= nrm;
    const double* a = A.data();
    for (long i = 0; i < n; ++i) {
      const double* row = a + i * d;
      double dot = 0.0;
      for (long j = 0; j < d; ++j) dot += row[j] * v[j];
      av[i] = dot;
    }
    atav.zero();
    for (long i = 0; i < n; ++i) {
      const double* row = a + i * d;
      double c = av[i];
      for (long j = 0; j < d; ++j) atav[j] += c * row[j];
    }
    eig = 0.0;
    for (long j = 0; j < d; ++j) eig += v[j] * atav[j];
    v = atav;
  }
  double scale = (kind == ConvexKind::LeastSquares) ? 1.0 : 0.25;
  double lip = scale * eig / static_cast<double>(n);
  return lip * (1.0 + 1e-6) + 1e-12;
}

ConvexProblem make_synthetic_lasso(long n, long d, double support_fraction,
                                   double noise_sd, uint64_t seed) {
  if (n < 1 || d < 1) throw ConfigError("lasso problem needs n >= 1 and d >= 1");
  if (!(support_fraction > 0.0) || support_fraction > 1.0)
    throw ConfigError("support_fraction must lie in (0, 1]");
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");

  ConvexProblem p;
  p.kind = ConvexKind::LeastSquares;
  p.n = n;
  p.d = d;
  p.seed = seed;
  p.A = Tensor({n, d});
  p.y = Tensor({n});
  p.w_true = Tensor({d});

  Rng rng(seed);
  for (long i = 0; i < n * d; ++i) p.A[i] = rng.normal();

  long k = static_cast<long>(std::ceil(support_fraction * static_cast<double>(d)));
  k = std::min(k, d);
  std::vector<long> idx(static_cast<size_t>(d));
  for (long j = 0; j < d; ++j) idx[static_cast<size_t>(j)] = j;
  rng.shuffle(idx);
  idx.resize(static_cast<size_t>(k));
  std::sort(idx.begin(), idx.end());
  p.true_support = idx;
  for (long j : idx) p.w_true[j] = (rng.uniform() < 0.5) ? -1.0 : 1.0;

  for (long i = 0; i < n; ++i) {
    const double* row = p.A.data() + i * d;
    double dot = 0.0;
    for (long j = 0; j < d; ++j) dot += row[j] * p.w_true[j];
    p.y[i] = dot + (noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0);
  }
  return p;
}

OracleSolution convex_oracle(const ConvexProblem& problem, double tol,
                             const Tensor* w_start, long max_iters) {
  if (!(tol > 0.0)) throw ConfigError("oracle tolerance must be positive");
  long d = problem.d;
  double L = problem.lipschitz();
  double step = 1.0 / L;
  double delta = problem.lambda * step;

  Tensor x = (w_start != nullptr) ? *w_start : Tensor({d});
  if (x.size() != d) throw DimensionError("oracle start has wrong length");
  Tensor z = x;       // extrapolated point
  Tensor x_prev = x;  // previous iterate
  Tensor grad({d});
  double theta = 1.0;

  auto residual = [&](const Tensor& at) {
    // Norm of the prox-gradient mapping G = L (at - prox(at - grad/L)).
    problem.smooth_grad(at, grad);
    double acc = 0.0;
    for (long j = 0; j < d; ++j) {
      double stepped = soft_threshold(at[j] - step * grad[j], delta);
      double g = L * (at[j] - stepped);
      acc += g * g;
    }
    return std::sqrt(acc);
  };

  OracleSolution sol;
  for (long it = 1; it <= max_iters; ++it) {
    problem.smooth_grad(z, grad);
    Tensor x_new({d});
    for (long j = 0; j < d; ++j)
      x_new[j] = soft_threshold(z[j] - step * grad[j], delta);

    // Adaptive restart: drop momentum whenever it points uphill.
    double corr = 0.0;
    for (long j = 0; j < d; ++j) corr += (z[j] - x_new[j]) * (x_new[j] - x[j]);
    if (corr > 0.0) {
      theta = 1.0;
      z = x;
      problem.smooth_grad(z, grad);
      for (long j = 0; j < d; ++j)
        x_new[j] = soft_threshold(z[j] - step * grad[j], delta);
    }

    double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    double beta = (theta - 1.0) / theta_new;
    for (long j = 0; j < d; ++j) z[j] = x_new[j] + beta * (x_new[j] - x[j]);
    theta = theta_new;
    x_prev = x;
    x = x_new;

    if (it % 10 == 0 || it == max_iters) {
      double res = residual(x);
      if (res <= tol) {
        sol.w = x;
        sol.phi = problem.objective(x);
        sol.achieved_tol = res;
        sol.iterations = it;
        return sol;
      }
    }
  }
  throw OracleError("oracle did not reach tolerance within iteration cap");
}

}  // namespace spda
