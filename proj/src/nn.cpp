#include "spda/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "spda/errors.hpp"

namespace spda {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a->value.same_shape(b->value))
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->value.shape()) +
                         " vs " + shape_str(b->value.shape()));
}

// Y[i,j] += dot(X[i,:], W[j,:])
void gemm_nt_acc(const double* X, const double* W, double* Y, long m, long p, long n) {
  for (long i = 0; i < m; ++i) {
    const double* xi = X + i * p;
    for (long j = 0; j < n; ++j) {
      const double* wj = W + j * p;
      double acc = 0.0;
      for (long q = 0; q < p; ++q) acc += xi[q] * wj[q];
      Y[i * n + j] += acc;
    }
  }
}

// C[i,:] += sum_p A[i,p] * B[p,:]
void gemm_nn_acc(const double* A, const double* B, double* C, long m, long k, long n) {
  for (long i = 0; i < m; ++i) {
    double* ci = C + i * n;
    const double* ai = A + i * k;
    for (long p = 0; p < k; ++p) {
      double a = ai[p];
      const double* bp = B + p * n;
      for (long j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

// C[j,:] += sum_i A[i,j] * X[i,:]   (C = A^T X)
void gemm_tn_acc(const double* A, const double* X, double* C, long m, long k, long n) {
  for (long i = 0; i < m; ++i) {
    const double* xi = X + i * n;
    const double* ai = A + i * k;
    for (long j = 0; j < k; ++j) {
      double a = ai[j];
      double* cj = C + j * n;
      for (long q = 0; q < n; ++q) cj[q] += a * xi[q];
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a->value;
  for (long i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return make_node(std::move(out), {a, b},
                   [](Node& self) {
                     for (int s = 0; s < 2; ++s) {
                       const Var& in = self.inputs[static_cast<size_t>(s)];
                       if (!in->requires_grad) continue;
                       Tensor& g = grad_buffer(in);
                       for (long i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                     }
                   },
                   "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a->value;
  for (long i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), {a, b},
                   [](Node& self) {
                     if (self.inputs[0]->requires_grad) {
                       Tensor& g = grad_buffer(self.inputs[0]);
                       for (long i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                     }
                     if (self.inputs[1]->requires_grad) {
                       Tensor& g = grad_buffer(self.inputs[1]);
                       for (long i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                     }
                   },
                   "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a->value;
  for (long i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_node(std::move(out), {a, b},
                   [](Node& self) {
                     const Tensor& av = self.inputs[0]->value;
                     const Tensor& bv = self.inputs[1]->value;
                     if (self.inputs[0]->requires_grad) {
                       Tensor& g = grad_buffer(self.inputs[0]);
                       for (long i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
                     }
                     if (self.inputs[1]->requires_grad) {
                       Tensor& g = grad_buffer(self.inputs[1]);
                       for (long i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
                     }
                   },
                   "mul");
}

Var scale(const Var& a, double c) {
  Tensor out = a->value;
  for (long i = 0; i < out.size(); ++i) out[i] *= c;
  return make_node(std::move(out), {a},
                   [c](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     for (long i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
                   },
                   "scale");
}

Var sum(const Var& a) {
  double acc = 0.0;
  for (long i = 0; i < a->value.size(); ++i) acc += a->value[i];
  return make_node(Tensor::scalar(acc), {a},
                   [](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     double up = self.grad[0];
                     for (long i = 0; i < g.size(); ++i) g[i] += up;
                   },
                   "sum");
}

Var mean(const Var& a) {
  double acc = 0.0;
  for (long i = 0; i < a->value.size(); ++i) acc += a->value[i];
  double inv = 1.0 / static_cast<double>(a->value.size());
  return make_node(Tensor::scalar(acc * inv), {a},
                   [inv](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     double up = self.grad[0] * inv;
                     for (long i = 0; i < g.size(); ++i) g[i] += up;
                   },
                   "mean");
}

Var relu(const Var& a) {
  Tensor out = a->value;
  for (long i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return make_node(std::move(out), {a},
                   [](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     const Tensor& x = self.inputs[0]->value;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     for (long i = 0; i < g.size(); ++i)
                       if (x[i] > 0.0) g[i] += self.grad[i];
                   },
                   "relu");
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.dim(1) != b->value.dim(0))
    throw DimensionError("matmul: incompatible shapes " + shape_str(a->value.shape()) + " x " +
                         shape_str(b->value.shape()));
  long m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(1);
  Tensor out({m, n});
  gemm_nn_acc(a->value.data(), b->value.data(), out.data(), m, k, n);
  return make_node(std::move(out), {a, b},
                   [m, k, n](Node& self) {
                     const Tensor& av = self.inputs[0]->value;
                     const Tensor& bv = self.inputs[1]->value;
                     if (self.inputs[0]->requires_grad)
                       gemm_nt_acc(self.grad.data(), bv.data(),
                                   grad_buffer(self.inputs[0]).data(), m, n, k);
                     if (self.inputs[1]->requires_grad)
                       gemm_tn_acc(av.data(), self.grad.data(),
                                   grad_buffer(self.inputs[1]).data(), m, k, n);
                   },
                   "matmul");
}

Var flatten(const Var& x) {
  if (x->value.rank() < 2)
    throw DimensionError("flatten needs rank >= 2, got " + shape_str(x->value.shape()));
  long batch = x->value.dim(0);
  Tensor out({batch, x->value.size() / batch}, x->value.raw());
  return make_node(std::move(out), {x},
                   [](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     for (long i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                   },
                   "flatten");
}

Var linear(const Var& x, const Var& W, const Var& b) {
  if (x->value.rank() != 2 || W->value.rank() != 2 || b->value.rank() != 1 ||
      x->value.dim(1) != W->value.dim(1) || b->value.dim(0) != W->value.dim(0))
    throw DimensionError("linear: shapes x" + shape_str(x->value.shape()) + " W" +
                         shape_str(W->value.shape()) + " b" + shape_str(b->value.shape()));
  long batch = x->value.dim(0), in = x->value.dim(1), out_dim = W->value.dim(0);
  Tensor out({batch, out_dim});
  for (long i = 0; i < batch; ++i)
    std::memcpy(out.data() + i * out_dim, b->value.data(),
                static_cast<size_t>(out_dim) * sizeof(double));
  gemm_nt_acc(x->value.data(), W->value.data(), out.data(), batch, in, out_dim);
  return make_node(std::move(out), {x, W, b},
                   [batch, in, out_dim](Node& self) {
                     const Tensor& xv = self.inputs[0]->value;
                     const Tensor& wv = self.inputs[1]->value;
                     const double* dy = self.grad.data();
                     if (self.inputs[0]->requires_grad)
                       gemm_nn_acc(dy, wv.data(), grad_buffer(self.inputs[0]).data(), batch,
                                   out_dim, in);
                     if (self.inputs[1]->requires_grad)
                       gemm_tn_acc(dy, xv.data(), grad_buffer(self.inputs[1]).data(), batch,
                                   out_dim, in);
                     if (self.inputs[2]->requires_grad) {
                       Tensor& db = grad_buffer(self.inputs[2]);
                       for (long i = 0; i < batch; ++i)
                         for (long j = 0; j < out_dim; ++j) db[j] += dy[i * out_dim + j];
                     }
                   },
                   "linear");
}

namespace {

// Copies one image [C,H,W] into a zero-padded [C,H+2p,W+2p] scratch.
void pad_image(const double* x, double* xp, long C, long H, long W, long p) {
  long Hp = H + 2 * p, Wp = W + 2 * p;
  std::memset(xp, 0, static_cast<size_t>(C * Hp * Wp) * sizeof(double));
  for (long c = 0; c < C; ++c)
    for (long h = 0; h < H; ++h)
      std::memcpy(xp + (c * Hp + h + p) * Wp + p, x + (c * H + h) * W,
                  static_cast<size_t>(W) * sizeof(double));
}

struct ConvDims {
  long B, C, H, W, F, k, s, p, Hp, Wp, OH, OW;
};

}  // namespace

Var conv2d(const Var& x, const Var& K, const Var& b, long stride, long padding) {
  const Tensor& xv = x->value;
  const Tensor& kv = K->value;
  if (xv.rank() != 4 || kv.rank() != 4 || b->value.rank() != 1)
    throw DimensionError("conv2d: need x rank 4, K rank 4, b rank 1");
  if (kv.dim(2) != kv.dim(3)) throw DimensionError("conv2d: kernel must be square");
  if (kv.dim(1) != xv.dim(1))
    throw DimensionError("conv2d: channel mismatch, x has " + std::to_string(xv.dim(1)) +
                         ", K expects " + std::to_string(kv.dim(1)));
  if (b->value.dim(0) != kv.dim(0)) throw DimensionError("conv2d: bias size vs filter count");
  if (stride < 1 || padding < 0) throw DimensionError("conv2d: bad stride/padding");

  ConvDims d;
  d.B = xv.dim(0), d.C = xv.dim(1), d.H = xv.dim(2), d.W = xv.dim(3);
  d.F = kv.dim(0), d.k = kv.dim(2), d.s = stride, d.p = padding;
  d.Hp = d.H + 2 * d.p, d.Wp = d.W + 2 * d.p;
  if (d.k > d.Hp || d.k > d.Wp)
    throw DimensionError("conv2d: kernel " + std::to_string(d.k) + " larger than padded input " +
                         std::to_string(d.Hp) + "x" + std::to_string(d.Wp));
  d.OH = (d.Hp - d.k) / d.s + 1;
  d.OW = (d.Wp - d.k) / d.s + 1;

  Tensor out({d.B, d.F, d.OH, d.OW});
  Tensor scratch = d.p > 0 ? Tensor({d.C, d.Hp, d.Wp}) : Tensor();
  for (long bi = 0; bi < d.B; ++bi) {
    const double* xb = xv.data() + bi * d.C * d.H * d.W;
    if (d.p > 0) {
      pad_image(xb, scratch.data(), d.C, d.H, d.W, d.p);
      xb = scratch.data();
    }
    for (long f = 0; f < d.F; ++f) {
      double* yf = out.data() + (bi * d.F + f) * d.OH * d.OW;
      double bias = b->value[f];
      for (long i = 0; i < d.OH * d.OW; ++i) yf[i] = bias;
      for (long c = 0; c < d.C; ++c)
        for (long kh = 0; kh < d.k; ++kh)
          for (long kw = 0; kw < d.k; ++kw) {
            double wv = kv[((f * d.C + c) * d.k + kh) * d.k + kw];
            for (long oh = 0; oh < d.OH; ++oh) {
              const double* xr = xb + (c * d.Hp + oh * d.s + kh) * d.Wp + kw;
              double* yr = yf + oh * d.OW;
              if (d.s == 1)
                for (long ow = 0; ow < d.OW; ++ow) yr[ow] += wv * xr[ow];
              else
                for (long ow = 0; ow < d.OW; ++ow) yr[ow] += wv * xr[ow * d.s];
            }
          }
    }
  }

  return make_node(
      std::move(out), {x, K, b},
      [d](Node& self) {
        const Tensor& xv = self.inputs[0]->value;
        const Tensor& kv = self.inputs[1]->value;
        bool need_dx = self.inputs[0]->requires_grad;
        bool need_dk = self.inputs[1]->requires_grad;
        bool need_db = self.inputs[2]->requires_grad;
        Tensor* dx = need_dx ? &grad_buffer(self.inputs[0]) : nullptr;
        Tensor* dk = need_dk ? &grad_buffer(self.inputs[1]) : nullptr;
        Tensor* db = need_db ? &grad_buffer(self.inputs[2]) : nullptr;
        Tensor scratch = d.p > 0 ? Tensor({d.C, d.Hp, d.Wp}) : Tensor();
        Tensor dscratch = (need_dx && d.p > 0) ? Tensor({d.C, d.Hp, d.Wp}) : Tensor();

        for (long bi = 0; bi < d.B; ++bi) {
          const double* xb = xv.data() + bi * d.C * d.H * d.W;
          if (d.p > 0 && need_dk) {
            pad_image(xb, scratch.data(), d.C, d.H, d.W, d.p);
            xb = scratch.data();
          }
          const double* dyb = self.grad.data() + bi * d.F * d.OH * d.OW;

          if (need_db)
            for (long f = 0; f < d.F; ++f) {
              const double* dyf = dyb + f * d.OH * d.OW;
              double acc = 0.0;
              for (long i = 0; i < d.OH * d.OW; ++i) acc += dyf[i];
              (*db)[f] += acc;
            }

          if (need_dk)
            for (long f = 0; f < d.F; ++f) {
              const double* dyf = dyb + f * d.OH * d.OW;
              for (long c = 0; c < d.C; ++c)
                for (long kh = 0; kh < d.k; ++kh)
                  for (long kw = 0; kw < d.k; ++kw) {
                    double acc = 0.0;
                    for (long oh = 0; oh < d.OH; ++oh) {
                      const double* xr = xb + (c * d.Hp + oh * d.s + kh) * d.Wp + kw;
                      const double* dyr = dyf + oh * d.OW;
                      if (d.s == 1)
                        for (long ow = 0; ow < d.OW; ++ow) acc += dyr[ow] * xr[ow];
                      else
                        for (long ow = 0; ow < d.OW; ++ow) acc += dyr[ow] * xr[ow * d.s];
                    }
                    (*dk)[((f * d.C + c) * d.k + kh) * d.k + kw] += acc;
                  }
            }

          if (need_dx) {
            double* dxb;
            if (d.p > 0) {
              dscratch.zero();
              dxb = dscratch.data();
            } else {
              dxb = dx->data() + bi * d.C * d.H * d.W;
            }
            for (long f = 0; f < d.F; ++f) {
              const double* dyf = dyb + f * d.OH * d.OW;
              for (long c = 0; c < d.C; ++c)
                for (long kh = 0; kh < d.k; ++kh)
                  for (long kw = 0; kw < d.k; ++kw) {
                    double wv = kv[((f * d.C + c) * d.k + kh) * d.k + kw];
                    for (long oh = 0; oh < d.OH; ++oh) {
                      double* dxr = dxb + (c * d.Hp + oh * d.s + kh) * d.Wp + kw;
                      const double* dyr = dyf + oh * d.OW;
                      if (d.s == 1)
                        for (long ow = 0; ow < d.OW; ++ow) dxr[ow] += wv * dyr[ow];
                      else
                        for (long ow = 0; ow < d.OW; ++ow) dxr[ow * d.s] += wv * dyr[ow];
                    }
                  }
            }
            if (d.p > 0) {
              double* dst = dx->data() + bi * d.C * d.H * d.W;
              for (long c = 0; c < d.C; ++c)
                for (long h = 0; h < d.H; ++h) {
                  const double* src = dscratch.data() + (c * d.Hp + h + d.p) * d.Wp + d.p;
                  double* row = dst + (c * d.H + h) * d.W;
                  for (long w = 0; w < d.W; ++w) row[w] += src[w];
                }
            }
          }
        }
      },
      "conv2d");
}

Var maxpool2x2(const Var& x) {
  const Tensor& xv = x->value;
  if (xv.rank() != 4) throw DimensionError("maxpool2x2 needs rank 4");
  long B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  long OH = H / 2, OW = W / 2;
  if (OH == 0 || OW == 0) throw DimensionError("maxpool2x2: spatial dims below 2");
  Tensor out({B, C, OH, OW});
  std::vector<long> argmax(static_cast<size_t>(out.size()));
  long o = 0;
  for (long b = 0; b < B; ++b)
    for (long c = 0; c < C; ++c) {
      const double* xc = xv.data() + (b * C + c) * H * W;
      long base = (b * C + c) * H * W;
      for (long oh = 0; oh < OH; ++oh)
        for (long ow = 0; ow < OW; ++ow, ++o) {
          long i0 = (2 * oh) * W + 2 * ow;
          double best = xc[i0];
          long arg = i0;
          const long cand[3] = {i0 + 1, i0 + W, i0 + W + 1};
          for (long idx : cand)
            if (xc[idx] > best) {
              best = xc[idx];
              arg = idx;
            }
          out[o] = best;
          argmax[static_cast<size_t>(o)] = base + arg;
        }
    }
  return make_node(std::move(out), {x},
                   [argmax = std::move(argmax)](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     for (long i = 0; i < self.grad.size(); ++i)
                       g[argmax[static_cast<size_t>(i)]] += self.grad[i];
                   },
                   "maxpool2x2");
}

Var batchnorm2d(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                Tensor& running_var, bool training, double momentum, double eps) {
  const Tensor& xv = x->value;
  if (xv.rank() != 4) throw DimensionError("batchnorm2d needs rank 4");
  long B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  if (gamma->value.size() != C || beta->value.size() != C || running_mean.size() != C ||
      running_var.size() != C)
    throw DimensionError("batchnorm2d: channel parameter size mismatch");
  long m = B * H * W;
  long hw = H * W;

  std::vector<double> mu(static_cast<size_t>(C)), invstd(static_cast<size_t>(C));
  if (training) {
    for (long c = 0; c < C; ++c) {
      double s = 0.0;
      for (long b = 0; b < B; ++b) {
        const double* xc = xv.data() + (b * C + c) * hw;
        for (long i = 0; i < hw; ++i) s += xc[i];
      }
      double mean_c = s / static_cast<double>(m);
      double v = 0.0;
      for (long b = 0; b < B; ++b) {
        const double* xc = xv.data() + (b * C + c) * hw;
        for (long i = 0; i < hw; ++i) {
          double dlt = xc[i] - mean_c;
          v += dlt * dlt;
        }
      }
      double var_c = v / static_cast<double>(m);
      mu[static_cast<size_t>(c)] = mean_c;
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(var_c + eps);
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean_c;
      double var_unbiased = m > 1 ? var_c * static_cast<double>(m) / static_cast<double>(m - 1)
                                  : var_c;
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var_unbiased;
    }
  } else {
    for (long c = 0; c < C; ++c) {
      mu[static_cast<size_t>(c)] = running_mean[c];
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(running_var[c] + eps);
    }
  }

  Tensor xhat(xv.shape());
  Tensor out(xv.shape());
  for (long b = 0; b < B; ++b)
    for (long c = 0; c < C; ++c) {
      const double* xc = xv.data() + (b * C + c) * hw;
      double* hc = xhat.data() + (b * C + c) * hw;
      double* oc = out.data() + (b * C + c) * hw;
      double g = gamma->value[c], bt = beta->value[c];
      double mc = mu[static_cast<size_t>(c)], is = invstd[static_cast<size_t>(c)];
      for (long i = 0; i < hw; ++i) {
        hc[i] = (xc[i] - mc) * is;
        oc[i] = g * hc[i] + bt;
      }
    }

  return make_node(
      std::move(out), {x, gamma, beta},
      [B, C, hw, m, training, xhat = std::move(xhat), invstd = std::move(invstd)](Node& self) {
        const Tensor& gv = self.inputs[1]->value;
        bool need_dx = self.inputs[0]->requires_grad;
        bool need_dg = self.inputs[1]->requires_grad;
        bool need_db = self.inputs[2]->requires_grad;
        // Per-channel reductions of dy and dy*xhat feed every input's gradient.
        std::vector<double> sum_dy(static_cast<size_t>(C), 0.0);
        std::vector<double> sum_dyx(static_cast<size_t>(C), 0.0);
        for (long b = 0; b < B; ++b)
          for (long c = 0; c < C; ++c) {
            const double* dyc = self.grad.data() + (b * C + c) * hw;
            const double* hc = xhat.data() + (b * C + c) * hw;
            double s1 = 0.0, s2 = 0.0;
            for (long i = 0; i < hw; ++i) {
              s1 += dyc[i];
              s2 += dyc[i] * hc[i];
            }
            sum_dy[static_cast<size_t>(c)] += s1;
            sum_dyx[static_cast<size_t>(c)] += s2;
          }
        if (need_dg) {
          Tensor& dg = grad_buffer(self.inputs[1]);
          for (long c = 0; c < C; ++c) dg[c] += sum_dyx[static_cast<size_t>(c)];
        }
        if (need_db) {
          Tensor& db = grad_buffer(self.inputs[2]);
          for (long c = 0; c < C; ++c) db[c] += sum_dy[static_cast<size_t>(c)];
        }
        if (need_dx) {
          Tensor& dx = grad_buffer(self.inputs[0]);
          double invm = 1.0 / static_cast<double>(m);
          for (long b = 0; b < B; ++b)
            for (long c = 0; c < C; ++c) {
              const double* dyc = self.grad.data() + (b * C + c) * hw;
              const double* hc = xhat.data() + (b * C + c) * hw;
              double* dxc = dx.data() + (b * C + c) * hw;
              double gis = gv[c] * invstd[static_cast<size_t>(c)];
              if (training) {
                double mdy = sum_dy[static_cast<size_t>(c)] * invm;
                double mdyx = sum_dyx[static_cast<size_t>(c)] * invm;
                for (long i = 0; i < hw; ++i)
                  dxc[i] += gis * (dyc[i] - mdy - hc[i] * mdyx);
              } else {
                for (long i = 0; i < hw; ++i) dxc[i] += gis * dyc[i];
              }
            }
        }
      },
      "batchnorm2d");
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels) {
  const Tensor& z = logits->value;
  if (z.rank() != 2) throw DimensionError("softmax_cross_entropy needs rank-2 logits");
  long B = z.dim(0), C = z.dim(1);
  if (static_cast<long>(labels.size()) != B)
    throw DimensionError("softmax_cross_entropy: batch " + std::to_string(B) + " vs " +
                         std::to_string(labels.size()) + " labels");
  for (int y : labels)
    if (y < 0 || y >= C)
      throw std::out_of_range("label " + std::to_string(y) + " outside [0, " +
                              std::to_string(C) + ")");

  Tensor probs({B, C});
  double loss = 0.0;
  for (long i = 0; i < B; ++i) {
    const double* zi = z.data() + i * C;
    double* pi = probs.data() + i * C;
    double mx = zi[0];
    for (long j = 1; j < C; ++j)
      if (zi[j] > mx) mx = zi[j];
    double denom = 0.0;
    for (long j = 0; j < C; ++j) {
      pi[j] = std::exp(zi[j] - mx);
      denom += pi[j];
    }
    for (long j = 0; j < C; ++j) pi[j] /= denom;
    loss += std::log(denom) - (zi[labels[static_cast<size_t>(i)]] - mx);
  }
  loss /= static_cast<double>(B);

  return make_node(Tensor::scalar(loss), {logits},
                   [B, C, labels, probs = std::move(probs)](Node& self) {
                     if (!self.inputs[0]->requires_grad) return;
                     Tensor& g = grad_buffer(self.inputs[0]);
                     double up = self.grad[0] / static_cast<double>(B);
                     for (long i = 0; i < B; ++i) {
                       const double* pi = probs.data() + i * C;
                       double* gi = g.data() + i * C;
                       long y = labels[static_cast<size_t>(i)];
                       for (long j = 0; j < C; ++j)
                         gi[j] += up * (pi[j] - (j == y ? 1.0 : 0.0));
                     }
                   },
                   "softmax_cross_entropy");
}

double grad_check(const std::function<Var(const std::vector<Var>&)>& fn,
                  const std::vector<Tensor>& point, double eps) {
  std::vector<Var> vars;
  vars.reserve(point.size());
  for (const Tensor& p : point) vars.push_back(parameter(p));
  Var root = fn(vars);
  backward(root);
  std::vector<Tensor> analytic;
  analytic.reserve(vars.size());
  for (const Var& v : vars) analytic.push_back(grad_buffer(v));

  auto eval_at = [&](size_t which, long coord, double delta) {
    std::vector<Var> vs;
    vs.reserve(point.size());
    for (size_t q = 0; q < point.size(); ++q) {
      Tensor t = point[q];
      if (q == which) t[coord] += delta;
      vs.push_back(constant(std::move(t)));
    }
    return fn(vs)->value[0];
  };

  double worst = 0.0;
  for (size_t q = 0; q < point.size(); ++q)
    for (long j = 0; j < point[q].size(); ++j) {
      double fp = eval_at(q, j, eps);
      double fm = eval_at(q, j, -eps);
      double central = (fp - fm) / (2.0 * eps);
      double err = std::abs(analytic[q][j] - central) / (std::abs(central) + 1e-8);
      if (err > worst) worst = err;
    }
  return worst;
}

}  // namespace spda
