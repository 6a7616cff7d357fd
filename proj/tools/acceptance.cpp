// Acceptance suite: end-to-end checks of the behaviors this library promises,
// run as one sequential binary so results print as a scoreboard. Each check
// owns its constants; they were tuned once against oracle runs and are frozen
// here (see the per-check comments). Run with no arguments for the full
// suite, or pass check numbers to run a subset:
//
//   spda_acceptance --data data/mnist --out /tmp/acc 3 4 8
//
// Exits 0 only if every selected check passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spda/autodiff.hpp"
#include "spda/checkpoint.hpp"
#include "spda/config.hpp"
#include "spda/convex.hpp"
#include "spda/data.hpp"
#include "spda/errors.hpp"
#include "spda/harness.hpp"
#include "spda/metrics.hpp"
#include "spda/model.hpp"
#include "spda/nn.hpp"
#include "spda/optim.hpp"
#include "spda/rng.hpp"
#include "spda/tensor.hpp"

namespace fs = std::filesystem;
using namespace spda;

namespace {

std::string g_data_dir = "data/mnist";
std::string g_out_dir = "acceptance_runs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path out_dir(const std::string& leaf) {
  fs::path p = fs::path(g_out_dir) / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Tensor random_tensor(const std::vector<long>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: every differentiable op agrees with central
// differences at 10 random points, relative error <= 1e-4.

Outcome check_gradients() {
  const double kTol = 1e-4;
  const int kPoints = 10;
  double worst = 0.0;
  std::string worst_op;
  auto track = [&](const std::string& op, double err) {
    if (err > worst) {
      worst = err;
      worst_op = op;
    }
  };

  Rng rng(2024);
  for (int p = 0; p < kPoints; ++p) {
    // Same-shape binary ops and unary reductions on a [3,4] block. Points are
    // kept away from relu's kink by construction below.
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3, 4}, rng);
    track("add", grad_check([](const std::vector<Var>& v) { return sum(add(v[0], v[1])); }, {a, b}));
    track("sub", grad_check([](const std::vector<Var>& v) { return sum(sub(v[0], v[1])); }, {a, b}));
    track("mul", grad_check([](const std::vector<Var>& v) { return sum(mul(v[0], v[1])); }, {a, b}));
    track("scale", grad_check([](const std::vector<Var>& v) { return sum(scale(v[0], -1.7)); }, {a}));
    track("mean", grad_check([](const std::vector<Var>& v) { return mean(mul(v[0], v[0])); }, {a}));

    Tensor r = random_tensor({3, 4}, rng);
    for (long i = 0; i < r.size(); ++i)
      if (std::abs(r[i]) < 5e-3) r[i] = r[i] < 0 ? -0.1 : 0.1;
    track("relu", grad_check([](const std::vector<Var>& v) { return sum(relu(v[0])); }, {r}));

    Tensor ma = random_tensor({3, 5}, rng);
    Tensor mb = random_tensor({5, 2}, rng);
    track("matmul",
          grad_check([](const std::vector<Var>& v) { return sum(matmul(v[0], v[1])); }, {ma, mb}));

    Tensor x = random_tensor({2, 6}, rng);
    Tensor W = random_tensor({3, 6}, rng);
    Tensor bias = random_tensor({3}, rng);
    track("linear",
          grad_check([](const std::vector<Var>& v) { return sum(linear(v[0], v[1], v[2])); },
                     {x, W, bias}));
    track("flatten", grad_check(
                         [](const std::vector<Var>& v) {
                           return sum(mul(flatten(v[0]), flatten(v[0])));
                         },
                         {random_tensor({2, 3, 2, 2}, rng)}));

    Tensor img = random_tensor({2, 2, 6, 6}, rng);
    Tensor K = random_tensor({3, 2, 3, 3}, rng);
    Tensor kb = random_tensor({3}, rng);
    track("conv2d",
          grad_check([](const std::vector<Var>& v) { return sum(conv2d(v[0], v[1], v[2])); },
                     {img, K, kb}));
    track("conv2d.strided",
          grad_check(
              [](const std::vector<Var>& v) { return sum(conv2d(v[0], v[1], v[2], 2, 1)); },
              {img, K, kb}));

    // Maxpool picks a unique argmax per window when entries are well
    // separated; jitter breaks near-ties so the finite difference is clean.
    Tensor pool = random_tensor({2, 2, 4, 4}, rng, -4.0, 4.0);
    for (long i = 0; i < pool.size(); ++i) pool[i] += 1e-3 * static_cast<double>(i % 17);
    track("maxpool2x2",
          grad_check([](const std::vector<Var>& v) { return sum(maxpool2x2(v[0])); }, {pool}));

    Tensor bn_x = random_tensor({4, 3, 2, 2}, rng);
    Tensor gamma = random_tensor({3}, rng, 0.5, 1.5);
    Tensor beta = random_tensor({3}, rng, -0.5, 0.5);
    // sum(bn(x)) is constant in x (normalized values cancel per channel), so
    // a quadratic scalarizer is required for a meaningful derivative.
    track("batchnorm2d", grad_check(
                             [](const std::vector<Var>& v) {
                               Tensor rm({3}), rv({3});
                               for (long i = 0; i < 3; ++i) rv[i] = 1.0;
                               Var y = batchnorm2d(v[0], v[1], v[2], rm, rv, true);
                               return mean(mul(y, y));
                             },
                             {bn_x, gamma, beta}));

    Tensor logits = random_tensor({4, 5}, rng, -2.0, 2.0);
    std::vector<int> labels = {0, 3, 1, 4};
    track("softmax_ce", grad_check(
                            [&labels](const std::vector<Var>& v) {
                              return softmax_cross_entropy(v[0], labels);
                            },
                            {logits}));
  }

  std::string detail = "worst rel err " + fmt(worst, 8) + " (" + worst_op + "), tol 1e-4";
  return worst <= kTol ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// 2. The averaged and perturbed dual-averaging forms are the same method:
// iterates agree to 1e-8 * (1 + |w|_inf) over 1000 steps on a seeded 50-dim
// quadratic, and the perturbation coefficient obeys eps_t < 1/(2t-1) at
// every t in [2, 1e6].

Outcome check_dual_averaging_forms() {
  struct Quadratic {
    Tensor q, c;
  };
  long d = 50;
  Rng rng(123);
  Quadratic prob{random_tensor({d}, rng, 0.5, 2.0), random_tensor({d}, rng)};

  Rng start(9);
  Tensor wa = random_tensor({d}, start);
  Tensor wp = wa;
  Tensor ga({d}), gp({d});
  SdaAveragedOptimizer oa(0.8);
  SdaPerturbedOptimizer op(0.8);
  double worst = 0.0;
  for (int t = 1; t <= 1000; ++t) {
    for (long i = 0; i < d; ++i) {
      ga[i] = prob.q[i] * wa[i] - prob.c[i];
      gp[i] = prob.q[i] * wp[i] - prob.c[i];
    }
    oa.step({{&wa, &ga, true}});
    op.step({{&wp, &gp, true}});
    double winf = 0.0, diff = 0.0;
    for (long i = 0; i < d; ++i) {
      winf = std::max(winf, std::abs(wa[i]));
      diff = std::max(diff, std::abs(wa[i] - wp[i]));
    }
    worst = std::max(worst, diff / (1.0 + winf));
  }
  if (worst > 1e-8) return fail("iterate divergence " + fmt(worst, 12) + " > 1e-8");

  long violations = 0;
  for (long t = 2; t <= 1000000; ++t)
    if (!(sda_epsilon(t) < 1.0 / static_cast<double>(2 * t - 1))) ++violations;
  if (violations > 0)
    return fail("eps_t bound violated at " + std::to_string(violations) + " steps");
  return pass("max iterate diff " + fmt(worst, 12) + ", eps bound clean over [2, 1e6]");
}

// ---------------------------------------------------------------------------
// Shared synthetic lasso instance for checks 3 and 4. Constants were frozen
// after an oracle-backed sweep: observation noise 0.15 keeps the stochastic
// gradients noisy enough that the constant-vs-decaying threshold contrast is
// visible, while the tuned alphas keep both methods stable.

Config lasso_config(const std::string& leaf) {
  Config cfg;
  cfg.dataset.kind = "lasso";
  cfg.dataset.n = 1000;
  cfg.dataset.d = 200;
  cfg.dataset.support_fraction = 0.1;
  cfg.dataset.noise_sd = 0.15;
  cfg.train.seed = 1;
  cfg.study.batch_size = 10;
  cfg.study.steps = 100000;
  cfg.study.window_lo = 100;
  cfg.study.window_hi = 100000;
  cfg.study.oracle_tol = 1e-10;
  cfg.output_dir = out_dir(leaf).string();
  return cfg;
}

// 3. Convergence rate on the averaged iterate: log-log slope of the
// objective gap over t in [1e2, 1e5] lands in [-0.70, -0.35]; the clean
// sqrt rate would be -0.5.

Outcome check_convergence_rate() {
  Config cfg = lasso_config("c3_rate");
  cfg.optimizer.kind = "rda";
  cfg.optimizer.alpha = 50.0;
  cfg.optimizer.lambda = 0.01;
  StudyResult res = run_convergence_study(cfg);
  std::string detail = "slope " + fmt(res.slope, 3) + " (window [1e2,1e5], oracle tol " +
                       fmt(res.achieved_tol, 12) + ")";
  return (res.slope >= -0.70 && res.slope <= -0.35) ? pass(detail) : fail(detail);
}

// 4. Constant vs decaying threshold, same problem, same lambda, same step
// budget: the dual-averaging run must zero out at least twice the fraction
// prox-SGD does, catch >= 80% of the truly zero coordinates where prox-SGD
// catches <= 20%.

Outcome check_threshold_contrast() {
  Config cfg = lasso_config("c4_contrast");
  cfg.optimizer.kind = "rda";  // placeholder; rows below drive the run
  cfg.optimizer.alpha = 5.0;
  cfg.optimizer.lambda = 0.01;
  OptimizerConfig rda;
  rda.kind = "rda";
  rda.alpha = 5.0;
  rda.lambda = 0.01;
  rda.name = "rda";
  OptimizerConfig prox;
  prox.kind = "prox_sgd";
  prox.alpha = 1.0;
  prox.lambda = 0.01;
  prox.name = "prox_sgd";
  cfg.compare = {rda, prox};

  CompareResult res = compare_optimizers(cfg);
  const CompareRow* r = nullptr;
  const CompareRow* p = nullptr;
  for (const CompareRow& row : res.rows) {
    if (row.name == "rda") r = &row;
    if (row.name == "prox_sgd") p = &row;
  }
  if (!r || !p) return fail("comparison rows missing");
  std::string detail = "sparsity rda " + fmt(r->sparsity, 3) + " vs prox " + fmt(p->sparsity, 3) +
                       ", true-zero rates " + fmt(r->true_zero_rate, 3) + " / " +
                       fmt(p->true_zero_rate, 3);
  bool ok = r->sparsity >= 2.0 * p->sparsity && r->true_zero_rate >= 0.80 &&
            p->true_zero_rate <= 0.20;
  return ok ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// Reference CNN runs (checks 5-7). The model is the fixed small CNN:
// conv(1->8,k3)-relu-conv(8->16,k3)-relu-maxpool-fc(2304->64)-relu-fc(64->10).
// Training uses a 12800-sample train subset so the full phase fits the time
// budget on one core.

Config cnn_config(const std::string& leaf) {
  Config cfg;
  cfg.dataset.kind = "mnist";
  cfg.dataset.path = g_data_dir;
  cfg.dataset.limit_train = 12800;
  cfg.model.kind = "cnn";
  cfg.model.channels = {8, 16};
  cfg.model.kernel = 3;
  cfg.model.fc_dims = {64, 10};
  cfg.model.batchnorm = false;
  cfg.optimizer.kind = "rda";
  cfg.optimizer.alpha = 0.1;
  cfg.optimizer.lambda = 1e-6;
  cfg.train.batch_size = 128;
  cfg.train.seed = 1;
  cfg.output_dir = out_dir(leaf).string();
  return cfg;
}

// 5. Zero initialization is a trap: with every trainable at exactly zero the
// head input is zero, gradients below the head are bitwise zero, and five
// epochs of training from that point leave accuracy at chance (8-12% over
// ten classes; the only thing that moves is the output bias).

Outcome check_zero_init_trap() {
  LabeledDataset train = load_mnist(g_data_dir, /*train=*/true);
  Model m = build_small_cnn(1, 28, 28, {8, 16}, 3, {64, 10}, false);
  set_all_zero(m);
  Tensor batch({8, 1, 28, 28});
  std::copy_n(train.inputs.raw().data(), batch.size(), batch.raw().data());
  ZeroOutputReport rep = zero_output_check(m, batch);
  if (!rep.output_zero || !rep.head_grad_zero || !rep.body_grad_zero)
    return fail(std::string("zero-output structure broken: output_zero=") +
                (rep.output_zero ? "1" : "0") + " head_grad_zero=" +
                (rep.head_grad_zero ? "1" : "0") + " body_grad_zero=" +
                (rep.body_grad_zero ? "1" : "0"));

  Config cfg = cnn_config("c5_zero_init");
  cfg.model.init = "zero";
  cfg.train.epochs = 5;
  cfg.train.asr_epochs = 0;
  RunResult res = run_experiment(cfg);
  double top1 = res.records.back().top1;
  std::string detail = "zero-output structure holds; top1 after 5 epochs " + fmt(top1, 2) +
                       " (chance band [8,12])";
  return (top1 >= 8.0 && top1 <= 12.0) ? pass(detail) : fail(detail);
}

// 6. Headline desk-scale run: scaled-uniform init (s = 1 from the documented
// grid {0.1, 0.3, 1, 3, 10}), lambda 1e-6 from {1e-6, 1e-5}, alpha 0.1,
// batch 128, 30 epochs + 10 retention epochs. Gate: top1 >= 97.0 and
// sparsity >= 0.70.
//
// Known to fail at alpha = 0.1 on this architecture: the first two steps
// scale sign-coherent position-summed gradients by 1/alpha and 1/alpha^2,
// which saturates every relu within four steps for any s in the grid (larger
// s explodes, smaller s lands in the zero-output trap). The run is kept at
// the constants above rather than quietly retuned; see check 7 for the
// properties that still hold on the degenerate run.

RunResult g_reference_run;
bool g_reference_ran = false;

const RunResult& reference_run() {
  if (!g_reference_ran) {
    Config cfg = cnn_config("c6_reference");
    cfg.optimizer.sqrt_s = 1.0;
    cfg.train.epochs = 30;
    cfg.train.asr_epochs = 10;
    g_reference_run = run_experiment(cfg);
    g_reference_ran = true;
  }
  return g_reference_run;
}

Outcome check_reference_cnn() {
  const RunResult& res = reference_run();
  const MetricsRecord& last = res.records.back();
  std::string detail = "top1 " + fmt(last.top1, 2) + " (gate >= 97.0), sparsity " +
                       fmt(last.sparsity, 3) + " (gate >= 0.70)";
  return (last.top1 >= 97.0 && last.sparsity >= 0.70) ? pass(detail) : fail(detail);
}

// 7. Retention phase properties on the same run: the sparsity trace never
// decreases once zeros are frozen, and the final accuracy stays within one
// point of the end of phase 1.

Outcome check_retention_properties() {
  const RunResult& res = reference_run();
  long p1 = res.phase1_epochs;
  const MetricsRecord* phase1_end = nullptr;
  std::vector<const MetricsRecord*> tail;
  for (const MetricsRecord& r : res.records) {
    if (r.epoch == p1) phase1_end = &r;
    if (r.epoch >= p1) tail.push_back(&r);
  }
  if (!phase1_end || tail.size() < 2) return fail("retention phase records missing");
  for (size_t i = 1; i < tail.size(); ++i)
    if (tail[i]->sparsity < tail[i - 1]->sparsity)
      return fail("sparsity decreased at epoch " + std::to_string(tail[i]->epoch) + ": " +
                  fmt(tail[i - 1]->sparsity, 6) + " -> " + fmt(tail[i]->sparsity, 6));
  double final_top1 = res.records.back().top1;
  std::string detail = "sparsity non-decreasing over retention; top1 " + fmt(final_top1, 2) +
                       " vs phase-1 " + fmt(phase1_end->top1, 2);
  return final_top1 >= phase1_end->top1 - 1.0 ? pass(detail) : fail(detail);
}

// ---------------------------------------------------------------------------
// 8. Soft-threshold algebra over 1e4 random inputs. Oddness, the shrinkage
// identity, and the delta=0 identity hold exactly; nonexpansiveness gets a
// few-ulp allowance because |x - y| is itself rounded.

Outcome check_soft_threshold_algebra() {
  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    double x = rng.uniform(-10.0, 10.0);
    double y = rng.uniform(-10.0, 10.0);
    double delta = rng.uniform(0.0, 3.0);
    double sx = soft_threshold(x, delta);
    double sy = soft_threshold(y, delta);
    if (soft_threshold(-x, delta) != -sx) return fail("oddness broken at x=" + fmt(x, 17));
    if (std::abs(sx) != std::max(std::abs(x) - delta, 0.0))
      return fail("shrinkage identity broken at x=" + fmt(x, 17));
    if (sx != 0.0 && (sx > 0) != (x > 0)) return fail("sign flipped at x=" + fmt(x, 17));
    if (std::abs(x) <= delta && sx != 0.0) return fail("dead zone missed at x=" + fmt(x, 17));
    if (soft_threshold(x, 0.0) != x) return fail("delta=0 identity broken at x=" + fmt(x, 17));
    double slack = 4e-16 * (std::abs(x) + std::abs(y) + delta);
    if (std::abs(sx - sy) > std::abs(x - y) + slack)
      return fail("nonexpansiveness broken at x=" + fmt(x, 17) + " y=" + fmt(y, 17));
  }
  return pass("10000 random (x, y, delta) triples, all identities hold");
}

// ---------------------------------------------------------------------------
// 9. Determinism and persistence on a real-data run: identical (config,
// seed) twice gives byte-identical metrics and checkpoints, and a run
// stopped mid-phase then resumed reproduces the uninterrupted bytes.

Outcome check_determinism() {
  Config base;
  base.dataset.kind = "mnist";
  base.dataset.path = g_data_dir;
  base.dataset.limit_train = 6400;
  base.model.kind = "mlp";
  base.model.dims = {784, 64, 10};
  base.optimizer.kind = "rda";
  base.optimizer.alpha = 0.3;
  base.optimizer.lambda = 1e-5;
  base.optimizer.sqrt_s = 1.0;
  base.train.batch_size = 128;
  base.train.epochs = 3;
  base.train.asr_epochs = 1;
  base.train.seed = 7;

  Config a = base;
  a.output_dir = out_dir("c9_a").string();
  run_experiment(a);
  Config b = base;
  b.output_dir = out_dir("c9_b").string();
  run_experiment(b);
  std::string jsonl_a = slurp(fs::path(a.output_dir) / "metrics.jsonl");
  if (jsonl_a != slurp(fs::path(b.output_dir) / "metrics.jsonl"))
    return fail("repeated run: metrics.jsonl differs");
  if (slurp(fs::path(a.output_dir) / "checkpoint.bin") !=
      slurp(fs::path(b.output_dir) / "checkpoint.bin"))
    return fail("repeated run: checkpoint.bin differs");

  Config cut = base;
  cut.output_dir = out_dir("c9_cut").string();
  run_experiment(cut, /*resume=*/false, /*stop_after_epoch=*/2);
  run_experiment(cut, /*resume=*/true);
  if (jsonl_a != slurp(fs::path(cut.output_dir) / "metrics.jsonl"))
    return fail("resumed run: metrics.jsonl differs from uninterrupted");
  if (slurp(fs::path(a.output_dir) / "checkpoint.bin") !=
      slurp(fs::path(cut.output_dir) / "checkpoint.bin"))
    return fail("resumed run: checkpoint.bin differs from uninterrupted");
  return pass("repeat and resume both byte-identical (metrics.jsonl, checkpoint.bin)");
}

// ---------------------------------------------------------------------------
// 10. Decreasing-alpha schedule: against the constant run at the schedule's
// starting alpha, equal epochs and lambda, the 3-stage schedule must end at
// least as sparse without giving up more than one accuracy point. Constants
// frozen from a two-seed sweep (MLP 784-128-10, s = 10, lambda 1e-5).

Outcome check_alpha_schedule() {
  Config base;
  base.dataset.kind = "mnist";
  base.dataset.path = g_data_dir;
  base.model.kind = "mlp";
  base.model.dims = {784, 128, 10};
  base.optimizer.kind = "rda";
  base.optimizer.lambda = 1e-5;
  base.optimizer.sqrt_s = 10.0;
  base.train.batch_size = 128;
  base.train.epochs = 15;
  base.train.asr_epochs = 0;
  base.train.seed = 1;

  Config cst = base;
  cst.optimizer.alpha = 0.3;
  cst.output_dir = out_dir("c10_const").string();
  RunResult rc = run_experiment(cst);

  Config sch = base;
  sch.optimizer.alpha = 0.3;
  sch.optimizer.schedule = {{1, 5, 0.3, 1e-5}, {6, 10, 0.15, 1e-5}, {11, 15, 0.075, 1e-5}};
  sch.output_dir = out_dir("c10_sched").string();
  RunResult rs = run_experiment(sch);

  const MetricsRecord& c = rc.records.back();
  const MetricsRecord& s = rs.records.back();
  std::string detail = "sched sparsity " + fmt(s.sparsity, 4) + " vs const " +
                       fmt(c.sparsity, 4) + "; top1 " + fmt(s.top1, 2) + " vs " + fmt(c.top1, 2);
  bool ok = s.sparsity >= c.sparsity && s.top1 >= c.top1 - 1.0;
  return ok ? pass(detail) : fail(detail);
}

struct Check {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--data" && i + 1 < argc) {
      g_data_dir = argv[++i];
    } else if (arg == "--out" && i + 1 < argc) {
      g_out_dir = argv[++i];
    } else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: spda_acceptance [--data MNIST_DIR] [--out RUN_DIR] [check...]\n";
      return 0;
    } else {
      try {
        selected.push_back(std::stoi(arg));
      } catch (const std::exception&) {
        std::cerr << "unrecognized argument: " << arg << "\n";
        return 2;
      }
    }
  }
  if (const char* env = std::getenv("SPDA_MNIST_DIR"); env && *env) g_data_dir = env;

  const std::vector<Check> checks = {
      {1, "gradient correctness", check_gradients},
      {2, "dual-averaging forms agree", check_dual_averaging_forms},
      {3, "lasso convergence rate", check_convergence_rate},
      {4, "constant vs decaying threshold", check_threshold_contrast},
      {5, "zero-init trap", check_zero_init_trap},
      {6, "reference cnn accuracy and sparsity", check_reference_cnn},
      {7, "retention phase properties", check_retention_properties},
      {8, "soft-threshold algebra", check_soft_threshold_algebra},
      {9, "determinism and persistence", check_determinism},
      {10, "decreasing-alpha schedule", check_alpha_schedule},
  };

  int failures = 0;
  int ran = 0;
  for (const Check& c : checks) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.number) == selected.end())
      continue;
    ++ran;
    auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%2d %-36s] %s  %s (%.1fs)\n", c.number, c.name,
                out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (ran == 0) {
    std::cerr << "no checks selected\n";
    return 2;
  }
  std::printf("%d/%d checks passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
