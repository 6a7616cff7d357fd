#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "spda/asr.hpp"
#include "spda/optim.hpp"
#include "spda/rng.hpp"

using namespace spda;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Quadratic test problem: grad(w) = Q w - c with Q diagonal positive.
struct Quadratic {
  Tensor q, c;
  void grad(const Tensor& w, Tensor& g) const {
    for (long i = 0; i < w.size(); ++i) g[i] = q[i] * w[i] - c[i];
  }
};

Quadratic make_quadratic(long d, uint64_t seed) {
  Rng rng(seed);
  Quadratic p{Tensor({d}), Tensor({d})};
  for (long i = 0; i < d; ++i) {
    p.q[i] = rng.uniform(0.5, 2.0);
    p.c[i] = rng.uniform(-1.0, 1.0);
  }
  return p;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("soft threshold point values") {
  CHECK(soft_threshold(1.5, 1.0) == 0.5);
  CHECK(soft_threshold(-0.3, 0.5) == 0.0);
  CHECK(soft_threshold(2.0, 0.0) == 2.0);
  CHECK(soft_threshold(-2.5, 1.0) == -1.5);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), std::invalid_argument);
  Tensor t = soft_threshold(Tensor::row({1.5, -0.3, 0.0}), 0.5);
  CHECK(t[0] == 1.0);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == 0.0);
}

TEST_CASE("soft threshold properties over random inputs") {
  Rng rng(77);
  for (int i = 0; i < 10000; ++i) {
    double x = rng.uniform(-10.0, 10.0);
    double y = rng.uniform(-10.0, 10.0);
    double delta = rng.uniform(0.0, 3.0);
    double sx = soft_threshold(x, delta);
    double sy = soft_threshold(y, delta);
    // nonexpansive up to one rounding of each output
    CHECK(std::abs(sx - sy) <= std::abs(x - y) + 4e-16 * (std::abs(x) + std::abs(y) + delta));
    CHECK(soft_threshold(-x, delta) == -sx);              // odd
    CHECK(std::abs(sx) <= std::abs(x));                   // shrinking
    CHECK(soft_threshold(x, 0.0) == x);                   // identity at 0
  }
}

TEST_CASE("sgd point updates") {
  Tensor w = Tensor::row({1.0});
  Tensor g = Tensor::row({0.5});
  SgdOptimizer constant_sgd(1.0, LrMode::Constant, 0.1);
  constant_sgd.step({{&w, &g, true}});
  CHECK(w[0] == doctest::Approx(0.95));

  // zero gradient leaves w unchanged
  Tensor w2 = Tensor::row({0.3});
  Tensor g2 = Tensor::row({0.0});
  SgdOptimizer sgd(2.0);
  sgd.step({{&w2, &g2, true}});
  CHECK(w2[0] == 0.3);

  // decaying rate at t=4 with alpha=1 is 0.5
  SgdOptimizer sgd4(1.0);
  Tensor w3 = Tensor::row({1.0});
  Tensor g3 = Tensor::row({1.0});
  Tensor zero = Tensor::row({0.0});
  for (int i = 0; i < 3; ++i) sgd4.step({{&w3, &zero, true}});
  CHECK(sgd4.t() == 4);
  sgd4.step({{&w3, &g3, true}});
  CHECK(w3[0] == doctest::Approx(0.5));
}

TEST_CASE("sda averaged point updates") {
  Tensor w = Tensor::row({5.0, -7.0});  // discarded by the first step
  Tensor g = Tensor::row({2.0, -4.0});
  SdaAveragedOptimizer sda(1.0);
  sda.step({{&w, &g, true}});
  CHECK(w[0] == -2.0);
  CHECK(w[1] == 4.0);
  Tensor g2 = Tensor::row({0.0, 0.0});
  sda.step({{&w, &g2, true}});
  CHECK(w[0] == doctest::Approx(-std::sqrt(2.0)));
  CHECK(w[1] == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("constant gradient gives w = -(sqrt(t)/alpha) g") {
  Tensor w = Tensor::row({0.0});
  Tensor g = Tensor::row({0.7});
  SdaAveragedOptimizer sda(2.0);
  for (int t = 1; t <= 9; ++t) sda.step({{&w, &g, true}});
  CHECK(w[0] == doctest::Approx(-std::sqrt(9.0) / 2.0 * 0.7));
}

TEST_CASE("gbar tracks the exact running mean") {
  Rng rng(5);
  long d = 20;
  Tensor w({d}), g({d});
  RdaOptimizer rda(1.0, 0.01);
  std::vector<Tensor> history;
  for (int t = 1; t <= 1000; ++t) {
    g = random_tensor({d}, rng);
    history.push_back(g);
    rda.step({{&w, &g, true}});
  }
  Tensor direct({d});
  for (const Tensor& h : history)
    for (long i = 0; i < d; ++i) direct[i] += h[i];
  for (long i = 0; i < d; ++i) direct[i] /= static_cast<double>(history.size());
  const Tensor& gbar = rda.gbar()[0];
  for (long i = 0; i < d; ++i)
    CHECK(std::abs(gbar[i] - direct[i]) <= 1e-12 * (std::abs(direct[i]) + 1.0));
}

TEST_CASE("epsilon formula and bound") {
  CHECK(sda_epsilon(1) == 1.0);
  CHECK(sda_epsilon(4) == doctest::Approx(1.0 / (4.0 + std::sqrt(12.0))));
  CHECK(sda_epsilon(4) < 1.0 / 7.0);
  long violations = 0;
  for (long t = 2; t <= 1000000; ++t) {
    double e = sda_epsilon(t);
    if (!(e < 1.0 / (2.0 * static_cast<double>(t) - 1.0))) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("gamma ratio equals 1 - epsilon to machine precision") {
  double alpha = 0.37;
  for (long t = 2; t <= 100000; t = t * 3 + 1) {
    double ratio = inv_sqrt_rate(alpha, t) / inv_sqrt_rate(alpha, t - 1);
    double target = std::sqrt(1.0 - 1.0 / static_cast<double>(t));
    CHECK(ratio == doctest::Approx(target).epsilon(1e-14));
    CHECK(ratio == doctest::Approx(1.0 - sda_epsilon(t)).epsilon(1e-14));
  }
}

TEST_CASE("perturbed form discards w1 at t=1") {
  Tensor w = Tensor::row({123.0});
  Tensor g = Tensor::row({2.0});
  SdaPerturbedOptimizer sda(1.0);
  sda.step({{&w, &g, true}});
  CHECK(w[0] == -2.0);  // (1 - eps_1) = 0 exactly wipes the start point
}

TEST_CASE("averaged and perturbed forms track each other for 1000 steps") {
  long d = 50;
  Quadratic prob = make_quadratic(d, 123);
  Rng rng(9);
  Tensor wa = random_tensor({d}, rng);
  Tensor wp = wa;
  Tensor ga({d}), gp({d});
  SdaAveragedOptimizer oa(0.8);
  SdaPerturbedOptimizer op(0.8);
  double worst = 0.0;
  for (int t = 1; t <= 1000; ++t) {
    prob.grad(wa, ga);
    prob.grad(wp, gp);
    oa.step({{&wa, &ga, true}});
    op.step({{&wp, &gp, true}});
    double winf = 0.0, diff = 0.0;
    for (long i = 0; i < d; ++i) {
      winf = std::max(winf, std::abs(wa[i]));
      diff = std::max(diff, std::abs(wa[i] - wp[i]));
    }
    worst = std::max(worst, diff / (1.0 + winf));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("prox sgd three cases") {
  // eta = 1/(alpha sqrt 1) = 0.1 with alpha 10, lambda 1 -> cut 0.1
  auto run_one = [](double w0, double g0) {
    Tensor w = Tensor::row({w0});
    Tensor g = Tensor::row({g0});
    ProxSgdOptimizer prox(10.0, 1.0);
    prox.step({{&w, &g, true}});
    return w[0];
  };
  CHECK(run_one(0.5, 0.2) == doctest::Approx(0.38));    // u=0.48 > 0.1
  CHECK(run_one(0.05, 0.2) == 0.0);                     // |0.03| <= 0.1
  CHECK(run_one(-0.5, 0.2) == doctest::Approx(-0.42));  // u=-0.52 < -0.1
}

TEST_CASE("prox sgd leaves non-regularized slots unthresholded") {
  Tensor w = Tensor::row({0.05});
  Tensor g = Tensor::row({0.2});
  ProxSgdOptimizer prox(10.0, 1.0);
  prox.step({{&w, &g, false}});
  CHECK(w[0] == doctest::Approx(0.05 - 0.1 * 0.2));
}

TEST_CASE("rda point updates") {
  Tensor w = Tensor::row({9.0, 9.0});
  Tensor g = Tensor::row({0.5, -0.05});
  RdaOptimizer rda(1.0, 0.1);
  rda.step({{&w, &g, true}});
  CHECK(w[0] == doctest::Approx(-0.4));
  CHECK(w[1] == 0.0);

  // t=4 with gbar pinned at 0.3: xi=2, w = -2*(0.3-0.1)
  Tensor w2 = Tensor::row({0.0});
  Tensor g2 = Tensor::row({0.3});
  RdaOptimizer rda2(1.0, 0.1);
  for (int t = 1; t <= 4; ++t) rda2.step({{&w2, &g2, true}});
  CHECK(w2[0] == doctest::Approx(-2.0 * 0.2));
}

TEST_CASE("rda with lambda 0 matches sda bitwise") {
  Rng rng(17);
  long d = 30;
  Quadratic prob = make_quadratic(d, 55);
  Tensor wr = random_tensor({d}, rng);
  Tensor ws = wr;
  Tensor gr({d}), gs({d});
  RdaOptimizer rda(0.7, 0.0);
  SdaAveragedOptimizer sda(0.7);
  for (int t = 1; t <= 200; ++t) {
    prob.grad(wr, gr);
    prob.grad(ws, gs);
    rda.step({{&wr, &gr, true}});
    sda.step({{&ws, &gs, true}});
  }
  for (long i = 0; i < d; ++i) CHECK(wr[i] == ws[i]);
}

TEST_CASE("rda threshold is t-independent, prox threshold decays") {
  // a coordinate whose average gradient stays inside [-lambda, lambda]
  // is zero at every rda step, while prox-sgd's cut eta_t*lambda shrinks
  Rng rng(31);
  double lambda = 0.5;
  Tensor w = Tensor::row({0.0});
  RdaOptimizer rda(1.0, lambda);
  for (int t = 1; t <= 500; ++t) {
    Tensor g = Tensor::row({rng.uniform(-0.4, 0.4)});  // |gbar| stays < 0.5
    rda.step({{&w, &g, true}});
    CHECK(w[0] == 0.0);
  }
  double cut_t1 = inv_sqrt_rate(1.0, 1) * lambda;
  double cut_t100 = inv_sqrt_rate(1.0, 100) * lambda;
  CHECK(cut_t100 == doctest::Approx(cut_t1 / 10.0));
  CHECK(cut_t100 < cut_t1);
}

TEST_CASE("rda treats non-regularized slots as sda") {
  Tensor wr = Tensor::row({1.0});
  Tensor wn = Tensor::row({1.0});
  Tensor g = Tensor::row({0.05});
  RdaOptimizer rda(1.0, 0.1);
  rda.step({{&wr, &g, true}, {&wn, &g, false}});
  CHECK(wr[0] == 0.0);       // |gbar| <= lambda
  CHECK(wn[0] == -0.05);     // plain -xi*gbar
}

TEST_CASE("hyper schedule lookup") {
  HyperSchedule sched({{1, 100, 1.0, 1e-5}, {101, 200, 0.2, 1e-5}, {201, 300, 0.05, 1e-5}});
  CHECK(sched.at(150).alpha == 0.2);
  CHECK(sched.at(150).lambda == 1e-5);
  CHECK(sched.at(1).alpha == 1.0);
  CHECK(sched.at(300).alpha == 0.05);
  CHECK_THROWS_AS(sched.at(301), ConfigError);
  CHECK_THROWS_AS(sched.at(0), ConfigError);

  HyperSchedule ten({{1, 100, 0.28, 1e-6}, {101, 200, 0.21, 1e-7}, {201, 300, 0.08, 1e-6}});
  CHECK(ten.at(250).alpha == 0.08);
  CHECK(ten.at(250).lambda == 1e-6);

  HyperSchedule single({{1, 50, 0.3, 1e-6}});
  CHECK(single.at(25).alpha == 0.3);
}

TEST_CASE("bad schedules are rejected") {
  CHECK_THROWS_AS(HyperSchedule({{2, 10, 1.0, 0.0}}), ConfigError);             // not from 1
  CHECK_THROWS_AS(HyperSchedule({{1, 10, 1.0, 0.0}, {12, 20, 1.0, 0.0}}), ConfigError);
  CHECK_THROWS_AS(HyperSchedule({{1, 10, 1.0, 0.0}, {10, 20, 1.0, 0.0}}), ConfigError);
  CHECK_THROWS_AS(HyperSchedule({{1, 10, -1.0, 0.0}}), ConfigError);
  CHECK_THROWS_AS(HyperSchedule({{1, 10, 1.0, -1e-9}}), ConfigError);
}

TEST_CASE("schedule application keeps optimizer state") {
  Tensor w = Tensor::row({0.0});
  Tensor g = Tensor::row({1.0});
  RdaOptimizer rda(1.0, 1e-5);
  for (int t = 1; t <= 10; ++t) rda.step({{&w, &g, true}});
  double gbar_before = rda.gbar()[0][0];
  HyperSchedule sched({{1, 5, 1.0, 1e-5}, {6, 20, 0.2, 1e-4}});
  apply_hyper_schedule(sched, 11, rda);
  CHECK(rda.alpha() == 0.2);
  CHECK(rda.lambda() == 1e-4);
  CHECK(rda.t() == 11);
  CHECK(rda.gbar()[0][0] == gbar_before);
}

TEST_CASE("optimizer state round trips") {
  Rng rng(3);
  Tensor w = random_tensor({8}, rng);
  Tensor g = random_tensor({8}, rng);
  RdaOptimizer rda(0.5, 1e-3);
  for (int i = 0; i < 7; ++i) rda.step({{&w, &g, true}});
  OptimizerState st = rda.export_state();
  auto clone = make_optimizer(st);
  Tensor w2 = w;
  rda.step({{&w, &g, true}});
  clone->step({{&w2, &g, true}});
  for (long i = 0; i < 8; ++i) CHECK(w[i] == w2[i]);
  CHECK(clone->t() == rda.t());
}

}  // TEST_SUITE("optim")

TEST_SUITE("asr") {

TEST_CASE("admit zeros and apply") {
  Tensor w = Tensor::row({0.0, 0.3, 0.0});
  Tensor g = Tensor::row({0.0, 0.0, 0.0});
  std::vector<ParamSlot> slots{{&w, &g, true}};
  FreezeMask mask;
  mask.admit_zeros(slots);
  CHECK(mask.count() == 2);
  w[0] = 5.0;
  mask.apply(slots);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 0.3);

  Tensor wn = Tensor::row({1.0, 2.0});
  std::vector<ParamSlot> slots2{{&wn, &g, true}};
  FreezeMask m2;
  m2.admit_zeros(slots2);
  CHECK(m2.count() == 0);
}

TEST_CASE("mask monotone through masked steps") {
  Rng rng(8);
  long d = 40;
  Tensor w = random_tensor({d}, rng);
  for (long i = 0; i < 10; ++i) w[i * 4] = 0.0;
  Tensor g({d});
  std::vector<ParamSlot> slots{{&w, &g, true}};
  RdaOptimizer rda(1.0, 0.05);
  FreezeMask mask;
  mask.admit_zeros(slots);
  MaskedOptimizer masked(rda, mask);
  long prev = mask.count();
  for (int t = 1; t <= 100; ++t) {
    g = random_tensor({d}, rng, -0.2, 0.2);
    masked.step(slots);
    long cur = mask.count();
    CHECK(cur >= prev);
    prev = cur;
    // every masked coordinate sits at exactly zero
    const auto& bits = mask.data()[0];
    for (long i = 0; i < d; ++i)
      if (bits[static_cast<size_t>(i)]) CHECK(w[i] == 0.0);
  }
}

TEST_CASE("full mask pins everything regardless of gradients") {
  Tensor w = Tensor::row({1.0, -2.0, 3.0});
  Tensor g = Tensor::row({5.0, 5.0, 5.0});
  std::vector<ParamSlot> slots{{&w, &g, true}};
  w.zero();
  FreezeMask mask;
  mask.admit_zeros(slots);
  SgdOptimizer sgd(1.0);
  MaskedOptimizer masked(sgd, mask);
  for (int i = 0; i < 5; ++i) masked.step(slots);
  for (long i = 0; i < 3; ++i) CHECK(w[i] == 0.0);
}

TEST_CASE("masked coordinate a step would resurrect stays zero") {
  // rda with |gbar| > lambda wants this coordinate nonzero; the mask wins
  Tensor w = Tensor::row({0.0});
  Tensor g = Tensor::row({2.0});
  std::vector<ParamSlot> slots{{&w, &g, true}};
  FreezeMask mask;
  mask.admit_zeros(slots);
  RdaOptimizer rda(1.0, 0.1);
  MaskedOptimizer masked(rda, mask);
  masked.step(slots);
  CHECK(w[0] == 0.0);
  CHECK(rda.gbar()[0][0] == 2.0);  // gradients still feed the dual average
}

TEST_CASE("empty mask with lambda 0 equals the unmasked step") {
  Rng rng(19);
  Tensor w1 = random_tensor({10}, rng);
  Tensor w2 = w1;
  Tensor g = random_tensor({10}, rng);
  SgdOptimizer a(1.0), b(1.0);
  FreezeMask mask;
  MaskedOptimizer masked(a, mask);
  masked.step({{&w1, &g, true}});
  b.step({{&w2, &g, true}});
  for (long i = 0; i < 10; ++i) CHECK(w1[i] == w2[i]);
}

TEST_CASE("magnitude prune picks the smallest magnitudes") {
  Tensor w = Tensor::row({0.1, -0.5, 0.02, 0.3});
  Tensor g({4});
  std::vector<ParamSlot> slots{{&w, &g, true}};
  FreezeMask mask = magnitude_prune(slots, 0.5);
  CHECK(mask.count() == 2);
  CHECK(mask.data()[0][0] == 1);  // 0.1
  CHECK(mask.data()[0][2] == 1);  // 0.02
  CHECK(mask.data()[0][1] == 0);
  CHECK(mask.data()[0][3] == 0);

  CHECK(magnitude_prune(slots, 0.0).count() == 0);
  CHECK(magnitude_prune(slots, 1.0).count() == 4);
  CHECK_THROWS_AS(magnitude_prune(slots, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(magnitude_prune(slots, 1.5), std::invalid_argument);
}

TEST_CASE("magnitude prune breaks ties by lower index and skips non-regularized") {
  Tensor w = Tensor::row({0.5, 0.5, 0.5, 0.5});
  Tensor b = Tensor::row({0.0, 0.0});
  Tensor g4({4}), g2({2});
  std::vector<ParamSlot> slots{{&w, &g4, true}, {&b, &g2, false}};
  FreezeMask mask = magnitude_prune(slots, 0.5);
  CHECK(mask.count() == 2);
  CHECK(mask.data()[0][0] == 1);
  CHECK(mask.data()[0][1] == 1);
  CHECK(mask.data()[0][2] == 0);
  CHECK(mask.data()[1][0] == 0);  // bias tensor untouched even at magnitude 0
  // every masked magnitude <= every unmasked magnitude
  Rng rng(44);
  Tensor wr({100});
  for (long i = 0; i < 100; ++i) wr[i] = rng.uniform(-2.0, 2.0);
  Tensor gr({100});
  std::vector<ParamSlot> sl{{&wr, &gr, true}};
  FreezeMask m2 = magnitude_prune(sl, 0.37);
  CHECK(m2.count() == 37);
  double max_masked = 0.0, min_unmasked = 1e300;
  for (long i = 0; i < 100; ++i) {
    double a = std::abs(wr[i]);
    if (m2.data()[0][static_cast<size_t>(i)])
      max_masked = std::max(max_masked, a);
    else
      min_unmasked = std::min(min_unmasked, a);
  }
  CHECK(max_masked <= min_unmasked);
}

}  // TEST_SUITE("asr")
