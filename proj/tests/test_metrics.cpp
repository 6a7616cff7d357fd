#include <cmath>
#include <vector>

#include "doctest.h"
#include "spda/errors.hpp"
#include "spda/metrics.hpp"
#include "spda/model.hpp"
#include "spda/rng.hpp"

using namespace spda;

TEST_SUITE("metrics") {
  TEST_CASE("sparsity counts exact zeros over regularized parameters") {
    Model m = build_mlp({4, 3, 2});
    init_scaled_uniform(m, 1.0, 7);
    // 4*3 + 3*2 = 18 regularized weights, 3 + 2 = 5 unregularized biases.
    SparsityReport all0 = sparsity_regularized(m);
    CHECK(all0.total == 18);
    CHECK(all0.zeros == 0);
    CHECK(all0.fraction() == 0.0);

    Tensor& w0 = m.params()[0].var->value;
    w0[0] = 0.0;
    w0[5] = 0.0;
    w0[7] = -0.0;  // negative zero still compares equal to zero
    SparsityReport rep = sparsity_regularized(m);
    CHECK(rep.zeros == 3);
    CHECK(rep.total == 18);
    CHECK(rep.fraction() == doctest::Approx(3.0 / 18.0));

    // Biases are zero-initialized noise-free only in the all counts.
    for (Param& p : m.params())
      if (!p.regularized) p.var->value.zero();
    SparsityReport allp = sparsity_all(m);
    CHECK(allp.total == 23);
    CHECK(allp.zeros == 3 + 5);
  }

  TEST_CASE("tiny values are not zeros") {
    Tensor w({4}, {1e-300, -1e-300, 0.0, 2.0});
    SparsityReport rep = sparsity(w);
    CHECK(rep.zeros == 1);
    CHECK(rep.total == 4);
  }

  TEST_CASE("l1 norm skips unregularized parameters") {
    Model m = build_mlp({2, 2}, /*with_relu=*/false);
    Tensor& w = m.params()[0].var->value;
    Tensor& b = m.params()[1].var->value;
    w[0] = 1.0; w[1] = -2.0; w[2] = 0.5; w[3] = 0.0;
    b[0] = 100.0; b[1] = -100.0;
    CHECK(l1_norm(m) == 3.5);
    CHECK(l1_norm(b) == 200.0);
  }

  TEST_CASE("top-1 on a half-right batch is fifty percent") {
    Tensor logits({2, 2}, {2.0, 1.0, 1.0, 2.0});
    std::vector<int> labels = {0, 0};
    CHECK(top_k_accuracy(logits, labels, 1) == 50.0);
    CHECK(top_k_accuracy(logits, labels, 2) == 100.0);
  }

  TEST_CASE("ties rank the lower class index first") {
    Tensor logits({1, 3}, {5.0, 5.0, 1.0});
    CHECK(top_k_accuracy(logits, {0}, 1) == 100.0);  // tie, class 0 wins
    CHECK(top_k_accuracy(logits, {1}, 1) == 0.0);    // tie, loses to class 0
    CHECK(top_k_accuracy(logits, {1}, 2) == 100.0);
  }

  TEST_CASE("top-k is monotone in k and permutation invariant") {
    Rng rng(19);
    long b = 40, c = 10;
    Tensor logits({b, c});
    std::vector<int> labels;
    for (long i = 0; i < b * c; ++i) logits[i] = rng.normal();
    for (long i = 0; i < b; ++i) labels.push_back(static_cast<int>(rng.uniform_int(c)));

    double prev = 0.0;
    for (long k = 1; k <= c; ++k) {
      double acc = top_k_accuracy(logits, labels, k);
      CHECK(acc >= prev);
      prev = acc;
    }
    CHECK(prev == 100.0);

    // Shuffling rows together leaves accuracy unchanged.
    std::vector<long> perm(static_cast<size_t>(b));
    for (long i = 0; i < b; ++i) perm[static_cast<size_t>(i)] = i;
    Rng prng(23);
    prng.shuffle(perm);
    Tensor shuffled({b, c});
    std::vector<int> slabels(static_cast<size_t>(b));
    for (long i = 0; i < b; ++i) {
      for (long j = 0; j < c; ++j) shuffled[i * c + j] = logits[perm[i] * c + j];
      slabels[static_cast<size_t>(i)] = labels[static_cast<size_t>(perm[i])];
    }
    for (long k = 1; k <= c; ++k)
      CHECK(top_k_accuracy(shuffled, slabels, k) == top_k_accuracy(logits, labels, k));
  }

  TEST_CASE("top-k rejects bad arguments") {
    Tensor logits({2, 3});
    CHECK_THROWS_AS(top_k_accuracy(logits, {0, 1}, 4), DimensionError);
    CHECK_THROWS_AS(top_k_accuracy(logits, {0, 1}, 0), DimensionError);
    CHECK_THROWS_AS(top_k_accuracy(logits, {0}, 1), DimensionError);
    CHECK_THROWS_AS(top_k_accuracy(logits, {0, 3}, 1), std::out_of_range);
    Tensor bad({6});
    CHECK_THROWS_AS(top_k_accuracy(bad, {0, 1}, 1), DimensionError);
  }

  TEST_CASE("incremental average tracks the direct mean") {
    long d = 17, steps = 1000;
    ConvergenceTrace trace({steps});
    Rng rng(29);
    Tensor w({d});
    Tensor direct({d});
    for (long t = 1; t <= steps; ++t) {
      for (long j = 0; j < d; ++j) w[j] = rng.normal() * 3.0 + 0.5;
      trace.add(w);
      for (long j = 0; j < d; ++j) direct[j] += w[j];
    }
    for (long j = 0; j < d; ++j) {
      double mean = direct[j] / static_cast<double>(steps);
      CHECK(std::fabs(trace.wbar()[j] - mean) <= 1e-12 * (1.0 + std::fabs(mean)));
    }
    CHECK(trace.t() == steps);
  }

  TEST_CASE("trace flags due steps and stores floored gaps") {
    ConvergenceTrace trace({2, 5});
    Tensor w({1}, {1.0});
    CHECK_FALSE(trace.due());
    trace.add(w);
    CHECK_FALSE(trace.due());
    CHECK_THROWS_AS(trace.record_gap(0.1), StateError);
    trace.add(w);
    CHECK(trace.due());
    trace.record_gap(0.25);
    CHECK_FALSE(trace.due());
    for (int i = 0; i < 3; ++i) trace.add(w);
    CHECK(trace.due());
    trace.record_gap(0.0);  // clamped so log10 stays finite
    auto s = trace.samples();
    REQUIRE(s.size() == 2);
    CHECK(s[0] == std::pair<long, double>{2, 0.25});
    CHECK(s[1].first == 5);
    CHECK(s[1].second == 1e-16);
  }

  TEST_CASE("trace rejects bad sample step lists") {
    CHECK_THROWS_AS(ConvergenceTrace({}), ConfigError);
    CHECK_THROWS_AS(ConvergenceTrace({0, 2}), ConfigError);
    CHECK_THROWS_AS(ConvergenceTrace({3, 2}), ConfigError);
    CHECK_THROWS_AS(ConvergenceTrace({2, 2}), ConfigError);
  }

  TEST_CASE("log spaced steps include endpoints and stay sorted") {
    std::vector<long> steps = log_spaced_steps(100, 100000, 10);
    CHECK(steps.front() == 100);
    CHECK(steps.back() == 100000);
    for (size_t i = 1; i < steps.size(); ++i) CHECK(steps[i] > steps[i - 1]);
    // 3 decades at 10 per decade, endpoints inclusive.
    CHECK(steps.size() == 31);

    std::vector<long> tiny = log_spaced_steps(1, 10, 4);
    CHECK(tiny.front() == 1);
    CHECK(tiny.back() == 10);
    CHECK_THROWS_AS(log_spaced_steps(0, 10, 4), ConfigError);
    CHECK_THROWS_AS(log_spaced_steps(10, 5, 4), ConfigError);
  }

  TEST_CASE("slope fit recovers a known power law") {
    // gap = 7 * t^(-1/2) exactly, so the fitted slope is -0.5.
    std::vector<std::pair<long, double>> samples;
    for (long t : log_spaced_steps(10, 100000, 8))
      samples.emplace_back(t, 7.0 * std::pow(static_cast<double>(t), -0.5));
    double slope = fit_loglog_slope(samples, 100, 100000);
    CHECK(slope == doctest::Approx(-0.5).epsilon(1e-6));

    // Window subsetting really filters.
    double slope_all = fit_loglog_slope(samples, 1, 1000000);
    CHECK(slope_all == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK_THROWS_AS(fit_loglog_slope(samples, 99998, 99999), ConfigError);
  }
}
