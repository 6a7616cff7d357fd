#include <doctest.h>

#include <cmath>

#include "spda/nn.hpp"
#include "spda/rng.hpp"

using namespace spda;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (long i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("scalar square has gradient 2w") {
  Var w = parameter(Tensor::scalar(3.0));
  Var loss = mul(w, w);
  backward(loss);
  CHECK(grad_buffer(w)[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across backward calls") {
  Var w = parameter(Tensor::scalar(2.0));
  backward(mul(w, w));
  backward(mul(w, w));
  CHECK(grad_buffer(w)[0] == doctest::Approx(8.0));
}

TEST_CASE("diamond graph counts both paths") {
  // loss = sum(w + w) -> d/dw = 2 per coordinate
  Var w = parameter(Tensor::row({1.0, 2.0}));
  backward(sum(add(w, w)));
  CHECK(grad_buffer(w)[0] == 2.0);
  CHECK(grad_buffer(w)[1] == 2.0);
}

TEST_CASE("backward requires a scalar root") {
  Var w = parameter(Tensor::row({1.0, 2.0}));
  CHECK_THROWS_AS(backward(add(w, w)), DimensionError);
}

TEST_CASE("no gradient flows into constants") {
  Var c = constant(Tensor::row({1.0, 2.0}));
  Var w = parameter(Tensor::row({3.0, 4.0}));
  backward(sum(mul(c, w)));
  CHECK(grad_buffer(w)[0] == 1.0);
  CHECK(grad_buffer(w)[1] == 2.0);
  CHECK_FALSE(c->requires_grad);
  CHECK(c->grad.size() == 0);
}

TEST_CASE("shape mismatch in binary ops") {
  Var a = parameter(Tensor::row({1.0, 2.0}));
  Var b = parameter(Tensor::row({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(mul(a, b), DimensionError);
}

TEST_CASE("relu forward pins relu(0) to exact zero") {
  Var x = constant(Tensor::row({-1.0, 0.0, 2.0, 3.5}));
  Var y = relu(x);
  CHECK(y->value[0] == 0.0);
  CHECK(y->value[1] == 0.0);
  CHECK(!std::signbit(y->value[1]));
  CHECK(y->value[2] == 2.0);
  CHECK(y->value[3] == 3.5);
}

TEST_CASE("relu gradient is zero at zero input") {
  Var x = parameter(Tensor::row({-1.0, 0.0, 2.0}));
  backward(sum(relu(x)));
  CHECK(grad_buffer(x)[0] == 0.0);
  CHECK(grad_buffer(x)[1] == 0.0);
  CHECK(grad_buffer(x)[2] == 1.0);
}

TEST_CASE("linear trivials") {
  // identity map
  Var x = constant(Tensor({1, 2}, {1, 2}));
  Var W = constant(Tensor({2, 2}, {1, 0, 0, 1}));
  Var b = constant(Tensor::row({0, 0}));
  Var y = linear(x, W, b);
  CHECK(y->value[0] == 1.0);
  CHECK(y->value[1] == 2.0);
  // direct dot product
  Var y2 = linear(constant(Tensor({1, 2}, {1, 1})), constant(Tensor({1, 2}, {2, 3})),
                  constant(Tensor::row({1})));
  CHECK(y2->value[0] == 6.0);
  // zero input passes bias
  Var y3 = linear(constant(Tensor({1, 2}, {0, 0})), constant(Tensor({1, 2}, {7, -4})),
                  constant(Tensor::row({5})));
  CHECK(y3->value[0] == 5.0);
}

TEST_CASE("conv2d trivials") {
  // 1x1 kernel of value 1 is the identity
  Var x = constant(Tensor({1, 1, 2, 2}, {1, 1, 1, 1}));
  Var k = constant(Tensor({1, 1, 1, 1}, {1}));
  Var b = constant(Tensor::row({0}));
  Var y = conv2d(x, k, b);
  CHECK(y->value.shape() == Shape{1, 1, 2, 2});
  for (long i = 0; i < 4; ++i) CHECK(y->value[i] == 1.0);
  // all-zero kernel gives all-zero output
  Rng rng(3);
  Var x2 = constant(random_tensor({2, 3, 5, 5}, rng));
  Var k2 = constant(Tensor({4, 3, 3, 3}));
  Var y2 = conv2d(x2, k2, constant(Tensor({4})));
  for (long i = 0; i < y2->value.size(); ++i) CHECK(y2->value[i] == 0.0);
  // identity-matrix input against an all-ones 3x3 kernel sums the diagonal
  Var x3 = constant(Tensor({1, 1, 3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  Var k3 = constant(Tensor::full({1, 1, 3, 3}, 1.0));
  Var y3 = conv2d(x3, k3, constant(Tensor({1})));
  CHECK(y3->value.size() == 1);
  CHECK(y3->value[0] == 3.0);
}

TEST_CASE("conv2d shape arithmetic and errors") {
  Rng rng(5);
  Var x = constant(random_tensor({2, 3, 7, 6}, rng));
  Var k = constant(random_tensor({4, 3, 3, 3}, rng));
  Var b = constant(Tensor({4}));
  CHECK(conv2d(x, k, b)->value.shape() == Shape{2, 4, 5, 4});
  CHECK(conv2d(x, k, b, 2)->value.shape() == Shape{2, 4, 3, 2});
  CHECK(conv2d(x, k, b, 1, 1)->value.shape() == Shape{2, 4, 7, 6});
  Var kbig = constant(Tensor({1, 3, 8, 8}));
  Var b1 = constant(Tensor({1}));
  CHECK_THROWS_AS(conv2d(x, kbig, b1), DimensionError);
  CHECK(conv2d(x, kbig, b1, 1, 1)->value.shape() == Shape{2, 1, 2, 1});
  Var kwrong = constant(Tensor({4, 2, 3, 3}));
  CHECK_THROWS_AS(conv2d(x, kwrong, b), DimensionError);
}

TEST_CASE("maxpool takes the first maximum in scan order") {
  Var x = constant(Tensor({1, 1, 2, 2}, {3.0, 3.0, 1.0, 3.0}));
  Var y = maxpool2x2(x);
  CHECK(y->value[0] == 3.0);
  Var xp = parameter(Tensor({1, 1, 2, 2}, {3.0, 3.0, 1.0, 3.0}));
  backward(sum(maxpool2x2(xp)));
  CHECK(grad_buffer(xp)[0] == 1.0);  // ties go to the earliest position
  CHECK(grad_buffer(xp)[1] == 0.0);
  CHECK(grad_buffer(xp)[3] == 0.0);
}

TEST_CASE("maxpool drops odd trailing rows") {
  Rng rng(6);
  Var x = constant(random_tensor({1, 2, 5, 7}, rng));
  CHECK(maxpool2x2(x)->value.shape() == Shape{1, 2, 2, 3});
}

TEST_CASE("batchnorm trivials") {
  // gamma=1, beta=0 on an already zero-mean unit-variance batch
  Tensor x({2, 1, 1, 2}, {-1.0, 1.0, 1.0, -1.0});
  Var gamma = constant(Tensor::full({1}, 1.0));
  Var beta = constant(Tensor({1}));
  Tensor rm({1}), rv = Tensor::full({1}, 1.0);
  Var y = batchnorm2d(constant(x), gamma, beta, rm, rv, true);
  for (long i = 0; i < 4; ++i)
    CHECK(y->value[i] == doctest::Approx(x[i]).epsilon(1e-4));

  // gamma=0 maps everything to beta
  Var y2 = batchnorm2d(constant(x), constant(Tensor({1})),
                       constant(Tensor::full({1}, 0.25)), rm, rv, true);
  for (long i = 0; i < 4; ++i) CHECK(y2->value[i] == 0.25);

  // constant input per channel normalizes to zero
  Var y3 = batchnorm2d(constant(Tensor::full({2, 1, 1, 2}, 5.0)),
                       constant(Tensor::full({1}, 1.0)), constant(Tensor({1})), rm, rv, true);
  for (long i = 0; i < 4; ++i) CHECK(y3->value[i] == 0.0);
}

TEST_CASE("batchnorm running stats feed eval mode") {
  Tensor rm({1}), rv = Tensor::full({1}, 1.0);
  Tensor x({2, 1, 1, 2}, {0.0, 2.0, 4.0, 6.0});  // mean 3, biased var 5
  Var gamma = constant(Tensor::full({1}, 1.0));
  Var beta = constant(Tensor({1}));
  batchnorm2d(constant(x), gamma, beta, rm, rv, true);
  CHECK(rm[0] == doctest::Approx(0.3));            // 0.9*0 + 0.1*3
  CHECK(rv[0] == doctest::Approx(0.9 + 2.0 / 3.0));  // unbiased var 20/3
  Var y = batchnorm2d(constant(Tensor::full({1, 1, 1, 1}, 0.3)), gamma, beta, rm, rv, false);
  CHECK(y->value[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax cross entropy trivials") {
  // uniform logits -> ln C
  Var z = constant(Tensor({1, 10}));
  std::vector<int> lab{3};
  CHECK(softmax_cross_entropy(z, lab)->value[0] == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  // saturated correct class -> ~0, stays finite thanks to max-subtraction
  Tensor hot({1, 3});
  hot[1] = 1000.0;
  CHECK(softmax_cross_entropy(constant(hot), {1})->value[0] == doctest::Approx(0.0));
  // two flat logits, label 0 -> ln 2
  CHECK(softmax_cross_entropy(constant(Tensor({1, 2})), {0})->value[0] ==
        doctest::Approx(std::log(2.0)));
  // label out of range
  CHECK_THROWS_AS(softmax_cross_entropy(constant(Tensor({1, 2})), {2}), std::out_of_range);
  CHECK_THROWS_AS(softmax_cross_entropy(constant(Tensor({1, 2})), {-1}), std::out_of_range);
}

TEST_CASE("forward is bitwise deterministic") {
  Rng rng(11);
  Tensor x = random_tensor({3, 2, 8, 8}, rng);
  Tensor k = random_tensor({4, 2, 3, 3}, rng);
  Tensor b = random_tensor({4}, rng);
  Var y1 = conv2d(constant(x), constant(k), constant(b));
  Var y2 = conv2d(constant(x), constant(k), constant(b));
  for (long i = 0; i < y1->value.size(); ++i) CHECK(y1->value[i] == y2->value[i]);
}

}  // TEST_SUITE("autodiff")

TEST_SUITE("gradcheck") {

TEST_CASE("quadratic is exact to roundoff") {
  Rng rng(21);
  double err = grad_check(
      [](const std::vector<Var>& v) { return sum(mul(v[0], v[0])); },
      {random_tensor({6}, rng)}, 1e-4);
  CHECK(err < 1e-9);
}

TEST_CASE("linear layer") {
  Rng rng(22);
  for (int rep = 0; rep < 10; ++rep) {
    double err = grad_check(
        [](const std::vector<Var>& v) { return mean(mul(linear(v[0], v[1], v[2]),
                                                        linear(v[0], v[1], v[2]))); },
        {random_tensor({3, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5}, rng)},
        1e-4);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("conv layer") {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    double err = grad_check(
        [](const std::vector<Var>& v) {
          Var y = conv2d(v[0], v[1], v[2], 1, 1);
          return mean(mul(y, y));
        },
        {random_tensor({2, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng),
         random_tensor({3}, rng)},
        1e-4);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("strided conv") {
  Rng rng(29);
  double err = grad_check(
      [](const std::vector<Var>& v) {
        Var y = conv2d(v[0], v[1], v[2], 2, 1);
        return sum(mul(y, y));
      },
      {random_tensor({2, 2, 6, 7}, rng), random_tensor({2, 2, 3, 3}, rng),
       random_tensor({2}, rng)},
      1e-4);
  CHECK(err < 1e-5);
}

TEST_CASE("relu away from the kink") {
  Rng rng(24);
  // keep coordinates away from 0 so the central difference is valid
  Tensor x = random_tensor({12}, rng);
  for (long i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) < 0.1) x[i] = x[i] < 0 ? x[i] - 0.1 : x[i] + 0.1;
  double err = grad_check(
      [](const std::vector<Var>& v) { return sum(mul(relu(v[0]), relu(v[0]))); }, {x}, 1e-4);
  CHECK(err < 1e-6);
}

TEST_CASE("maxpool with distinct entries") {
  Rng rng(25);
  double err = grad_check(
      [](const std::vector<Var>& v) {
        Var y = maxpool2x2(v[0]);
        return sum(mul(y, y));
      },
      {random_tensor({2, 2, 4, 4}, rng)}, 1e-4);
  CHECK(err < 1e-6);
}

TEST_CASE("batchnorm training mode") {
  Rng rng(26);
  for (int rep = 0; rep < 10; ++rep) {
    double err = grad_check(
        [](const std::vector<Var>& v) {
          Tensor rm({2}), rv = Tensor::full({2}, 1.0);  // fresh stats per eval
          Var y = batchnorm2d(v[0], v[1], v[2], rm, rv, true);
          return mean(mul(y, y));
        },
        {random_tensor({3, 2, 2, 2}, rng), random_tensor({2}, rng, 0.5, 1.5),
         random_tensor({2}, rng)},
        1e-4);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("batchnorm eval mode") {
  Rng rng(27);
  Tensor rm = random_tensor({2}, rng);
  Tensor rv = random_tensor({2}, rng, 0.5, 2.0);
  double err = grad_check(
      [&](const std::vector<Var>& v) {
        Tensor rmc = rm, rvc = rv;
        Var y = batchnorm2d(v[0], v[1], v[2], rmc, rvc, false);
        return mean(mul(y, y));
      },
      {random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng, 0.5, 1.5),
       random_tensor({2}, rng)},
      1e-4);
  CHECK(err < 1e-5);
}

TEST_CASE("softmax cross entropy") {
  Rng rng(28);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<int> labels{1, 0, 3};
    double err = grad_check(
        [labels](const std::vector<Var>& v) { return softmax_cross_entropy(v[0], labels); },
        {random_tensor({3, 4}, rng, -2.0, 2.0)}, 1e-4);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("matmul and composite expression") {
  Rng rng(30);
  double err = grad_check(
      [](const std::vector<Var>& v) { return mean(relu(matmul(v[0], v[1]))); },
      {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)}, 1e-4);
  CHECK(err < 1e-4);
}

TEST_CASE("composite CNN stack") {
  Rng rng(31);
  std::vector<int> labels{2, 0};
  double err = grad_check(
      [labels](const std::vector<Var>& v) {
        Var h = relu(conv2d(v[0], v[1], v[2]));
        Var p = maxpool2x2(h);
        Var f = flatten(p);
        Var logits = linear(f, v[3], v[4]);
        return softmax_cross_entropy(logits, labels);
      },
      {random_tensor({2, 1, 6, 6}, rng), random_tensor({3, 1, 3, 3}, rng),
       random_tensor({3}, rng), random_tensor({4, 12}, rng), random_tensor({4}, rng)},
      1e-4);
  CHECK(err < 1e-4);
}

}  // TEST_SUITE("gradcheck")
