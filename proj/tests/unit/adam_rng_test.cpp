#include <gtest/gtest.h>

#include <cmath>

#include "trace/error.hpp"
#include "trace/nn/adam.hpp"
#include "trace/nn/rng.hpp"

namespace trace::nn {
namespace {

TEST(AdamTest, ZeroGradientKeepsValue) {
  Parameter p("p", Tensor({2, 3}, 0.75f));
  Parameter* ps[] = {&p};
  adam_step(ps, {});
  for (float x : p.value.values()) EXPECT_EQ(x, 0.75f);
  EXPECT_EQ(p.step_count, 1u);
}

TEST(AdamTest, FirstUnitGradientStepIsLearningRate) {
  Parameter p("p", Tensor({1, 4}, 1.0f));
  p.grad.fill(1.0f);
  Parameter* ps[] = {&p};
  adam_step(ps, {});
  // m_hat = 1, v_hat = 1: delta = -lr / (1 + eps).
  for (float x : p.value.values()) EXPECT_NEAR(x, 1.0f - 0.001f, 1e-7);
  for (float g : p.grad.values()) EXPECT_EQ(g, 0.0f);
}

TEST(AdamTest, ConstantGradientGivesUnitSteps) {
  // The bias-corrected moments of a constant gradient equal g and g^2 at
  // every step, so each update has magnitude lr regardless of |g|.
  for (float g : {0.01f, 3.0f, -250.0f}) {
    Parameter p("p", Tensor({1, 1}, 0.0f));
    Parameter* ps[] = {&p};
    float prev = 0.0f;
    for (int step = 1; step <= 200; ++step) {
      p.grad[0] = g;
      adam_step(ps, {});
      const float delta = p.value[0] - prev;
      prev = p.value[0];
      EXPECT_NEAR(std::abs(delta), 0.001f, 2e-6) << "g=" << g << " step " << step;
      EXPECT_LT(delta * g, 0.0f);
    }
    EXPECT_EQ(p.step_count, 200u);
  }
}

TEST(AdamTest, MatchesDoubleReferenceForVaryingGradients) {
  Parameter p("p", Tensor({1, 1}, 0.5f));
  Parameter* ps[] = {&p};
  double w = 0.5, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, lr = 0.001, eps = 1e-8;
  for (int t = 1; t <= 50; ++t) {
    const double g = std::sin(t * 0.7) * 2.0;
    p.grad[0] = static_cast<float>(g);
    adam_step(ps, {});
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    w -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    EXPECT_NEAR(p.value[0], w, 1e-6) << t;
  }
}

TEST(AdamTest, RejectsNonPositiveLearningRate) {
  Parameter p("p", Tensor({1, 1}));
  Parameter* ps[] = {&p};
  AdamSettings s;
  s.lr = 0.0f;
  EXPECT_THROW(adam_step(ps, s), Error);
}

TEST(RngTest, SeededSequenceIsDeterministic) {
  Rng64 a(42), b(42);
  const auto a1 = a.next_u64(), a2 = a.next_u64();
  EXPECT_NE(a1, a2);
  EXPECT_EQ(a1, b.next_u64());
  EXPECT_EQ(a2, b.next_u64());
  // Published SplitMix64 output for seed 0.
  Rng64 z(0);
  EXPECT_EQ(z.next_u64(), 0xe220a8397b1dcdafULL);
}

TEST(RngTest, NarrowRangeStaysInside) {
  Rng64 r(7);
  const float hi = 1.0f;
  const float lo = std::nextafter(hi, 0.0f);
  for (int i = 0; i < 1000; ++i) {
    const float x = r.uniform(lo, hi);
    EXPECT_GE(x, lo);
    EXPECT_LT(x, hi);
  }
  for (int i = 0; i < 1000; ++i) {
    const float x = r.uniform(-0.25f, 0.25f);
    EXPECT_GE(x, -0.25f);
    EXPECT_LT(x, 0.25f);
  }
}

TEST(RngTest, UniformMeanNearHalf) {
  Rng64 r(2024);
  double total = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) total += r.uniform(0.0f, 1.0f);
  EXPECT_NEAR(total / n, 0.5, 0.01);
}

TEST(RngTest, RejectsEmptyRange) {
  Rng64 r(1);
  EXPECT_THROW(r.uniform(1.0f, 1.0f), Error);
  EXPECT_THROW(r.uniform(2.0f, 1.0f), Error);
}

}  // namespace
}  // namespace trace::nn
