#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "mixnet/autodiff/adam.hpp"
#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"

namespace ad = mixnet::ad;
using mixnet::Rng;
using mixnet::testing::gradcheck;
using mixnet::testing::random_tensor;

namespace {

std::vector<double> vals(const ad::Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST(Elementwise, AddSubMulScale) {
  const auto a = ad::Tensor::from({2}, {1, 2});
  const auto b = ad::Tensor::from({2}, {3, 4});
  EXPECT_EQ(vals(ad::add(a, b)), (std::vector<double>{4, 6}));
  EXPECT_EQ(vals(ad::sub(b, a)), (std::vector<double>{2, 2}));
  EXPECT_EQ(vals(ad::scale(a, 0.0)), (std::vector<double>{0, 0}));
  EXPECT_EQ(vals(ad::mul(ad::Tensor::from({2}, {2, 3}), ad::Tensor::from({2}, {4, 5}))),
            (std::vector<double>{8, 15}));
}

TEST(Elementwise, ShapeMismatchReportsBothShapes) {
  try {
    ad::add(ad::Tensor::zeros({2, 3}), ad::Tensor::zeros({3, 2}));
    FAIL() << "expected ShapeError";
  } catch (const mixnet::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3x2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, Examples) {
  const auto m = ad::Tensor::from({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(vals(ad::matmul(ad::Tensor::from({2, 2}, {1, 0, 0, 1}), m)), vals(m));
  EXPECT_EQ(vals(ad::matmul(m, ad::Tensor::zeros({2, 1}))), (std::vector<double>{0, 0}));
  EXPECT_EQ(vals(ad::matmul(ad::Tensor::from({1, 2}, {1, 2}), ad::Tensor::from({2, 1}, {3, 4}))),
            (std::vector<double>{11}));
  EXPECT_THROW(ad::matmul(m, ad::Tensor::zeros({3, 1})), mixnet::ShapeError);
}

TEST(Conv2d, OneByOneScaling) {
  Rng rng(1);
  const auto x = random_tensor({1, 4, 5}, rng, -1, 1, false);
  const auto y = ad::conv2d(x, ad::Tensor::from({1, 1, 1, 1}, {2}), ad::Tensor::zeros({1}));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], 2 * x[i]);
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(2);
  const auto x = random_tensor({3, 5, 6}, rng, -1, 1, false);
  std::vector<double> k(3 * 3 * 9, 0.0);
  for (std::size_t c = 0; c < 3; ++c) k[(c * 3 + c) * 9 + 4] = 1.0;
  const auto y = ad::conv2d(x, ad::Tensor::from({3, 3, 3, 3}, k), ad::Tensor::zeros({3}));
  EXPECT_EQ(vals(y), vals(x));
}

TEST(Conv2d, OnesKernelZeroPadding) {
  const auto y = ad::conv2d(ad::Tensor::full({1, 3, 3}, 1.0), ad::Tensor::full({1, 1, 3, 3}, 1.0),
                            ad::Tensor::zeros({1}));
  EXPECT_EQ(y[4], 9.0);
  EXPECT_EQ(y[0], 4.0);
  EXPECT_EQ(y[1], 6.0);
}

TEST(Conv2d, EvenKernelRejected) {
  EXPECT_THROW(ad::conv2d(ad::Tensor::zeros({1, 4, 4}), ad::Tensor::zeros({1, 1, 2, 2}), ad::Tensor::zeros({1})),
               mixnet::ShapeError);
}

TEST(ChannelNorm, MatchesReference) {
  const auto x = ad::Tensor::from({2, 1, 3}, {1, 2, 4, 8, -1, 0.5});
  const auto y = ad::channel_norm(x, ad::Tensor::from({2}, {2, -0.5}), ad::Tensor::from({2}, {0.25, 1}));
  const std::vector<double> expected{-1.8880830629005954, -0.28452076572514906, 2.9226038286257436,
                                     0.30149952682164916, 1.444500301113496,    1.2540001720648548};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(y[i], expected[i], 1e-14) << i;
}

TEST(ChannelNorm, ConstantChannelMapsToShift) {
  const auto y = ad::channel_norm(ad::Tensor::full({1, 2, 2}, 3.0), ad::Tensor::from({1}, {5}),
                                  ad::Tensor::from({1}, {0.5}));
  for (double v : y.values()) EXPECT_EQ(v, 0.5);
}

TEST(ChannelNorm, ShapeMismatch) {
  EXPECT_THROW(ad::channel_norm(ad::Tensor::zeros({2, 3, 3}), ad::Tensor::zeros({3}), ad::Tensor::zeros({2})),
               mixnet::ShapeError);
}

TEST(Activations, Examples) {
  EXPECT_EQ(ad::sigmoid(ad::Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_DOUBLE_EQ(ad::leaky_relu(ad::Tensor::scalar(-1.0), 0.2).item(), -0.2);
  double prev = 0.0;
  for (double x : {1.0, 5.0, 20.0, 40.0, 800.0}) {
    const double s = ad::sigmoid(ad::Tensor::scalar(x)).item();
    EXPECT_GE(s, prev);
    EXPECT_LE(s, 1.0);
    prev = s;
  }
  EXPECT_NEAR(prev, 1.0, 1e-15);
  EXPECT_EQ(ad::sigmoid(ad::Tensor::scalar(-800.0)).item(), 0.0);
}

TEST(Reductions, Examples) {
  EXPECT_EQ(ad::sq_l2_norm(ad::Tensor::from({2}, {3, 4})).item(), 25.0);
  EXPECT_DOUBLE_EQ(ad::reduce_mean(ad::Tensor::full({3, 4}, 0.37)).item(), 0.37);
  EXPECT_EQ(ad::reduce_sum(ad::Tensor::zeros({5})).item(), 0.0);
  EXPECT_EQ(ad::dot(ad::Tensor::from({3}, {1, 2, 3}), ad::Tensor::from({3}, {4, 5, 6})).item(), 32.0);
}

TEST(Backward, SquaredNormGradient) {
  const auto x = ad::Tensor::from({2}, {3, 4}, true);
  ad::backward(ad::sq_l2_norm(x));
  EXPECT_EQ(vals(ad::Tensor::from({2}, {x.grad()[0], x.grad()[1]})), (std::vector<double>{6, 8}));
}

TEST(Backward, IndependentLeafGetsZeros) {
  const auto x = ad::Tensor::from({2}, {3, 4}, true);
  const auto z = ad::Tensor::from({3}, {1, 2, 3}, true);
  ad::backward(ad::add(ad::sq_l2_norm(x), ad::scale(ad::reduce_sum(z), 0.0)));
  ASSERT_TRUE(z.has_grad());
  for (double g : z.grad()) EXPECT_EQ(g, 0.0);
  const auto unused = ad::Tensor::from({2}, {1, 1}, true);
  ad::backward(ad::sq_l2_norm(x));
  for (double g : unused.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, RejectsNonScalarLoss) {
  const auto x = ad::Tensor::from({2}, {3, 4}, true);
  EXPECT_THROW(ad::backward(ad::square(x)), mixnet::ShapeError);
}

TEST(Backward, RepeatedCallsAccumulate) {
  auto x = ad::Tensor::from({2}, {3, 4}, true);
  ad::backward(ad::sq_l2_norm(x));
  ad::backward(ad::sq_l2_norm(x));
  EXPECT_EQ(x.grad()[0], 12.0);
  EXPECT_EQ(x.grad()[1], 16.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Backward, SumOfLossesIsSumOfGradients) {
  Rng rng(3);
  auto a = random_tensor({3, 4}, rng);
  auto b = random_tensor({4, 2}, rng);
  auto l1 = [&] { return ad::sq_l2_norm(ad::matmul(a, b)); };
  auto l2 = [&] { return ad::reduce_sum(ad::sigmoid(ad::matmul(a, b))); };
  ad::backward(l1());
  const std::vector<double> g1(a.grad().begin(), a.grad().end());
  a.zero_grad();
  b.zero_grad();
  ad::backward(l2());
  const std::vector<double> g2(a.grad().begin(), a.grad().end());
  a.zero_grad();
  b.zero_grad();
  ad::backward(ad::add(l1(), l2()));
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(a.grad()[i], g1[i] + g2[i], 1e-12);
}

class PrimitiveGradients : public ::testing::Test {
 protected:
  Rng rng{42};
  static constexpr double kTol = 1e-4;
};

TEST_F(PrimitiveGradients, Elementwise) {
  const auto a = random_tensor({3, 4}, rng);
  const auto b = random_tensor({3, 4}, rng);
  const auto w = random_tensor({3, 4}, rng, -1, 1, false);
  auto weighted = [&](const ad::Tensor& t) { return ad::reduce_sum(ad::mul(t, w)); };
  EXPECT_LT(gradcheck([&] { return weighted(ad::add(a, b)); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::sub(a, b)); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::mul(a, b)); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::scale(a, -1.7)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::add_scalar(a, 0.3)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::square(a)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::sigmoid(a)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return weighted(ad::leaky_relu(a, 0.2)); }, {a}), kTol);
}

TEST_F(PrimitiveGradients, MatmulAndLayout) {
  const auto a = random_tensor({3, 4}, rng);
  const auto b = random_tensor({4, 5}, rng);
  const auto w = random_tensor({5, 3}, rng, -1, 1, false);
  EXPECT_LT(gradcheck([&] { return ad::sq_l2_norm(ad::matmul(a, b)); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([&] { return ad::reduce_sum(ad::mul(ad::transpose(ad::matmul(a, b)), w)); }, {a, b}), kTol);
  const auto c = random_tensor({2, 3, 4}, rng);
  const auto wc = random_tensor({4, 2, 3}, rng, -1, 1, false);
  EXPECT_LT(gradcheck([&] { return ad::reduce_sum(ad::mul(ad::permute(c, {2, 0, 1}), wc)); }, {c}), kTol);
  EXPECT_LT(gradcheck([&] { return ad::sq_l2_norm(ad::reshape(c, {6, 4})); }, {c}), kTol);
}

TEST_F(PrimitiveGradients, Conv2d) {
  for (std::size_t k : {1u, 3u, 5u}) {
    const auto x = random_tensor({2, 5, 4}, rng);
    const auto kern = random_tensor({3, 2, k, k}, rng);
    const auto bias = random_tensor({3}, rng);
    const auto w = random_tensor({3, 5, 4}, rng, -1, 1, false);
    EXPECT_LT(gradcheck([&] { return ad::reduce_sum(ad::mul(ad::conv2d(x, kern, bias), w)); }, {x, kern, bias}),
              kTol)
        << "k=" << k;
  }
}

TEST_F(PrimitiveGradients, ChannelNorm) {
  const auto x = random_tensor({3, 4, 5}, rng);
  const auto scale = random_tensor({3}, rng);
  const auto shift = random_tensor({3}, rng);
  const auto w = random_tensor({3, 4, 5}, rng, -1, 1, false);
  EXPECT_LT(gradcheck([&] { return ad::reduce_sum(ad::mul(ad::channel_norm(x, scale, shift), w)); },
                      {x, scale, shift}),
            kTol);
}

TEST_F(PrimitiveGradients, Reductions) {
  const auto a = random_tensor({4, 3}, rng);
  const auto b = random_tensor({4, 3}, rng);
  EXPECT_LT(gradcheck([&] { return ad::square(ad::reduce_sum(a)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return ad::square(ad::reduce_mean(a)); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return ad::sq_l2_norm(a); }, {a}), kTol);
  EXPECT_LT(gradcheck([&] { return ad::square(ad::dot(a, b)); }, {a, b}), kTol);
}

TEST_F(PrimitiveGradients, LinearMap) {
  // y = [x0 + 2 x1, 3 x1]; adjoint given explicitly.
  const auto x = random_tensor({2}, rng);
  auto apply = [](std::span<const double> in, std::span<double> out) {
    out[0] = in[0] + 2 * in[1];
    out[1] = 3 * in[1];
  };
  auto adjoint = [](std::span<const double> in, std::span<double> out) {
    out[0] = in[0];
    out[1] = 2 * in[0] + 3 * in[1];
  };
  EXPECT_LT(gradcheck([&] { return ad::sq_l2_norm(ad::linear_map(x, {2}, apply, adjoint)); }, {x}), kTol);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = ad::Tensor::from({3}, {0.5, -0.5, 1.0}, true);
  ad::backward(ad::dot(p, ad::Tensor::from({3}, {2.0, -3.0, 0.5})));
  ad::AdamState st(3, {.lr = 1e-3});
  ad::adam_step(p, st);
  EXPECT_NEAR(p[0], 0.5 - 1e-3, 1e-10);
  EXPECT_NEAR(p[1], -0.5 + 1e-3, 1e-10);
  EXPECT_NEAR(p[2], 1.0 - 1e-3, 1e-10);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParameterUnchanged) {
  auto p = ad::Tensor::from({2}, {0.25, -4.0}, true);
  ad::backward(ad::scale(ad::reduce_sum(p), 0.0));
  ad::AdamState st(2);
  for (int i = 0; i < 50; ++i) ad::adam_step(p, st);
  EXPECT_EQ(p[0], 0.25);
  EXPECT_EQ(p[1], -4.0);
  EXPECT_EQ(st.step, 50u);
}

TEST(Adam, TwoStepsFollowRecurrence) {
  const double g = 0.4, lr = 1e-2;
  auto p = ad::Tensor::from({1}, {1.0}, true);
  ad::backward(ad::scale(ad::reduce_sum(p), g));
  ad::AdamState st(1, {.lr = lr});
  ad::adam_step(p, st);
  ad::adam_step(p, st);
  EXPECT_EQ(st.step, 2u);
  const double m2 = 0.9 * (0.1 * g) + 0.1 * g;
  const double v2 = 0.999 * (0.001 * g * g) + 0.001 * g * g;
  EXPECT_NEAR(st.first_moment[0], m2, 1e-15);
  EXPECT_NEAR(st.second_moment[0], v2, 1e-15);
  const double step2 = lr * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
  const double step1 = lr * g / (g + 1e-8);
  EXPECT_NEAR(p[0], 1.0 - step1 - step2, 1e-12);
}

TEST(Adam, MissingGradientRejected) {
  auto p = ad::Tensor::from({2}, {1, 2}, true);
  ad::AdamState st(2);
  EXPECT_THROW(ad::adam_step(p, st), std::invalid_argument);
}

TEST(ProjectNonneg, ClampsAndIsIdempotent) {
  auto p = ad::Tensor::from({2}, {-1.0, 0.5}, true);
  ad::project_nonneg(p);
  EXPECT_EQ(vals(p), (std::vector<double>{0.0, 0.5}));
  ad::project_nonneg(p);
  EXPECT_EQ(vals(p), (std::vector<double>{0.0, 0.5}));
  auto q = ad::Tensor::from({3}, {0.0, 2.0, 3.5}, true);
  ad::project_nonneg(q);
  EXPECT_EQ(vals(q), (std::vector<double>{0.0, 2.0, 3.5}));
}

TEST(ProjectNonneg, AfterAdamStepMinimumIsNonnegative) {
  Rng rng(9);
  auto e = random_tensor({8, 3}, rng, 0.0, 0.01);
  ad::AdamState st(e.size(), {.lr = 0.1});
  for (int it = 0; it < 20; ++it) {
    e.zero_grad();
    ad::backward(ad::reduce_sum(e));
    ad::adam_step(e, st);
    ad::project_nonneg(e);
    for (double v : e.values()) ASSERT_GE(v, 0.0);
  }
}
