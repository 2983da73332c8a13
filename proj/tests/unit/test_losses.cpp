#include <gtest/gtest.h>

#include <Eigen/Core>
#include <cmath>

#include "gradcheck.hpp"
#include "mixnet/autodiff/ops.hpp"
#include "mixnet/error.hpp"
#include "mixnet/loss/losses.hpp"

namespace ad = mixnet::ad;
namespace fw = mixnet::forward;
namespace loss = mixnet::loss;
namespace net = mixnet::net;
using mixnet::Rng;
using mixnet::spectral::SpectralCube;
using mixnet::testing::random_tensor;

namespace {

net::BlockOutput block_with(const ad::Tensor& f, const ad::Tensor& abundances) {
  net::BlockOutput b;
  b.f = f;
  b.abundances = abundances;
  return b;
}

double mse(const ad::Tensor& a, const ad::Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST(L2Fidelity, SimpleValue) {
  const auto model = fw::ForwardModel::identity(1, 2, 1);
  const auto y = ad::Tensor::from({1, 2, 1}, {1, 2});
  EXPECT_DOUBLE_EQ(loss::l2_fidelity(y, model, ad::Tensor::zeros({1, 2, 1})).item(), 5.0);
  EXPECT_DOUBLE_EQ(loss::l2_fidelity(y, model, y).item(), 0.0);
}

TEST(L2Fidelity, UsesForwardModel) {
  fw::CodedAperture ones{2, 2, std::vector<std::uint8_t>(4, 1)};
  const auto model = fw::ForwardModel::cassi(2, 2, 2, fw::CassiVariant::dual_disperser, ones);
  const auto f = ad::Tensor::full({2, 2, 2}, 0.5);
  EXPECT_DOUBLE_EQ(loss::l2_fidelity(ad::Tensor::zeros({2, 2, 1}), model, f).item(), 4.0);
  EXPECT_THROW(loss::l2_fidelity(ad::Tensor::zeros({2, 2, 2}), model, f), mixnet::ShapeError);
}

TEST(SumToOne, Values) {
  EXPECT_DOUBLE_EQ(loss::sum_to_one_reg(ad::Tensor::full({2, 2, 2}, 0.25)).item(), 1.0);
  EXPECT_DOUBLE_EQ(loss::sum_to_one_reg(ad::Tensor::full({3, 2, 4}, 0.25)).item(), 0.0);
  EXPECT_DOUBLE_EQ(loss::sum_to_one_violation(ad::Tensor::full({2, 2, 2}, 0.25)), 0.5);
  EXPECT_THROW(loss::sum_to_one_reg(ad::Tensor::zeros({4, 2})), mixnet::ShapeError);
}

TEST(SumToOne, Gradient) {
  Rng rng(1);
  const auto a = random_tensor({3, 3, 2}, rng, 0, 1);
  EXPECT_LT(mixnet::testing::gradcheck([&] { return loss::sum_to_one_reg(a); }, {a}), 1e-7);
}

TEST(SureFidelity, NormalizedAndUnnormalizedForms) {
  const auto model = fw::ForwardModel::identity(1, 2, 1);
  const auto y = ad::Tensor::from({1, 2, 1}, {1, 2});
  const auto f = ad::Tensor::zeros({1, 2, 1});
  const auto div = ad::Tensor::scalar(3.0);
  const double s = 0.5;
  EXPECT_DOUBLE_EQ(loss::sure_fidelity(y, model, f, s, div).item(), 5.0 / 2 - s * s + 2 * s * s / 2 * 3.0);
  EXPECT_DOUBLE_EQ(loss::sure_fidelity(y, model, f, s, div, loss::SureForm::unnormalized).item(),
                   5.0 - s * s + 2 * s / 2 * 3.0);
  EXPECT_THROW(loss::sure_fidelity(y, model, f, -1.0, div), std::invalid_argument);
}

TEST(SureFidelity, IncreasesWithDivergence) {
  const auto model = fw::ForwardModel::identity(2, 2, 1);
  const auto y = ad::Tensor::full({2, 2, 1}, 0.3);
  const auto f = ad::Tensor::full({2, 2, 1}, 0.1);
  double prev = -1e300;
  for (double d : {-2.0, 0.0, 1.0, 5.0}) {
    const double v = loss::sure_fidelity(y, model, f, 0.2, ad::Tensor::scalar(d)).item();
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(SureFidelity, IdentityDenoiserEstimatesNoiseVariance) {
  // For f(y) = y the true risk per entry is sigma^2.
  const double sigma = 0.1;
  const auto model = fw::ForwardModel::identity(64, 64, 1);
  const auto y = fw::add_gaussian_noise(ad::Tensor::full({64, 64, 1}, 0.5), sigma, 3);
  Rng rng(4);
  const auto div = loss::mc_divergence([](const ad::Tensor& x) { return x; }, y, model, 1e-5, rng);
  const double sure = loss::sure_fidelity(y, model, y, sigma, div).item();
  EXPECT_NEAR(sure, sigma * sigma, 0.1 * sigma * sigma);
}

TEST(SureFidelity, TracksRiskOfShrinkageDenoiser) {
  const double sigma = 0.1;
  Rng rng(5);
  const auto clean = random_tensor({64, 64, 2}, rng, 0, 1, false);
  const auto y = fw::add_gaussian_noise(clean, sigma, 6);
  const auto model = fw::ForwardModel::identity(64, 64, 2);
  for (double c : {0.5, 0.8, 0.95}) {
    auto shrink = [c](const ad::Tensor& x) { return ad::scale(x, c); };
    const auto div = loss::mc_divergence(shrink, y, model, 1e-5, rng, 4);
    const double sure = loss::sure_fidelity(y, model, shrink(y), sigma, div).item();
    const double risk = mse(shrink(y), clean);
    EXPECT_NEAR(sure, risk, 0.1 * risk) << "c=" << c;
  }
}

TEST(Divergence, ExactForScaledIdentityProbe) {
  const auto b = ad::Tensor::from({1, 3, 1}, {1, -2, 0.5});
  const auto base = ad::Tensor::from({1, 3, 1}, {0.1, 0.2, 0.3});
  const auto shifted = ad::add(base, ad::scale(b, 1e-3 * 2.0));
  EXPECT_NEAR(loss::divergence_from_probe(b, shifted, base, 1e-3).item(), 2.0 * 5.25, 1e-9);
  EXPECT_THROW(loss::divergence_from_probe(b, ad::Tensor::zeros({1, 2, 1}), base, 1e-3), mixnet::ShapeError);
  EXPECT_THROW(loss::divergence_from_probe(b, shifted, base, 0.0), std::invalid_argument);
}

TEST(Divergence, MonteCarloMatchesTrace) {
  Rng rng(7);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(9, 9);
  const double trace = a.trace();
  auto fn = [&](const ad::Tensor& x) {
    return ad::linear_map(
        x, {3, 3, 1},
        [&](std::span<const double> in, std::span<double> out) {
          Eigen::Map<Eigen::VectorXd>(out.data(), 9) = a * Eigen::Map<const Eigen::VectorXd>(in.data(), 9);
        },
        [&](std::span<const double> in, std::span<double> out) {
          Eigen::Map<Eigen::VectorXd>(out.data(), 9) =
              a.transpose() * Eigen::Map<const Eigen::VectorXd>(in.data(), 9);
        });
  };
  const auto model = fw::ForwardModel::identity(3, 3, 1);
  const auto f0 = random_tensor({3, 3, 1}, rng, 0, 1, false);
  const std::size_t probes = 4000;
  const double est = loss::mc_divergence(fn, f0, model, 1e-4, rng, probes).item();
  // Var(b^T A b) = |A|_F^2 + tr(A^2) for Gaussian b.
  const double sd = std::sqrt(((a.squaredNorm() + (a * a).trace()) / static_cast<double>(probes)));
  EXPECT_NEAR(est, trace, 5.0 * sd);
}

TEST(Divergence, RejectsMismatchedSizes) {
  Rng rng(8);
  const auto model = fw::ForwardModel::blur_downsample(4, 4, 1, 2, fw::make_gaussian_kernel(2));
  EXPECT_THROW(loss::mc_divergence([](const ad::Tensor& x) { return x; }, ad::Tensor::zeros({4, 4, 1}), model, 1e-5,
                                   rng),
               mixnet::ShapeError);
}

TEST(Divergence, DifferentiableThroughNetworkMap) {
  const auto model = fw::ForwardModel::identity(2, 2, 2);
  const auto w = ad::Tensor::from({2, 2}, {0.7, -0.3, 0.2, 1.1}, true);
  auto fn = [&](const ad::Tensor& x) {
    return ad::reshape(ad::sigmoid(ad::matmul(ad::reshape(x, {4, 2}), w)), {2, 2, 2});
  };
  const auto f0 = ad::Tensor::from({2, 2, 2}, {0.1, 0.4, -0.2, 0.3, 0.8, -0.5, 0.0, 0.6});
  EXPECT_LT(mixnet::testing::gradcheck(
                [&] {
                  Rng rng(9);
                  return loss::mc_divergence(fn, f0, model, 1e-3, rng);
                },
                {w}),
            1e-5);
}

TEST(LossConfig, Validation) {
  loss::LossConfig c;
  c.tau = {1.0, 1.0};
  c.gamma = {0.5};
  EXPECT_THROW(c.validate(2), std::invalid_argument);
  c.gamma = {0.5, 0.5};
  EXPECT_NO_THROW(c.validate(2));
  c.tau = {-1.0, 1.0};
  EXPECT_THROW(c.validate(2), std::invalid_argument);
  c.tau = {1.0, 1.0};
  c.sure_eps = 0.0;
  EXPECT_THROW(c.validate(2), std::invalid_argument);
}

TEST(MultiBlockLoss, WeightedSumOfBlockTerms) {
  Rng rng(10);
  const auto model = fw::ForwardModel::identity(3, 3, 2);
  const auto y = random_tensor({3, 3, 2}, rng, 0, 1, false);
  std::vector<net::BlockOutput> blocks;
  for (int k = 0; k < 3; ++k) {
    blocks.push_back(block_with(random_tensor({3, 3, 2}, rng, 0, 1, false), random_tensor({3, 3, 2}, rng, 0, 1, false)));
  }
  loss::LossConfig c;
  c.tau = {0.2, 0.0, 1.0};
  c.gamma = {0.5, 0.5, 0.1};
  double expected = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    expected += c.tau[k] * (loss::l2_fidelity(y, model, blocks[k].f).item() +
                            c.gamma[k] * loss::sum_to_one_reg(blocks[k].abundances).item());
  }
  EXPECT_NEAR(loss::multi_block_loss(c, y, model, blocks).item(), expected, 1e-12);

  c.tau = {0.0, 0.0, 0.0};
  EXPECT_THROW(loss::multi_block_loss(c, y, model, blocks), std::invalid_argument);
}

TEST(MultiBlockLoss, SureTermsUsePerBlockDivergence) {
  Rng rng(11);
  const auto model = fw::ForwardModel::identity(3, 3, 2);
  const auto y = random_tensor({3, 3, 2}, rng, 0, 1, false);
  std::vector<net::BlockOutput> blocks = {
      block_with(random_tensor({3, 3, 2}, rng, 0, 1, false), random_tensor({3, 3, 2}, rng, 0, 1, false)),
      block_with(random_tensor({3, 3, 2}, rng, 0, 1, false), random_tensor({3, 3, 2}, rng, 0, 1, false))};
  loss::LossConfig c;
  c.fidelity = loss::Fidelity::sure;
  c.sigma = 0.1;
  c.tau = {0.0, 1.0};
  c.gamma = {0.5, 0.5};
  const std::vector<ad::Tensor> divs = {ad::Tensor{}, ad::Tensor::scalar(7.0)};
  const double m = 18.0;
  const double expected = loss::sure_fidelity(y, model, blocks[1].f, 0.1, divs[1]).item() +
                          0.5 / m * loss::sum_to_one_reg(blocks[1].abundances).item();
  EXPECT_NEAR(loss::multi_block_loss(c, y, model, blocks, divs).item(), expected, 1e-12);

  c.tau = {1.0, 1.0};
  EXPECT_THROW(loss::multi_block_loss(c, y, model, blocks, divs), std::invalid_argument);
  EXPECT_THROW(loss::multi_block_loss(c, y, model, blocks), std::invalid_argument);
}

TEST(EstimateSigma, ConstantCubeIsNoiseFree) {
  EXPECT_EQ(loss::estimate_sigma(SpectralCube(8, 8, 3, 0.7)), 0.0);
  EXPECT_THROW(loss::estimate_sigma(SpectralCube(1, 8, 3, 0.7)), std::invalid_argument);
}

TEST(EstimateSigma, GaussianNoiseLevel) {
  for (double sigma : {0.05, 0.1, 0.2}) {
    const auto y = fw::add_gaussian_noise(ad::Tensor::full({128, 128, 4}, 0.5), sigma, 12);
    EXPECT_NEAR(loss::estimate_sigma(SpectralCube::from_tensor(y)), sigma, 0.05 * sigma);
  }
}

TEST(EstimateSigma, InvariantToPlanarTrends) {
  // Dyadic values keep every Haar coefficient exact, so the estimate must not move.
  Rng rng(13);
  SpectralCube noise(16, 16, 2), trend(16, 16, 2);
  for (std::size_t i = 0; i < 16; ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      for (std::size_t l = 0; l < 2; ++l) {
        noise(i, j, l) = std::floor(rng.uniform(-32, 32)) / 64.0;
        trend(i, j, l) = noise(i, j, l) + 0.25 * static_cast<double>(i) - 0.125 * static_cast<double>(j) + 0.5;
      }
    }
  }
  EXPECT_EQ(loss::estimate_sigma(noise), loss::estimate_sigma(trend));
}

TEST(EstimateSigma, OddSizesDropLastRowAndColumn) {
  Rng rng(14);
  SpectralCube odd(5, 7, 1), even(4, 6, 1);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      odd(i, j, 0) = rng.normal();
      if (i < 4 && j < 6) even(i, j, 0) = odd(i, j, 0);
    }
  }
  EXPECT_EQ(loss::estimate_sigma(odd), loss::estimate_sigma(even));
}

TEST(LossNames, ParseRoundTrip) {
  for (auto f : {loss::Fidelity::l2, loss::Fidelity::sure}) EXPECT_EQ(loss::parse_fidelity(loss::to_string(f)), f);
  for (auto f : {loss::SureForm::normalized, loss::SureForm::unnormalized}) {
    EXPECT_EQ(loss::parse_sure_form(loss::to_string(f)), f);
  }
  EXPECT_THROW(loss::parse_fidelity("l1"), std::invalid_argument);
}
