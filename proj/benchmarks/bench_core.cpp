#include <benchmark/benchmark.h>

#include "mixnet/autodiff/ops.hpp"
#include "mixnet/forward/forward_model.hpp"
#include "mixnet/loss/losses.hpp"
#include "mixnet/net/mixture_net.hpp"
#include "mixnet/recovery/config.hpp"
#include "mixnet/recovery/recovery.hpp"
#include "mixnet/recovery/synthetic.hpp"
#include "mixnet/spectral/tucker.hpp"

namespace ad = mixnet::ad;
namespace fw = mixnet::forward;
using mixnet::Rng;

namespace {

ad::Tensor random_tensor(ad::Shape shape, Rng& rng, bool grad) {
  std::vector<double> v(ad::num_elements(shape));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return ad::Tensor::from(std::move(shape), std::move(v), grad);
}

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  const auto size = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto x = random_tensor({channels, size, size}, rng, true);
  const auto k = random_tensor({channels, channels, 3, 3}, rng, true);
  const auto b = random_tensor({channels}, rng, true);
  for (auto _ : state) {
    auto y = ad::sq_l2_norm(ad::conv2d(x, k, b));
    ad::backward(y);
    benchmark::DoNotOptimize(k.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Args({8, 32})->Args({32, 32})->Args({32, 64})->Unit(benchmark::kMicrosecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const auto a = random_tensor({n, n}, rng, false);
  const auto b = random_tensor({n, n}, rng, false);
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b).values().data());
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_TuckerCompose(benchmark::State& state) {
  Rng rng(3);
  const auto t = mixnet::spectral::make_tucker_input(64, 64, 31, 0.4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mixnet::spectral::tucker_compose(t).values().data());
}
BENCHMARK(BM_TuckerCompose)->Unit(benchmark::kMicrosecond);

void BM_ForwardModels(benchmark::State& state) {
  const std::size_t n = 64, l = 16;
  Rng rng(4);
  const auto f = random_tensor({n, n, l}, rng, false);
  const auto model =
      state.range(0) == 0 ? fw::ForwardModel::blur_downsample(n, n, l, 4, fw::make_gaussian_kernel(4))
      : state.range(0) == 1
          ? fw::ForwardModel::cassi(n, n, l, fw::CassiVariant::dual_disperser, fw::make_coded_aperture(n, n, 1))
          : fw::ForwardModel::cassi(n, n, l, fw::CassiVariant::single_disperser, fw::make_coded_aperture(n, n, 1));
  for (auto _ : state) {
    const auto y = model.apply(f);
    benchmark::DoNotOptimize(model.adjoint(y).values().data());
  }
  std::string label(fw::to_string(model.kind()));
  if (model.kind() == fw::ModelKind::cassi) label += "/" + std::string(fw::to_string(model.variant()));
  state.SetLabel(label);
}
BENCHMARK(BM_ForwardModels)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_NetForwardBackward(benchmark::State& state) {
  mixnet::net::MixtureNetConfig cfg;
  Rng rng(5);
  const mixnet::net::MixtureNet net(cfg, 32, 32, 8, rng);
  const auto f0 = random_tensor({32, 32, 8}, rng, false);
  for (auto _ : state) {
    auto out = net.forward(f0);
    ad::backward(ad::sq_l2_norm(out.output));
  }
}
BENCHMARK(BM_NetForwardBackward)->Unit(benchmark::kMillisecond);

// Full iterations of the default denoising setup (SURE adds a second forward pass).
void BM_RecoveryIterations(benchmark::State& state) {
  mixnet::recovery::RecoveryConfig cfg;
  cfg.task = state.range(0) == 0 ? mixnet::recovery::Task::denoise : mixnet::recovery::Task::csi;
  cfg.iterations = 10;
  const auto scene = mixnet::recovery::make_synthetic(32, 32, 8, 3, 1);
  const auto model = mixnet::recovery::make_task_model(cfg, 32, 32, 8);
  const auto y = mixnet::recovery::simulate_measurements(cfg, model, scene.cube);
  for (auto _ : state) benchmark::DoNotOptimize(mixnet::recovery::run_recovery(cfg, y, model).recovered.size());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 10);
  state.SetLabel(std::string(mixnet::recovery::to_string(cfg.task)));
}
BENCHMARK(BM_RecoveryIterations)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
