#include <random>

#include <benchmark/benchmark.h>

#include "arrayext/coupled_dict.hpp"
#include "arrayext/music.hpp"
#include "arrayext/prediction.hpp"
#include "arrayext/rng.hpp"

using namespace arrayext;

namespace {

RealMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  RealMatrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

RealMatrix unit_columns(RealMatrix m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).normalize();
  return m;
}

ReceivedSignal four_target_signal(const ArrayConfig& cfg, std::uint64_t seed) {
  const TargetScene scene = TargetScene::make({13.0, 18.0, 23.0, 28.0}, draw_rcs(4, 100, seed));
  return synth_received(scene, cfg, -10.0, seed + 1);
}

void BM_Lasso(benchmark::State& state) {
  const auto features = state.range(0);
  const auto atoms = state.range(1);
  const RealMatrix d = unit_columns(random_matrix(features, atoms, 1));
  const LassoSolver solver(d);
  RealMatrix codes = RealMatrix::Zero(atoms, 100);
  Rng rng(2);
  std::uniform_int_distribution<Eigen::Index> pick(0, atoms - 1);
  for (Eigen::Index c = 0; c < codes.cols(); ++c)
    for (int s = 0; s < 4; ++s) codes(pick(rng), c) = 1.0;
  const RealMatrix y = d * codes + 0.05 * random_matrix(features, 100, 3);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(y, LassoOptions{0.01, 1e-6, 500}));
  state.SetItemsProcessed(state.iterations() * y.cols());
}
BENCHMARK(BM_Lasso)->Args({200, 256})->Args({712, 256})->Unit(benchmark::kMillisecond);

void BM_Music(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const ArrayConfig cfg{m, m, 0.5};
  const ReceivedSignal y = four_target_signal(cfg, 3);
  const std::vector<double> grid = make_angle_grid();
  for (auto _ : state) benchmark::DoNotOptimize(estimate_doa(y, 4, grid));
}
BENCHMARK(BM_Music)->Arg(6)->Arg(10)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_OdlIteration(benchmark::State& state) {
  const RealMatrix y = unit_columns(random_matrix(200, 2048, 4));
  OdlOptions opts;
  opts.n_atoms = 256;
  opts.lambda = 0.01;
  opts.batch_size = 256;
  opts.seed = 5;
  for (auto _ : state) {
    opts.n_iters = 1;
    benchmark::DoNotOptimize(odl_train(y, opts));
  }
}
BENCHMARK(BM_OdlIteration)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  TrainingScenario s;
  s.low = {6, 6, 0.5};
  s.high = {10, 10, 0.5};
  s.n_samples = 2000;
  s.pulses_per_scene = 100;
  const CoupledSignals train = make_training_signals({10.0, 35.0}, s, 6);
  const DictionaryPair pair =
      train_coupled(train.low, train.high, {10.0, 35.0}, CoupledTrainingOptions{256, 0.01, 10, 256, 7});
  const Predictor predictor(pair);
  const ReceivedSignal y = four_target_signal(s.low, 8);
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict(y, PredictionConfig{}));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
