#include "arrayext/coupled_dict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arrayext/rng.hpp"

namespace arrayext {

RealMatrix complex_to_real_samples(const ComplexMatrix& signal) {
  RealMatrix out(2 * signal.rows(), signal.cols());
  out.topRows(signal.rows()) = signal.real();
  out.bottomRows(signal.rows()) = signal.imag();
  return out;
}

RealMatrix complex_to_real_samples(const ReceivedSignal& signal) { return complex_to_real_samples(signal.data); }

ComplexMatrix real_to_complex_samples(const RealMatrix& samples) {
  if (samples.rows() % 2 != 0) throw ShapeError("real sample matrix needs an even number of rows");
  const Eigen::Index n = samples.rows() / 2;
  ComplexMatrix out(n, samples.cols());
  out.real() = samples.topRows(n);
  out.imag() = samples.bottomRows(n);
  return out;
}

NormalizationStats column_stats(const RealMatrix& low) {
  if (low.rows() < 1) throw ShapeError("cannot normalize an empty column");
  NormalizationStats stats{low.colwise().mean().transpose(), RealVector(low.cols())};
  for (Eigen::Index c = 0; c < low.cols(); ++c) {
    const double scale = (low.col(c).array() - stats.col_means(c)).matrix().norm();
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw DegenerateInputError("column " + std::to_string(c) + " has zero norm after mean removal");
    }
    stats.col_scales(c) = scale;
  }
  return stats;
}

RealMatrix normalize_columns(const RealMatrix& x, const NormalizationStats& stats) {
  if (x.cols() != stats.col_means.size() || x.cols() != stats.col_scales.size()) {
    throw ShapeError("normalization statistics do not match the column count");
  }
  RealMatrix out = x.rowwise() - stats.col_means.transpose();
  out.array().rowwise() /= stats.col_scales.transpose().array();
  return out;
}

RealMatrix denormalize_columns(const RealMatrix& x, const NormalizationStats& stats) {
  if (x.cols() != stats.col_means.size() || x.cols() != stats.col_scales.size()) {
    throw ShapeError("normalization statistics do not match the column count");
  }
  RealMatrix out = x.array().rowwise() * stats.col_scales.transpose().array();
  out.rowwise() += stats.col_means.transpose();
  return out;
}

Preprocessed preprocess(const RealMatrix& y_low, const std::optional<RealMatrix>& y_high) {
  if (y_high && y_high->cols() != y_low.cols()) {
    throw ShapeError("low and high training signals have different column counts");
  }
  Preprocessed out;
  out.stats = column_stats(y_low);
  out.low = normalize_columns(y_low, out.stats);
  if (y_high) out.high = normalize_columns(*y_high, out.stats);
  return out;
}

RealMatrix DictionaryPair::stacked() const {
  RealMatrix d(d_low.rows() + d_high.rows(), d_low.cols());
  d.topRows(d_low.rows()) = d_low;
  d.bottomRows(d_high.rows()) = d_high;
  return d;
}

void DictionaryPair::validate() const {
  low_config.validate();
  high_config.validate();
  grid.validate();
  if (d_low.cols() != d_high.cols() || d_low.cols() < 1) throw ShapeError("coupled dictionaries differ in atom count");
  if (d_low.rows() != 2 * low_config.virtual_size() || d_high.rows() != 2 * high_config.virtual_size()) {
    throw ShapeError("coupled dictionary rows do not match the array configurations");
  }
  const RealVector norms = (d_low.colwise().squaredNorm() + d_high.colwise().squaredNorm()).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (std::abs(norms(j) - 1.0) > Dictionary::kNormTolerance) {
      throw std::invalid_argument("stacked atom " + std::to_string(j) + " is not unit norm");
    }
  }
}

namespace {

void check_training_inputs(const ReceivedSignal& y_low, const ReceivedSignal& y_high,
                           const CoupledTrainingOptions& opts) {
  y_low.validate();
  y_high.validate();
  if (y_low.data.cols() != y_high.data.cols()) {
    throw ShapeError("low and high training signals have different column counts");
  }
  if (opts.n_atoms < y_high.config.virtual_size()) {
    throw std::invalid_argument("dictionary size " + std::to_string(opts.n_atoms) + " is below M_h * N_h = " +
                                std::to_string(y_high.config.virtual_size()));
  }
}

RealMatrix stack_rows(const RealMatrix& top, const RealMatrix& bottom) {
  RealMatrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

RealMatrix preprocessed_stack(const ReceivedSignal& y_low, const ReceivedSignal& y_high) {
  const Preprocessed pre = preprocess(complex_to_real_samples(y_low), complex_to_real_samples(y_high));
  return stack_rows(pre.low, pre.high);
}

RealMatrix select_columns(const RealMatrix& x, const std::vector<Eigen::Index>& cols) {
  RealMatrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(cols[i]);
  return out;
}

}  // namespace

DictionaryPair train_coupled_stacked(const RealMatrix& stacked, Eigen::Index low_rows, const ArrayConfig& low,
                                     const ArrayConfig& high, const AngleInterval& grid,
                                     const CoupledTrainingOptions& opts) {
  OdlOptions odl;
  odl.n_atoms = opts.n_atoms;
  odl.lambda = opts.lambda;
  odl.n_iters = opts.n_iters;
  odl.batch_size = opts.batch_size;
  odl.seed = opts.seed;
  OdlResult learned = odl_train(stacked, odl);

  const RealMatrix& d = learned.dict.atoms();
  DictionaryPair pair;
  pair.d_low = d.topRows(low_rows);
  pair.d_high = d.bottomRows(d.rows() - low_rows);
  pair.grid = grid;
  pair.lambda_train = opts.lambda;
  pair.low_config = low;
  pair.high_config = high;
  pair.n_iters = opts.n_iters;
  pair.seed = opts.seed;
  pair.log = std::move(learned.log);

  const SparseCodeMatrix w = LassoSolver(d).solve(stacked, LassoOptions{opts.lambda, 1e-6, 500});
  pair.train_error = reconstruction_error(d, w.codes, stacked) / stacked.squaredNorm();
  return pair;
}

DictionaryPair train_coupled(const ReceivedSignal& y_low, const ReceivedSignal& y_high, const AngleInterval& grid,
                             const CoupledTrainingOptions& opts) {
  grid.validate();
  check_training_inputs(y_low, y_high, opts);
  const RealMatrix stacked = preprocessed_stack(y_low, y_high);
  return train_coupled_stacked(stacked, 2 * y_low.config.virtual_size(), y_low.config, y_high.config, grid, opts);
}

LambdaSelection select_lambda(const ReceivedSignal& y_low, const ReceivedSignal& y_high, const AngleInterval& grid,
                              const CoupledTrainingOptions& opts, const std::vector<double>& lambda_grid,
                              double validation_fraction) {
  if (lambda_grid.empty()) throw std::invalid_argument("lambda grid is empty");
  for (double l : lambda_grid) {
    if (!(l > 0.0)) throw std::invalid_argument("lambda grid values must be positive");
  }
  grid.validate();
  check_training_inputs(y_low, y_high, opts);
  const RealMatrix stacked = preprocessed_stack(y_low, y_high);

  LambdaSelection out;
  out.lambdas = lambda_grid;

  const Eigen::Index n = stacked.cols();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(derive_seed(opts.seed, {0x5e1ec7}));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_val = std::clamp<Eigen::Index>(
      static_cast<Eigen::Index>(std::llround(validation_fraction * static_cast<double>(n))), 1, std::max<Eigen::Index>(n - 1, 1));
  const std::vector<Eigen::Index> val_cols(perm.begin(), perm.begin() + n_val);
  const std::vector<Eigen::Index> train_cols(perm.begin() + n_val, perm.end());
  if (train_cols.empty()) throw DegenerateInputError("not enough columns for a validation split");
  const RealMatrix train = select_columns(stacked, train_cols);
  const RealMatrix val = select_columns(stacked, val_cols);

  const Eigen::Index low_rows = 2 * y_low.config.virtual_size();
  double best_err = 0.0;
  for (double lambda : lambda_grid) {
    CoupledTrainingOptions o = opts;
    o.lambda = lambda;
    const DictionaryPair pair = train_coupled_stacked(train, low_rows, y_low.config, y_high.config, grid, o);
    const RealMatrix d = pair.stacked();
    const SparseCodeMatrix w = LassoSolver(d).solve(val, LassoOptions{lambda, 1e-6, 500});
    const double err = reconstruction_error(d, w.codes, val);
    out.validation_errors.push_back(err);
    if (out.validation_errors.size() == 1 || err < best_err || (err == best_err && lambda > out.best_lambda)) {
      best_err = err;
      out.best_lambda = lambda;
    }
  }
  return out;
}

void GridDictionaryBank::validate() const {
  if (pairs.empty()) throw std::invalid_argument("dictionary bank is empty");
  for (const auto& p : pairs) p.validate();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      if (pairs[i].grid == pairs[j].grid) throw std::invalid_argument("dictionary bank has duplicate grids");
    }
  }
}

CoupledSignals make_training_signals(const AngleInterval& grid, const TrainingScenario& scenario,
                                     std::uint64_t seed) {
  grid.validate();
  if (scenario.k_targets < 1 || scenario.n_samples < 1 || scenario.pulses_per_scene < 1) {
    throw std::invalid_argument("training scenario counts must be positive");
  }
  const int n_scenes = (scenario.n_samples + scenario.pulses_per_scene - 1) / scenario.pulses_per_scene;
  CoupledSignals out{
      ReceivedSignal{ComplexMatrix(scenario.low.virtual_size(), scenario.n_samples), scenario.low, scenario.snr_db},
      ReceivedSignal{ComplexMatrix(scenario.high.virtual_size(), scenario.n_samples), scenario.high, scenario.snr_db}};

  int filled = 0;
  for (int s = 0; s < n_scenes; ++s) {
    const int pulses = std::min(scenario.pulses_per_scene, scenario.n_samples - filled);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(s), 0}));
    std::uniform_real_distribution<double> angle(grid.lo, grid.hi);
    std::vector<double> angles(static_cast<std::size_t>(scenario.k_targets));
    for (auto& a : angles) a = angle(rng);
    const TargetScene scene = TargetScene::make(
        std::move(angles), draw_rcs(scenario.k_targets, pulses, derive_seed(seed, {static_cast<std::uint64_t>(s), 1})));
    const CoupledSignals sig = synth_coupled(scene, scenario.low, scenario.high, scenario.snr_db,
                                             derive_seed(seed, {static_cast<std::uint64_t>(s), 2}));
    out.low.data.middleCols(filled, pulses) = sig.low.data;
    out.high.data.middleCols(filled, pulses) = sig.high.data;
    filled += pulses;
  }
  return out;
}

GridDictionaryBank train_grid_bank(const std::vector<AngleInterval>& grids, const TrainingScenario& scenario,
                                   const BankTrainingOptions& opts) {
  if (grids.empty()) throw std::invalid_argument("no training grids given");
  GridDictionaryBank bank;
  for (std::size_t g = 0; g < grids.size(); ++g) {
    const std::uint64_t grid_seed = derive_seed(opts.training.seed, {static_cast<std::uint64_t>(g)});
    const CoupledSignals data = make_training_signals(grids[g], scenario, derive_seed(grid_seed, {0xda7a}));
    CoupledTrainingOptions o = opts.training;
    o.seed = grid_seed;
    if (!opts.lambda_grid.empty()) {
      o.lambda = select_lambda(data.low, data.high, grids[g], o, opts.lambda_grid).best_lambda;
    }
    bank.pairs.push_back(train_coupled(data.low, data.high, grids[g], o));
  }
  bank.validate();
  return bank;
}

}  // namespace arrayext
