#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arrayext/radar_model.hpp"
#include "arrayext/sparse_coding.hpp"

namespace arrayext {

/// Per-column statistics of the low-array real samples.
struct NormalizationStats {
  RealVector col_means;
  RealVector col_scales;  // strictly positive
};

/// Real parts stacked above imaginary parts, column by column.
RealMatrix complex_to_real_samples(const ComplexMatrix& signal);
RealMatrix complex_to_real_samples(const ReceivedSignal& signal);
/// Inverse of complex_to_real_samples; the row count must be even.
ComplexMatrix real_to_complex_samples(const RealMatrix& samples);

/// Mean and norm (after mean removal) of every column. Throws
/// DegenerateInputError for a column that is constant.
NormalizationStats column_stats(const RealMatrix& low);
/// (x - mean_c) / scale_c applied per column.
RealMatrix normalize_columns(const RealMatrix& x, const NormalizationStats& stats);
/// x * scale_c + mean_c applied per column.
RealMatrix denormalize_columns(const RealMatrix& x, const NormalizationStats& stats);

struct Preprocessed {
  RealMatrix low;
  RealMatrix high;  // empty when no high signal was given
  NormalizationStats stats;
};

/// Zero-mean, unit-norm low columns; the high columns get the same per-column
/// shift and scale, both computed from the low signal alone.
Preprocessed preprocess(const RealMatrix& y_low, const std::optional<RealMatrix>& y_high = std::nullopt);

/// Coupled pair (D_l, D_h): row blocks of one dictionary with unit-norm stacked atoms.
struct DictionaryPair {
  RealMatrix d_low;   // 2 * M_l * N_l x L
  RealMatrix d_high;  // 2 * M_h * N_h x L
  AngleInterval grid;
  double lambda_train = 0.01;
  ArrayConfig low_config;
  ArrayConfig high_config;
  double train_error = 0.0;  // relative stacked reconstruction error ||Y - D W||_F^2 / ||Y||_F^2
  int n_iters = 0;
  std::uint64_t seed = 0;
  std::vector<OdlIterationLog> log;

  [[nodiscard]] Eigen::Index n_atoms() const { return d_low.cols(); }
  [[nodiscard]] RealMatrix stacked() const;
  void validate() const;
};

struct CoupledTrainingOptions {
  int n_atoms = 256;
  double lambda = 0.01;
  int n_iters = 100;
  int batch_size = 256;
  std::uint64_t seed = 0;
};

/// ODL on the preprocessed stack [Y_l; Y_h]; the learned atoms are split into (D_l, D_h).
DictionaryPair train_coupled(const ReceivedSignal& y_low, const ReceivedSignal& y_high, const AngleInterval& grid,
                             const CoupledTrainingOptions& opts);

/// Same as train_coupled on real samples that are already preprocessed and stacked.
DictionaryPair train_coupled_stacked(const RealMatrix& stacked, Eigen::Index low_rows, const ArrayConfig& low,
                                     const ArrayConfig& high, const AngleInterval& grid,
                                     const CoupledTrainingOptions& opts);

struct LambdaSelection {
  double best_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> validation_errors;  // held-out ||Y - D W||_F^2 per lambda
};

/// Trains on a seeded 90 % column split for every lambda and returns the one
/// with the lowest held-out stacked reconstruction error (ties go to the larger lambda).
LambdaSelection select_lambda(const ReceivedSignal& y_low, const ReceivedSignal& y_high, const AngleInterval& grid,
                              const CoupledTrainingOptions& opts, const std::vector<double>& lambda_grid,
                              double validation_fraction = 0.1);

struct GridDictionaryBank {
  std::vector<DictionaryPair> pairs;
  void validate() const;
};

/// How training measurements are synthesized for one grid.
struct TrainingScenario {
  ArrayConfig low;
  ArrayConfig high;
  int k_targets = 4;
  int n_samples = 10000;
  int pulses_per_scene = 100;
  std::optional<double> snr_db = 10.0;  // nullopt: noiseless
};

/// Coupled training signals: n_samples / pulses_per_scene scenes of k targets
/// drawn uniformly inside the grid, each observed over pulses_per_scene pulses.
CoupledSignals make_training_signals(const AngleInterval& grid, const TrainingScenario& scenario,
                                     std::uint64_t seed);

struct BankTrainingOptions {
  CoupledTrainingOptions training;
  std::vector<double> lambda_grid;  // empty: use training.lambda without a sweep
};

/// One coupled pair per grid, trained independently. Per-grid seeds derive from training.seed.
GridDictionaryBank train_grid_bank(const std::vector<AngleInterval>& grids, const TrainingScenario& scenario,
                                   const BankTrainingOptions& opts);

}  // namespace arrayext
