#pragma once

#include <cstdint>
#include <vector>

#include "arrayext/types.hpp"

namespace arrayext {

/// Real dictionary with unit-norm atoms (columns).
class Dictionary {
 public:
  static constexpr double kNormTolerance = 1e-8;

  Dictionary() = default;
  /// Throws std::invalid_argument if any column norm differs from 1 by more than kNormTolerance.
  explicit Dictionary(RealMatrix atoms);
  /// Normalizes every column; zero columns are rejected.
  static Dictionary normalized(RealMatrix atoms);

  [[nodiscard]] const RealMatrix& atoms() const { return atoms_; }
  [[nodiscard]] Eigen::Index n_features() const { return atoms_.rows(); }
  [[nodiscard]] Eigen::Index n_atoms() const { return atoms_.cols(); }

 private:
  RealMatrix atoms_;
};

/// Column-sparse codes W (L x n_samples) together with solver status.
struct SparseCodeMatrix {
  RealMatrix codes;
  bool converged = true;
  int sweeps = 0;  // largest number of coordinate sweeps used by any column

  /// Number of nonzero coefficients in column `c`.
  [[nodiscard]] int support_size(Eigen::Index c) const;
};

struct LassoOptions {
  double lambda = 0.01;
  double tol = 1e-10;  // stop when the duality gap falls below tol * ||y||^2
  int max_iter = 5000; // coordinate sweeps per column
};

/// Penalized objective ||y - D w||^2 + lambda ||w||_1 summed over columns.
double lasso_objective(const RealMatrix& dict, const RealMatrix& targets, const RealMatrix& codes, double lambda);

/// Cyclic coordinate descent LASSO with the Gram matrix D^T D cached.
/// Rounds of full sweeps and support sweeps end with an exact solve on the
/// current support and sign pattern.
/// Atoms need not be unit norm (the low block of a coupled pair is not);
/// zero atoms always get a zero coefficient.
class LassoSolver {
 public:
  explicit LassoSolver(RealMatrix dict);

  [[nodiscard]] const RealMatrix& dict() const { return dict_; }
  [[nodiscard]] const RealMatrix& gram() const { return gram_; }

  /// Solves min_W ||Y - D W||_F^2 + lambda ||W||_1 column by column.
  /// `warm_start`, when non-null, must be L x n_samples.
  [[nodiscard]] SparseCodeMatrix solve(const RealMatrix& targets, const LassoOptions& opts,
                                       const RealMatrix* warm_start = nullptr) const;

 private:
  RealMatrix dict_;
  RealMatrix gram_;
};

SparseCodeMatrix lasso(const Dictionary& dict, const RealMatrix& targets, double lambda, double tol,
                       int max_iter);

/// ||samples - D W||_F^2.
double reconstruction_error(const Dictionary& dict, const SparseCodeMatrix& codes, const RealMatrix& samples);
double reconstruction_error(const RealMatrix& dict, const RealMatrix& codes, const RealMatrix& samples);

struct OdlOptions {
  int n_atoms = 256;
  double lambda = 0.01;
  int n_iters = 100;
  int batch_size = 256;
  std::uint64_t seed = 0;
  LassoOptions lasso{0.01, 1e-6, 500};  // lambda is overwritten by `lambda`
};

/// Per-iteration trace of the online learner. Surrogate values are the
/// accumulated objective  sum_i ||y_i - D w_i||^2 + lambda ||w_i||_1 evaluated
/// through the sufficient statistics, divided by the number of samples seen.
struct OdlIterationLog {
  int iteration = 0;
  double surrogate_before = 0.0;  // after adding the batch, before the dictionary update
  double surrogate_after = 0.0;   // after the block-coordinate dictionary update
  double batch_relative_error = 0.0;
  int replaced_atoms = 0;
};

struct OdlResult {
  Dictionary dict;
  std::vector<OdlIterationLog> log;
};

/// Online dictionary learning: mini-batch LASSO coding followed by one block
/// coordinate pass over atoms on the accumulated statistics A = sum W W^T,
/// B = sum Y W^T. Each atom update is the exact minimizer of the surrogate
/// over the unit sphere, so the surrogate never increases within an update.
OdlResult odl_train(const RealMatrix& samples, const OdlOptions& opts);

/// Initial atoms: n_atoms distinct nonzero sample columns drawn without replacement, normalized.
Dictionary odl_initial_dictionary(const RealMatrix& samples, int n_atoms, std::uint64_t seed);

}  // namespace arrayext
