#pragma once

#include <vector>

#include "arrayext/coupled_dict.hpp"
#include "arrayext/music.hpp"

namespace arrayext {

struct PredictionConfig {
  double lambda = 0.01;
  int max_refine_iters = 10;
  double convergence_tol = 1e-4;  // relative Frobenius change of the high prediction
  double lasso_tol = 1e-6;
  int lasso_max_iter = 500;

  void validate() const;
};

struct RefineStep {
  RealMatrix prediction;     // D_h W, normalized domain
  SparseCodeMatrix codes;
  double objective_start = 0.0;  // stacked penalized objective at the warm start
  double objective_end = 0.0;    // same objective at the returned codes
};

struct PredictionLog {
  int iterations = 0;                  // joint refinements performed
  bool converged = false;
  double initial_objective = 0.0;      // low-only LASSO objective of the initial code
  std::vector<double> objective_start; // per refinement, stacked objective at the previous code
  std::vector<double> objective_end;   // per refinement, stacked objective at the new code
  std::vector<double> relative_change;
};

struct PredictionResult {
  ReceivedSignal predicted;
  RealMatrix codes;
  PredictionLog log;
};

/// Predicts the high-array signal from low-array snapshots through a coupled
/// pair. Both LASSO systems (D_l alone and the stacked [D_l; D_h]) are set up
/// once, so a Predictor can serve many signals.
class Predictor {
 public:
  explicit Predictor(DictionaryPair pair);

  [[nodiscard]] const DictionaryPair& pair() const { return pair_; }

  [[nodiscard]] PredictionResult predict(const ReceivedSignal& y_low_test, const PredictionConfig& cfg) const;

  /// One joint re-coding of [y_low_norm; y_high_pred] against [D_l; D_h].
  [[nodiscard]] RefineStep refine(const RealMatrix& y_low_norm, const RealMatrix& y_high_pred, double lambda,
                                  const RealMatrix* warm_start = nullptr, double lasso_tol = 1e-6,
                                  int lasso_max_iter = 500) const;

 private:
  DictionaryPair pair_;
  LassoSolver low_solver_;
  LassoSolver stacked_solver_;
};

PredictionResult predict_high(const ReceivedSignal& y_low_test, const DictionaryPair& pair,
                              const PredictionConfig& cfg);

RefineStep refine_once(const RealMatrix& y_low_norm, const RealMatrix& y_high_pred, const DictionaryPair& pair,
                       double lambda);

/// Rule behind select_grid. With a usable estimate, picks the grid whose
/// center is nearest the median angle (ties to the lower grid). With
/// `degraded` set, picks a grid containing `strongest_peak_deg` instead.
std::size_t select_grid_index(const std::vector<AngleInterval>& grids, const std::vector<double>& estimates_deg,
                              bool degraded, double strongest_peak_deg);

struct GridSelection {
  std::size_t index = 0;
  DoaEstimate low_estimate;
};

/// MUSIC on the low signal followed by select_grid_index over the bank's grids.
GridSelection select_grid(const ReceivedSignal& y_low_test, const GridDictionaryBank& bank, int k,
                          const std::vector<double>& angle_grid);

}  // namespace arrayext
