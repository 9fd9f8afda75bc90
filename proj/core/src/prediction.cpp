#include "arrayext/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arrayext {

void PredictionConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("prediction lambda must be positive");
  if (max_refine_iters < 1) throw std::invalid_argument("max_refine_iters must be at least 1");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence_tol must be positive");
}

Predictor::Predictor(DictionaryPair pair)
    : pair_(std::move(pair)), low_solver_(pair_.d_low), stacked_solver_(pair_.stacked()) {}

RefineStep Predictor::refine(const RealMatrix& y_low_norm, const RealMatrix& y_high_pred, double lambda,
                             const RealMatrix* warm_start, double lasso_tol, int lasso_max_iter) const {
  if (y_low_norm.rows() != pair_.d_low.rows() || y_high_pred.rows() != pair_.d_high.rows() ||
      y_low_norm.cols() != y_high_pred.cols()) {
    throw ShapeError("refine: signal blocks do not match the dictionary pair");
  }
  RealMatrix stacked(y_low_norm.rows() + y_high_pred.rows(), y_low_norm.cols());
  stacked.topRows(y_low_norm.rows()) = y_low_norm;
  stacked.bottomRows(y_high_pred.rows()) = y_high_pred;

  RefineStep step;
  const RealMatrix& d = stacked_solver_.dict();
  step.objective_start = warm_start != nullptr ? lasso_objective(d, stacked, *warm_start, lambda)
                                               : stacked.squaredNorm();
  step.codes = stacked_solver_.solve(stacked, LassoOptions{lambda, lasso_tol, lasso_max_iter}, warm_start);
  step.objective_end = lasso_objective(d, stacked, step.codes.codes, lambda);
  step.prediction = pair_.d_high * step.codes.codes;
  return step;
}

PredictionResult Predictor::predict(const ReceivedSignal& y_low_test, const PredictionConfig& cfg) const {
  cfg.validate();
  y_low_test.validate();
  if (y_low_test.config.virtual_size() != pair_.low_config.virtual_size() ||
      2 * y_low_test.data.rows() != pair_.d_low.rows()) {
    throw ShapeError("low signal has " + std::to_string(y_low_test.data.rows()) +
                     " virtual elements but the dictionary pair expects " +
                     std::to_string(pair_.low_config.virtual_size()));
  }

  const Preprocessed pre = preprocess(complex_to_real_samples(y_low_test));
  const LassoOptions lasso_opts{cfg.lambda, cfg.lasso_tol, cfg.lasso_max_iter};

  PredictionResult result;
  SparseCodeMatrix w = low_solver_.solve(pre.low, lasso_opts);
  result.log.initial_objective = lasso_objective(pair_.d_low, pre.low, w.codes, cfg.lambda);
  RealMatrix high = pair_.d_high * w.codes;

  for (int it = 0; it < cfg.max_refine_iters; ++it) {
    RefineStep step = refine(pre.low, high, cfg.lambda, &w.codes, cfg.lasso_tol, cfg.lasso_max_iter);
    const double base = high.norm();
    const double change = (step.prediction - high).norm() / (base > 0.0 ? base : 1.0);
    result.log.objective_start.push_back(step.objective_start);
    result.log.objective_end.push_back(step.objective_end);
    result.log.relative_change.push_back(change);
    ++result.log.iterations;
    high = std::move(step.prediction);
    w = std::move(step.codes);
    if (change < cfg.convergence_tol) {
      result.log.converged = true;
      break;
    }
  }

  const RealMatrix restored = denormalize_columns(high, pre.stats);
  result.predicted = ReceivedSignal{real_to_complex_samples(restored), pair_.high_config, y_low_test.snr_db};
  result.codes = std::move(w.codes);
  return result;
}

PredictionResult predict_high(const ReceivedSignal& y_low_test, const DictionaryPair& pair,
                              const PredictionConfig& cfg) {
  return Predictor(pair).predict(y_low_test, cfg);
}

RefineStep refine_once(const RealMatrix& y_low_norm, const RealMatrix& y_high_pred, const DictionaryPair& pair,
                       double lambda) {
  return Predictor(pair).refine(y_low_norm, y_high_pred, lambda);
}

std::size_t select_grid_index(const std::vector<AngleInterval>& grids, const std::vector<double>& estimates_deg,
                              bool degraded, double strongest_peak_deg) {
  if (grids.empty()) throw std::invalid_argument("no grids to select from");
  auto nearest_center = [&](double angle, auto&& admissible) {
    std::size_t best = grids.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grids.size(); ++i) {
      if (!admissible(grids[i])) continue;
      const double dist = std::abs(grids[i].center() - angle);
      // Strict comparison keeps the earlier grid on ties; grids are compared by their lower bound.
      if (dist < best_dist || (dist == best_dist && best < grids.size() && grids[i].lo < grids[best].lo)) {
        best = i;
        best_dist = dist;
      }
    }
    return best;
  };
  auto any = [](const AngleInterval&) { return true; };

  if (degraded || estimates_deg.empty()) {
    const std::size_t containing =
        nearest_center(strongest_peak_deg, [&](const AngleInterval& g) { return g.contains(strongest_peak_deg); });
    return containing < grids.size() ? containing : nearest_center(strongest_peak_deg, any);
  }
  std::vector<double> sorted = estimates_deg;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return nearest_center(median, any);
}

GridSelection select_grid(const ReceivedSignal& y_low_test, const GridDictionaryBank& bank, int k,
                          const std::vector<double>& angle_grid) {
  if (bank.pairs.empty()) throw std::invalid_argument("dictionary bank is empty");
  if (k < 1) throw std::invalid_argument("target count must be at least 1");
  GridSelection out;
  out.low_estimate = estimate_doa(y_low_test, k, angle_grid);
  std::vector<AngleInterval> grids;
  grids.reserve(bank.pairs.size());
  for (const auto& p : bank.pairs) grids.push_back(p.grid);

  double strongest = angle_grid.front();
  const auto& spec = out.low_estimate.spectrum;
  const auto peak = std::max_element(spec.values.begin(), spec.values.end());
  if (peak != spec.values.end()) strongest = spec.angles_deg[static_cast<std::size_t>(peak - spec.values.begin())];

  out.index = select_grid_index(grids, out.low_estimate.angles_deg, out.low_estimate.degraded, strongest);
  return out;
}

}  // namespace arrayext
