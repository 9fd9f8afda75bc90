#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "arrayext/prediction.hpp"
#include "arrayext/scenario_config.hpp"

namespace arrayext {

/// sqrt(mean((sorted(est) - sorted(actual))^2)).
double rmse(std::vector<double> estimated, std::vector<double> actual);

/// k targets spaced exactly gap_deg apart; the block start is uniform over
/// the placements that keep every target inside the grid.
TargetScene make_test_scene(const AngleInterval& grid, int k, int n_pulses, std::uint64_t rng_seed,
                            double gap_deg = 5.0);

struct TrialResult {
  std::vector<double> true_angles;
  std::vector<double> estimated_angles_low;
  std::vector<double> estimated_angles_pred;
  std::vector<double> estimated_angles_high;  // empty when the reference is skipped
  double rmse_low = 0.0;
  double rmse_pred = 0.0;
  double rmse_high = 0.0;
  bool degraded_low = false;
  bool degraded_pred = false;
  bool degraded_high = false;
  double snr_db = 0.0;
  std::size_t grid_used = 0;
  int refine_iters = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Knobs of one trial beyond the scenario file.
struct TrialOptions {
  std::optional<AngleInterval> test_grid;       // default: cfg.test_grid
  std::optional<std::vector<double>> angles;    // fixed target angles instead of a random block
  std::optional<std::size_t> forced_pair;       // skip grid selection
  bool include_high = true;                     // MUSIC on the true high-array signal
};

/// Bank plus predictors whose LASSO systems are prepared once.
class TrialRunner {
 public:
  TrialRunner(const ScenarioConfig& cfg, GridDictionaryBank bank);

  [[nodiscard]] TrialResult run(double snr_db, std::uint64_t seed, const TrialOptions& opts = {}) const;

  [[nodiscard]] const ScenarioConfig& config() const { return cfg_; }
  [[nodiscard]] const GridDictionaryBank& bank() const { return bank_; }
  [[nodiscard]] const std::vector<double>& angle_grid() const { return angle_grid_; }

 private:
  ScenarioConfig cfg_;
  GridDictionaryBank bank_;
  std::vector<Predictor> predictors_;
  std::vector<double> angle_grid_;
};

/// Synthesizes coupled low/high test signals, runs MUSIC on the low signal,
/// selects a grid, predicts the high signal and runs MUSIC on it (and on
/// the true high signal as reference).
TrialResult run_trial(const ScenarioConfig& cfg, const GridDictionaryBank& bank, double snr_db, std::uint64_t seed,
                      const TrialOptions& opts = {});

/// Seed of trial `trial` at SNR point `snr_index`.
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t snr_index, std::size_t trial);

struct SnrSummary {
  double snr_db = 0.0;
  double mean_rmse_low = 0.0;
  double se_low = 0.0;
  double mean_rmse_pred = 0.0;
  double se_pred = 0.0;
  double mean_rmse_high = 0.0;
  double se_high = 0.0;
  int n_ok = 0;
  int n_degraded = 0;

  friend bool operator==(const SnrSummary&, const SnrSummary&) = default;
};

struct ResultsTable {
  std::vector<SnrSummary> rows;
  std::vector<std::vector<TrialResult>> trials;  // per SNR point, by trial index; not persisted
  int n_failed = 0;

  /// Largest mean RMSE across all curves; 1 for an empty table.
  [[nodiscard]] double normalization() const;
};

struct MonteCarloOptions {
  TrialOptions trial;
  std::optional<int> n_trials;             // default: cfg.n_trials
  std::optional<std::vector<double>> snrs; // default: cfg.test_snr_db
};

/// n_trials independent trials per SNR point. Trials may run on cfg.threads
/// workers; aggregation always follows trial index order.
ResultsTable run_monte_carlo(const TrialRunner& runner, const MonteCarloOptions& opts = {});
ResultsTable run_monte_carlo(const ScenarioConfig& cfg, const GridDictionaryBank& bank,
                             const MonteCarloOptions& opts = {});

/// Summary statistics of a finished set of trials.
SnrSummary summarize(double snr_db, const std::vector<TrialResult>& trials);

/// Metadata written next to the CSV.
struct ResultsMetadata {
  std::uint64_t config_hash = 0;
  std::uint64_t base_seed = 0;
  double normalization = 1.0;
  std::string label;
};

/// CSV with header snr_db,mean_rmse_low,se_low,mean_rmse_pred,se_pred,
/// mean_rmse_high,se_high,n_ok,n_degraded and a JSON sidecar (<path>.json).
void persist_results(const ResultsTable& table, const std::filesystem::path& path, const ResultsMetadata& meta);
ResultsTable load_results(const std::filesystem::path& path);
ResultsMetadata load_results_metadata(const std::filesystem::path& path);

/// Trains one coupled pair per configured grid.
GridDictionaryBank train_bank(const ScenarioConfig& cfg);

}  // namespace arrayext
