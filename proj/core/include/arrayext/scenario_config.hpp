#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arrayext/coupled_dict.hpp"
#include "arrayext/prediction.hpp"
#include "arrayext/radar_model.hpp"

namespace arrayext {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything needed to train a bank and run the Monte-Carlo experiments.
/// Defaults are the desk-scale setup; apply_paper_scale() switches the
/// counts to the full-size experiment.
struct ScenarioConfig {
  // [array]
  ArrayConfig low{10, 10, 0.5};
  ArrayConfig high{16, 16, 0.5};

  // [scene]
  int k_targets = 4;
  std::vector<AngleInterval> grids{{10.0, 35.0}, {20.0, 45.0}, {30.0, 55.0}};
  AngleInterval test_grid{20.0, 45.0};
  double test_gap_deg = 5.0;

  // [training]
  int n_train_samples = 10000;
  int pulses_per_scene = 10;
  std::optional<double> train_snr_db = 10.0;  // nullopt: noiseless
  int l_atoms = 256;
  double train_lambda = 0.01;
  int odl_iters = 100;
  int batch_size = 256;
  std::vector<double> lambda_grid;  // empty: no sweep

  // [prediction]
  PredictionConfig prediction;

  // [evaluation]
  std::vector<double> test_snr_db{-10.0};
  int n_snapshots_test = 100;
  int n_trials = 200;
  double angle_step_deg = 0.05;
  int threads = 1;

  // [run]
  std::uint64_t seed = 1;

  void apply_paper_scale();
  void validate() const;

  [[nodiscard]] TrainingScenario training_scenario() const;
  [[nodiscard]] BankTrainingOptions bank_training_options() const;
  [[nodiscard]] std::vector<double> angle_grid() const;

  /// Sorted `section.key = value` lines covering every field.
  [[nodiscard]] std::string canonical() const;
  /// FNV-1a 64 of canonical().
  [[nodiscard]] std::uint64_t hash() const;
};

/// INI text: [array] [scene] [training] [prediction] [evaluation] [run].
/// Missing keys keep their defaults; unknown sections or keys are errors.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// "noiseless" or a number of dB.
std::optional<double> parse_snr(const std::string& text);
/// Comma separated numbers; "a:b:c" expands to a, a+b, ..., c.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace arrayext
