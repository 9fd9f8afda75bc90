#include "arrayext/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "arrayext/rng.hpp"
#include "arrayext/serialization.hpp"

namespace arrayext {

double rmse(std::vector<double> estimated, std::vector<double> actual) {
  if (estimated.size() != actual.size()) {
    throw std::invalid_argument("rmse: " + std::to_string(estimated.size()) + " estimates for " +
                                std::to_string(actual.size()) + " true angles");
  }
  if (estimated.empty()) throw std::invalid_argument("rmse: empty angle lists");
  std::sort(estimated.begin(), estimated.end());
  std::sort(actual.begin(), actual.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double d = estimated[i] - actual[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(estimated.size()));
}

TargetScene make_test_scene(const AngleInterval& grid, int k, int n_pulses, std::uint64_t rng_seed, double gap_deg) {
  grid.validate();
  if (k < 1) throw std::invalid_argument("test scene needs k >= 1");
  const double span = gap_deg * (k - 1);
  if (span > grid.width()) {
    throw std::invalid_argument("grid " + grid.to_string() + " is too narrow for " + std::to_string(k) +
                                " targets spaced " + io::format_double(gap_deg) + " degrees apart");
  }
  Rng rng(rng_seed);
  const double slack = grid.width() - span;
  const double start = slack > 0.0 ? std::uniform_real_distribution<double>(grid.lo, grid.lo + slack)(rng) : grid.lo;
  std::vector<double> angles(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) angles[static_cast<std::size_t>(i)] = start + gap_deg * i;
  return TargetScene::make(std::move(angles), draw_rcs(k, n_pulses, derive_seed(rng_seed, {1})));
}

TrialRunner::TrialRunner(const ScenarioConfig& cfg, GridDictionaryBank bank)
    : cfg_(cfg), bank_(std::move(bank)), angle_grid_(cfg.angle_grid()) {
  cfg_.validate();
  bank_.validate();
  predictors_.reserve(bank_.pairs.size());
  for (const auto& p : bank_.pairs) {
    if (!(p.low_config == cfg_.low) || !(p.high_config == cfg_.high)) {
      throw ShapeError("bank pair for grid " + p.grid.to_string() + " was trained for " +
                       std::to_string(p.low_config.n_tx) + "x" + std::to_string(p.low_config.n_rx) + " -> " +
                       std::to_string(p.high_config.n_tx) + "x" + std::to_string(p.high_config.n_rx) +
                       ", scenario uses " + std::to_string(cfg_.low.n_tx) + "x" + std::to_string(cfg_.low.n_rx) +
                       " -> " + std::to_string(cfg_.high.n_tx) + "x" + std::to_string(cfg_.high.n_rx));
    }
    predictors_.emplace_back(p);
  }
}

TrialResult TrialRunner::run(double snr_db, std::uint64_t seed, const TrialOptions& opts) const {
  const int k = cfg_.k_targets;
  const AngleInterval grid = opts.test_grid.value_or(cfg_.test_grid);
  const TargetScene scene =
      opts.angles ? TargetScene::make(*opts.angles, draw_rcs(k, cfg_.n_snapshots_test, derive_seed(seed, {1})))
                  : make_test_scene(grid, k, cfg_.n_snapshots_test, derive_seed(seed, {0}), cfg_.test_gap_deg);
  if (scene.n_targets() != k) throw std::invalid_argument("fixed test angles do not match k_targets");
  const CoupledSignals sig = synth_coupled(scene, cfg_.low, cfg_.high, snr_db, derive_seed(seed, {2}));

  TrialResult r;
  r.true_angles = scene.angles_deg;
  r.snr_db = snr_db;
  r.seed = seed;

  const DoaEstimate low = estimate_doa(sig.low, k, angle_grid_);
  r.estimated_angles_low = low.angles_deg;
  r.degraded_low = low.degraded;
  r.rmse_low = rmse(low.angles_deg, r.true_angles);

  if (opts.forced_pair) {
    if (*opts.forced_pair >= predictors_.size()) throw std::out_of_range("forced pair index outside the bank");
    r.grid_used = *opts.forced_pair;
  } else {
    std::vector<AngleInterval> grids;
    for (const auto& p : bank_.pairs) grids.push_back(p.grid);
    const auto& values = low.spectrum.values;
    const auto peak = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    r.grid_used = select_grid_index(grids, low.angles_deg, low.degraded, angle_grid_[peak]);
  }

  const PredictionResult pred = predictors_[r.grid_used].predict(sig.low, cfg_.prediction);
  r.refine_iters = pred.log.iterations;
  const DoaEstimate pest = estimate_doa(pred.predicted, k, angle_grid_);
  r.estimated_angles_pred = pest.angles_deg;
  r.degraded_pred = pest.degraded;
  r.rmse_pred = rmse(pest.angles_deg, r.true_angles);

  if (opts.include_high) {
    const DoaEstimate high = estimate_doa(sig.high, k, angle_grid_);
    r.estimated_angles_high = high.angles_deg;
    r.degraded_high = high.degraded;
    r.rmse_high = rmse(high.angles_deg, r.true_angles);
  }
  return r;
}

TrialResult run_trial(const ScenarioConfig& cfg, const GridDictionaryBank& bank, double snr_db, std::uint64_t seed,
                      const TrialOptions& opts) {
  return TrialRunner(cfg, bank).run(snr_db, seed, opts);
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t snr_index, std::size_t trial) {
  return derive_seed(base_seed, {0x7e57, snr_index, trial});
}

double ResultsTable::normalization() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max({m, r.mean_rmse_low, r.mean_rmse_pred, r.mean_rmse_high});
  return m > 0.0 ? m : 1.0;
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

SnrSummary summarize(double snr_db, const std::vector<TrialResult>& trials) {
  std::vector<double> low;
  std::vector<double> pred;
  std::vector<double> high;
  SnrSummary s;
  s.snr_db = snr_db;
  for (const auto& t : trials) {
    low.push_back(t.rmse_low);
    pred.push_back(t.rmse_pred);
    if (!t.estimated_angles_high.empty()) high.push_back(t.rmse_high);
    if (t.degraded_low || t.degraded_pred || t.degraded_high) ++s.n_degraded;
  }
  std::tie(s.mean_rmse_low, s.se_low) = mean_and_se(low);
  std::tie(s.mean_rmse_pred, s.se_pred) = mean_and_se(pred);
  std::tie(s.mean_rmse_high, s.se_high) = mean_and_se(high);
  s.n_ok = static_cast<int>(trials.size());
  return s;
}

ResultsTable run_monte_carlo(const TrialRunner& runner, const MonteCarloOptions& opts) {
  const ScenarioConfig& cfg = runner.config();
  const std::vector<double> snrs = opts.snrs.value_or(cfg.test_snr_db);
  const int n_trials = opts.n_trials.value_or(cfg.n_trials);
  if (n_trials < 1) throw std::invalid_argument("Monte-Carlo run needs at least one trial");

  ResultsTable table;
  for (std::size_t si = 0; si < snrs.size(); ++si) {
    std::vector<std::optional<TrialResult>> slots(static_cast<std::size_t>(n_trials));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t t = next++; t < slots.size(); t = next++) {
        try {
          slots[t] = runner.run(snrs[si], trial_seed(cfg.seed, si, t), opts.trial);
        } catch (const std::exception&) {
          slots[t].reset();
        }
      }
    };
    const int n_workers = std::min(cfg.threads, n_trials);
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }

    std::vector<TrialResult> done;
    int failed = 0;
    for (auto& s : slots) {
      if (s) {
        done.push_back(std::move(*s));
      } else {
        ++failed;
      }
    }
    table.n_failed += failed;
    table.rows.push_back(summarize(snrs[si], done));
    table.trials.push_back(std::move(done));
  }
  return table;
}

ResultsTable run_monte_carlo(const ScenarioConfig& cfg, const GridDictionaryBank& bank, const MonteCarloOptions& opts) {
  return run_monte_carlo(TrialRunner(cfg, bank), opts);
}

namespace {

constexpr const char* kResultsHeader =
    "snr_db,mean_rmse_low,se_low,mean_rmse_pred,se_pred,mean_rmse_high,se_high,n_ok,n_degraded";

std::filesystem::path sidecar(std::filesystem::path p) { return p.replace_extension(".json"); }

}  // namespace

void persist_results(const ResultsTable& table, const std::filesystem::path& path, const ResultsMetadata& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io::IoError("cannot open '" + path.string() + "' for writing");
  out << kResultsHeader << '\n';
  for (const auto& r : table.rows) {
    out << io::format_double(r.snr_db) << ',' << io::format_double(r.mean_rmse_low) << ','
        << io::format_double(r.se_low) << ',' << io::format_double(r.mean_rmse_pred) << ','
        << io::format_double(r.se_pred) << ',' << io::format_double(r.mean_rmse_high) << ','
        << io::format_double(r.se_high) << ',' << r.n_ok << ',' << r.n_degraded << '\n';
  }
  out.flush();
  if (!out) throw io::IoError("write to '" + path.string() + "' failed");

  nlohmann::json j;
  j["config_hash"] = meta.config_hash;
  j["base_seed"] = meta.base_seed;
  j["normalization"] = meta.normalization;
  j["label"] = meta.label;
  j["n_failed"] = table.n_failed;
  j["columns"] = kResultsHeader;
  std::ofstream js(sidecar(path), std::ios::trunc);
  if (!js) throw io::IoError("cannot write metadata next to '" + path.string() + "'");
  js << j.dump(2) << '\n';
  if (!js) throw io::IoError("write of metadata next to '" + path.string() + "' failed");
}

ResultsTable load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw io::IoError("'" + path.string() + "' has an unexpected header");
  ResultsTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9) throw io::IoError("'" + path.string() + "' line " + std::to_string(line_no) + " needs 9 fields");
    try {
      SnrSummary r;
      r.snr_db = std::stod(cells[0]);
      r.mean_rmse_low = std::stod(cells[1]);
      r.se_low = std::stod(cells[2]);
      r.mean_rmse_pred = std::stod(cells[3]);
      r.se_pred = std::stod(cells[4]);
      r.mean_rmse_high = std::stod(cells[5]);
      r.se_high = std::stod(cells[6]);
      r.n_ok = std::stoi(cells[7]);
      r.n_degraded = std::stoi(cells[8]);
      table.rows.push_back(r);
    } catch (const std::exception&) {
      throw io::IoError("'" + path.string() + "' line " + std::to_string(line_no) + " is not numeric");
    }
  }
  const auto meta = sidecar(path);
  if (std::filesystem::exists(meta)) {
    std::ifstream js(meta);
    table.n_failed = nlohmann::json::parse(js).value("n_failed", 0);
  }
  return table;
}

ResultsMetadata load_results_metadata(const std::filesystem::path& path) {
  std::ifstream js(sidecar(path));
  if (!js) throw io::IoError("no metadata next to '" + path.string() + "'");
  const auto j = nlohmann::json::parse(js);
  ResultsMetadata m;
  m.config_hash = j.at("config_hash").get<std::uint64_t>();
  m.base_seed = j.at("base_seed").get<std::uint64_t>();
  m.normalization = j.at("normalization").get<double>();
  m.label = j.value("label", "");
  return m;
}

GridDictionaryBank train_bank(const ScenarioConfig& cfg) {
  cfg.validate();
  return train_grid_bank(cfg.grids, cfg.training_scenario(), cfg.bank_training_options());
}

}  // namespace arrayext
