#include "arrayext/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "arrayext/evaluation.hpp"
#include "arrayext/rng.hpp"
#include "arrayext/serialization.hpp"

namespace arrayext {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool paper_scale = false;
  std::string snr;
  std::string grid;
};

ScenarioConfig resolve_config(const CommonArgs& a) {
  ScenarioConfig cfg = a.config_path.empty() ? ScenarioConfig{} : load_scenario(a.config_path);
  if (a.paper_scale) cfg.apply_paper_scale();
  if (a.seed) cfg.seed = *a.seed;
  if (!a.snr.empty()) cfg.test_snr_db = parse_number_list(a.snr);
  if (!a.grid.empty()) cfg.test_grid = AngleInterval::parse(a.grid);
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io::IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw io::IoError("write to '" + path.string() + "' failed");
}

/// Array of the scenario whose virtual size matches the signal rows.
ArrayConfig array_for_rows(const ScenarioConfig& cfg, Eigen::Index rows, const std::string& which) {
  if (which == "low") return cfg.low;
  if (which == "high") return cfg.high;
  if (rows == cfg.low.virtual_size()) return cfg.low;
  if (rows == cfg.high.virtual_size()) return cfg.high;
  throw ShapeError("signal has " + std::to_string(rows) + " rows; the scenario arrays have " +
                   std::to_string(cfg.low.virtual_size()) + " (low) and " + std::to_string(cfg.high.virtual_size()) +
                   " (high) virtual elements");
}

int cmd_synth(const CommonArgs& a, const std::vector<double>& angles, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a);
  const double snr = cfg.test_snr_db.front();
  const TargetScene scene =
      angles.empty()
          ? make_test_scene(cfg.test_grid, cfg.k_targets, cfg.n_snapshots_test, derive_seed(cfg.seed, {0}),
                            cfg.test_gap_deg)
          : TargetScene::make(angles, draw_rcs(static_cast<int>(angles.size()), cfg.n_snapshots_test,
                                               derive_seed(cfg.seed, {1})));
  const CoupledSignals sig = synth_coupled(scene, cfg.low, cfg.high, snr, derive_seed(cfg.seed, {2}));
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_signal(dir / "low.sig", sig.low.data);
  io::write_signal(dir / "high.sig", sig.high.data);
  write_json(dir / "scene.json", json{{"angles_deg", scene.angles_deg},
                                      {"snr_db", snr},
                                      {"snapshots", cfg.n_snapshots_test},
                                      {"seed", cfg.seed},
                                      {"low", {cfg.low.n_tx, cfg.low.n_rx}},
                                      {"high", {cfg.high.n_tx, cfg.high.n_rx}}});
  out << "wrote " << (dir / "low.sig").string() << " and " << (dir / "high.sig").string() << '\n';
  return 0;
}

int cmd_train(const CommonArgs& a, std::ostream& out) {
  ScenarioConfig cfg = resolve_config(a);
  if (!a.grid.empty()) cfg.grids = {cfg.test_grid};
  const GridDictionaryBank bank = train_bank(cfg);
  io::write_bank(a.out_dir, bank);
  for (const auto& p : bank.pairs) {
    out << "grid " << p.grid.to_string() << ": lambda " << p.lambda_train << ", relative training error "
        << p.train_error << '\n';
  }
  out << "bank written to " << a.out_dir << '\n';
  return 0;
}

int cmd_predict(const CommonArgs& a, const std::string& bank_dir, const std::string& input, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a);
  const GridDictionaryBank bank = io::read_bank(bank_dir);
  const ReceivedSignal low{io::read_signal(input), bank.pairs.front().low_config, std::nullopt};
  low.validate();

  std::size_t index = 0;
  json selection;
  if (!a.grid.empty()) {
    const auto it = std::find_if(bank.pairs.begin(), bank.pairs.end(),
                                 [&](const DictionaryPair& p) { return p.grid == cfg.test_grid; });
    if (it == bank.pairs.end()) throw std::invalid_argument("bank has no pair for grid " + a.grid);
    index = static_cast<std::size_t>(it - bank.pairs.begin());
    selection = {{"method", "fixed"}};
  } else if (bank.pairs.size() > 1) {
    const GridSelection sel = select_grid(low, bank, cfg.k_targets, cfg.angle_grid());
    index = sel.index;
    selection = {{"method", "music_median"},
                 {"low_estimates_deg", sel.low_estimate.angles_deg},
                 {"degraded", sel.low_estimate.degraded}};
  } else {
    selection = {{"method", "single_pair"}};
  }
  const DictionaryPair& pair = bank.pairs[index];
  const PredictionResult pred = predict_high(low, pair, cfg.prediction);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_signal(dir / "predicted.sig", pred.predicted.data);
  selection["grid"] = pair.grid.to_string();
  selection["index"] = index;
  write_json(dir / "predict_log.json", json{{"iterations", pred.log.iterations},
                                            {"converged", pred.log.converged},
                                            {"initial_objective", pred.log.initial_objective},
                                            {"objective_start", pred.log.objective_start},
                                            {"objective_end", pred.log.objective_end},
                                            {"relative_change", pred.log.relative_change},
                                            {"grid_selection", selection}});
  out << "predicted " << pred.predicted.data.rows() << "x" << pred.predicted.data.cols() << " signal with grid "
      << pair.grid.to_string() << " after " << pred.log.iterations << " refinements\n";
  return 0;
}

int cmd_music(const CommonArgs& a, const std::string& input, const std::string& which, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a);
  ComplexMatrix data = io::read_signal(input);
  const ArrayConfig array = array_for_rows(cfg, data.rows(), which);
  const ReceivedSignal sig{std::move(data), array, std::nullopt};
  sig.validate();
  const DoaEstimate est = estimate_doa(sig, cfg.k_targets, cfg.angle_grid());
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_spectrum_csv(dir / "spectrum.csv", est.spectrum);
  write_json(dir / "doa.json", json{{"angles_deg", est.angles_deg},
                                    {"degraded", est.degraded},
                                    {"array", {array.n_tx, array.n_rx}}});
  out << "DoA estimates:";
  for (double d : est.angles_deg) out << ' ' << d;
  out << (est.degraded ? " (degraded)" : "") << '\n';
  return 0;
}

void write_trials_csv(const fs::path& path, const ResultsTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io::IoError("cannot open '" + path.string() + "' for writing");
  out << "snr_db,trial,seed,grid_used,rmse_low,rmse_pred,rmse_high,degraded_low,degraded_pred,degraded_high\n";
  for (const auto& trials : table.trials) {
    for (std::size_t t = 0; t < trials.size(); ++t) {
      const TrialResult& r = trials[t];
      out << io::format_double(r.snr_db) << ',' << t << ',' << r.seed << ',' << r.grid_used << ','
          << io::format_double(r.rmse_low) << ',' << io::format_double(r.rmse_pred) << ','
          << io::format_double(r.rmse_high) << ',' << r.degraded_low << ',' << r.degraded_pred << ','
          << r.degraded_high << '\n';
    }
  }
}

int cmd_mc(const CommonArgs& a, const std::string& bank_dir, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a);
  const GridDictionaryBank bank = bank_dir.empty() ? train_bank(cfg) : io::read_bank(bank_dir);
  const ResultsTable table = run_monte_carlo(cfg, bank);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  persist_results(table, dir / "results.csv", ResultsMetadata{cfg.hash(), cfg.seed, table.normalization(), "mc"});
  write_trials_csv(dir / "trials.csv", table);
  for (const auto& r : table.rows) {
    out << "snr " << r.snr_db << " dB: rmse low " << r.mean_rmse_low << ", predicted " << r.mean_rmse_pred
        << ", high " << r.mean_rmse_high << " (" << r.n_ok << " trials)\n";
  }
  if (table.n_failed > 0) out << table.n_failed << " trials failed\n";
  return 0;
}

// --- plot-data ------------------------------------------------------------

int plot_fig2(const ScenarioConfig& base, const fs::path& dir, std::ostream& out) {
  ScenarioConfig cfg = base;
  const AngleInterval grid{10.0, 35.0};
  cfg.grids = {grid};
  const GridDictionaryBank bank = train_bank(cfg);
  const std::vector<double> angles{13.0, 18.0, 23.0, 28.0};
  const double snr = cfg.test_snr_db.front();
  const TargetScene scene =
      TargetScene::make(angles, draw_rcs(4, cfg.n_snapshots_test, derive_seed(cfg.seed, {1})));
  const CoupledSignals sig = synth_coupled(scene, cfg.low, cfg.high, snr, derive_seed(cfg.seed, {2}));
  const PredictionResult pred = predict_high(sig.low, bank.pairs.front(), cfg.prediction);
  const auto angle_grid = cfg.angle_grid();
  io::write_spectrum_csv(dir / "fig2_low.csv", estimate_doa(sig.low, 4, angle_grid).spectrum);
  io::write_spectrum_csv(dir / "fig2_pred.csv", estimate_doa(pred.predicted, 4, angle_grid).spectrum);
  io::write_spectrum_csv(dir / "fig2_high.csv", estimate_doa(sig.high, 4, angle_grid).spectrum);
  out << "wrote fig2_{low,pred,high}.csv\n";
  return 0;
}

void write_curves(const fs::path& path, const std::vector<double>& snrs,
                  const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
  double norm = 0.0;
  for (const auto& [name, ys] : curves) {
    for (double y : ys) norm = std::max(norm, y);
  }
  if (!(norm > 0.0)) norm = 1.0;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io::IoError("cannot open '" + path.string() + "' for writing");
  out << "snr_db";
  for (const auto& c : curves) out << ',' << c.first << ',' << c.first << "_normalized";
  out << '\n';
  for (std::size_t i = 0; i < snrs.size(); ++i) {
    out << io::format_double(snrs[i]);
    for (const auto& c : curves) out << ',' << io::format_double(c.second[i]) << ',' << io::format_double(c.second[i] / norm);
    out << '\n';
  }
  write_json(fs::path(path).replace_extension(".json"), json{{"normalization", norm}});
}

std::vector<double> column(const ResultsTable& t, double SnrSummary::*field) {
  std::vector<double> ys;
  for (const auto& r : t.rows) ys.push_back(r.*field);
  return ys;
}

int plot_fig3(const ScenarioConfig& base, const fs::path& dir, std::ostream& out) {
  std::vector<std::pair<std::string, std::vector<double>>> curves;
  const std::vector<std::pair<std::string, std::optional<double>>> trainings{
      {"noiseless", std::nullopt}, {"10dB", 10.0}, {"30dB", 30.0}};
  bool first = true;
  for (const auto& [name, snr] : trainings) {
    ScenarioConfig cfg = base;
    cfg.grids = {cfg.test_grid};
    cfg.train_snr_db = snr;
    const ResultsTable t = run_monte_carlo(cfg, train_bank(cfg));
    if (first) {
      curves.emplace_back("low", column(t, &SnrSummary::mean_rmse_low));
      curves.emplace_back("high", column(t, &SnrSummary::mean_rmse_high));
      first = false;
    }
    curves.emplace_back("pred_train_" + name, column(t, &SnrSummary::mean_rmse_pred));
  }
  write_curves(dir / "fig3.csv", base.test_snr_db, curves);
  out << "wrote fig3.csv\n";
  return 0;
}

int plot_fig4(const ScenarioConfig& base, const fs::path& dir, std::ostream& out) {
  const GridDictionaryBank bank = train_bank(base);
  const TrialRunner runner(base, bank);
  std::vector<std::pair<std::string, std::vector<double>>> curves;
  for (std::size_t test = 0; test < std::min<std::size_t>(2, base.grids.size()); ++test) {
    for (std::size_t dict = 0; dict < bank.pairs.size(); ++dict) {
      MonteCarloOptions mo;
      mo.trial.test_grid = base.grids[test];
      mo.trial.forced_pair = dict;
      mo.trial.include_high = false;
      const ResultsTable t = run_monte_carlo(runner, mo);
      curves.emplace_back("test" + std::to_string(test + 1) + "_dict" + std::to_string(dict + 1),
                          column(t, &SnrSummary::mean_rmse_pred));
    }
  }
  write_curves(dir / "fig4.csv", base.test_snr_db, curves);
  out << "wrote fig4.csv\n";
  return 0;
}

int plot_fig5(const ScenarioConfig& base, const std::string& setups, const fs::path& dir, std::ostream& out) {
  std::vector<std::pair<std::string, std::vector<double>>> curves;
  std::istringstream is(setups);
  std::string item;
  while (std::getline(is, item, ',')) {
    ScenarioConfig cfg = base;
    const auto x = item.find('x');
    if (x == std::string::npos) throw ConfigError("low setup '" + item + "' must look like 6x6");
    cfg.low.n_tx = std::stoi(item.substr(0, x));
    cfg.low.n_rx = std::stoi(item.substr(x + 1));
    cfg.grids = {cfg.test_grid};
    cfg.validate();
    const ResultsTable t = run_monte_carlo(cfg, train_bank(cfg));
    curves.emplace_back("pred_" + item, column(t, &SnrSummary::mean_rmse_pred));
  }
  write_curves(dir / "fig5.csv", base.test_snr_db, curves);
  out << "wrote fig5.csv\n";
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupled-dictionary antenna array extrapolation and MUSIC evaluation", "arrayext"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs common;
  app.add_option("--config", common.config_path, "Scenario config file (INI)")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Base seed");
  app.add_option("--out", common.out_dir, "Output directory");
  app.add_flag("--paper-scale", common.paper_scale, "Full-size training and trial counts");
  app.add_option("--snr", common.snr, "Test SNR list in dB, e.g. -10,-5,0 or -10:2:0");
  app.add_option("--grid", common.grid, "Angle grid lo:hi for the test scene (and training with `train`)");

  std::vector<double> synth_angles;
  auto* synth = app.add_subcommand("synth", "Synthesize coupled low/high test signals");
  synth->add_option("--angles", synth_angles, "Fixed target angles in degrees")->delimiter(',');

  auto* train = app.add_subcommand("train", "Train a dictionary bank");

  std::string bank_dir;
  std::string input;
  auto* predict = app.add_subcommand("predict", "Predict the high-array signal from a low-array signal file");
  predict->add_option("--bank", bank_dir, "Bank directory")->required();
  predict->add_option("--in", input, "Low-array signal container")->required();

  std::string which = "auto";
  auto* music = app.add_subcommand("music", "MUSIC spectrum and DoA estimates of a signal file");
  music->add_option("--in", input, "Signal container")->required();
  music->add_option("--array", which, "Array the signal belongs to")->check(CLI::IsMember({"auto", "low", "high"}));

  auto* mc = app.add_subcommand("mc", "Monte-Carlo RMSE sweep");
  mc->add_option("--bank", bank_dir, "Pre-trained bank directory (trained from the config when absent)");

  int figure = 2;
  std::string low_setups = "6x6,8x8,10x10,12x12,14x14";
  auto* plot = app.add_subcommand("plot-data", "Emit CSVs for spectrum and RMSE plots");
  plot->add_option("--figure", figure, "2: spectra, 3: training SNR, 4: grid mismatch, 5: low setups")
      ->check(CLI::Range(2, 5));
  plot->add_option("--low-setups", low_setups, "Low arrays for --figure 5");

  std::vector<std::string> reversed;
  if (!args.empty()) reversed.assign(args.rbegin(), std::prev(args.rend()));
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) return cmd_synth(common, synth_angles, out);
    if (*train) return cmd_train(common, out);
    if (*predict) return cmd_predict(common, bank_dir, input, out);
    if (*music) return cmd_music(common, input, which, out);
    if (*mc) return cmd_mc(common, bank_dir, out);
    if (*plot) {
      const ScenarioConfig cfg = resolve_config(common);
      const fs::path dir(common.out_dir);
      fs::create_directories(dir);
      switch (figure) {
        case 2: return plot_fig2(cfg, dir, out);
        case 3: return plot_fig3(cfg, dir, out);
        case 4: return plot_fig4(cfg, dir, out);
        default: return plot_fig5(cfg, low_setups, dir, out);
      }
    }
  } catch (const std::exception& e) {
    err << "arrayext " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int cli_dispatch(int argc, const char* const* argv) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace arrayext
