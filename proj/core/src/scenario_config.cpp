#include "arrayext/scenario_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "arrayext/music.hpp"
#include "arrayext/rng.hpp"
#include "arrayext/serialization.hpp"

namespace arrayext {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("'" + raw + "' is not a number");
  }
  return v;
}

long long to_int(const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("'" + raw + "' is not an integer");
  }
  return v;
}

std::uint64_t to_u64(const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("'" + raw + "' is not an unsigned integer");
  }
  return v;
}

int to_count(const std::string& raw) {
  const long long v = to_int(raw);
  if (v < 0 || v > 1'000'000'000) throw ConfigError("'" + raw + "' is out of range");
  return static_cast<int>(v);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

std::pair<int, int> parse_shape(const std::string& raw) {
  const auto parts = split(raw, 'x');
  if (parts.size() != 2) throw ConfigError("array shape '" + raw + "' must look like 10x10");
  return {to_count(parts[0]), to_count(parts[1])};
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ", ";
    out += io::format_double(xs[i]);
  }
  return out;
}

std::string snr_text(const std::optional<double>& snr) { return snr ? io::format_double(*snr) : "noiseless"; }

struct Field {
  const char* section;
  const char* key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"array", "low",
       [](ScenarioConfig& c, const std::string& v) { std::tie(c.low.n_tx, c.low.n_rx) = parse_shape(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.low.n_tx) + "x" + std::to_string(c.low.n_rx); }},
      {"array", "high",
       [](ScenarioConfig& c, const std::string& v) { std::tie(c.high.n_tx, c.high.n_rx) = parse_shape(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.high.n_tx) + "x" + std::to_string(c.high.n_rx); }},
      {"array", "spacing",
       [](ScenarioConfig& c, const std::string& v) { c.low.spacing = c.high.spacing = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.low.spacing); }},

      {"scene", "k_targets", [](ScenarioConfig& c, const std::string& v) { c.k_targets = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.k_targets); }},
      {"scene", "grids",
       [](ScenarioConfig& c, const std::string& v) {
         c.grids.clear();
         for (const auto& part : split(v, ',')) c.grids.push_back(AngleInterval::parse(part));
       },
       [](const ScenarioConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.grids.size(); ++i) out += (i ? ", " : "") + c.grids[i].to_string();
         return out;
       }},
      {"scene", "test_grid", [](ScenarioConfig& c, const std::string& v) { c.test_grid = AngleInterval::parse(trim(v)); },
       [](const ScenarioConfig& c) { return c.test_grid.to_string(); }},
      {"scene", "test_gap_deg", [](ScenarioConfig& c, const std::string& v) { c.test_gap_deg = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.test_gap_deg); }},

      {"training", "n_train_samples", [](ScenarioConfig& c, const std::string& v) { c.n_train_samples = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.n_train_samples); }},
      {"training", "pulses_per_scene", [](ScenarioConfig& c, const std::string& v) { c.pulses_per_scene = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.pulses_per_scene); }},
      {"training", "train_snr_db", [](ScenarioConfig& c, const std::string& v) { c.train_snr_db = parse_snr(v); },
       [](const ScenarioConfig& c) { return snr_text(c.train_snr_db); }},
      {"training", "l_atoms", [](ScenarioConfig& c, const std::string& v) { c.l_atoms = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.l_atoms); }},
      {"training", "lambda", [](ScenarioConfig& c, const std::string& v) { c.train_lambda = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.train_lambda); }},
      {"training", "odl_iters", [](ScenarioConfig& c, const std::string& v) { c.odl_iters = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.odl_iters); }},
      {"training", "batch_size", [](ScenarioConfig& c, const std::string& v) { c.batch_size = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.batch_size); }},
      {"training", "lambda_grid",
       [](ScenarioConfig& c, const std::string& v) { c.lambda_grid = trim(v).empty() ? std::vector<double>{} : parse_number_list(v); },
       [](const ScenarioConfig& c) { return join_numbers(c.lambda_grid); }},

      {"prediction", "lambda", [](ScenarioConfig& c, const std::string& v) { c.prediction.lambda = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.prediction.lambda); }},
      {"prediction", "max_refine_iters",
       [](ScenarioConfig& c, const std::string& v) { c.prediction.max_refine_iters = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.prediction.max_refine_iters); }},
      {"prediction", "convergence_tol",
       [](ScenarioConfig& c, const std::string& v) { c.prediction.convergence_tol = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.prediction.convergence_tol); }},

      {"evaluation", "test_snr_db", [](ScenarioConfig& c, const std::string& v) { c.test_snr_db = parse_number_list(v); },
       [](const ScenarioConfig& c) { return join_numbers(c.test_snr_db); }},
      {"evaluation", "n_snapshots_test", [](ScenarioConfig& c, const std::string& v) { c.n_snapshots_test = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.n_snapshots_test); }},
      {"evaluation", "n_trials", [](ScenarioConfig& c, const std::string& v) { c.n_trials = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.n_trials); }},
      {"evaluation", "angle_step_deg", [](ScenarioConfig& c, const std::string& v) { c.angle_step_deg = to_double(v); },
       [](const ScenarioConfig& c) { return io::format_double(c.angle_step_deg); }},
      {"evaluation", "threads", [](ScenarioConfig& c, const std::string& v) { c.threads = to_count(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.threads); }},

      {"run", "seed", [](ScenarioConfig& c, const std::string& v) { c.seed = to_u64(v); },
       [](const ScenarioConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

}  // namespace

std::optional<double> parse_snr(const std::string& text) {
  const std::string s = trim(text);
  if (s == "noiseless") return std::nullopt;
  return to_double(s);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    const auto range = split(part, ':');
    if (range.size() == 1) {
      out.push_back(to_double(range[0]));
    } else if (range.size() == 3) {
      const double lo = to_double(range[0]);
      const double step = to_double(range[1]);
      const double hi = to_double(range[2]);
      if (!(step > 0.0) || hi < lo) throw ConfigError("range '" + part + "' needs step > 0 and end >= start");
      const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
      for (long long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
    } else {
      throw ConfigError("list item '" + part + "' must be a number or start:step:end");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

void ScenarioConfig::apply_paper_scale() {
  n_train_samples = 45000;
  pulses_per_scene = 100;
  l_atoms = 512;
  odl_iters = 300;
  n_trials = 10000;
}

void ScenarioConfig::validate() const {
  try {
    low.validate();
    high.validate();
    if (low.n_tx > high.n_tx || low.n_rx > high.n_rx) throw ConfigError("low array must be a sub-array of the high array");
    if (k_targets < 1) throw ConfigError("k_targets must be positive");
    if (k_targets >= low.virtual_size()) throw ConfigError("k_targets must be below the low virtual array size");
    if (grids.empty()) throw ConfigError("at least one training grid is required");
    for (const auto& g : grids) g.validate();
    test_grid.validate();
    if (!(test_gap_deg >= 0.0)) throw ConfigError("test_gap_deg must be non-negative");
    if (test_grid.width() < test_gap_deg * (k_targets - 1)) throw ConfigError("test_grid is too narrow for the target block");
    if (n_train_samples < 1 || pulses_per_scene < 1 || odl_iters < 0 || batch_size < 1) {
      throw ConfigError("training counts must be positive");
    }
    if (l_atoms < high.virtual_size()) throw ConfigError("l_atoms must be at least the high virtual array size");
    if (!(train_lambda > 0.0)) throw ConfigError("training lambda must be positive");
    for (double l : lambda_grid) {
      if (!(l > 0.0)) throw ConfigError("lambda_grid values must be positive");
    }
    prediction.validate();
    if (test_snr_db.empty()) throw ConfigError("test_snr_db must not be empty");
    if (n_snapshots_test < 1 || n_trials < 1 || threads < 1) throw ConfigError("evaluation counts must be positive");
    if (!(angle_step_deg > 0.0 && angle_step_deg <= 1.0)) throw ConfigError("angle_step_deg must be in (0, 1]");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

TrainingScenario ScenarioConfig::training_scenario() const {
  return TrainingScenario{low, high, k_targets, n_train_samples, pulses_per_scene, train_snr_db};
}

BankTrainingOptions ScenarioConfig::bank_training_options() const {
  BankTrainingOptions o;
  o.training.n_atoms = l_atoms;
  o.training.lambda = train_lambda;
  o.training.n_iters = odl_iters;
  o.training.batch_size = batch_size;
  o.training.seed = derive_seed(seed, {0x7a1a});
  o.lambda_grid = lambda_grid;
  return o;
}

std::vector<double> ScenarioConfig::angle_grid() const { return make_angle_grid(0.0, 90.0, angle_step_deg); }

std::string ScenarioConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& f : fields()) lines.push_back(std::string(f.section) + "." + f.key + " = " + f.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t ScenarioConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ScenarioConfig parse_scenario(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ScenarioConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must be inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const Field* match = nullptr;
      for (const auto& f : fields()) {
        if (section == f.section && key == f.key) match = &f;
      }
      if (match == nullptr) throw ConfigError("unknown config key '" + section + "." + key + "'");
      try {
        match->set(cfg, value.data());
      } catch (const std::exception& e) {
        throw ConfigError("config key '" + section + "." + key + "': " + e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace arrayext
