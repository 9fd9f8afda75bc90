#include "arrayext/radar_model.hpp"

#include <cmath>
#include <sstream>

#include "arrayext/rng.hpp"

namespace arrayext {

void AngleInterval::validate() const {
  if (!(lo >= 0.0 && hi <= 90.0 && lo < hi)) {
    throw std::invalid_argument("angle interval " + to_string() + " must satisfy 0 <= lo < hi <= 90");
  }
}

AngleInterval AngleInterval::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("angle interval '" + std::string(text) + "' is not of the form lo:hi");
  }
  auto parse_num = [&](std::string_view part) {
    std::string s(part);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) {
      throw std::invalid_argument("angle interval '" + std::string(text) + "' has a non-numeric bound");
    }
    return v;
  };
  AngleInterval out{parse_num(text.substr(0, colon)), parse_num(text.substr(colon + 1))};
  out.validate();
  return out;
}

std::string AngleInterval::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << lo << ':' << hi;
  return os.str();
}

void ArrayConfig::validate() const {
  if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("array needs at least one TX and one RX element");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("array spacing must be positive");
}

TargetScene TargetScene::make(std::vector<double> angles_deg, ComplexMatrix rcs) {
  if (angles_deg.empty()) throw std::invalid_argument("scene needs at least one target");
  for (double a : angles_deg) {
    if (!(a >= 0.0 && a <= 90.0)) throw std::invalid_argument("target angle outside [0, 90] degrees");
  }
  if (rcs.rows() != static_cast<Eigen::Index>(angles_deg.size()) || rcs.cols() < 1) {
    throw ShapeError("rcs must be K x P with P >= 1");
  }
  return TargetScene{std::move(angles_deg), std::move(rcs)};
}

TargetScene TargetScene::noise_only(int n_pulses) {
  if (n_pulses < 1) throw std::invalid_argument("noise-only scene needs P >= 1");
  return TargetScene{{}, ComplexMatrix(0, n_pulses)};
}

void ReceivedSignal::validate() const {
  config.validate();
  if (data.rows() != config.virtual_size()) {
    throw ShapeError("signal has " + std::to_string(data.rows()) + " rows but the array has " +
                     std::to_string(config.virtual_size()) + " virtual elements");
  }
  if (data.cols() < 1) throw ShapeError("signal needs at least one snapshot");
}

ComplexVector steering_vector(double angle_deg, int n_elements, double spacing) {
  if (n_elements < 1) throw std::invalid_argument("steering vector needs n_elements >= 1");
  const double phase = 2.0 * kPi * spacing * std::sin(deg_to_rad(angle_deg));
  ComplexVector a(n_elements);
  a(0) = Complex(1.0, 0.0);
  for (int i = 1; i < n_elements; ++i) a(i) = std::polar(1.0, phase * i);
  return a;
}

ComplexVector virtual_steering(double angle_deg, const ArrayConfig& config) {
  const ComplexVector at = steering_vector(angle_deg, config.n_tx, config.spacing);
  const ComplexVector ar = steering_vector(angle_deg, config.n_rx, config.spacing);
  ComplexVector v(config.virtual_size());
  for (int m = 0; m < config.n_tx; ++m) v.segment(m * config.n_rx, config.n_rx) = at(m) * ar;
  return v;
}

ComplexMatrix virtual_steering_matrix(const std::vector<double>& angles_deg, const ArrayConfig& config) {
  ComplexMatrix a(config.virtual_size(), static_cast<Eigen::Index>(angles_deg.size()));
  for (std::size_t k = 0; k < angles_deg.size(); ++k) a.col(k) = virtual_steering(angles_deg[k], config);
  return a;
}

namespace {

// Fills `out` with CN(0, variance) entries, real and imaginary parts each N(0, variance / 2).
void fill_circular_gaussian(ComplexMatrix& out, double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(r, c) = Complex(re, im);
    }
  }
}

}  // namespace

ComplexMatrix draw_rcs(int k, int p, std::uint64_t rng_seed) {
  if (k < 1 || p < 1) throw std::invalid_argument("draw_rcs needs k >= 1 and p >= 1");
  Rng rng(rng_seed);
  ComplexMatrix x(k, p);
  fill_circular_gaussian(x, 1.0, rng);
  return x;
}

double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ReceivedSignal synth_received(const TargetScene& scene, const ArrayConfig& config,
                              std::optional<double> snr_db, std::uint64_t rng_seed) {
  config.validate();
  for (double a : scene.angles_deg) {
    if (!(a >= 0.0 && a <= 90.0)) throw std::invalid_argument("target angle outside [0, 90] degrees");
  }
  if (scene.rcs.rows() != scene.n_targets()) {
    throw ShapeError("scene rcs has " + std::to_string(scene.rcs.rows()) + " rows for " +
                     std::to_string(scene.n_targets()) + " targets");
  }
  if (scene.rcs.cols() < 1) throw ShapeError("scene needs at least one pulse");

  ReceivedSignal out{ComplexMatrix::Zero(config.virtual_size(), scene.n_pulses()), config, snr_db};
  if (scene.n_targets() > 0) {
    const ComplexMatrix a = virtual_steering_matrix(scene.angles_deg, config);
    out.data.noalias() = a * scene.rcs;
  }
  if (snr_db) {
    Rng rng(rng_seed);
    ComplexMatrix noise(out.data.rows(), out.data.cols());
    fill_circular_gaussian(noise, noise_variance(*snr_db), rng);
    out.data += noise;
  }
  return out;
}

std::vector<int> subarray_rows(const ArrayConfig& low, const ArrayConfig& high) {
  low.validate();
  high.validate();
  if (low.n_tx > high.n_tx || low.n_rx > high.n_rx || low.spacing != high.spacing) {
    throw ShapeError("low array is not a sub-array of the high array");
  }
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(low.virtual_size()));
  for (int m = 0; m < low.n_tx; ++m) {
    for (int n = 0; n < low.n_rx; ++n) rows.push_back(m * high.n_rx + n);
  }
  return rows;
}

ReceivedSignal extract_subarray(const ReceivedSignal& high, const ArrayConfig& low) {
  high.validate();
  const auto rows = subarray_rows(low, high.config);
  ReceivedSignal out{ComplexMatrix(low.virtual_size(), high.data.cols()), low, high.snr_db};
  for (std::size_t i = 0; i < rows.size(); ++i) out.data.row(static_cast<Eigen::Index>(i)) = high.data.row(rows[i]);
  return out;
}

CoupledSignals synth_coupled(const TargetScene& scene, const ArrayConfig& low, const ArrayConfig& high,
                             std::optional<double> snr_db, std::uint64_t rng_seed) {
  ReceivedSignal h = synth_received(scene, high, snr_db, rng_seed);
  ReceivedSignal l = extract_subarray(h, low);
  return {std::move(l), std::move(h)};
}

}  // namespace arrayext
