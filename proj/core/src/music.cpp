#include "arrayext/music.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace arrayext {

ComplexMatrix sample_covariance(const ComplexMatrix& y) {
  if (y.cols() < 1) throw ShapeError("covariance needs at least one snapshot");
  ComplexMatrix r(y.rows(), y.rows());
  r.setZero();
  r.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / static_cast<double>(y.cols()));
  r.triangularView<Eigen::StrictlyUpper>() = r.adjoint();
  return r;
}

ComplexMatrix sample_covariance(const ReceivedSignal& y) { return sample_covariance(y.data); }

NoiseSubspace noise_subspace(const ComplexMatrix& r, int k) {
  if (r.rows() != r.cols()) throw ShapeError("covariance must be square");
  const auto n = static_cast<int>(r.rows());
  if (k < 1 || k >= n) {
    throw std::invalid_argument("signal subspace dimension k=" + std::to_string(k) + " must satisfy 1 <= k < " +
                                std::to_string(n));
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(r);
  if (eig.info() != Eigen::Success) throw std::runtime_error("Hermitian eigendecomposition failed");
  // Eigen sorts ascending: the first n - k vectors span the noise subspace.
  NoiseSubspace out;
  out.basis = eig.eigenvectors().leftCols(n - k);
  out.eigenvalues = eig.eigenvalues().reverse();
  return out;
}

MusicSpectrum music_spectrum(const ComplexMatrix& noise_basis, const ArrayConfig& config,
                             const std::vector<double>& angle_grid) {
  config.validate();
  if (noise_basis.rows() != config.virtual_size()) {
    throw ShapeError("noise subspace has " + std::to_string(noise_basis.rows()) + " rows, array has " +
                     std::to_string(config.virtual_size()) + " virtual elements");
  }
  // v(theta)[m N + n] depends only on m + n, so U_n^H v = F^H u with F the
  // noise basis rows summed per element-position sum and u the
  // (M + N - 1)-element ULA steering vector.
  const int n_pos = config.n_tx + config.n_rx - 1;
  ComplexMatrix folded = ComplexMatrix::Zero(n_pos, noise_basis.cols());
  for (int m = 0; m < config.n_tx; ++m) {
    for (int n = 0; n < config.n_rx; ++n) folded.row(m + n) += noise_basis.row(m * config.n_rx + n);
  }

  ComplexMatrix steering(n_pos, static_cast<Eigen::Index>(angle_grid.size()));
  for (std::size_t i = 0; i < angle_grid.size(); ++i) {
    steering.col(static_cast<Eigen::Index>(i)) = steering_vector(angle_grid[i], n_pos, config.spacing);
  }
  const ComplexMatrix proj = folded.adjoint() * steering;
  const RealVector denom = proj.colwise().squaredNorm().transpose();

  MusicSpectrum out{angle_grid, std::vector<double>(angle_grid.size()), config};
  for (std::size_t i = 0; i < angle_grid.size(); ++i) {
    const double d = denom(static_cast<Eigen::Index>(i));
    out.values[i] = d > 1.0 / kSpectrumCap ? 1.0 / d : kSpectrumCap;
  }
  return out;
}

std::vector<double> make_angle_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("angle grid needs step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& values) {
  std::vector<std::size_t> peaks;
  const std::size_t n = values.size();
  if (n == 1) {
    peaks.push_back(0);
    return peaks;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || values[i] > values[i - 1];
    const bool right = i + 1 == n || values[i] > values[i + 1];
    if (left && right) peaks.push_back(i);
  }
  return peaks;
}

DoaEstimate estimate_doa(const ReceivedSignal& y, int k, const std::vector<double>& angle_grid) {
  y.validate();
  if (angle_grid.size() < static_cast<std::size_t>(std::max(k, 1))) {
    throw std::invalid_argument("angle grid has fewer points than targets");
  }
  if (!std::is_sorted(angle_grid.begin(), angle_grid.end()) ||
      std::adjacent_find(angle_grid.begin(), angle_grid.end()) != angle_grid.end()) {
    throw std::invalid_argument("angle grid must be strictly increasing");
  }
  const NoiseSubspace sub = noise_subspace(sample_covariance(y), k);

  DoaEstimate out;
  out.spectrum = music_spectrum(sub.basis, y.config, angle_grid);
  const auto& values = out.spectrum.values;

  std::vector<std::size_t> peaks = local_maxima(values);
  auto by_value_desc = [&](std::size_t a, std::size_t b) {
    return values[a] > values[b] || (values[a] == values[b] && a < b);
  };
  std::sort(peaks.begin(), peaks.end(), by_value_desc);
  if (peaks.size() >= static_cast<std::size_t>(k)) {
    peaks.resize(static_cast<std::size_t>(k));
  } else {
    out.degraded = true;
    std::vector<std::size_t> rest(values.size());
    std::iota(rest.begin(), rest.end(), std::size_t{0});
    std::sort(rest.begin(), rest.end(), by_value_desc);
    for (std::size_t idx : rest) {
      if (peaks.size() == static_cast<std::size_t>(k)) break;
      if (std::find(peaks.begin(), peaks.end(), idx) == peaks.end()) peaks.push_back(idx);
    }
  }
  for (std::size_t idx : peaks) out.angles_deg.push_back(angle_grid[idx]);
  std::sort(out.angles_deg.begin(), out.angles_deg.end());
  return out;
}

}  // namespace arrayext
