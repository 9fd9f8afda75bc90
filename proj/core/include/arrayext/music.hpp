#pragma once

#include <vector>

#include "arrayext/radar_model.hpp"

namespace arrayext {

/// Pseudo-spectrum P_MU(theta) = 1 / ||U_n^H v(theta)||^2 on an angle grid.
struct MusicSpectrum {
  std::vector<double> angles_deg;
  std::vector<double> values;
  ArrayConfig config;
};

/// Eigen-split of a sample covariance.
struct NoiseSubspace {
  ComplexMatrix basis;     // (M*N) x (M*N - k), orthonormal columns
  RealVector eigenvalues;  // all eigenvalues, descending
};

struct DoaEstimate {
  std::vector<double> angles_deg;  // k angles, ascending
  bool degraded = false;           // fewer than k local maxima were found
  MusicSpectrum spectrum;
};

inline constexpr double kSpectrumCap = 1e15;

/// R = Y Y^H / P.
ComplexMatrix sample_covariance(const ReceivedSignal& y);
ComplexMatrix sample_covariance(const ComplexMatrix& y);

/// Eigenvectors of the M*N - k smallest eigenvalues of the Hermitian matrix r.
NoiseSubspace noise_subspace(const ComplexMatrix& r, int k);

MusicSpectrum music_spectrum(const ComplexMatrix& noise_basis, const ArrayConfig& config,
                             const std::vector<double>& angle_grid);

/// Evenly spaced grid lo, lo + step, ..., hi (inclusive within rounding).
std::vector<double> make_angle_grid(double lo = 0.0, double hi = 90.0, double step = 0.05);

/// Strict local maxima of `values`; end points compare against their single neighbour.
std::vector<std::size_t> local_maxima(const std::vector<double>& values);

/// Locations of the k largest spectral peaks, ascending. When fewer than k
/// peaks exist the remainder is filled with the largest non-peak grid values
/// and the estimate is flagged degraded.
DoaEstimate estimate_doa(const ReceivedSignal& y, int k, const std::vector<double>& angle_grid);

}  // namespace arrayext
