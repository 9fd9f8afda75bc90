#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "arrayext/types.hpp"

namespace arrayext {

/// Co-located TX/RX uniform linear arrays sharing one element spacing.
struct ArrayConfig {
  int n_tx = 1;
  int n_rx = 1;
  double spacing = 0.5;  // d / lambda0

  [[nodiscard]] int virtual_size() const { return n_tx * n_rx; }
  void validate() const;

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

/// K target angles (degrees, [0, 90]) and a K x P matrix of per-pulse RCS.
struct TargetScene {
  std::vector<double> angles_deg;
  ComplexMatrix rcs;

  [[nodiscard]] int n_targets() const { return static_cast<int>(angles_deg.size()); }
  [[nodiscard]] int n_pulses() const { return static_cast<int>(rcs.cols()); }

  /// Validates K >= 1, angle range and rcs shape.
  static TargetScene make(std::vector<double> angles_deg, ComplexMatrix rcs);
  /// Scene without targets; synthesizes pure noise over n_pulses snapshots.
  static TargetScene noise_only(int n_pulses);
};

/// Post-matched-filter snapshots Y, (M*N) x P, rows in TX-major virtual order.
struct ReceivedSignal {
  ComplexMatrix data;
  ArrayConfig config;
  std::optional<double> snr_db;  // nullopt means noiseless

  [[nodiscard]] int n_snapshots() const { return static_cast<int>(data.cols()); }
  void validate() const;
};

/// exp(j 2 pi spacing i sin(theta)) for i = 0 .. n_elements - 1.
ComplexVector steering_vector(double angle_deg, int n_elements, double spacing);

/// Kronecker product a_t(theta) (x) a_r(theta); entry m * N + n = a_t[m] * a_r[n].
ComplexVector virtual_steering(double angle_deg, const ArrayConfig& config);

/// A(theta) = [v(theta_1), ..., v(theta_K)].
ComplexMatrix virtual_steering_matrix(const std::vector<double>& angles_deg,
                                      const ArrayConfig& config);

/// i.i.d. CN(0, 1) draws, deterministic in the seed (Swerling II: one draw per pulse).
ComplexMatrix draw_rcs(int k, int p, std::uint64_t rng_seed);

/// Per-entry complex noise variance for a given SNR in dB against unit target power.
double noise_variance(double snr_db);

/// Y = A(theta) X + N. snr_db == nullopt synthesizes a noiseless signal.
ReceivedSignal synth_received(const TargetScene& scene, const ArrayConfig& config,
                              std::optional<double> snr_db, std::uint64_t rng_seed);

/// Rows of `high` belonging to the TX m < low.n_tx, RX n < low.n_rx sub-array.
ReceivedSignal extract_subarray(const ReceivedSignal& high, const ArrayConfig& low);

/// Low/high signals of one physical measurement: the high signal is
/// synthesized once and the low one is its shared-element sub-array.
struct CoupledSignals {
  ReceivedSignal low;
  ReceivedSignal high;
};

CoupledSignals synth_coupled(const TargetScene& scene, const ArrayConfig& low,
                             const ArrayConfig& high, std::optional<double> snr_db,
                             std::uint64_t rng_seed);

/// Row indices of the low sub-array inside the high virtual ordering.
std::vector<int> subarray_rows(const ArrayConfig& low, const ArrayConfig& high);

}  // namespace arrayext
