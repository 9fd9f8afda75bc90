#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace arrayext {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Raised when an input is structurally valid but numerically unusable,
/// e.g. an all-zero training matrix or a zero-norm column.
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when matrix dimensions of two inputs disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed angle interval in degrees, e.g. the 10:35 training grid.
struct AngleInterval {
  double lo = 0.0;
  double hi = 90.0;

  [[nodiscard]] double center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] double width() const { return hi - lo; }
  [[nodiscard]] bool contains(double deg) const { return deg >= lo && deg <= hi; }

  /// Throws std::invalid_argument unless 0 <= lo < hi <= 90.
  void validate() const;

  /// Parses "lo:hi".
  static AngleInterval parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const AngleInterval&, const AngleInterval&) = default;
};

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace arrayext
