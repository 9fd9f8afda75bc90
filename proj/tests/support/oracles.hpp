#pragma once

// Slow, independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;

// Cyclic Jacobi rotations on a real symmetric matrix. Returns eigenvalues
// ascending with matching eigenvector columns.
struct SymEig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline SymEig jacobi_eigen(Eigen::MatrixXd a, int max_sweeps = 100) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  SymEig out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Projector onto the span of the eigenvectors of the `dim` smallest
// eigenvalues of a Hermitian matrix, through the real embedding
// [[Re, -Im], [Im, Re]] whose spectrum is the complex one doubled.
inline Eigen::MatrixXcd low_eigen_projector(const Eigen::MatrixXcd& h, Eigen::Index dim) {
  const Eigen::Index n = h.rows();
  Eigen::MatrixXd big(2 * n, 2 * n);
  big << h.real(), -h.imag(), h.imag(), h.real();
  const SymEig e = jacobi_eigen(big);
  const Eigen::MatrixXd u = e.vectors.leftCols(2 * dim);
  const Eigen::MatrixXd p = u * u.transpose();
  Eigen::MatrixXcd out(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) out(r, c) = cd(p(r, c), p(r + n, c));
  return out;
}

inline Eigen::MatrixXcd direct_covariance(const Eigen::MatrixXcd& y) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index p = 0; p < y.cols(); ++p)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) r(i, j) += y(i, p) * std::conj(y(j, p));
  return r / static_cast<double>(y.cols());
}

// Virtual steering vector written as the explicit double loop over TX m and
// RX n, element m*N + n.
inline Eigen::VectorXcd brute_virtual_steering(double angle_deg, int m_tx, int n_rx, double spacing) {
  const double s = std::sin(angle_deg * M_PI / 180.0);
  Eigen::VectorXcd v(m_tx * n_rx);
  for (int m = 0; m < m_tx; ++m)
    for (int n = 0; n < n_rx; ++n) v(m * n_rx + n) = std::exp(cd(0.0, 2.0 * M_PI * spacing * (m + n) * s));
  return v;
}

inline double lasso_value(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double lambda) {
  return (y - d * w).squaredNorm() + lambda * w.cwiseAbs().sum();
}

// Exhaustive LASSO over every support of size <= max_support and every sign
// pattern: the closed-form stationary point on each face is kept when its
// signs agree. Exact whenever the true minimizer has at most max_support
// nonzeros.
inline Eigen::VectorXd exhaustive_lasso(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, double lambda,
                                        int max_support) {
  const Eigen::Index l = d.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(l);
  double best_val = lasso_value(d, y, best, lambda);
  std::vector<Eigen::Index> idx;
  auto visit = [&](auto&& self, Eigen::Index start) -> void {
    if (!idx.empty()) {
      const auto s = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd ds(d.rows(), s);
      for (Eigen::Index a = 0; a < s; ++a) ds.col(a) = d.col(idx[static_cast<std::size_t>(a)]);
      const Eigen::MatrixXd g = ds.transpose() * ds;
      const Eigen::VectorXd b = ds.transpose() * y;
      for (int mask = 0; mask < (1 << s); ++mask) {
        Eigen::VectorXd sign(s);
        for (Eigen::Index a = 0; a < s; ++a) sign(a) = (mask >> a) & 1 ? 1.0 : -1.0;
        const Eigen::VectorXd ws = g.ldlt().solve(b - 0.5 * lambda * sign);
        bool ok = true;
        for (Eigen::Index a = 0; a < s; ++a) ok = ok && ws(a) * sign(a) > 0.0;
        if (!ok) continue;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(l);
        for (Eigen::Index a = 0; a < s; ++a) w(idx[static_cast<std::size_t>(a)]) = ws(a);
        const double val = lasso_value(d, y, w, lambda);
        if (val < best_val) {
          best_val = val;
          best = w;
        }
      }
    }
    if (static_cast<int>(idx.size()) == max_support) return;
    for (Eigen::Index j = start; j < l; ++j) {
      idx.push_back(j);
      self(self, j + 1);
      idx.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

// Largest violation of the LASSO optimality conditions
// 2 d_j^T r = lambda sign(w_j) on the support, |2 d_j^T r| <= lambda off it.
inline double kkt_residual(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           double lambda) {
  const Eigen::VectorXd g = 2.0 * d.transpose() * (y - d * w);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double v = w(j) != 0.0 ? std::abs(g(j) - lambda * (w(j) > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

inline Eigen::MatrixXcd complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = cd(n(rng), n(rng));
  return m;
}

}  // namespace oracle
