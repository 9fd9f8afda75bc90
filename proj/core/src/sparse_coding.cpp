#include "arrayext/sparse_coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "arrayext/rng.hpp"

namespace arrayext {

Dictionary::Dictionary(RealMatrix atoms) : atoms_(std::move(atoms)) {
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
    const double n = atoms_.col(j).norm();
    if (std::abs(n - 1.0) > kNormTolerance) {
      throw std::invalid_argument("dictionary atom " + std::to_string(j) + " has norm " + std::to_string(n));
    }
  }
}

Dictionary Dictionary::normalized(RealMatrix atoms) {
  for (Eigen::Index j = 0; j < atoms.cols(); ++j) {
    const double n = atoms.col(j).norm();
    if (!(n > 0.0)) throw DegenerateInputError("cannot normalize zero atom " + std::to_string(j));
    atoms.col(j) /= n;
  }
  return Dictionary(std::move(atoms));
}

int SparseCodeMatrix::support_size(Eigen::Index c) const {
  return static_cast<int>((codes.col(c).array() != 0.0).count());
}

double lasso_objective(const RealMatrix& dict, const RealMatrix& targets, const RealMatrix& codes, double lambda) {
  return (targets - dict * codes).squaredNorm() + lambda * codes.cwiseAbs().sum();
}

LassoSolver::LassoSolver(RealMatrix dict) : dict_(std::move(dict)) {
  gram_.noalias() = dict_.transpose() * dict_;
}

namespace {

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// One coordinate pass over `indices`. q holds D^T r for the current
// residual r = y - D w.
template <typename Indices>
void coordinate_sweep(const RealMatrix& gram, double threshold, const Indices& indices,
                        Eigen::Ref<RealVector> w, Eigen::Ref<RealVector> q) {
  for (const Eigen::Index j : indices) {
    const double g = gram(j, j);
    if (!(g > 0.0)) continue;
    const double wj = w(j);
    const double updated = soft_threshold(q(j) + g * wj, threshold) / g;
    const double delta = updated - wj;
    if (delta != 0.0) {
      q.noalias() -= delta * gram.col(j);
      w(j) = updated;
    }
  }
}

}  // namespace

namespace {

// Duality gap of one column from the maintained quantities b = D^T y and
// q = D^T (y - D w). The dual point is the residual scaled into the
// feasible set ||D^T nu||_inf <= lambda / 2.
double duality_gap(double yy, const Eigen::Ref<const RealVector>& b, const Eigen::Ref<const RealVector>& q,
                   const Eigen::Ref<const RealVector>& w, double lambda) {
  const double wb = w.dot(b);
  const double rr = std::max(0.0, yy - wb - w.dot(q));
  const double ry = yy - wb;
  const double qmax = q.cwiseAbs().maxCoeff();
  const double s = qmax > 0.0 ? std::min(1.0, 0.5 * lambda / qmax) : 1.0;
  const double primal = rr + lambda * w.cwiseAbs().sum();
  const double dual = 2.0 * s * ry - s * s * rr;
  return primal - dual;
}

// Exact minimizer of the objective restricted to the current support and
// sign pattern, w_S = G_SS^{-1} (b_S - lambda/2 sign(w_S)). When a sign
// would flip, w moves along the segment only up to the first zero
// crossing; the objective is a convex quadratic on that orthant, so the
// step never increases it. Skipped when G_SS is not positive definite.
void newton_polish(const RealMatrix& gram, const Eigen::Ref<const RealVector>& b, double threshold,
                   Eigen::Ref<RealVector> w, Eigen::Ref<RealVector> q, std::vector<Eigen::Index>& support) {
  support.clear();
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) != 0.0) support.push_back(j);
  }
  const auto s = static_cast<Eigen::Index>(support.size());
  if (s == 0) return;
  RealMatrix g_ss(s, s);
  RealVector rhs(s);
  RealVector w_s(s);
  for (Eigen::Index a = 0; a < s; ++a) {
    const Eigen::Index ja = support[static_cast<std::size_t>(a)];
    for (Eigen::Index c = 0; c < s; ++c) g_ss(a, c) = gram(ja, support[static_cast<std::size_t>(c)]);
    w_s(a) = w(ja);
    rhs(a) = b(ja) - (w_s(a) > 0.0 ? threshold : -threshold);
  }
  const Eigen::LLT<RealMatrix> llt(g_ss);
  if (llt.info() != Eigen::Success) return;
  const RealVector target = llt.solve(rhs);
  if (!target.allFinite()) return;

  double step = 1.0;
  Eigen::Index crossing = -1;
  for (Eigen::Index a = 0; a < s; ++a) {
    if (target(a) * w_s(a) < 0.0) {
      const double t = w_s(a) / (w_s(a) - target(a));
      if (t < step) {
        step = t;
        crossing = a;
      }
    }
  }
  RealVector next = w_s + step * (target - w_s);
  if (crossing >= 0) next(crossing) = 0.0;
  for (Eigen::Index a = 0; a < s; ++a) {
    const double delta = next(a) - w_s(a);
    if (delta != 0.0) {
      const Eigen::Index j = support[static_cast<std::size_t>(a)];
      q.noalias() -= delta * gram.col(j);
      w(j) = next(a);
    }
  }
}

}  // namespace

SparseCodeMatrix LassoSolver::solve(const RealMatrix& targets, const LassoOptions& opts,
                                    const RealMatrix* warm_start) const {
  if (targets.rows() != dict_.rows()) {
    throw ShapeError("LASSO targets have " + std::to_string(targets.rows()) + " rows, dictionary has " +
                     std::to_string(dict_.rows()));
  }
  if (!(opts.lambda > 0.0)) throw std::invalid_argument("LASSO lambda must be positive");
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw std::invalid_argument("LASSO tol and max_iter must be positive");

  const Eigen::Index n_atoms = dict_.cols();
  SparseCodeMatrix out;
  if (warm_start != nullptr) {
    if (warm_start->rows() != n_atoms || warm_start->cols() != targets.cols()) {
      throw ShapeError("LASSO warm start has the wrong shape");
    }
    out.codes = *warm_start;
  } else {
    out.codes = RealMatrix::Zero(n_atoms, targets.cols());
  }

  const RealMatrix b = dict_.transpose() * targets;
  RealMatrix q = b;
  if (warm_start != nullptr) q.noalias() -= gram_ * out.codes;

  const double threshold = opts.lambda / 2.0;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n_atoms));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  std::vector<Eigen::Index> active;
  constexpr int kInnerSweeps = 8;
  constexpr int kPolishEvery = 3;

  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    auto w = out.codes.col(c);
    auto qc = q.col(c);
    const auto y = targets.col(c);
    const double yy = y.squaredNorm();
    const double gap_tol = opts.tol * std::max(yy, std::numeric_limits<double>::min());
    int sweeps = 0;
    bool converged = false;
    std::vector<Eigen::Index> prev_support;
    int round = 0;
    while (sweeps < opts.max_iter) {
      coordinate_sweep(gram_, threshold, all, w, qc);
      ++sweeps;
      if (duality_gap(yy, b.col(c), qc, w, opts.lambda) <= gap_tol) {
        // Confirm against a freshly computed correlation vector.
        qc = dict_.transpose() * (y - dict_ * w);
        if (duality_gap(yy, b.col(c), qc, w, opts.lambda) <= gap_tol) {
          converged = true;
          break;
        }
      }
      active.clear();
      for (Eigen::Index j = 0; j < n_atoms; ++j) {
        if (w(j) != 0.0) active.push_back(j);
      }
      for (int i = 0; i < kInnerSweeps && sweeps < opts.max_iter; ++i, ++sweeps) {
        coordinate_sweep(gram_, threshold, active, w, qc);
      }
      // The exact support solve pays off once the support stops changing.
      if (active == prev_support || ++round % kPolishEvery == 0) {
        newton_polish(gram_, b.col(c), threshold, w, qc, active);
      } else {
        prev_support = active;
      }
    }
    out.converged = out.converged && converged;
    out.sweeps = std::max(out.sweeps, sweeps);
  }
  return out;
}

SparseCodeMatrix lasso(const Dictionary& dict, const RealMatrix& targets, double lambda, double tol, int max_iter) {
  return LassoSolver(dict.atoms()).solve(targets, LassoOptions{lambda, tol, max_iter});
}

double reconstruction_error(const RealMatrix& dict, const RealMatrix& codes, const RealMatrix& samples) {
  if (dict.cols() != codes.rows() || dict.rows() != samples.rows() || codes.cols() != samples.cols()) {
    throw ShapeError("reconstruction_error: dictionary, codes and samples disagree in shape");
  }
  return (samples - dict * codes).squaredNorm();
}

double reconstruction_error(const Dictionary& dict, const SparseCodeMatrix& codes, const RealMatrix& samples) {
  return reconstruction_error(dict.atoms(), codes.codes, samples);
}

Dictionary odl_initial_dictionary(const RealMatrix& samples, int n_atoms, std::uint64_t seed) {
  if (n_atoms < 1) throw std::invalid_argument("dictionary needs at least one atom");
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    if (samples.col(c).squaredNorm() > 0.0) candidates.push_back(c);
  }
  if (candidates.empty()) throw DegenerateInputError("all training samples are zero");

  Rng rng(seed);
  RealMatrix atoms(samples.rows(), n_atoms);
  const auto n_draw = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(n_atoms));
  // Partial Fisher-Yates: the first n_draw entries become a uniform draw without replacement.
  for (std::size_t i = 0; i < n_draw; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
    atoms.col(static_cast<Eigen::Index>(i)) = samples.col(candidates[i]).normalized();
  }
  // Fewer usable samples than atoms: pad with random unit vectors.
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto j = static_cast<Eigen::Index>(n_draw); j < n_atoms; ++j) {
    for (Eigen::Index r = 0; r < atoms.rows(); ++r) atoms(r, j) = normal(rng);
    atoms.col(j).normalize();
  }
  return Dictionary(std::move(atoms));
}

namespace {

struct OdlStatistics {
  RealMatrix a;   // sum W W^T
  RealMatrix b;   // sum Y W^T
  double sum_sq = 0.0;
  double l1 = 0.0;
  Eigen::Index seen = 0;

  [[nodiscard]] double surrogate(const RealMatrix& d) const {
    const RealMatrix dtd = d.transpose() * d;
    const double quad = dtd.cwiseProduct(a).sum();
    const double lin = d.cwiseProduct(b).sum();
    return (quad - 2.0 * lin + sum_sq + l1) / static_cast<double>(seen);
  }
};

}  // namespace

OdlResult odl_train(const RealMatrix& samples, const OdlOptions& opts) {
  if (samples.cols() < 1 || samples.rows() < 1) throw DegenerateInputError("no training samples");
  if (samples.squaredNorm() == 0.0) throw DegenerateInputError("all training samples are zero");
  if (opts.n_iters < 0 || opts.batch_size < 1) throw std::invalid_argument("ODL needs n_iters >= 0 and batch_size >= 1");
  if (!(opts.lambda > 0.0)) throw std::invalid_argument("ODL lambda must be positive");

  OdlResult result{odl_initial_dictionary(samples, opts.n_atoms, opts.seed), {}};
  if (opts.n_iters == 0) return result;

  RealMatrix d = result.dict.atoms();
  const Eigen::Index n_atoms = d.cols();
  const Eigen::Index n_samples = samples.cols();
  const Eigen::Index batch = std::min<Eigen::Index>(opts.batch_size, n_samples);

  OdlStatistics stats{RealMatrix::Zero(n_atoms, n_atoms), RealMatrix::Zero(d.rows(), n_atoms)};
  LassoOptions lasso_opts = opts.lasso;
  lasso_opts.lambda = opts.lambda;

  Rng rng(derive_seed(opts.seed, {1}));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  RealMatrix yb(d.rows(), batch);
  result.log.reserve(static_cast<std::size_t>(opts.n_iters));
  for (int it = 1; it <= opts.n_iters; ++it) {
    for (Eigen::Index c = 0; c < batch; ++c) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      yb.col(c) = samples.col(order[cursor++]);
    }

    const SparseCodeMatrix w = LassoSolver(d).solve(yb, lasso_opts);
    const RealMatrix residual = yb - d * w.codes;

    stats.a.noalias() += w.codes * w.codes.transpose();
    stats.b.noalias() += yb * w.codes.transpose();
    stats.sum_sq += yb.squaredNorm();
    stats.l1 += opts.lambda * w.codes.cwiseAbs().sum();
    stats.seen += batch;

    OdlIterationLog entry;
    entry.iteration = it;
    entry.batch_relative_error = residual.norm() / std::max(yb.norm(), 1e-300);
    entry.surrogate_before = stats.surrogate(d);

    std::vector<bool> used(static_cast<std::size_t>(batch), false);
    for (Eigen::Index j = 0; j < n_atoms; ++j) {
      if (stats.a(j, j) == 0.0) {
        // Never used so far: restart the atom at the worst-fit sample of this batch.
        Eigen::Index worst = -1;
        double worst_err = 0.0;
        for (Eigen::Index c = 0; c < batch; ++c) {
          const double e = residual.col(c).squaredNorm();
          if (!used[static_cast<std::size_t>(c)] && e > worst_err && yb.col(c).squaredNorm() > 0.0) {
            worst = c;
            worst_err = e;
          }
        }
        if (worst >= 0) {
          used[static_cast<std::size_t>(worst)] = true;
          d.col(j) = yb.col(worst).normalized();
          ++entry.replaced_atoms;
        }
        continue;
      }
      RealVector g = stats.b.col(j) - d * stats.a.col(j) + stats.a(j, j) * d.col(j);
      const double gn = g.norm();
      if (gn > 0.0) d.col(j) = g / gn;
    }
    entry.surrogate_after = stats.surrogate(d);
    result.log.push_back(entry);
  }
  result.dict = Dictionary(std::move(d));
  return result;
}

}  // namespace arrayext
