#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "sketchgen/sketch.hpp"

namespace sketchgen {

enum class KernelKind { GaussianRBF };

/// Shift-invariant Gaussian kernel K(u) = exp(-sigma2 * ||u||^2 / 2).
/// `bandwidth_sigma2` is the variance of the dual frequency law, so a
/// KernelSpec and a Gaussian FrequencyLaw with equal sigma2 form a
/// Bochner pair.
struct KernelSpec {
  KernelKind kind = KernelKind::GaussianRBF;
  double bandwidth_sigma2 = 1.0;

  void validate() const {
    if (!(bandwidth_sigma2 > 0.0))
      throw std::invalid_argument("KernelSpec: bandwidth_sigma2 must be > 0");
  }
};

inline double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          const KernelSpec& k) {
  k.validate();
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  return std::exp(-0.5 * k.bandwidth_sigma2 * (x - y).squaredNorm());
}

namespace detail {

// Mean pairwise kernel between the rows of A and the rows of B, diagonal
// terms included. Row-blocked so memory stays O(n d); squared distances
// come from the norms + inner-product identity with a clamp at zero.
inline double mean_cross_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const KernelSpec& k) {
  const double c = -0.5 * k.bandwidth_sigma2;
  const Eigen::VectorXd b_norms = B.rowwise().squaredNorm();
  Eigen::VectorXd dist2(B.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double a_norm = A.row(i).squaredNorm();
    dist2.noalias() = -2.0 * (B * A.row(i).transpose());
    dist2.array() += b_norms.array() + a_norm;
    total += (c * dist2.array().max(0.0)).exp().sum();
  }
  return total / (static_cast<double>(A.rows()) * static_cast<double>(B.rows()));
}

// Orders the pair (X, Y) canonically (by size, then lexicographically by
// coefficients) so pairwise sums run in one fixed order regardless of the
// caller's argument order.
inline bool canonical_before(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.rows() != Y.rows()) return X.rows() < Y.rows();
  if (X.cols() != Y.cols()) return X.cols() < Y.cols();
  const double* a = X.data();
  const double* b = Y.data();
  for (Eigen::Index i = 0, n = X.size(); i < n; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return true;  // equal contents: either order gives identical sums
}

inline void require_sample_set(const Eigen::MatrixXd& X, const char* who) {
  if (X.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": empty sample set");
}

}  // namespace detail

/// Mean pairwise kernel over one sample set (one sample per row),
/// diagonal included. This is the model-independent term that separates
/// the MMD from the fitting cost below.
inline double mean_self_kernel(const Eigen::MatrixXd& X, const KernelSpec& k) {
  k.validate();
  detail::require_sample_set(X, "mean_self_kernel");
  return detail::mean_cross_kernel(X, X, k);
}

/// Biased (V-statistic) squared MMD between two sample sets:
/// mean kappa(X,X) + mean kappa(Y,Y) - 2 mean kappa(X,Y). Exactly
/// symmetric in its arguments; cost is quadratic in the set sizes.
inline double mmd_squared_exact(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                const KernelSpec& k) {
  k.validate();
  detail::require_sample_set(X, "mmd_squared_exact");
  detail::require_sample_set(Y, "mmd_squared_exact");
  if (X.cols() != Y.cols())
    throw std::invalid_argument("mmd_squared_exact: dimension mismatch");
  const bool x_first = detail::canonical_before(X, Y);
  const double cross = x_first ? detail::mean_cross_kernel(X, Y, k)
                               : detail::mean_cross_kernel(Y, X, k);
  return detail::mean_cross_kernel(X, X, k) + detail::mean_cross_kernel(Y, Y, k) -
         2.0 * cross;
}

/// Normalized exact fitting cost for generated samples G against data X:
/// mean kappa(G,G) - 2 mean kappa(X,G). Differs from mmd_squared_exact
/// by the G-independent X self-term, so it ranks candidate G identically.
inline double mmd_gn_cost_exact(const Eigen::MatrixXd& X, const Eigen::MatrixXd& G,
                                const KernelSpec& k) {
  k.validate();
  detail::require_sample_set(X, "mmd_gn_cost_exact");
  detail::require_sample_set(G, "mmd_gn_cost_exact");
  if (X.cols() != G.cols())
    throw std::invalid_argument("mmd_gn_cost_exact: dimension mismatch");
  return detail::mean_cross_kernel(G, G, k) - 2.0 * detail::mean_cross_kernel(X, G, k);
}

struct BochnerCheck {
  double estimate = 0.0;                  // Re of the empirical characteristic mean
  std::optional<double> closed_form;      // known only for the Gaussian law
};

/// Monte-Carlo check of the kernel/frequency duality: the mean of
/// exp(i w.u) over m draws of w should approach the kernel profile K(u).
inline BochnerCheck bochner_check(const FrequencyLaw& law, const Eigen::VectorXd& u,
                                  int m, std::uint64_t seed) {
  law.validate();
  if (m < 1) throw std::invalid_argument("bochner_check: m must be >= 1");
  if (u.size() != law.dim)
    throw std::invalid_argument("bochner_check: dimension mismatch");

  const FrequencyMatrix freq = draw_frequencies(law, m, seed);
  const Eigen::VectorXd phase = freq.omega.transpose() * u;
  BochnerCheck out;
  out.estimate = phase.array().cos().sum() / static_cast<double>(m);
  if (law.kind == FrequencyKind::Gaussian)
    out.closed_form = std::exp(-0.5 * law.sigma2 * u.squaredNorm());
  return out;
}

/// Absolute gap between the squared sketch distance and the exact squared
/// MMD for a Bochner-paired (frequency law, kernel) combination.
inline double sketch_mmd_gap(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                             const FrequencyMatrix& freq, const KernelSpec& k) {
  if (freq.law.kind != FrequencyKind::Gaussian || freq.law.sigma2 != k.bandwidth_sigma2)
    throw std::invalid_argument(
        "sketch_mmd_gap: frequency law is not the kernel's Bochner dual");
  const Sketch zx = sketch_dataset(X, freq);
  const Sketch zy = sketch_dataset(Y, freq);
  const double sketch_dist2 = (zx.z - zy.z).squaredNorm();
  return std::abs(sketch_dist2 - mmd_squared_exact(X, Y, k));
}

}  // namespace sketchgen
