#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sketchgen/rng.hpp"

namespace sketchgen {

/// Spiral in polar form: angle uniform on [0,2pi), radius angle/(2pi) plus
/// centered noise of std sigma_r, embedded as (r cos phi, r sin phi).
/// Draw order per sample: angle, then radius noise.
inline Eigen::MatrixXd gen_spiral(Eigen::Index n, double sigma_r, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_spiral: n must be >= 1");
  if (sigma_r < 0.0) throw std::invalid_argument("gen_spiral: sigma_r must be >= 0");
  Eigen::MatrixXd out(n, 2);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = 2.0 * Rng::pi() * rng.uniform();
    const double r = phi / (2.0 * Rng::pi()) + sigma_r * rng.normal();
    out(i, 0) = r * std::cos(phi);
    out(i, 1) = r * std::sin(phi);
  }
  return out;
}

/// Equal-weight mixture of 6 isotropic Gaussians with means spaced every
/// 60 degrees on a circle of the given radius. Draw order per sample:
/// component index, then the two coordinate normals.
inline Eigen::MatrixXd gen_gmm6(Eigen::Index n, std::uint64_t seed, double radius = 1.0,
                                double comp_sigma = 0.12) {
  if (n < 1) throw std::invalid_argument("gen_gmm6: n must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("gen_gmm6: radius must be > 0");
  if (comp_sigma < 0.0) throw std::invalid_argument("gen_gmm6: comp_sigma must be >= 0");
  double mx[6], my[6];
  for (int k = 0; k < 6; ++k) {
    const double ang = 2.0 * Rng::pi() * k / 6.0;
    mx[k] = radius * std::cos(ang);
    my[k] = radius * std::sin(ang);
  }
  Eigen::MatrixXd out(n, 2);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<int>(rng.below(6));
    out(i, 0) = mx[k] + comp_sigma * rng.normal();
    out(i, 1) = my[k] + comp_sigma * rng.normal();
  }
  return out;
}

/// Noisy circle: angle uniform on [0,2pi), radius R plus centered noise of
/// std sigma_r. Draw order per sample: angle, then radius noise.
inline Eigen::MatrixXd gen_circle(Eigen::Index n, double R, double sigma_r,
                                  std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_circle: n must be >= 1");
  if (!(R > 0.0)) throw std::invalid_argument("gen_circle: R must be > 0");
  if (sigma_r < 0.0) throw std::invalid_argument("gen_circle: sigma_r must be >= 0");
  Eigen::MatrixXd out(n, 2);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = 2.0 * Rng::pi() * rng.uniform();
    const double r = R + sigma_r * rng.normal();
    out(i, 0) = r * std::cos(phi);
    out(i, 1) = r * std::sin(phi);
  }
  return out;
}

struct HistogramRange {
  double x_min = -1.5, x_max = 1.5;
  double y_min = -1.5, y_max = 1.5;

  bool operator==(const HistogramRange&) const = default;
};

/// Equal-width 2-D count grid. Bins are right-open except the last along
/// each axis, which is closed; samples outside the range are tallied in
/// `overflow`. in-range counts + overflow = total.
struct Histogram2D {
  int bins_x = 0, bins_y = 0;
  HistogramRange range;
  std::vector<std::int64_t> counts;  // row-major, index iy * bins_x + ix
  std::int64_t overflow = 0;
  std::int64_t total = 0;

  std::int64_t at(int ix, int iy) const {
    return counts[static_cast<std::size_t>(iy) * bins_x + ix];
  }
};

namespace detail {

// Bin index along one axis, or -1 when out of range.
inline int bin_index(double v, double lo, double hi, int bins) {
  if (v < lo || v > hi) return -1;
  const int idx = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return idx >= bins ? bins - 1 : idx;
}

}  // namespace detail

inline Histogram2D histogram2d(const Eigen::MatrixXd& samples, int bins_x, int bins_y,
                               const HistogramRange& range = {}) {
  if (bins_x < 1 || bins_y < 1)
    throw std::invalid_argument("histogram2d: bin counts must be >= 1");
  if (!(range.x_max > range.x_min) || !(range.y_max > range.y_min))
    throw std::invalid_argument("histogram2d: degenerate range");
  if (samples.cols() != 2)
    throw std::invalid_argument("histogram2d: samples must be 2-D");

  Histogram2D h;
  h.bins_x = bins_x;
  h.bins_y = bins_y;
  h.range = range;
  h.counts.assign(static_cast<std::size_t>(bins_x) * bins_y, 0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const int ix = detail::bin_index(samples(i, 0), range.x_min, range.x_max, bins_x);
    const int iy = detail::bin_index(samples(i, 1), range.y_min, range.y_max, bins_y);
    if (ix < 0 || iy < 0)
      ++h.overflow;
    else
      ++h.counts[static_cast<std::size_t>(iy) * bins_x + ix];
    ++h.total;
  }
  return h;
}

/// Total-variation distance between two histograms on identical grids:
/// half the L1 distance between the normalized mass vectors, with the
/// overflow mass counted as one extra cell.
inline double tv_distance(const Histogram2D& a, const Histogram2D& b) {
  if (a.bins_x != b.bins_x || a.bins_y != b.bins_y || !(a.range == b.range))
    throw std::invalid_argument("tv_distance: histograms have different grids");
  if (a.total == 0 || b.total == 0)
    throw std::invalid_argument("tv_distance: empty histogram");
  const double na = static_cast<double>(a.total);
  const double nb = static_cast<double>(b.total);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i)
    sum += std::abs(a.counts[i] / na - b.counts[i] / nb);
  sum += std::abs(a.overflow / na - b.overflow / nb);
  return 0.5 * sum;
}

}  // namespace sketchgen
