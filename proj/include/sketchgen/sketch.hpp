#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sketchgen/errors.hpp"
#include "sketchgen/rng.hpp"

namespace sketchgen {

namespace detail {

inline void sincos(double x, double* s, double* c) {
#if defined(__GLIBC__)
  ::sincos(x, s, c);
#else
  *s = std::sin(x);
  *c = std::cos(x);
#endif
}

inline void append_le(std::vector<unsigned char>& buf, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) buf.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

}  // namespace detail

enum class FrequencyKind : std::uint8_t { Gaussian = 0, FoldedGaussian = 1 };

/// Distribution of the random frequency columns. `sigma2` is the variance
/// of the underlying scalar normal in both variants: Gaussian draws each
/// column from N(0, sigma2 * I_d); FoldedGaussian draws a direction uniform
/// on the unit sphere scaled by |N(0, sigma2)|.
struct FrequencyLaw {
  FrequencyKind kind = FrequencyKind::Gaussian;
  double sigma2 = 1.0;
  int dim = 1;

  void validate() const {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("FrequencyLaw: sigma2 must be > 0");
    if (dim < 1) throw std::invalid_argument("FrequencyLaw: dim must be >= 1");
  }
};

/// Hash binding a sketch to one frequency draw; covers everything needed to
/// regenerate the matrix.
inline std::uint64_t frequency_fingerprint(const FrequencyLaw& law, int m,
                                           std::uint64_t seed) {
  std::vector<unsigned char> buf;
  buf.reserve(25);
  buf.push_back(static_cast<unsigned char>(law.kind));
  detail::append_le(buf, std::bit_cast<std::uint64_t>(law.sigma2), 8);
  detail::append_le(buf, static_cast<std::uint32_t>(law.dim), 4);
  detail::append_le(buf, static_cast<std::uint32_t>(m), 4);
  detail::append_le(buf, seed, 8);
  return fnv1a64(buf.data(), buf.size());
}

/// The d x m matrix of random frequencies, one column per feature. Columns
/// are in radians per data unit. Immutable after construction and safe to
/// share across threads.
struct FrequencyMatrix {
  Eigen::MatrixXd omega;  // d x m
  FrequencyLaw law;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(omega.rows()); }
  int size() const { return static_cast<int>(omega.cols()); }
  std::uint64_t fingerprint() const { return frequency_fingerprint(law, size(), seed); }
};

/// Draws m frequency columns from `law`, deterministically in `seed`.
/// Fill order is pinned (column by column; folded variant draws the
/// direction normals before the radius normal) so the matrix regenerates
/// bit-exactly from (law, m, seed).
inline FrequencyMatrix draw_frequencies(const FrequencyLaw& law, int m,
                                        std::uint64_t seed) {
  law.validate();
  if (m < 1) throw std::invalid_argument("draw_frequencies: m must be >= 1");

  FrequencyMatrix out;
  out.law = law;
  out.seed = seed;
  out.omega.resize(law.dim, m);

  Rng rng(seed);
  const double sigma = std::sqrt(law.sigma2);
  if (law.kind == FrequencyKind::Gaussian) {
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < law.dim; ++i) out.omega(i, j) = sigma * rng.normal();
  } else {
    Eigen::VectorXd dir(law.dim);
    for (int j = 0; j < m; ++j) {
      double norm = 0.0;
      do {
        for (int i = 0; i < law.dim; ++i) dir[i] = rng.normal();
        norm = dir.norm();
      } while (norm == 0.0);
      const double radius = std::abs(sigma * rng.normal());
      out.omega.col(j) = (radius / norm) * dir;
    }
  }
  return out;
}

/// Feature map entry j: exp(i * omega_j . x) / sqrt(m). Every entry has
/// modulus 1/sqrt(m), so the vector has unit 2-norm.
inline Eigen::VectorXcd rff_map(const Eigen::VectorXd& x, const FrequencyMatrix& freq) {
  if (x.size() != freq.dim())
    throw std::invalid_argument("rff_map: sample dimension does not match frequencies");
  const int m = freq.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::VectorXd phase(m);
  phase.noalias() = freq.omega.transpose() * x;
  Eigen::VectorXcd out(m);
  for (int j = 0; j < m; ++j) {
    double s, c;
    detail::sincos(phase[j], &s, &c);
    out[j] = std::complex<double>(c * scale, s * scale);
  }
  return out;
}

/// Mergeable dataset summary: the empirical mean of the feature map over
/// `count` pooled samples. count == 0 carries a zero vector.
struct Sketch {
  Eigen::VectorXcd z;
  std::uint64_t count = 0;
  std::uint64_t omega_fingerprint = 0;
};

/// Single-pass accumulator; memory is O(m) regardless of how many samples
/// are added. Thread-confined; combine partial accumulators with
/// `combine` (or the finalized sketches with `merge`).
class SketchAccumulator {
 public:
  explicit SketchAccumulator(const FrequencyMatrix& freq)
      : freq_(&freq),
        sum_(Eigen::VectorXcd::Zero(freq.size())),
        phase_(freq.size()),
        scale_(1.0 / std::sqrt(static_cast<double>(freq.size()))) {}

  void add(const Eigen::VectorXd& x) {
    if (x.size() != freq_->dim())
      throw std::invalid_argument("SketchAccumulator: sample dimension mismatch");
    phase_.noalias() = freq_->omega.transpose() * x;
    const int m = freq_->size();
    for (int j = 0; j < m; ++j) {
      double s, c;
      detail::sincos(phase_[j], &s, &c);
      sum_[j] += std::complex<double>(c * scale_, s * scale_);
    }
    ++count_;
  }

  /// Adds another accumulator's raw sums (exact, no renormalization).
  void combine(const SketchAccumulator& other) {
    if (other.freq_->fingerprint() != freq_->fingerprint())
      throw IncompatibleSketchError("SketchAccumulator: frequency mismatch in combine");
    sum_ += other.sum_;
    count_ += other.count_;
  }

  std::uint64_t count() const { return count_; }

  Sketch finalize() const {
    Sketch s;
    s.count = count_;
    s.omega_fingerprint = freq_->fingerprint();
    if (count_ == 0)
      s.z = Eigen::VectorXcd::Zero(freq_->size());
    else
      s.z = sum_ / static_cast<double>(count_);
    return s;
  }

 private:
  const FrequencyMatrix* freq_;
  Eigen::VectorXcd sum_;
  Eigen::VectorXd phase_;
  double scale_;
  std::uint64_t count_ = 0;
};

/// Sketches a sample matrix (one sample per row) in a single sequential pass.
inline Sketch sketch_dataset(const Eigen::MatrixXd& samples, const FrequencyMatrix& freq) {
  SketchAccumulator acc(freq);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) acc.add(samples.row(i).transpose());
  return acc.finalize();
}

/// Parallel variant: rows are striped over `workers` contiguous blocks,
/// each accumulated on its own thread, then combined in worker-index order
/// so a run is reproducible for a fixed worker count.
inline Sketch sketch_dataset(const Eigen::MatrixXd& samples, const FrequencyMatrix& freq,
                             int workers) {
  const Eigen::Index n = samples.rows();
  if (workers <= 1 || n < 2 * workers) return sketch_dataset(samples, freq);

  std::vector<SketchAccumulator> parts;
  parts.reserve(workers);
  for (int w = 0; w < workers; ++w) parts.emplace_back(freq);

  std::vector<std::thread> threads;
  threads.reserve(workers);
  const Eigen::Index stripe = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * stripe;
    const Eigen::Index end = std::min(n, begin + stripe);
    threads.emplace_back([&, w, begin, end] {
      for (Eigen::Index i = begin; i < end; ++i) parts[w].add(samples.row(i).transpose());
    });
  }
  for (auto& t : threads) t.join();

  for (int w = 1; w < workers; ++w) parts[0].combine(parts[w]);
  return parts[0].finalize();
}

/// Pools two sketches of the same frequency draw. Counts add; means are
/// recombined count-weighted. Empty sketches are exact identity elements.
inline Sketch merge(const Sketch& a, const Sketch& b) {
  if (a.omega_fingerprint != b.omega_fingerprint)
    throw IncompatibleSketchError("merge: sketches bound to different frequency draws");
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  Sketch out;
  out.omega_fingerprint = a.omega_fingerprint;
  out.count = a.count + b.count;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  out.z = (na * a.z + nb * b.z) / (na + nb);
  return out;
}

/// Jacobian of the feature map at u: row j is (i/sqrt(m)) * exp(i omega_j . u)
/// * omega_j^T, an m x d complex matrix.
inline Eigen::MatrixXcd rff_jacobian(const Eigen::VectorXd& u, const FrequencyMatrix& freq) {
  if (u.size() != freq.dim())
    throw std::invalid_argument("rff_jacobian: sample dimension does not match frequencies");
  const int m = freq.size();
  const int d = freq.dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::VectorXd phase(m);
  phase.noalias() = freq.omega.transpose() * u;
  Eigen::MatrixXcd jac(m, d);
  for (int j = 0; j < m; ++j) {
    double s, c;
    detail::sincos(phase[j], &s, &c);
    // i * exp(i t) = -sin(t) + i cos(t)
    const std::complex<double> factor(-s * scale, c * scale);
    for (int k = 0; k < d; ++k) jac(j, k) = factor * freq.omega(k, j);
  }
  return jac;
}

}  // namespace sketchgen
