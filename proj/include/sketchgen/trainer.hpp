#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sketchgen/errors.hpp"
#include "sketchgen/generator.hpp"
#include "sketchgen/sketch.hpp"

namespace sketchgen {

enum class Optimizer { SGD, Adam };

struct TrainConfig {
  Eigen::Index n_prime = 100000;   // generated-sample pool size
  Eigen::Index batch_size = 1000;  // minibatch size n_b
  int epochs = 100;
  Optimizer optimizer = Optimizer::Adam;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool resample_latents = false;  // redraw Z each epoch instead of reshuffling

  void validate() const {
    if (n_prime < 1) throw std::invalid_argument("TrainConfig: n_prime must be >= 1");
    if (batch_size < 1 || batch_size > n_prime)
      throw std::invalid_argument("TrainConfig: need 1 <= batch_size <= n_prime");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
      throw std::invalid_argument("TrainConfig: adam betas must be in [0,1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("TrainConfig: adam_eps must be > 0");
  }
};

/// Difference between the target sketch and the sketch of the generated
/// batch; the driver of both the cost (its squared norm) and the gradient.
/// Entrywise |r_j| <= 2/sqrt(m), hence ||r|| <= 2.
struct Residual {
  Eigen::VectorXcd r;
};

struct TrainReport {
  struct Row {
    std::int64_t iteration = 0;  // optimizer steps taken so far
    int epoch = 0;
    double loss = 0.0;    // full-pool cost after this epoch
    double wall_ms = 0.0;  // elapsed wall time since training started
  };
  double initial_loss = 0.0;
  std::vector<Row> trace;  // one row per completed epoch
  TrainConfig config;
  std::uint64_t sketch_fingerprint = 0;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, TrainReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const TrainReport& report() const { return report_; }

 private:
  TrainReport report_;
};

namespace detail {

// Row-chunk size for the phase matrix (chunk x m doubles per buffer);
// depends on m only, so per-step work is independent of the original
// dataset size and of n_prime beyond the chunk count.
inline Eigen::Index phase_chunk_rows(int m) {
  const Eigen::Index by_mem = static_cast<Eigen::Index>(8'000'000 / std::max(m, 1));
  return std::clamp<Eigen::Index>(by_mem, 64, 1024);
}

inline void check_compatible(const GeneratorParams& params, const Sketch& target,
                             const FrequencyMatrix& freq) {
  if (target.omega_fingerprint != freq.fingerprint())
    throw IncompatibleSketchError("trainer: sketch is bound to a different frequency draw");
  if (params.arch.out_dim != freq.dim())
    throw std::invalid_argument("trainer: generator output dimension does not match frequencies");
}

// Sketch of the generated batch, chunked: z_j = (1/n) sum_i exp(i w_j . u_i)/sqrt(m).
inline Eigen::VectorXcd generated_sketch(const GeneratorParams& params,
                                         const Eigen::MatrixXd& latents,
                                         const FrequencyMatrix& freq) {
  const int m = freq.size();
  const Eigen::Index n = latents.rows();
  const Eigen::Index chunk = phase_chunk_rows(m);
  Eigen::VectorXd sum_re = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sum_im = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd phase;
  for (Eigen::Index begin = 0; begin < n; begin += chunk) {
    const Eigen::Index len = std::min(chunk, n - begin);
    const Eigen::MatrixXd out = forward_batch(params, latents.middleRows(begin, len));
    phase.noalias() = out * freq.omega;  // len x m
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < len; ++i) {
        double s, c;
        sincos(phase(i, j), &s, &c);
        sum_re[j] += c;
        sum_im[j] += s;
      }
  }
  const double scale = 1.0 / (std::sqrt(static_cast<double>(m)) * static_cast<double>(n));
  Eigen::VectorXcd z(m);
  z.real() = sum_re * scale;
  z.imag() = sum_im * scale;
  return z;
}

}  // namespace detail

/// r = z_X - sketch of G(latents). The cost below is ||r||^2 for the same
/// latent set.
inline Residual compute_residual(const GeneratorParams& params, const Sketch& target,
                                 const Eigen::MatrixXd& latents, const FrequencyMatrix& freq) {
  detail::check_compatible(params, target, freq);
  if (latents.rows() == 0)
    throw std::invalid_argument("compute_residual: empty latent batch");
  Residual res;
  res.r = target.z - detail::generated_sketch(params, latents, freq);
  return res;
}

/// Sketch-matching cost L(theta) = || z_X - (1/n') sum_i Phi(G(z_i)) ||^2.
/// Evaluation cost scales with the latent pool and m only, never with the
/// size of the dataset behind z_X.
inline double sketch_matching_cost(const GeneratorParams& params, const Sketch& target,
                                   const Eigen::MatrixXd& latents,
                                   const FrequencyMatrix& freq) {
  return compute_residual(params, target, latents, freq).r.squaredNorm();
}

/// Analytic gradient of the batch-restricted cost: with r computed from
/// this same batch,
///   grad = -(2/n_b) sum_i Re[ r^H dPhi/du|_{G(z_i)} ] dG(z_i)/dtheta.
/// The middle factor is evaluated for all samples at once as
/// (1/sqrt(m)) (cos(T) diag(Im r) - sin(T) diag(Re r)) Omega^T with
/// T = G(Z) Omega, then pushed through the generator's batched VJP.
inline Eigen::VectorXd sketch_matching_gradient(const GeneratorParams& params,
                                                const Sketch& target,
                                                const Eigen::MatrixXd& latents,
                                                const FrequencyMatrix& freq) {
  const Residual res = compute_residual(params, target, latents, freq);
  const int m = freq.size();
  const Eigen::Index n = latents.rows();
  const Eigen::Index chunk = detail::phase_chunk_rows(m);
  const Eigen::VectorXd r_re = res.r.real();
  const Eigen::VectorXd r_im = res.r.imag();
  const double feat_scale = 1.0 / std::sqrt(static_cast<double>(m));

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.parameter_count());
  Eigen::MatrixXd cosbuf, sinbuf;
  ForwardTrace trace;
  for (Eigen::Index begin = 0; begin < n; begin += chunk) {
    const Eigen::Index len = std::min(chunk, n - begin);
    forward_batch_traced(params, latents.middleRows(begin, len), trace);
    cosbuf.noalias() = trace.act.back() * freq.omega;  // phases, len x m
    sinbuf.resize(len, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < len; ++i) {
        double s, c;
        detail::sincos(cosbuf(i, j), &s, &c);
        cosbuf(i, j) = c;
        sinbuf(i, j) = s;
      }
    // Q = cos(T) diag(Im r) - sin(T) diag(Re r), built in place
    for (Eigen::Index j = 0; j < m; ++j)
      cosbuf.col(j) = cosbuf.col(j) * r_im[j] - sinbuf.col(j) * r_re[j];
    Eigen::MatrixXd upstream(len, freq.dim());
    upstream.noalias() = cosbuf * freq.omega.transpose();
    upstream *= feat_scale;
    accumulate_vjp_batch(params, trace, upstream, -2.0 / static_cast<double>(n), grad);
  }
  return grad;
}

/// The feature map viewed as a fixed, non-trainable layer on top of the
/// generator: pools Phi over an already-generated batch. Defined as the
/// dataset sketch of that batch, so the two agree bit-for-bit.
inline Sketch sketch_layer_forward(const Eigen::MatrixXd& generated,
                                   const FrequencyMatrix& freq) {
  return sketch_dataset(generated, freq);
}

struct TrainResult {
  GeneratorParams params;
  TrainReport report;
};

/// Per-epoch hook (checkpointing, progress); called after the epoch's
/// trace row is recorded.
using EpochCallback = std::function<void(int epoch, const GeneratorParams&, const TrainReport&)>;

/// Gradient-descent training of a generator against a dataset sketch.
/// Deterministic in cfg.seed: sub-seeds for init, latents and shuffling
/// are derived from it, and each epoch either reshuffles the fixed latent
/// pool or redraws it (cfg.resample_latents). The full-pool cost is
/// recorded once per epoch; a non-finite value aborts with
/// TrainingDivergedError carrying the report up to the last finite epoch.
inline TrainResult train(const Sketch& target, const FrequencyMatrix& freq,
                         const Architecture& arch, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  arch.validate();

  TrainResult result;
  result.params = init_params(arch, mix_seed(cfg.seed, 1));
  detail::check_compatible(result.params, target, freq);

  TrainReport& report = result.report;
  report.config = cfg;
  report.sketch_fingerprint = target.omega_fingerprint;

  const std::uint64_t latent_base = mix_seed(cfg.seed, 2);
  Rng shuffle_rng(mix_seed(cfg.seed, 3));
  Eigen::MatrixXd pool = draw_latents(arch.latent_dim, cfg.n_prime, latent_base).Z;

  Eigen::VectorXd theta = flatten_params(result.params);
  Eigen::VectorXd adam_m, adam_v;
  if (cfg.optimizer == Optimizer::Adam) {
    adam_m = Eigen::VectorXd::Zero(theta.size());
    adam_v = Eigen::VectorXd::Zero(theta.size());
  }

  report.initial_loss = sketch_matching_cost(result.params, target, pool, freq);

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  std::int64_t iteration = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.resample_latents) {
      pool = draw_latents(arch.latent_dim, cfg.n_prime, mix_seed(latent_base, epoch)).Z;
    } else {
      for (Eigen::Index i = pool.rows() - 1; i > 0; --i) {
        const Eigen::Index j =
            static_cast<Eigen::Index>(shuffle_rng.below(static_cast<std::uint64_t>(i) + 1));
        if (j != i) pool.row(i).swap(pool.row(j));
      }
    }

    for (Eigen::Index begin = 0; begin < cfg.n_prime; begin += cfg.batch_size) {
      const Eigen::Index len = std::min(cfg.batch_size, cfg.n_prime - begin);
      const Eigen::VectorXd grad =
          sketch_matching_gradient(result.params, target, pool.middleRows(begin, len), freq);
      ++iteration;
      if (cfg.optimizer == Optimizer::SGD) {
        theta -= cfg.learning_rate * grad;
      } else {
        adam_m = cfg.adam_beta1 * adam_m + (1.0 - cfg.adam_beta1) * grad;
        adam_v.array() =
            cfg.adam_beta2 * adam_v.array() + (1.0 - cfg.adam_beta2) * grad.array().square();
        const double mhat = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(iteration));
        const double vhat = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(iteration));
        theta.array() -= cfg.learning_rate * (adam_m.array() / mhat) /
                         ((adam_v.array() / vhat).sqrt() + cfg.adam_eps);
      }
      assign_from_flat(result.params, theta);
    }

    const double loss = sketch_matching_cost(result.params, target, pool, freq);
    if (!std::isfinite(loss))
      throw TrainingDivergedError(
          "train: loss became non-finite at epoch " + std::to_string(epoch), report);
    report.trace.push_back({iteration, epoch, loss, elapsed_ms()});
    if (on_epoch) on_epoch(epoch, result.params, report);
  }
  return result;
}

}  // namespace sketchgen
