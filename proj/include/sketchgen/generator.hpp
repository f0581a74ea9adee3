#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sketchgen/rng.hpp"

namespace sketchgen {

/// Shape of the generator network: affine layers of widths
/// latent_dim -> hidden... -> out_dim, leaky-ReLU on every hidden layer,
/// linear output. An empty hidden list is a single affine map.
struct Architecture {
  int latent_dim = 10;
  std::vector<int> hidden;
  int out_dim = 2;
  double leaky_slope = 0.2;

  void validate() const {
    if (latent_dim < 1) throw std::invalid_argument("Architecture: latent_dim must be >= 1");
    if (out_dim < 1) throw std::invalid_argument("Architecture: out_dim must be >= 1");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("Architecture: hidden widths must be >= 1");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
      throw std::invalid_argument("Architecture: leaky_slope must be in (0,1)");
  }

  std::vector<int> layer_dims() const {
    std::vector<int> dims;
    dims.reserve(hidden.size() + 2);
    dims.push_back(latent_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out_dim);
    return dims;
  }

  int layer_count() const { return static_cast<int>(hidden.size()) + 1; }

  std::int64_t parameter_count() const {
    const auto dims = layer_dims();
    std::int64_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      total += std::int64_t(dims[l + 1]) * dims[l] + dims[l + 1];
    return total;
  }
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

struct GeneratorParams {
  Architecture arch;
  std::vector<Layer> layers;

  std::int64_t parameter_count() const { return arch.parameter_count(); }
};

/// Glorot-uniform initialization: weights uniform with half-width
/// sqrt(6/(fan_in+fan_out)), biases zero. The draw order is pinned (layer
/// by layer, weight entries row by row) so params regenerate bit-exactly
/// from (arch, seed).
inline GeneratorParams init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  GeneratorParams params;
  params.arch = arch;
  const auto dims = arch.layer_dims();
  params.layers.resize(dims.size() - 1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Layer& layer = params.layers[l];
    layer.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.weight(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
  }
  return params;
}

namespace detail {

inline double leaky(double t, double slope) { return t >= 0.0 ? t : slope * t; }
inline double leaky_deriv(double t, double slope) { return t > 0.0 ? 1.0 : slope; }

}  // namespace detail

inline Eigen::VectorXd forward(const GeneratorParams& params, const Eigen::VectorXd& z) {
  if (z.size() != params.arch.latent_dim)
    throw std::invalid_argument("forward: latent dimension mismatch");
  const double slope = params.arch.leaky_slope;
  const std::size_t last = params.layers.size() - 1;
  Eigen::VectorXd x = z;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    Eigen::VectorXd t = params.layers[l].weight * x + params.layers[l].bias;
    if (l != last)
      for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = detail::leaky(t[i], slope);
    x = std::move(t);
  }
  return x;
}

/// Per-layer pre-activations and activations of a batch forward pass,
/// kept for the backward pass. act[0] is the input batch; act[L] the output.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> pre;  // pre[l]: n x dims[l+1]
  std::vector<Eigen::MatrixXd> act;  // act[l]: n x dims[l]
};

/// Row-wise forward of a batch (one latent vector per row), recording the
/// trace needed by accumulate_vjp_batch.
inline Eigen::MatrixXd forward_batch_traced(const GeneratorParams& params,
                                            const Eigen::MatrixXd& Z, ForwardTrace& trace) {
  if (Z.cols() != params.arch.latent_dim)
    throw std::invalid_argument("forward_batch: latent dimension mismatch");
  const double slope = params.arch.leaky_slope;
  const std::size_t L = params.layers.size();
  trace.pre.resize(L);
  trace.act.resize(L + 1);
  trace.act[0] = Z;
  for (std::size_t l = 0; l < L; ++l) {
    const Layer& layer = params.layers[l];
    Eigen::MatrixXd& t = trace.pre[l];
    t.noalias() = trace.act[l] * layer.weight.transpose();
    t.rowwise() += layer.bias.transpose();
    if (l + 1 < L)
      trace.act[l + 1] = t.unaryExpr([slope](double v) { return detail::leaky(v, slope); });
    else
      trace.act[l + 1] = t;
  }
  return trace.act[L];
}

inline Eigen::MatrixXd forward_batch(const GeneratorParams& params, const Eigen::MatrixXd& Z) {
  ForwardTrace trace;
  return forward_batch_traced(params, Z, trace);
}

/// Flat parameter layout: for each layer, weight entries row-major, then
/// the bias. File format, init draws and gradients all follow this order.
inline Eigen::VectorXd flatten_params(const GeneratorParams& params) {
  Eigen::VectorXd flat(params.parameter_count());
  Eigen::Index pos = 0;
  for (const Layer& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat[pos++] = layer.weight(r, c);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) flat[pos++] = layer.bias[i];
  }
  return flat;
}

inline void assign_from_flat(GeneratorParams& params, const Eigen::VectorXd& flat) {
  if (flat.size() != params.parameter_count())
    throw std::invalid_argument("assign_from_flat: parameter count mismatch");
  Eigen::Index pos = 0;
  for (Layer& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[pos++];
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = flat[pos++];
  }
}

/// Gradient of <v, G(z)> with respect to the flattened parameters, for one
/// sample. The leaky-ReLU derivative at exactly 0 is the slope.
inline Eigen::VectorXd backprop_vjp(const GeneratorParams& params, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& v) {
  if (z.size() != params.arch.latent_dim)
    throw std::invalid_argument("backprop_vjp: latent dimension mismatch");
  if (v.size() != params.arch.out_dim)
    throw std::invalid_argument("backprop_vjp: output dimension mismatch");
  const double slope = params.arch.leaky_slope;
  const std::size_t L = params.layers.size();

  std::vector<Eigen::VectorXd> pre(L);
  std::vector<Eigen::VectorXd> act(L + 1);
  act[0] = z;
  for (std::size_t l = 0; l < L; ++l) {
    pre[l] = params.layers[l].weight * act[l] + params.layers[l].bias;
    if (l + 1 < L)
      act[l + 1] = pre[l].unaryExpr([slope](double t) { return detail::leaky(t, slope); });
    else
      act[l + 1] = pre[l];
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.parameter_count());
  Eigen::VectorXd g = v;
  Eigen::Index pos = grad.size();
  for (std::size_t li = L; li-- > 0;) {
    const Layer& layer = params.layers[li];
    const Eigen::Index rows = layer.weight.rows();
    const Eigen::Index cols = layer.weight.cols();
    pos -= rows * cols + rows;
    Eigen::Index p = pos;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) grad[p++] = g[r] * act[li][c];
    for (Eigen::Index r = 0; r < rows; ++r) grad[p++] = g[r];
    if (li > 0) {
      Eigen::VectorXd back = layer.weight.transpose() * g;
      for (Eigen::Index i = 0; i < back.size(); ++i)
        back[i] *= detail::leaky_deriv(pre[li - 1][i], slope);
      g = std::move(back);
    }
  }
  return grad;
}

/// Adds scale * sum_i vjp(z_i, v_i) into `grad`, where row i of V is the
/// upstream vector for row i of the traced batch. All heavy lifting is
/// batched matrix products; the accumulation order over layers is fixed.
inline void accumulate_vjp_batch(const GeneratorParams& params, const ForwardTrace& trace,
                                 const Eigen::MatrixXd& V, double scale,
                                 Eigen::VectorXd& grad) {
  if (grad.size() != params.parameter_count())
    throw std::invalid_argument("accumulate_vjp_batch: gradient size mismatch");
  if (V.rows() != trace.act[0].rows() || V.cols() != params.arch.out_dim)
    throw std::invalid_argument("accumulate_vjp_batch: upstream shape mismatch");
  const double slope = params.arch.leaky_slope;
  const std::size_t L = params.layers.size();

  Eigen::MatrixXd g = V;  // n x dims[l+1], walking backwards
  Eigen::Index pos = grad.size();
  Eigen::MatrixXd wgrad;
  for (std::size_t li = L; li-- > 0;) {
    const Layer& layer = params.layers[li];
    const Eigen::Index rows = layer.weight.rows();
    const Eigen::Index cols = layer.weight.cols();
    pos -= rows * cols + rows;

    wgrad.noalias() = g.transpose() * trace.act[li];  // rows x cols, summed over samples
    Eigen::Index p = pos;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) grad[p++] += scale * wgrad(r, c);
    for (Eigen::Index r = 0; r < rows; ++r) grad[p++] += scale * g.col(r).sum();

    if (li > 0) {
      Eigen::MatrixXd back;
      back.noalias() = g * layer.weight;  // n x cols
      const Eigen::MatrixXd& t = trace.pre[li - 1];
      for (Eigen::Index j = 0; j < back.cols(); ++j)
        for (Eigen::Index i = 0; i < back.rows(); ++i)
          back(i, j) *= detail::leaky_deriv(t(i, j), slope);
      g = std::move(back);
    }
  }
}

/// Latent design matrix, one standard-normal p-vector per row,
/// regenerable bit-exactly from (p, n, seed). Draw order: row by row,
/// coordinate by coordinate.
struct LatentBatch {
  Eigen::MatrixXd Z;
  std::uint64_t seed = 0;
};

inline LatentBatch draw_latents(int latent_dim, Eigen::Index n, std::uint64_t seed) {
  if (latent_dim < 1) throw std::invalid_argument("draw_latents: latent_dim must be >= 1");
  if (n < 0) throw std::invalid_argument("draw_latents: negative count");
  LatentBatch batch;
  batch.seed = seed;
  batch.Z.resize(n, latent_dim);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < latent_dim; ++j) batch.Z(i, j) = rng.normal();
  return batch;
}

}  // namespace sketchgen
