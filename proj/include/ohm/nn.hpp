// Copyright 2026 The OHM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Feed-forward ReLU networks: inference, mini-batch ADAM training,
// finite-difference gradient verification and the OHMNET01 model file.
//
// Batches are column-major: one sample per column, so a layer is
// Z = W * A + b with W of shape (out x in).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohm/alignment.hpp"
#include "ohm/error.hpp"

namespace ohm::nn {

enum class OutputActivation : std::uint8_t { kSoftmax = 0, kLinear = 1 };
enum class Loss { kCrossEntropy, kMse };

template <typename Scalar>
struct Mlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  OutputActivation output_activation = OutputActivation::kSoftmax;
  std::uint32_t feature_config_hash = 0;

  std::size_t n_layers() const { return weights.size(); }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
  }

  void validate() const {
    if (layer_sizes.size() < 2) throw ShapeError("a network needs at least two layer sizes");
    if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
      throw ShapeError("parameter count does not match layer sizes");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
          biases[l].size() != layer_sizes[l + 1]) {
        throw ShapeError("layer " + std::to_string(l) + " has inconsistent shape");
      }
      if (!weights[l].allFinite() || !biases[l].allFinite()) {
        throw ShapeError("layer " + std::to_string(l) + " has non-finite parameters");
      }
    }
  }

  template <typename Other>
  Mlp<Other> cast() const {
    Mlp<Other> out;
    out.layer_sizes = layer_sizes;
    out.output_activation = output_activation;
    out.feature_config_hash = feature_config_hash;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.weights.push_back(weights[l].template cast<Other>());
      out.biases.push_back(biases[l].template cast<Other>());
    }
    return out;
  }
};

using MlpModel = Mlp<float>;

/// Architecture of a network to be trained.
struct ModelSpec {
  std::vector<int> layer_sizes;
  OutputActivation output_activation = OutputActivation::kSoftmax;
  std::uint32_t feature_config_hash = 0;
};

/// 39 -> 3 x 1024 ReLU -> 4-way softmax.
inline ModelSpec nasality_spec(std::uint32_t feature_hash = 0, int width = 1024, int depth = 3) {
  ModelSpec s{{39}, OutputActivation::kSoftmax, feature_hash};
  for (int i = 0; i < depth; ++i) s.layer_sizes.push_back(width);
  s.layer_sizes.push_back(alignment::kNumClasses);
  return s;
}

/// 39 -> 3 x 512 ReLU -> linear scalar.
inline ModelSpec regressor_spec(std::uint32_t feature_hash = 0, int width = 512, int depth = 3) {
  ModelSpec s{{39}, OutputActivation::kLinear, feature_hash};
  for (int i = 0; i < depth; ++i) s.layer_sizes.push_back(width);
  s.layer_sizes.push_back(1);
  return s;
}

template <typename Scalar>
Mlp<Scalar> make_zero_model(const ModelSpec& spec) {
  Mlp<Scalar> m;
  m.layer_sizes = spec.layer_sizes;
  m.output_activation = spec.output_activation;
  m.feature_config_hash = spec.feature_config_hash;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    m.weights.push_back(Mlp<Scalar>::Matrix::Zero(spec.layer_sizes[l + 1], spec.layer_sizes[l]));
    m.biases.push_back(Mlp<Scalar>::Vector::Zero(spec.layer_sizes[l + 1]));
  }
  m.validate();
  return m;
}

/// He-normal weights (std = sqrt(2 / fan_in)), zero biases.
template <typename Scalar>
Mlp<Scalar> he_init(const ModelSpec& spec, std::uint64_t seed) {
  Mlp<Scalar> m = make_zero_model<Scalar>(spec);
  std::mt19937_64 rng(seed);
  for (auto& w : m.weights) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(dist(rng));
    }
  }
  return m;
}

namespace detail {

/// Column-wise softmax, exponentials accumulated in double.
template <typename Derived>
void softmax_columns(Eigen::MatrixBase<Derived>& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mx = static_cast<double>(z.col(j).maxCoeff());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) sum += std::exp(static_cast<double>(z(i, j)) - mx);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      z(i, j) = static_cast<typename Derived::Scalar>(std::exp(static_cast<double>(z(i, j)) - mx) / sum);
    }
  }
}

}  // namespace detail

/// Network output for a batch (input_dim x batch). Softmax heads return
/// posteriors, linear heads raw values.
template <typename Scalar>
typename Mlp<Scalar>::Matrix forward(const Mlp<Scalar>& model,
                                     const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& x) {
  if (x.rows() != model.input_dim()) {
    throw ShapeError("input width " + std::to_string(x.rows()) + " does not match model input " +
                     std::to_string(model.input_dim()));
  }
  typename Mlp<Scalar>::Matrix a = x;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    typename Mlp<Scalar>::Matrix z = model.weights[l] * a;
    z.colwise() += model.biases[l];
    if (l + 1 < model.n_layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
  }
  if (model.output_activation == OutputActivation::kSoftmax) detail::softmax_columns(a);
  return a;
}

/// Forward pass in fixed-size chunks to bound memory on long inputs.
template <typename Scalar>
typename Mlp<Scalar>::Matrix predict(const Mlp<Scalar>& model,
                                     const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& x,
                                     Eigen::Index chunk = 4096) {
  typename Mlp<Scalar>::Matrix out(model.output_dim(), x.cols());
  for (Eigen::Index start = 0; start < x.cols(); start += chunk) {
    const Eigen::Index n = std::min(chunk, x.cols() - start);
    out.middleCols(start, n) = forward(model, typename Mlp<Scalar>::Matrix(x.middleCols(start, n)));
  }
  return out;
}

struct PosteriorFrame {
  double p_nc = 0.25;
  double p_oc = 0.25;
  double p_nv = 0.25;
  double p_ov = 0.25;
};

/// Posteriors for features laid out one frame per row (n_frames x 39).
inline std::vector<PosteriorFrame> posteriors(const MlpModel& model, const Eigen::MatrixXd& frames) {
  if (model.output_activation != OutputActivation::kSoftmax ||
      model.output_dim() != alignment::kNumClasses) {
    throw ShapeError("posteriors require a 4-way softmax model");
  }
  const Eigen::MatrixXf x = frames.transpose().cast<float>();
  const Eigen::MatrixXf p = predict(model, x);
  std::vector<PosteriorFrame> out(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    out[j] = {p(0, j), p(1, j), p(2, j), p(3, j)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses and backpropagation.

/// Classification targets are class indices; regression targets are values
/// for a single-output network.
struct Targets {
  std::vector<int> labels;
  std::vector<float> values;
};

template <typename Scalar>
struct Gradients {
  std::vector<typename Mlp<Scalar>::Matrix> weights;
  std::vector<typename Mlp<Scalar>::Vector> biases;
};

template <typename Scalar>
class Backprop {
 public:
  using Matrix = typename Mlp<Scalar>::Matrix;

  explicit Backprop(const Mlp<Scalar>& model) {
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
      grads_.weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
      grads_.biases.push_back(Mlp<Scalar>::Vector::Zero(model.biases[l].size()));
    }
    z_.resize(model.n_layers());
    a_.resize(model.n_layers());
  }

  const Gradients<Scalar>& gradients() const { return grads_; }

  /// Mean loss over the batch columns; gradients of that mean are left in
  /// gradients(). `index` selects which target entries belong to the batch.
  double run(const Mlp<Scalar>& model, const Eigen::Ref<const Matrix>& x, const Targets& targets,
             const std::vector<std::size_t>& index, Loss loss) {
    const std::size_t L = model.n_layers();
    const auto batch = static_cast<double>(x.cols());
    for (std::size_t l = 0; l < L; ++l) {
      if (l == 0) {
        z_[l].noalias() = model.weights[l] * x;
      } else {
        z_[l].noalias() = model.weights[l] * a_[l - 1];
      }
      z_[l].colwise() += model.biases[l];
      if (l + 1 < L) a_[l] = z_[l].cwiseMax(Scalar(0));
    }

    Matrix& out = z_[L - 1];
    double total = 0.0;
    delta_.resize(out.rows(), out.cols());
    if (loss == Loss::kCrossEntropy) {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const int y = targets.labels[index[j]];
        const double mx = static_cast<double>(out.col(j).maxCoeff());
        double sum = 0.0;
        for (Eigen::Index i = 0; i < out.rows(); ++i) sum += std::exp(static_cast<double>(out(i, j)) - mx);
        const double log_sum = mx + std::log(sum);
        total += log_sum - static_cast<double>(out(y, j));
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
          const double p = std::exp(static_cast<double>(out(i, j)) - log_sum);
          delta_(i, j) = static_cast<Scalar>((p - (i == y ? 1.0 : 0.0)) / batch);
        }
      }
    } else {
      for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double diff = static_cast<double>(out(0, j)) - targets.values[index[j]];
        total += diff * diff;
        delta_(0, j) = static_cast<Scalar>(2.0 * diff / batch);
      }
    }

    for (std::size_t l = L; l-- > 0;) {
      if (l == 0) {
        grads_.weights[l].noalias() = delta_ * x.transpose();
      } else {
        grads_.weights[l].noalias() = delta_ * a_[l - 1].transpose();
      }
      grads_.biases[l] = delta_.rowwise().sum();
      if (l > 0) {
        back_.noalias() = model.weights[l].transpose() * delta_;
        delta_ = back_.cwiseProduct((z_[l - 1].array() > Scalar(0)).matrix().template cast<Scalar>());
      }
    }
    return total / batch;
  }

 private:
  Gradients<Scalar> grads_;
  std::vector<Matrix> z_;
  std::vector<Matrix> a_;
  Matrix delta_;
  Matrix back_;
};

template <typename Scalar>
double evaluate_loss(const Mlp<Scalar>& model, const Eigen::Ref<const typename Mlp<Scalar>::Matrix>& x,
                     const Targets& targets, Loss loss) {
  std::vector<std::size_t> index(static_cast<std::size_t>(x.cols()));
  std::iota(index.begin(), index.end(), std::size_t{0});
  Backprop<Scalar> bp(model);
  return bp.run(model, x, targets, index, loss);
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  int epochs = 25;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;
  Loss loss = Loss::kCrossEntropy;
  std::uint64_t seed = 42;

  void validate() const {
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  }
};

/// Training samples, one per column.
struct Dataset {
  Eigen::MatrixXf features;
  Targets targets;

  Eigen::Index size() const { return features.cols(); }
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochLog> epochs;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch ADAM from a He-normal start. Sample order is reshuffled each
/// epoch from a generator seeded with cfg.seed, so equal inputs give
/// bit-identical models.
inline TrainResult train(const Dataset& data, const ModelSpec& spec, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  cfg.validate();
  const Eigen::Index n = data.size();
  if (n == 0) throw ArgumentError("training set is empty");
  if (data.features.rows() != spec.layer_sizes.front()) {
    throw ShapeError("feature width " + std::to_string(data.features.rows()) +
                     " does not match network input " + std::to_string(spec.layer_sizes.front()));
  }
  if (cfg.loss == Loss::kCrossEntropy) {
    if (spec.output_activation != OutputActivation::kSoftmax) {
      throw ArgumentError("cross-entropy training needs a softmax head");
    }
    if (static_cast<Eigen::Index>(data.targets.labels.size()) != n) {
      throw ShapeError("label count does not match sample count");
    }
    for (int y : data.targets.labels) {
      if (y < 0 || y >= spec.layer_sizes.back()) {
        throw ArgumentError("label " + std::to_string(y) + " outside the output classes");
      }
    }
  } else {
    if (spec.layer_sizes.back() != 1) throw ArgumentError("MSE training needs a single output");
    if (static_cast<Eigen::Index>(data.targets.values.size()) != n) {
      throw ShapeError("target count does not match sample count");
    }
  }

  TrainResult result;
  MlpModel& model = result.model;
  model = he_init<float>(spec, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  Gradients<float> m1, m2;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    m1.weights.push_back(Eigen::MatrixXf::Zero(model.weights[l].rows(), model.weights[l].cols()));
    m1.biases.push_back(Eigen::VectorXf::Zero(model.biases[l].size()));
  }
  m2 = m1;

  Backprop<float> bp(model);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXf batch_x(data.features.rows(), cfg.batch_size);
  std::vector<std::size_t> batch_index;
  std::int64_t step = 0;
  const float b1 = static_cast<float>(cfg.beta1);
  const float b2 = static_cast<float>(cfg.beta2);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      if (batch_x.cols() != b) batch_x.resize(Eigen::NoChange, b);
      batch_index.assign(order.begin() + start, order.begin() + start + b);
      for (Eigen::Index j = 0; j < b; ++j) {
        batch_x.col(j) = data.features.col(static_cast<Eigen::Index>(batch_index[j]));
      }
      const double loss = bp.run(model, batch_x, data.targets, batch_index, cfg.loss);
      if (!std::isfinite(loss)) throw TrainingDivergedError(epoch, "non-finite batch loss");
      epoch_loss += loss * static_cast<double>(b);

      ++step;
      const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const float step_size = static_cast<float>(cfg.learning_rate * std::sqrt(correction2) / correction1);
      const float eps_hat = static_cast<float>(cfg.epsilon * std::sqrt(correction2));
      const auto& g = bp.gradients();
      for (std::size_t l = 0; l < model.n_layers(); ++l) {
        m1.weights[l] = b1 * m1.weights[l] + (1.0f - b1) * g.weights[l];
        m2.weights[l] = b2 * m2.weights[l] + (1.0f - b2) * g.weights[l].cwiseAbs2();
        model.weights[l].array() -=
            step_size * m1.weights[l].array() / (m2.weights[l].array().sqrt() + eps_hat);
        m1.biases[l] = b1 * m1.biases[l] + (1.0f - b1) * g.biases[l];
        m2.biases[l] = b2 * m2.biases[l] + (1.0f - b2) * g.biases[l].cwiseAbs2();
        model.biases[l].array() -=
            step_size * m1.biases[l].array() / (m2.biases[l].array().sqrt() + eps_hat);
      }
    }
    EpochLog log{epoch, epoch_loss / static_cast<double>(n)};
    if (!std::isfinite(log.mean_loss)) throw TrainingDivergedError(epoch, "non-finite epoch loss");
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Dataset builder for the nasality model.

/// Accumulates labelled frames. Excluded frames are dropped here, and
/// finish() re-checks that none slipped through.
class NasalityDatasetBuilder {
 public:
  void add(const Eigen::MatrixXd& frames, const std::vector<alignment::PhoneClass>& labels) {
    if (static_cast<std::size_t>(frames.rows()) != labels.size()) {
      throw ShapeError("label count does not match frame count");
    }
    for (Eigen::Index i = 0; i < frames.rows(); ++i) {
      const auto cls = labels[static_cast<std::size_t>(i)];
      if (cls == alignment::PhoneClass::kExcluded) continue;
      for (Eigen::Index k = 0; k < frames.cols(); ++k) values_.push_back(static_cast<float>(frames(i, k)));
      labels_.push_back(static_cast<int>(cls));
      dim_ = frames.cols();
    }
  }

  std::size_t size() const { return labels_.size(); }

  Dataset finish() const {
    Dataset d;
    d.features = Eigen::Map<const Eigen::MatrixXf>(values_.data(), dim_,
                                                   static_cast<Eigen::Index>(labels_.size()));
    d.targets.labels = labels_;
    for (int y : d.targets.labels) {
      if (y < 0 || y >= alignment::kNumClasses) {
        throw ValidationError("excluded frame reached the training set");
      }
    }
    return d;
  }

 private:
  std::vector<float> values_;
  std::vector<int> labels_;
  Eigen::Index dim_ = 0;
};

// ---------------------------------------------------------------------------
// Gradient verification.

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error_at_zero = 0.0;  // over near-zero-gradient coordinates
  std::size_t coordinates_checked = 0;
  std::size_t zero_gradient_coordinates = 0;

  bool passed(double rel_tol = 1e-4, double abs_tol = 1e-8) const {
    return max_relative_error < rel_tol && max_absolute_error_at_zero < abs_tol;
  }
};

namespace detail {

template <typename Scalar>
Scalar& parameter(Mlp<Scalar>& m, std::size_t flat) {
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    const auto nw = static_cast<std::size_t>(m.weights[l].size());
    if (flat < nw) return m.weights[l].data()[flat];
    flat -= nw;
    const auto nb = static_cast<std::size_t>(m.biases[l].size());
    if (flat < nb) return m.biases[l].data()[flat];
    flat -= nb;
  }
  throw ArgumentError("parameter index out of range");
}

template <typename Scalar>
Scalar gradient(const Gradients<Scalar>& g, std::size_t flat) {
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(g.weights[l].size());
    if (flat < nw) return g.weights[l].data()[flat];
    flat -= nw;
    const auto nb = static_cast<std::size_t>(g.biases[l].size());
    if (flat < nb) return g.biases[l].data()[flat];
    flat -= nb;
  }
  throw ArgumentError("parameter index out of range");
}

}  // namespace detail

/// Compares backprop gradients with central differences
/// (f(t + h) - f(t - h)) / 2h on up to `max_coordinates` randomly chosen
/// parameters (all of them if the model is smaller). Coordinates where both
/// estimates are below `zero_threshold` are judged by absolute error.
inline GradCheckResult grad_check(const Mlp<double>& model, const Eigen::MatrixXd& x,
                                  const Targets& targets, Loss loss, double h = 1e-5,
                                  std::size_t max_coordinates = 256, std::uint64_t seed = 42,
                                  double zero_threshold = 1e-8) {
  if (x.cols() < 1 || x.cols() > 8) throw ArgumentError("gradient check batch must hold 1..8 samples");
  std::vector<std::size_t> index(static_cast<std::size_t>(x.cols()));
  std::iota(index.begin(), index.end(), std::size_t{0});
  Backprop<double> bp(model);
  bp.run(model, x, targets, index, loss);
  const Gradients<double> analytic = bp.gradients();

  std::vector<std::size_t> coords(model.parameter_count());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(coords.begin(), coords.end(), rng);
  if (coords.size() > max_coordinates) coords.resize(max_coordinates);

  GradCheckResult res;
  Mlp<double> probe = model;
  for (std::size_t c : coords) {
    double& theta = detail::parameter(probe, c);
    const double saved = theta;
    theta = saved + h;
    const double up = evaluate_loss(probe, x, targets, loss);
    theta = saved - h;
    const double down = evaluate_loss(probe, x, targets, loss);
    theta = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double exact = detail::gradient(analytic, c);
    const double scale = std::max(std::abs(numeric), std::abs(exact));
    ++res.coordinates_checked;
    if (scale < zero_threshold) {
      ++res.zero_gradient_coordinates;
      res.max_absolute_error_at_zero = std::max(res.max_absolute_error_at_zero, std::abs(numeric - exact));
    } else {
      res.max_relative_error = std::max(res.max_relative_error, std::abs(numeric - exact) / scale);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// OHMNET01 model file (little-endian):
//   "OHMNET01" | u32 n_sizes | u32 sizes[n_sizes] | u8 output activation |
//   u32 feature config hash | per layer: f32 weights (row-major), f32 bias

inline constexpr char kModelMagic[8] = {'O', 'H', 'M', 'N', 'E', 'T', '0', '1'};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::vector<unsigned char>& out, float v) {
  std::uint32_t raw;
  std::memcpy(&raw, &v, sizeof raw);
  put_u32(out, raw);
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  void need(std::size_t n, const char* field) const {
    if (pos_ + n > bytes_.size()) throw FormatError(name_ + ": truncated " + std::string(field));
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8(const char* field) {
    need(1, field);
    return bytes_[pos_++];
  }
  float f32(const char* field) {
    const std::uint32_t raw = u32(field);
    float v;
    std::memcpy(&v, &raw, sizeof v);
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }
  const unsigned char* here() const { return bytes_.data() + pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> serialize_model(const MlpModel& model) {
  model.validate();
  std::vector<unsigned char> out(std::begin(kModelMagic), std::end(kModelMagic));
  detail::put_u32(out, static_cast<std::uint32_t>(model.layer_sizes.size()));
  for (int s : model.layer_sizes) detail::put_u32(out, static_cast<std::uint32_t>(s));
  out.push_back(static_cast<unsigned char>(model.output_activation));
  detail::put_u32(out, model.feature_config_hash);
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    const auto& w = model.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) detail::put_f32(out, w(i, j));
    }
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) detail::put_f32(out, model.biases[l](i));
  }
  return out;
}

inline MlpModel deserialize_model(const std::vector<unsigned char>& bytes,
                                  const std::string& name = "<memory>") {
  detail::Reader r(bytes, name);
  r.need(sizeof kModelMagic, "magic");
  if (std::memcmp(r.here(), kModelMagic, sizeof kModelMagic) != 0) {
    throw FormatError(name + ": bad magic (expected OHMNET01)");
  }
  r.skip(sizeof kModelMagic);
  const std::uint32_t n_sizes = r.u32("layer count");
  if (n_sizes < 2 || n_sizes > 64) {
    throw FormatError(name + ": layer count " + std::to_string(n_sizes) + " out of range");
  }
  MlpModel m;
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const std::uint32_t s = r.u32("layer sizes");
    if (s == 0 || s > (1u << 20)) {
      throw FormatError(name + ": layer size " + std::to_string(s) + " out of range");
    }
    m.layer_sizes.push_back(static_cast<int>(s));
  }
  const std::uint8_t act = r.u8("output activation");
  if (act > 1) throw FormatError(name + ": unknown output activation code " + std::to_string(act));
  m.output_activation = static_cast<OutputActivation>(act);
  m.feature_config_hash = r.u32("feature config hash");

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    expected += (static_cast<std::size_t>(m.layer_sizes[l]) + 1) * m.layer_sizes[l + 1] * 4;
  }
  if (r.remaining() != expected) {
    throw FormatError(name + ": parameter payload is " + std::to_string(r.remaining()) +
                      " bytes but layer shapes require " + std::to_string(expected));
  }
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    Eigen::MatrixXf w(m.layer_sizes[l + 1], m.layer_sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = r.f32("weights");
    }
    Eigen::VectorXf b(m.layer_sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = r.f32("biases");
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  try {
    m.validate();
  } catch (const ShapeError& e) {
    throw FormatError(name + ": " + e.what());
  }
  return m;
}

inline void save_model(const MlpModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArgumentError("write failed for " + path.string());
}

inline MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes, path.string());
}

}  // namespace ohm::nn
