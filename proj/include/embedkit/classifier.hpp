#pragma once

// Shallow classifier over frozen embeddings:
//
//   h      = relu(W1 x + b1)
//   n      = h / max(|h|, 1e-12)
//   logits = W2 n + b2
//   p      = softmax(logits)
//
// trained with mean categorical cross-entropy and Adam. Everything is
// templated on the scalar so the production float path and the double
// gradient check share one implementation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "embedkit/embedding_store.hpp"
#include "embedkit/error.hpp"

namespace embedkit {

inline constexpr double kNormFloor = 1e-12;

template <typename Scalar>
struct ClassifierParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Matrix w2;  // classes x hidden
  Vector b2;  // classes

  static ClassifierParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                Eigen::Index num_classes) {
    return {Matrix::Zero(hidden_dim, input_dim), Vector::Zero(hidden_dim),
            Matrix::Zero(num_classes, hidden_dim), Vector::Zero(num_classes)};
  }

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index num_classes() const { return w2.rows(); }

  bool shapes_consistent() const {
    return b1.size() == w1.rows() && w2.cols() == w1.rows() && b2.size() == w2.rows() &&
           w1.size() > 0 && w2.size() > 0;
  }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  template <typename Other>
  ClassifierParams<Other> cast() const {
    return {w1.template cast<Other>(), b1.template cast<Other>(), w2.template cast<Other>(),
            b2.template cast<Other>()};
  }

  friend bool operator==(const ClassifierParams& a, const ClassifierParams& b) {
    return a.w1.rows() == b.w1.rows() && a.w1.cols() == b.w1.cols() &&
           a.w2.rows() == b.w2.rows() && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 &&
           a.b2 == b.b2;
  }
};

using ClassifierParamsF = ClassifierParams<float>;
using ClassifierParamsD = ClassifierParams<double>;

/// Glorot-uniform weights from a seeded mt19937_64, zero biases.
template <typename Scalar>
ClassifierParams<Scalar> init_params(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                     Eigen::Index num_classes, std::uint64_t seed) {
  if (input_dim <= 0 || hidden_dim <= 0 || num_classes <= 0) {
    throw Error(ErrorCode::kConfig, "classifier dimensions must be positive");
  }
  auto p = ClassifierParams<Scalar>::zeros(input_dim, hidden_dim, num_classes);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](auto& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(dist(rng));
  };
  fill(p.w1);
  fill(p.w2);
  return p;
}

/// Softmax with max-logit subtraction.
template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - logits.maxCoeff()).exp();
  return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(e / e.sum());
}

/// Index of the largest coefficient; ties go to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

/// Jacobian of h -> h / max(|h|, 1e-12): (I - n n^T) / max(|h|, 1e-12).
/// The exactly-zero vector maps to the zero matrix.
template <typename Derived>
auto l2_jacobian(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar norm = h.norm();
  if (norm == Scalar(0)) return Mat(Mat::Zero(h.size(), h.size()));
  const Scalar denom = std::max(norm, static_cast<Scalar>(kNormFloor));
  const auto n = (h / denom).eval();
  return Mat((Mat::Identity(h.size(), h.size()) - n * n.transpose()) / denom);
}

template <typename Scalar>
struct ForwardCache {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector x;
  Vector h;       // post-ReLU hidden activation
  Vector n;       // L2-normalized hidden activation
  Vector logits;
  Scalar h_norm;
};

template <typename Scalar>
struct ForwardResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probs;
  ForwardCache<Scalar> cache;
};

template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const ClassifierParams<Scalar>& p,
                              const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != p.input_dim()) {
    throw Error(ErrorCode::kShape, "input has dimension " + std::to_string(x.size()) +
                                       ", classifier expects " +
                                       std::to_string(p.input_dim()));
  }
  ForwardResult<Scalar> r;
  auto& c = r.cache;
  c.x = x.template cast<Scalar>();
  c.h = (p.w1 * c.x + p.b1).cwiseMax(Scalar(0));
  c.h_norm = c.h.norm();
  c.n = c.h / std::max(c.h_norm, static_cast<Scalar>(kNormFloor));
  c.logits = p.w2 * c.n + p.b2;
  r.probs = softmax(c.logits);
  return r;
}

template <typename Scalar>
struct LossAndGrad {
  Scalar loss;
  ClassifierParams<Scalar> grad;
};

/// Mean cross-entropy over the batch and its exact gradient. `inputs` holds
/// one sample per column.
template <typename Scalar, typename Derived>
LossAndGrad<Scalar> loss_and_grad(const ClassifierParams<Scalar>& p,
                                  const Eigen::MatrixBase<Derived>& inputs,
                                  std::span<const std::size_t> labels) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw Error(ErrorCode::kConfig, "empty batch");
  if (static_cast<std::size_t>(batch) != labels.size()) {
    throw Error(ErrorCode::kShape, "batch has " + std::to_string(batch) + " inputs but " +
                                       std::to_string(labels.size()) + " labels");
  }
  if (inputs.rows() != p.input_dim()) {
    throw Error(ErrorCode::kShape, "input has dimension " + std::to_string(inputs.rows()) +
                                       ", classifier expects " +
                                       std::to_string(p.input_dim()));
  }
  for (auto y : labels) {
    if (y >= static_cast<std::size_t>(p.num_classes())) {
      throw Error(ErrorCode::kRange, "class index " + std::to_string(y) + " out of range");
    }
  }

  const Mat x = inputs.template cast<Scalar>();
  Mat pre = p.w1 * x;
  pre.colwise() += p.b1;
  const Mat h = pre.cwiseMax(Scalar(0));
  const Vec norms = h.colwise().norm().transpose();
  const Vec denom = norms.cwiseMax(static_cast<Scalar>(kNormFloor));
  const Mat n = h * denom.cwiseInverse().asDiagonal();
  Mat logits = p.w2 * n;
  logits.colwise() += p.b2;

  // dL/dlogits = (softmax - onehot) / batch
  Mat dlogits(logits.rows(), batch);
  Scalar loss = 0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const auto z = logits.col(j);
    const Scalar zmax = z.maxCoeff();
    const Vec e = (z.array() - zmax).exp();
    const Scalar sum = e.sum();
    const auto y = static_cast<Eigen::Index>(labels[j]);
    loss += std::log(sum) - (z(y) - zmax);
    dlogits.col(j) = e / sum;
    dlogits(y, j) -= Scalar(1);
  }
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);
  loss *= inv_batch;
  dlogits *= inv_batch;

  LossAndGrad<Scalar> out{loss, ClassifierParams<Scalar>::zeros(p.input_dim(), p.hidden_dim(),
                                                                p.num_classes())};
  out.grad.w2.noalias() = dlogits * n.transpose();
  out.grad.b2 = dlogits.rowwise().sum();

  const Mat dn = p.w2.transpose() * dlogits;
  // Through the L2 layer: (I - n n^T) dn / max(|h|, eps), then the ReLU mask.
  Mat dpre(dn.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    if (norms(j) == Scalar(0)) {
      dpre.col(j).setZero();
      continue;
    }
    const Scalar radial = n.col(j).dot(dn.col(j));
    dpre.col(j) = (dn.col(j) - radial * n.col(j)) / denom(j);
  }
  dpre = dpre.cwiseProduct((pre.array() > Scalar(0)).template cast<Scalar>().matrix());

  out.grad.w1.noalias() = dpre * x.transpose();
  out.grad.b1 = dpre.rowwise().sum();
  return out;
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct EpochStats {
  std::size_t epoch;  // 1-based
  double train_loss;  // mean over samples of the epoch
  std::optional<double> val_accuracy;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

/// Inputs (one sample per column) with their class indices.
struct LabeledData {
  Eigen::MatrixXf inputs;
  std::vector<std::size_t> labels;
};

struct TrainResult {
  ClassifierParamsF params;
  TrainReport report;
};

/// Thrown when a batch produces a non-finite loss; carries the parameters
/// from before that batch.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, ClassifierParamsF last_good, TrainReport report)
      : Error(ErrorCode::kDivergence, what),
        last_good_(std::move(last_good)),
        report_(std::move(report)) {}

  const ClassifierParamsF& last_good() const noexcept { return last_good_; }
  const TrainReport& report() const noexcept { return report_; }

 private:
  ClassifierParamsF last_good_;
  TrainReport report_;
};

/// Minibatch Adam with a per-epoch seeded shuffle; the last partial batch is
/// kept. Deterministic per (seed, config, data).
TrainResult train(const ClassifierParamsF& initial, const TrainConfig& cfg,
                  const LabeledData& train_set, const LabeledData* val_set = nullptr);

/// Class probabilities, one column per input column.
Eigen::MatrixXf predict_batch(const ClassifierParamsF& p, const Eigen::MatrixXf& inputs);

struct Predictions {
  std::vector<std::string> ids;
  Eigen::MatrixXf probs;  // classes x items

  std::size_t predicted_class(std::size_t item) const {
    return static_cast<std::size_t>(argmax(probs.col(static_cast<Eigen::Index>(item))));
  }
};

/// Forward pass for each id; lookup error for ids missing from the store.
Predictions predict(const ClassifierParamsF& p, const EmbeddingStore& store,
                    std::span<const std::string> ids);

/// Stacks the named store rows as columns.
Eigen::MatrixXf gather_columns(const EmbeddingStore& store, std::span<const std::string> ids);

double accuracy_of(const ClassifierParamsF& p, const LabeledData& data);

void save_params(const ClassifierParamsF& p, const std::filesystem::path& path);
ClassifierParamsF load_params(const std::filesystem::path& path);
std::string encode_params(const ClassifierParamsF& p);
ClassifierParamsF decode_params(std::string_view bytes, const std::string& context = "checkpoint");

}  // namespace embedkit
