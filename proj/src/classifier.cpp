#include "embedkit/classifier.hpp"

#include <algorithm>
#include <numeric>

#include "embedkit/binary_io.hpp"

namespace embedkit {

namespace {

constexpr std::string_view kMagic = "CPRM";
constexpr std::uint32_t kVersion = 1;

struct AdamState {
  ClassifierParamsF m;
  ClassifierParamsF v;
  std::uint64_t step = 0;
};

template <typename Param, typename Grad>
void adam_update(Param& param, const Grad& grad, Param& m, Param& v, float lr, float b1,
                 float b2, float eps, float bias1, float bias2) {
  m = b1 * m + (1.0f - b1) * grad;
  v = b2 * v + (1.0f - b2) * grad.cwiseAbs2();
  param.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + eps);
}

void adam_step(ClassifierParamsF& p, const ClassifierParamsF& g, AdamState& s,
               const TrainConfig& cfg) {
  ++s.step;
  const auto b1 = static_cast<float>(cfg.adam.beta1);
  const auto b2 = static_cast<float>(cfg.adam.beta2);
  const auto bias1 = static_cast<float>(1.0 - std::pow(cfg.adam.beta1, s.step));
  const auto bias2 = static_cast<float>(1.0 - std::pow(cfg.adam.beta2, s.step));
  const auto lr = static_cast<float>(cfg.learning_rate);
  const auto eps = static_cast<float>(cfg.adam.eps);
  adam_update(p.w1, g.w1, s.m.w1, s.v.w1, lr, b1, b2, eps, bias1, bias2);
  adam_update(p.b1, g.b1, s.m.b1, s.v.b1, lr, b1, b2, eps, bias1, bias2);
  adam_update(p.w2, g.w2, s.m.w2, s.v.w2, lr, b1, b2, eps, bias1, bias2);
  adam_update(p.b2, g.b2, s.m.b2, s.v.b2, lr, b1, b2, eps, bias1, bias2);
}

void check_labeled(const LabeledData& d, const ClassifierParamsF& p, const char* what) {
  if (static_cast<std::size_t>(d.inputs.cols()) != d.labels.size()) {
    throw Error(ErrorCode::kShape, std::string(what) + ": inputs and labels differ in count");
  }
  if (d.inputs.cols() > 0 && d.inputs.rows() != p.input_dim()) {
    throw Error(ErrorCode::kShape, std::string(what) + ": input dimension " +
                                       std::to_string(d.inputs.rows()) + ", classifier expects " +
                                       std::to_string(p.input_dim()));
  }
}

}  // namespace

TrainResult train(const ClassifierParamsF& initial, const TrainConfig& cfg,
                  const LabeledData& train_set, const LabeledData* val_set) {
  if (cfg.batch_size == 0) throw Error(ErrorCode::kConfig, "batch size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "learning rate must be positive");
  if (train_set.labels.empty()) throw Error(ErrorCode::kConfig, "training set is empty");
  check_labeled(train_set, initial, "training set");
  if (val_set) check_labeled(*val_set, initial, "validation set");

  TrainResult result{initial, {}};
  auto& params = result.params;
  AdamState state{ClassifierParamsF::zeros(params.input_dim(), params.hidden_dim(),
                                           params.num_classes()),
                  ClassifierParamsF::zeros(params.input_dim(), params.hidden_dim(),
                                           params.num_classes())};

  const std::size_t n = train_set.labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  Eigen::MatrixXf batch_inputs;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      batch_inputs.resize(train_set.inputs.rows(), static_cast<Eigen::Index>(count));
      batch_labels.resize(count);
      for (std::size_t k = 0; k < count; ++k) {
        const auto src = order[start + k];
        batch_inputs.col(static_cast<Eigen::Index>(k)) =
            train_set.inputs.col(static_cast<Eigen::Index>(src));
        batch_labels[k] = train_set.labels[src];
      }
      auto lg = loss_and_grad(params, batch_inputs, batch_labels);
      if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch),
                              params, result.report);
      }
      loss_sum += static_cast<double>(lg.loss) * static_cast<double>(count);
      adam_step(params, lg.grad, state, cfg);
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(n), std::nullopt};
    if (val_set && !val_set->labels.empty()) stats.val_accuracy = accuracy_of(params, *val_set);
    result.report.epochs.push_back(stats);
  }
  return result;
}

Eigen::MatrixXf predict_batch(const ClassifierParamsF& p, const Eigen::MatrixXf& inputs) {
  if (inputs.cols() > 0 && inputs.rows() != p.input_dim()) {
    throw Error(ErrorCode::kShape, "input has dimension " + std::to_string(inputs.rows()) +
                                       ", classifier expects " + std::to_string(p.input_dim()));
  }
  Eigen::MatrixXf pre = p.w1 * inputs;
  pre.colwise() += p.b1;
  Eigen::MatrixXf h = pre.cwiseMax(0.0f);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    h.col(j) /= std::max(h.col(j).norm(), static_cast<float>(kNormFloor));
  }
  Eigen::MatrixXf logits = p.w2 * h;
  logits.colwise() += p.b2;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) logits.col(j) = softmax(logits.col(j));
  return logits;
}

Eigen::MatrixXf gather_columns(const EmbeddingStore& store, std::span<const std::string> ids) {
  Eigen::MatrixXf out(static_cast<Eigen::Index>(store.dim()),
                      static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = store.at(ids[j]);
  }
  return out;
}

Predictions predict(const ClassifierParamsF& p, const EmbeddingStore& store,
                    std::span<const std::string> ids) {
  Predictions out;
  out.ids.assign(ids.begin(), ids.end());
  out.probs = predict_batch(p, gather_columns(store, ids));
  return out;
}

double accuracy_of(const ClassifierParamsF& p, const LabeledData& data) {
  if (data.labels.empty()) return 0.0;
  const Eigen::MatrixXf probs = predict_batch(p, data.inputs);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < data.labels.size(); ++j) {
    if (static_cast<std::size_t>(argmax(probs.col(static_cast<Eigen::Index>(j)))) ==
        data.labels[j]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.labels.size());
}

std::string encode_params(const ClassifierParamsF& p) {
  io::BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(p.input_dim()));
  w.u32(static_cast<std::uint32_t>(p.hidden_dim()));
  w.u32(static_cast<std::uint32_t>(p.num_classes()));
  // Row-major storage matches the on-disk order.
  w.f32s({p.w1.data(), static_cast<std::size_t>(p.w1.size())});
  w.f32s({p.b1.data(), static_cast<std::size_t>(p.b1.size())});
  w.f32s({p.w2.data(), static_cast<std::size_t>(p.w2.size())});
  w.f32s({p.b2.data(), static_cast<std::size_t>(p.b2.size())});
  return w.buffer();
}

ClassifierParamsF decode_params(std::string_view bytes, const std::string& context) {
  io::BinaryReader r(bytes, context);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kFormat, context + ": bad magic (expected CPRM)");
  }
  const auto version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kFormat, context + ": unsupported version " + std::to_string(version));
  }
  const auto in = r.u32();
  const auto hidden = r.u32();
  const auto classes = r.u32();
  if (in == 0 || hidden == 0 || classes == 0) {
    throw Error(ErrorCode::kFormat, context + ": zero dimension");
  }
  const std::uint64_t floats = std::uint64_t{hidden} * in + hidden + std::uint64_t{classes} * hidden + classes;
  if (r.remaining() < floats * 4) {
    throw Error(ErrorCode::kIo, context + ": truncated file (" + std::to_string(r.remaining()) +
                                    " bytes of parameters, expected " +
                                    std::to_string(floats * 4) + ")");
  }
  auto p = ClassifierParamsF::zeros(in, hidden, classes);
  r.f32s({p.w1.data(), static_cast<std::size_t>(p.w1.size())});
  r.f32s({p.b1.data(), static_cast<std::size_t>(p.b1.size())});
  r.f32s({p.w2.data(), static_cast<std::size_t>(p.w2.size())});
  r.f32s({p.b2.data(), static_cast<std::size_t>(p.b2.size())});
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, context + ": trailing bytes");
  if (!p.all_finite()) throw Error(ErrorCode::kIntegrity, context + ": non-finite parameter");
  return p;
}

void save_params(const ClassifierParamsF& p, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_params(p));
}

ClassifierParamsF load_params(const std::filesystem::path& path) {
  return decode_params(io::read_file(path), path.string());
}

}  // namespace embedkit
