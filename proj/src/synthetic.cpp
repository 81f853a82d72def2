#include "embedkit/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "embedkit/error.hpp"

namespace embedkit {

namespace {

constexpr int kMaxRetries = 100;

std::string class_name(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%03zu", c);
  return buf;
}

std::string item_name(std::size_t c, Split split, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "c%03zu_%s_%03zu", c, std::string(to_string(split)).c_str(), k);
  return buf;
}

class SphereSampler {
 public:
  SphereSampler(std::size_t dim, std::uint64_t seed) : dim_(dim), rng_(seed) {}

  /// normalize(base + sigma * N(0, I)); an empty base means the origin.
  std::vector<float> draw(const std::vector<double>& base, double sigma) {
    std::vector<double> v(dim_);
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      double norm2 = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double noise = normal_(rng_);
        v[i] = (base.empty() ? 0.0 : base[i]) + sigma * noise;
        norm2 += v[i] * v[i];
      }
      const double norm = std::sqrt(norm2);
      if (norm > kDegenerateNorm) {
        std::vector<float> out(dim_);
        for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(v[i] / norm);
        return out;
      }
    }
    throw Error(ErrorCode::kDegenerate, "synthetic draw degenerate after 100 retries");
  }

 private:
  std::size_t dim_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes == 0) throw Error(ErrorCode::kConfig, "num_classes must be positive");
  if (cfg.dim < 2) throw Error(ErrorCode::kConfig, "dim must be >= 2");
  if (cfg.train_per_class == 0 || cfg.val_per_class == 0 || cfg.test_per_class == 0) {
    throw Error(ErrorCode::kConfig, "items per class must be positive");
  }
  if (!std::isfinite(cfg.sigma_image) || !std::isfinite(cfg.sigma_text) ||
      cfg.sigma_image < 0 || cfg.sigma_text < 0) {
    throw Error(ErrorCode::kConfig, "sigmas must be finite and non-negative");
  }
}

SynthCorpus generate(const SynthConfig& cfg) {
  validate(cfg);
  SynthCorpus corpus{EmbeddingStore(cfg.dim, Modality::kImage, true),
                     EmbeddingStore(cfg.dim, Modality::kText, true), DatasetManifest{}};
  const std::size_t per_class = cfg.train_per_class + cfg.val_per_class + cfg.test_per_class;
  corpus.images.reserve(cfg.num_classes * per_class);
  corpus.texts.reserve(cfg.num_classes);

  SphereSampler sampler(cfg.dim, cfg.seed);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    const auto centroid_f = sampler.draw({}, 1.0);
    const std::vector<double> centroid(centroid_f.begin(), centroid_f.end());
    const auto cls = class_name(c);
    corpus.texts.add(cls, sampler.draw(centroid, cfg.sigma_text));

    const std::pair<Split, std::size_t> splits[] = {{Split::kTrain, cfg.train_per_class},
                                                    {Split::kVal, cfg.val_per_class},
                                                    {Split::kTest, cfg.test_per_class}};
    for (const auto& [split, count] : splits) {
      for (std::size_t k = 0; k < count; ++k) {
        auto id = item_name(c, split, k);
        corpus.images.add(id, sampler.draw(centroid, cfg.sigma_image));
        corpus.manifest.add({std::move(id), cls, split});
      }
    }
  }
  return corpus;
}

}  // namespace embedkit
