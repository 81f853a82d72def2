#pragma once

#include <cstdint>
#include <string_view>

#include "embedkit/dataset.hpp"
#include "embedkit/embedding_store.hpp"

namespace embedkit {

/// Class-clustered corpus on the unit sphere. Item and class-text vectors
/// are normalize(centroid + sigma * N(0, I)).
struct SynthConfig {
  std::size_t num_classes = 20;
  std::size_t train_per_class = 50;
  std::size_t val_per_class = 10;
  std::size_t test_per_class = 10;
  std::size_t dim = 64;
  double sigma_image = 0.1;
  double sigma_text = 0.1;
  std::uint64_t seed = 0;
};

/// Name of the pinned generator, echoed in reports.
inline constexpr std::string_view kSynthGenerator =
    "mt19937_64 + std::normal_distribution<double> (libstdc++)";

struct SynthCorpus {
  EmbeddingStore images;
  EmbeddingStore texts;  // one entry per class, id = class id
  DatasetManifest manifest;
};

/// Deterministic per seed. Ids are "c%03d" for classes and
/// "c%03d_<split>_%03d" for items; items are emitted class by class, train
/// then val then test.
SynthCorpus generate(const SynthConfig& cfg);

void validate(const SynthConfig& cfg);

}  // namespace embedkit
