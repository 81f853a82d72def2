#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "embedkit/dataset.hpp"
#include "embedkit/embedding_store.hpp"
#include "embedkit/error.hpp"
#include "embedkit/metrics.hpp"

namespace embedkit {

struct RankedItem {
  std::string id;
  float score;

  friend bool operator==(const RankedItem&, const RankedItem&) = default;
};

/// Scores are non-increasing with ties in store entry order. The one
/// exception is class_text_rerank, whose list is non-increasing within the
/// re-ranked head (visual scores) and within the tail (text scores)
/// separately.
struct RankedList {
  std::string query_id;
  std::vector<RankedItem> ranking;

  std::vector<std::string> item_ids() const;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

enum class PipelineKind { kVisual, kClassText, kClassTextRerank, kOracleText };

inline constexpr std::size_t kDefaultRerankDepth = 100;

struct PipelineMode {
  PipelineKind kind = PipelineKind::kVisual;
  std::size_t rerank_depth = kDefaultRerankDepth;
};

/// CLI spelling: visual | class-text | class-text-rerank | oracle.
std::string_view to_string(PipelineKind kind);
std::optional<PipelineKind> parse_pipeline(std::string_view token);
bool needs_text_store(PipelineKind kind);

/// dot(a, b) / (|a| |b|) accumulated in double.
template <typename A, typename B>
double cosine_score(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kShape, "cosine of vectors with dimensions " +
                                       std::to_string(a.size()) + " and " +
                                       std::to_string(b.size()));
  }
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (na <= kDegenerateNorm || nb <= kDegenerateNorm) {
    throw Error(ErrorCode::kDegenerate, "cosine with a zero vector");
  }
  return ad.dot(bd) / (na * nb);
}

/// Stable descending sort of `ids` by `scores`.
RankedList rank_by_scores(std::string query_id, const std::vector<std::string>& ids,
                          std::span<const float> scores);

/// Scoring state over normalized stores. Holds double copies of the stores
/// so each query is one matrix-vector product with 64-bit accumulation.
class RetrievalEngine {
 public:
  /// `queries` and `index` are image stores; `class_texts` may be null for
  /// the visual pipeline. `manifest` supplies ground truth for the oracle.
  RetrievalEngine(const EmbeddingStore& queries, const EmbeddingStore& index,
                  const EmbeddingStore* class_texts, const DatasetManifest* manifest);

  /// All classes of the text store ranked by cosine to `query_id`'s
  /// embedding; entry 0 is the zero-shot prediction.
  RankedList zero_shot(std::string_view query_id) const;

  RankedList retrieve(const PipelineMode& mode, std::string_view query_id) const;

  const EmbeddingStore& index() const noexcept { return index_; }

 private:
  std::vector<float> visual_scores(std::string_view query_id) const;
  RankedList text_to_image(std::string query_id, std::string_view class_id) const;

  const EmbeddingStore& queries_;
  const EmbeddingStore& index_;
  const EmbeddingStore* texts_;
  const DatasetManifest* manifest_;
  Eigen::MatrixXd index_matrix_;  // items x dim
  Eigen::MatrixXd text_matrix_;   // classes x dim
};

/// Zero-shot ranking of every class in `class_texts` for one query vector.
RankedList zero_shot_classify(const Eigen::Ref<const Eigen::VectorXf>& query,
                              const EmbeddingStore& class_texts, std::string query_id = {});

/// Single-query convenience wrapper around RetrievalEngine.
RankedList retrieve(const PipelineMode& mode, std::string_view query_id,
                    const EmbeddingStore& queries, const EmbeddingStore& index,
                    const EmbeddingStore* class_texts, const DatasetManifest* manifest);

struct BenchmarkConfig {
  PipelineMode mode;
  Split query_split = Split::kVal;
  Split index_split = Split::kTest;
};

struct BenchmarkResult {
  EvalReport report;
  std::vector<RankedList> lists;  // query order of the manifest
};

/// Runs one pipeline for every query of the query split against the index
/// split and scores it with retrieval_map. `index_images` may be the same
/// store as `query_images`.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, const DatasetManifest& manifest,
                              const EmbeddingStore& query_images,
                              const EmbeddingStore& index_images,
                              const EmbeddingStore* class_texts);

/// Zero-shot classification of every item of `split`: accuracy plus
/// classification mAP over cosine scores in manifest class order.
EvalReport zero_shot_benchmark(const DatasetManifest& manifest, const EmbeddingStore& images,
                               const EmbeddingStore& class_texts, Split split);

/// One JSON object per line: {"query": id, "ranking": [[id, score], ...]}.
std::string encode_ranked_lists(std::span<const RankedList> lists);

}  // namespace embedkit
