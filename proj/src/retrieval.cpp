#include "embedkit/retrieval.hpp"

#include <algorithm>
#include <numeric>

#include "embedkit/classifier.hpp"
#include "embedkit/parallel.hpp"

namespace embedkit {

namespace {

void require_normalized(const EmbeddingStore& s, const char* what) {
  if (!s.normalized()) {
    throw Error(ErrorCode::kConfig, std::string(what) +
                                        " store is not normalized (run `normalize` first)");
  }
}

std::vector<float> to_float(const Eigen::VectorXd& scores) {
  std::vector<float> out(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) out[i] = static_cast<float>(scores(i));
  return out;
}

}  // namespace

std::vector<std::string> RankedList::item_ids() const {
  std::vector<std::string> out;
  out.reserve(ranking.size());
  for (const auto& r : ranking) out.push_back(r.id);
  return out;
}

std::string_view to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kVisual: return "visual";
    case PipelineKind::kClassText: return "class-text";
    case PipelineKind::kClassTextRerank: return "class-text-rerank";
    case PipelineKind::kOracleText: return "oracle";
  }
  return "?";
}

std::optional<PipelineKind> parse_pipeline(std::string_view token) {
  for (auto k : {PipelineKind::kVisual, PipelineKind::kClassText, PipelineKind::kClassTextRerank,
                 PipelineKind::kOracleText}) {
    if (token == to_string(k)) return k;
  }
  return std::nullopt;
}

bool needs_text_store(PipelineKind kind) { return kind != PipelineKind::kVisual; }

RankedList rank_by_scores(std::string query_id, const std::vector<std::string>& ids,
                          std::span<const float> scores) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RankedList out{std::move(query_id), {}};
  out.ranking.reserve(order.size());
  for (auto i : order) out.ranking.push_back({ids[i], scores[i]});
  return out;
}

RetrievalEngine::RetrievalEngine(const EmbeddingStore& queries, const EmbeddingStore& index,
                                 const EmbeddingStore* class_texts,
                                 const DatasetManifest* manifest)
    : queries_(queries), index_(index), texts_(class_texts), manifest_(manifest) {
  require_normalized(queries, "query");
  require_normalized(index, "index");
  if (queries.dim() != index.dim()) {
    throw Error(ErrorCode::kShape, "query and index stores differ in dimension");
  }
  index_matrix_ = index.matrix().cast<double>();
  if (texts_) {
    require_normalized(*texts_, "class text");
    if (texts_->dim() != index.dim()) {
      throw Error(ErrorCode::kShape, "class text and image stores differ in dimension");
    }
    text_matrix_ = texts_->matrix().cast<double>();
  }
}

RankedList RetrievalEngine::zero_shot(std::string_view query_id) const {
  if (!texts_) throw Error(ErrorCode::kConfig, "zero-shot requires a class text store");
  if (texts_->empty()) throw Error(ErrorCode::kEmpty, "class text store is empty");
  const Eigen::VectorXd q = queries_.at(query_id).cast<double>();
  const Eigen::VectorXd scores = text_matrix_ * q;
  return rank_by_scores(std::string(query_id), texts_->ids(), to_float(scores));
}

std::vector<float> RetrievalEngine::visual_scores(std::string_view query_id) const {
  const Eigen::VectorXd q = queries_.at(query_id).cast<double>();
  return to_float(index_matrix_ * q);
}

RankedList RetrievalEngine::text_to_image(std::string query_id, std::string_view class_id) const {
  const Eigen::VectorXd t = text_matrix_.row(static_cast<Eigen::Index>(texts_->index_of(class_id)))
                                .transpose();
  return rank_by_scores(std::move(query_id), index_.ids(), to_float(index_matrix_ * t));
}

RankedList RetrievalEngine::retrieve(const PipelineMode& mode, std::string_view query_id) const {
  if (mode.rerank_depth == 0) throw Error(ErrorCode::kConfig, "rerank depth must be >= 1");
  if (needs_text_store(mode.kind) && !texts_) {
    throw Error(ErrorCode::kConfig,
                std::string("mode ") + std::string(to_string(mode.kind)) +
                    " requires a class text store");
  }
  const std::string qid(query_id);
  switch (mode.kind) {
    case PipelineKind::kVisual:
      return rank_by_scores(qid, index_.ids(), visual_scores(query_id));

    case PipelineKind::kOracleText: {
      if (!manifest_) throw Error(ErrorCode::kConfig, "oracle mode requires a manifest");
      const auto* item = manifest_->find(query_id);
      if (!item) throw Error(ErrorCode::kLookup, "query '" + qid + "' not in manifest");
      return text_to_image(qid, item->class_id);
    }

    case PipelineKind::kClassText:
    case PipelineKind::kClassTextRerank: {
      const auto predicted = zero_shot(query_id).ranking.front().id;
      auto list = text_to_image(qid, predicted);
      if (mode.kind == PipelineKind::kClassText) return list;

      // Re-sort the head by visual similarity; the tail stays where it is.
      const auto visual = visual_scores(query_id);
      const std::size_t depth = std::min(mode.rerank_depth, list.ranking.size());
      std::vector<std::size_t> head(depth);
      for (std::size_t k = 0; k < depth; ++k) head[k] = index_.index_of(list.ranking[k].id);
      std::sort(head.begin(), head.end());  // entry order, so ties match visual mode
      std::stable_sort(head.begin(), head.end(),
                       [&](std::size_t a, std::size_t b) { return visual[a] > visual[b]; });
      for (std::size_t k = 0; k < depth; ++k) {
        list.ranking[k] = {index_.id(head[k]), visual[head[k]]};
      }
      return list;
    }
  }
  throw Error(ErrorCode::kConfig, "unknown pipeline");
}

RankedList zero_shot_classify(const Eigen::Ref<const Eigen::VectorXf>& query,
                              const EmbeddingStore& class_texts, std::string query_id) {
  if (class_texts.empty()) throw Error(ErrorCode::kEmpty, "class text store is empty");
  if (static_cast<std::size_t>(query.size()) != class_texts.dim()) {
    throw Error(ErrorCode::kShape, "query and class text dimensions differ");
  }
  std::vector<float> scores(class_texts.size());
  for (std::size_t c = 0; c < class_texts.size(); ++c) {
    scores[c] = static_cast<float>(cosine_score(query, class_texts.row(c)));
  }
  return rank_by_scores(std::move(query_id), class_texts.ids(), scores);
}

RankedList retrieve(const PipelineMode& mode, std::string_view query_id,
                    const EmbeddingStore& queries, const EmbeddingStore& index,
                    const EmbeddingStore* class_texts, const DatasetManifest* manifest) {
  return RetrievalEngine(queries, index, class_texts, manifest).retrieve(mode, query_id);
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, const DatasetManifest& manifest,
                              const EmbeddingStore& query_images,
                              const EmbeddingStore& index_images,
                              const EmbeddingStore* class_texts) {
  const auto query_ids = split_ids(manifest, cfg.query_split);
  const auto index_ids = split_ids(manifest, cfg.index_split);
  if (index_ids.empty()) throw Error(ErrorCode::kEmpty, "index split is empty");
  const auto queries = select(query_images, query_ids);
  const auto index = select(index_images, index_ids);
  RetrievalEngine engine(queries, index, class_texts, &manifest);

  BenchmarkResult result;
  result.lists.resize(query_ids.size());
  parallel_for(query_ids.size(), [&](std::size_t q) {
    result.lists[q] = engine.retrieve(cfg.mode, query_ids[q]);
  });

  result.report = retrieval_map(result.lists, manifest);
  result.report.mode = to_string(cfg.mode.kind);
  auto& c = result.report.config;
  c["mode"] = to_string(cfg.mode.kind);
  if (cfg.mode.kind == PipelineKind::kClassTextRerank) c["rerank_depth"] = cfg.mode.rerank_depth;
  c["query_split"] = to_string(cfg.query_split);
  c["index_split"] = to_string(cfg.index_split);
  c["num_queries"] = query_ids.size();
  c["num_index"] = index_ids.size();
  return result;
}

EvalReport zero_shot_benchmark(const DatasetManifest& manifest, const EmbeddingStore& images,
                               const EmbeddingStore& class_texts, Split split) {
  require_normalized(images, "image");
  require_normalized(class_texts, "class text");
  if (images.dim() != class_texts.dim()) {
    throw Error(ErrorCode::kShape, "image and class text stores differ in dimension");
  }
  const auto ids = split_ids(manifest, split);
  if (ids.empty()) throw Error(ErrorCode::kEmpty, "split has no items");

  // Class rows in manifest order so argmax ties resolve to the lowest index.
  const auto texts = select(class_texts, manifest.classes());
  const Eigen::MatrixXd text_matrix = texts.matrix().cast<double>();
  Eigen::MatrixXf scores(text_matrix.rows(), static_cast<Eigen::Index>(ids.size()));
  parallel_for(ids.size(), [&](std::size_t j) {
    const Eigen::VectorXd q = images.at(ids[j]).cast<double>();
    scores.col(static_cast<Eigen::Index>(j)) = (text_matrix * q).cast<float>();
  });

  auto report = classification_map(ids, scores, manifest);
  report.mode = "zero-shot";
  report.config["split"] = to_string(split);
  report.config["num_items"] = ids.size();
  report.config["num_classes"] = manifest.num_classes();
  return report;
}

std::string encode_ranked_lists(std::span<const RankedList> lists) {
  std::string out;
  for (const auto& list : lists) {
    nlohmann::ordered_json j;
    j["query"] = list.query_id;
    auto ranking = nlohmann::ordered_json::array();
    for (const auto& r : list.ranking) ranking.push_back({r.id, r.score});
    j["ranking"] = std::move(ranking);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace embedkit
