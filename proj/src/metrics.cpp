#include "embedkit/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <sstream>

#include "embedkit/classifier.hpp"
#include "embedkit/error.hpp"
#include "embedkit/parallel.hpp"
#include "embedkit/retrieval.hpp"

namespace embedkit {

namespace {

double mean_ap(const std::vector<UnitAp>& units) {
  if (units.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& u : units) sum += u.ap;
  return sum / static_cast<double>(units.size());
}

}  // namespace

double accuracy(const std::map<std::string, std::size_t>& predictions,
                const std::map<std::string, std::size_t>& truth) {
  if (predictions.empty()) throw Error(ErrorCode::kAlignment, "accuracy of an empty prediction set");
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::kAlignment, "prediction and truth key sets differ in size");
  }
  std::size_t correct = 0;
  for (auto p = predictions.begin(), t = truth.begin(); p != predictions.end(); ++p, ++t) {
    if (p->first != t->first) {
      throw Error(ErrorCode::kAlignment, "key '" + p->first + "' has no ground truth");
    }
    if (p->second == t->second) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::optional<double> average_precision(std::span<const bool> relevance,
                                        std::size_t num_relevant) {
  if (num_relevant == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (!relevance[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(num_relevant);
}

std::optional<double> average_precision(std::span<const std::string> ranking,
                                        const std::unordered_set<std::string>& relevant) {
  std::unique_ptr<bool[]> flags(new bool[ranking.size()]);
  for (std::size_t k = 0; k < ranking.size(); ++k) flags[k] = relevant.contains(ranking[k]);
  return average_precision(std::span<const bool>(flags.get(), ranking.size()), relevant.size());
}

EvalReport retrieval_map(std::span<const RankedList> lists, const DatasetManifest& manifest) {
  std::vector<std::optional<double>> aps(lists.size());
  parallel_for(lists.size(), [&](std::size_t q) {
    const auto& list = lists[q];
    const auto* query = manifest.find(list.query_id);
    if (!query) {
      throw Error(ErrorCode::kLookup, "query '" + list.query_id + "' has no ground-truth class");
    }
    std::unique_ptr<bool[]> rel(new bool[list.ranking.size()]);
    std::size_t num_relevant = 0;
    for (std::size_t k = 0; k < list.ranking.size(); ++k) {
      const auto* item = manifest.find(list.ranking[k].id);
      rel[k] = item && item->class_id == query->class_id;
      num_relevant += rel[k];
    }
    aps[q] = average_precision(std::span<const bool>(rel.get(), list.ranking.size()),
                               num_relevant);
  });

  EvalReport report;
  for (std::size_t q = 0; q < lists.size(); ++q) {
    if (aps[q]) {
      report.per_unit_ap.push_back({lists[q].query_id, *aps[q]});
    } else {
      report.skipped.push_back(lists[q].query_id);
    }
  }
  report.map = mean_ap(report.per_unit_ap);
  return report;
}

EvalReport classification_map(std::span<const std::string> ids, const Eigen::MatrixXf& scores,
                              const DatasetManifest& manifest) {
  const auto num_classes = static_cast<Eigen::Index>(manifest.num_classes());
  if (scores.rows() != num_classes || scores.cols() != static_cast<Eigen::Index>(ids.size())) {
    throw Error(ErrorCode::kShape, "score matrix must be classes x items");
  }
  if (ids.empty()) throw Error(ErrorCode::kEmpty, "no items to evaluate");

  std::vector<std::size_t> labels(ids.size());
  std::map<std::string, std::size_t> predicted, truth;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    labels[j] = manifest.label_of(ids[j]);
    truth[ids[j]] = labels[j];
    predicted[ids[j]] = static_cast<std::size_t>(argmax(scores.col(static_cast<Eigen::Index>(j))));
  }

  std::vector<std::optional<double>> aps(manifest.num_classes());
  parallel_for(manifest.num_classes(), [&](std::size_t c) {
    const auto row = scores.row(static_cast<Eigen::Index>(c));
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return row(static_cast<Eigen::Index>(a)) > row(static_cast<Eigen::Index>(b));
    });
    std::unique_ptr<bool[]> rel(new bool[order.size()]);
    std::size_t num_relevant = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      rel[k] = labels[order[k]] == c;
      num_relevant += rel[k];
    }
    aps[c] = average_precision(std::span<const bool>(rel.get(), order.size()), num_relevant);
  });

  EvalReport report;
  for (std::size_t c = 0; c < aps.size(); ++c) {
    if (aps[c]) {
      report.per_unit_ap.push_back({manifest.classes()[c], *aps[c]});
    } else {
      report.skipped.push_back(manifest.classes()[c]);
    }
  }
  report.map = mean_ap(report.per_unit_ap);
  report.accuracy = accuracy(predicted, truth);
  return report;
}

nlohmann::ordered_json metrics_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  j["map"] = r.map;
  j["num_units"] = r.per_unit_ap.size();
  auto per_unit = nlohmann::ordered_json::object();
  for (const auto& u : r.per_unit_ap) per_unit[u.unit] = u.ap;
  j["per_unit_ap"] = std::move(per_unit);
  j["skipped"] = r.skipped;
  return j;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["config"] = r.config;
  const auto metrics = metrics_json(r);
  for (const auto& [key, value] : metrics.items()) j[key] = value;
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "unit,ap\n";
  for (const auto& u : r.per_unit_ap) {
    // Ids are opaque; quote any that would break a CSV row.
    if (u.unit.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char ch : u.unit) out << (ch == '"' ? "\"\"" : std::string(1, ch));
      out << '"';
    } else {
      out << u.unit;
    }
    out << ',' << u.ap << '\n';
  }
  return out.str();
}

}  // namespace embedkit
