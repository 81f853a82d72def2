#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "embedkit/dataset.hpp"

namespace embedkit {

struct RankedList;

struct UnitAp {
  std::string unit;  // query id or class id
  double ap;
};

struct EvalReport {
  std::string mode;
  std::optional<double> accuracy;
  double map = 0.0;
  std::vector<UnitAp> per_unit_ap;
  std::vector<std::string> skipped;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// Fraction of keys whose predicted class equals the true class. Alignment
/// error if the key sets differ or are empty.
double accuracy(const std::map<std::string, std::size_t>& predictions,
                const std::map<std::string, std::size_t>& truth);

/// Non-interpolated AP of a relevance pattern (in rank order), normalized by
/// `num_relevant`. nullopt when num_relevant is zero.
std::optional<double> average_precision(std::span<const bool> relevance,
                                        std::size_t num_relevant);
std::optional<double> average_precision(std::span<const std::string> ranking,
                                        const std::unordered_set<std::string>& relevant);

/// Per-query AP where relevant = ranked items sharing the query's class.
/// Queries without any relevant item are skipped.
EvalReport retrieval_map(std::span<const RankedList> lists, const DatasetManifest& manifest);

/// Macro one-vs-rest AP over classes. `scores` is classes x items with rows in
/// manifest class order and columns matching `ids`; ties keep item order.
/// Also fills accuracy from the per-item argmax.
EvalReport classification_map(std::span<const std::string> ids, const Eigen::MatrixXf& scores,
                              const DatasetManifest& manifest);

/// Pretty-printed, stable key order.
nlohmann::ordered_json to_json(const EvalReport& r);
/// The metric payload only (accuracy, map, per-unit AP, skipped); what two
/// pipelines must agree on to be called equivalent.
nlohmann::ordered_json metrics_json(const EvalReport& r);
std::string to_csv(const EvalReport& r);

}  // namespace embedkit
