#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "embedkit/embedding_store.hpp"

namespace embedkit {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Split s);
/// Parses "train" | "val" | "test"; nullopt otherwise.
std::optional<Split> parse_split(std::string_view token);

struct ManifestItem {
  std::string id;
  std::string class_id;
  Split split;

  friend bool operator==(const ManifestItem&, const ManifestItem&) = default;
};

/// Items plus the class list. Class order is first-appearance order and
/// fixes the class -> output index mapping used everywhere downstream.
class DatasetManifest {
 public:
  DatasetManifest() = default;

  /// Appends an item, registering its class on first sight. Integrity error
  /// on duplicate or empty ids.
  void add(ManifestItem item);

  const std::vector<ManifestItem>& items() const noexcept { return items_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t num_classes() const noexcept { return classes_.size(); }

  std::optional<std::size_t> class_index(std::string_view class_id) const;
  const ManifestItem* find(std::string_view id) const;
  /// Class index of item `id`; lookup error if the item is unknown.
  std::size_t label_of(std::string_view id) const;

  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.items_ == b.items_ && a.classes_ == b.classes_;
  }

 private:
  std::vector<ManifestItem> items_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_map<std::string, std::size_t> class_index_;
};

DatasetManifest parse_manifest(std::string_view text, const std::string& context = "manifest");
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string encode_manifest(const DatasetManifest& m);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

/// Items of one split in manifest order.
std::vector<ManifestItem> split_view(const DatasetManifest& m, Split split);
std::vector<std::string> split_ids(const DatasetManifest& m, Split split);

/// class_id -> description text.
struct ClassCatalog {
  std::map<std::string, std::string> descriptions;
};

ClassCatalog load_descriptions(const std::filesystem::path& path);
ClassCatalog parse_descriptions(std::string_view text, const std::string& context = "descriptions");
/// Alignment error unless the catalog covers exactly the manifest's classes
/// with nonempty descriptions.
void validate_catalog(const ClassCatalog& catalog, const DatasetManifest& m);

struct AlignmentReport {
  std::vector<std::string> missing;  // in the manifest, absent from the store
  std::vector<std::string> orphans;  // in the store, absent from the manifest

  bool aligned() const noexcept { return missing.empty() && orphans.empty(); }
};

AlignmentReport check_alignment(const DatasetManifest& m, const EmbeddingStore& s);

}  // namespace embedkit
