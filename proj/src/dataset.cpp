#include "embedkit/dataset.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "embedkit/binary_io.hpp"
#include "embedkit/error.hpp"

namespace embedkit {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view token) {
  if (token == "train") return Split::kTrain;
  if (token == "val") return Split::kVal;
  if (token == "test") return Split::kTest;
  return std::nullopt;
}

void DatasetManifest::add(ManifestItem item) {
  if (item.id.empty()) throw Error(ErrorCode::kIntegrity, "manifest item with empty id");
  if (item.class_id.empty()) {
    throw Error(ErrorCode::kIntegrity, "manifest item '" + item.id + "' has empty class");
  }
  if (item_index_.contains(item.id)) {
    throw Error(ErrorCode::kIntegrity, "duplicate manifest id '" + item.id + "'");
  }
  if (!class_index_.contains(item.class_id)) {
    class_index_.emplace(item.class_id, classes_.size());
    classes_.push_back(item.class_id);
  }
  item_index_.emplace(item.id, items_.size());
  items_.push_back(std::move(item));
}

std::optional<std::size_t> DatasetManifest::class_index(std::string_view class_id) const {
  auto it = class_index_.find(std::string(class_id));
  if (it == class_index_.end()) return std::nullopt;
  return it->second;
}

const ManifestItem* DatasetManifest::find(std::string_view id) const {
  auto it = item_index_.find(std::string(id));
  return it == item_index_.end() ? nullptr : &items_[it->second];
}

std::size_t DatasetManifest::label_of(std::string_view id) const {
  const auto* item = find(id);
  if (!item) throw Error(ErrorCode::kLookup, "id '" + std::string(id) + "' not in manifest");
  return *class_index(item->class_id);
}

namespace {

std::string field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::kParse, where + ": missing string field \"" + key + "\"");
  }
  return it->get<std::string>();
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::string& context) {
  DatasetManifest m;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (blank(line)) continue;

    const std::string where = context + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    if (!obj.is_object()) throw Error(ErrorCode::kParse, where + ": expected a JSON object");
    const auto split_token = field(obj, "split", where);
    const auto split = parse_split(split_token);
    if (!split) throw Error(ErrorCode::kParse, where + ": unknown split '" + split_token + "'");
    m.add({field(obj, "id", where), field(obj, "class", where), *split});
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(io::read_file(path), path.string());
}

std::string encode_manifest(const DatasetManifest& m) {
  std::string out;
  for (const auto& item : m.items()) {
    nlohmann::ordered_json obj;
    obj["id"] = item.id;
    obj["class"] = item.class_id;
    obj["split"] = to_string(item.split);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_manifest(m));
}

std::vector<ManifestItem> split_view(const DatasetManifest& m, Split split) {
  std::vector<ManifestItem> out;
  for (const auto& item : m.items()) {
    if (item.split == split) out.push_back(item);
  }
  return out;
}

std::vector<std::string> split_ids(const DatasetManifest& m, Split split) {
  std::vector<std::string> out;
  for (const auto& item : m.items()) {
    if (item.split == split) out.push_back(item.id);
  }
  return out;
}

ClassCatalog parse_descriptions(std::string_view text, const std::string& context) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, context + ": " + e.what());
  }
  if (!obj.is_object()) throw Error(ErrorCode::kParse, context + ": expected a JSON object");
  ClassCatalog catalog;
  for (const auto& [key, value] : obj.items()) {
    if (!value.is_string()) {
      throw Error(ErrorCode::kParse, context + ": description of '" + key + "' is not a string");
    }
    catalog.descriptions.emplace(key, value.get<std::string>());
  }
  return catalog;
}

ClassCatalog load_descriptions(const std::filesystem::path& path) {
  return parse_descriptions(io::read_file(path), path.string());
}

void validate_catalog(const ClassCatalog& catalog, const DatasetManifest& m) {
  for (const auto& c : m.classes()) {
    auto it = catalog.descriptions.find(c);
    if (it == catalog.descriptions.end()) {
      throw Error(ErrorCode::kAlignment, "no description for class '" + c + "'");
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::kAlignment, "empty description for class '" + c + "'");
    }
  }
  for (const auto& [c, _] : catalog.descriptions) {
    if (!m.class_index(c)) {
      throw Error(ErrorCode::kAlignment, "description for unknown class '" + c + "'");
    }
  }
}

AlignmentReport check_alignment(const DatasetManifest& m, const EmbeddingStore& s) {
  AlignmentReport report;
  for (const auto& item : m.items()) {
    if (!s.find(item.id)) report.missing.push_back(item.id);
  }
  for (const auto& id : s.ids()) {
    if (!m.find(id)) report.orphans.push_back(id);
  }
  return report;
}

}  // namespace embedkit
