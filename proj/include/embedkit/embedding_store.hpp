#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace embedkit {

enum class Modality : std::uint8_t { kImage = 0, kText = 1 };

std::string_view to_string(Modality m);

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrixXf>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXf>;

inline constexpr std::size_t kMaxIdBytes = 65535;
inline constexpr double kNormTolerance = 1e-4;
inline constexpr double kDegenerateNorm = 1e-12;

/// Id-indexed set of fixed-dimension float vectors of a single modality.
///
/// Entry order is significant: it is the tie-break order for every ranking
/// built on the store. Stores are append-only while being built and are
/// treated as immutable afterwards.
class EmbeddingStore {
 public:
  EmbeddingStore(std::size_t dim, Modality modality, bool normalized = false);

  /// Validates and appends one entry. Throws on empty/oversized or duplicate
  /// ids, wrong length, non-finite values, or (when the store is flagged
  /// normalized) a norm outside 1 +/- kNormTolerance.
  void add(std::string id, std::span<const float> values);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  Modality modality() const noexcept { return modality_; }
  bool normalized() const noexcept { return normalized_; }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t row) const { return ids_.at(row); }
  std::optional<std::size_t> find(std::string_view id) const;
  /// Row index of `id`; lookup error if absent.
  std::size_t index_of(std::string_view id) const;

  ConstVectorMap row(std::size_t i) const;
  ConstVectorMap at(std::string_view id) const { return row(index_of(id)); }
  ConstRowMap matrix() const;
  std::span<const float> values() const noexcept { return data_; }

  void reserve(std::size_t n);

  friend bool operator==(const EmbeddingStore& a, const EmbeddingStore& b);

 private:
  std::size_t dim_;
  Modality modality_;
  bool normalized_;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingStore load_store(const std::filesystem::path& path);
EmbeddingStore decode_store(std::string_view bytes, const std::string& context = "store");

void save_store(const EmbeddingStore& store, const std::filesystem::path& path);
std::string encode_store(const EmbeddingStore& store);

/// Unit-norm copy of `store`; degenerate-vector error naming the first id
/// whose norm is <= kDegenerateNorm.
EmbeddingStore l2_normalize(const EmbeddingStore& store);

/// Scales `v` in place to unit norm, accumulating the norm in double.
/// Returns the original norm.
double normalize_in_place(std::span<float> v);

/// Copy of the entries named by `ids`, in the order given.
EmbeddingStore select(const EmbeddingStore& store, std::span<const std::string> ids);

}  // namespace embedkit
