#include "embedkit/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "embedkit/binary_io.hpp"
#include "embedkit/error.hpp"

namespace embedkit {

namespace {

constexpr std::string_view kMagic = "CEMB";
constexpr std::uint32_t kVersion = 1;

double norm64(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

}  // namespace

std::string_view to_string(Modality m) {
  return m == Modality::kImage ? "image" : "text";
}

EmbeddingStore::EmbeddingStore(std::size_t dim, Modality modality, bool normalized)
    : dim_(dim), modality_(modality), normalized_(normalized) {
  if (dim == 0) throw Error(ErrorCode::kConfig, "embedding dimension must be positive");
}

void EmbeddingStore::add(std::string id, std::span<const float> values) {
  if (id.empty()) throw Error(ErrorCode::kIntegrity, "empty embedding id");
  if (id.size() > kMaxIdBytes) {
    throw Error(ErrorCode::kIntegrity, "embedding id longer than 65535 bytes");
  }
  if (values.size() != dim_) {
    throw Error(ErrorCode::kShape, "entry '" + id + "' has " + std::to_string(values.size()) +
                                       " values, store dim is " + std::to_string(dim_));
  }
  if (!std::all_of(values.begin(), values.end(), [](float x) { return std::isfinite(x); })) {
    throw Error(ErrorCode::kIntegrity, "entry '" + id + "' has a non-finite value");
  }
  if (normalized_ && std::abs(norm64(values) - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::kIntegrity,
                "entry '" + id + "' is not unit-norm in a store flagged normalized");
  }
  if (index_.contains(id)) throw Error(ErrorCode::kIntegrity, "duplicate id '" + id + "'");
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), values.begin(), values.end());
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingStore::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) throw Error(ErrorCode::kLookup, "id '" + std::string(id) + "' not in store");
  return *i;
}

ConstVectorMap EmbeddingStore::row(std::size_t i) const {
  if (i >= size()) throw Error(ErrorCode::kRange, "row index out of range");
  return ConstVectorMap(data_.data() + i * dim_, static_cast<Eigen::Index>(dim_));
}

ConstRowMap EmbeddingStore::matrix() const {
  return ConstRowMap(data_.data(), static_cast<Eigen::Index>(size()),
                     static_cast<Eigen::Index>(dim_));
}

void EmbeddingStore::reserve(std::size_t n) {
  ids_.reserve(n);
  data_.reserve(n * dim_);
  index_.reserve(n);
}

bool operator==(const EmbeddingStore& a, const EmbeddingStore& b) {
  return a.dim_ == b.dim_ && a.modality_ == b.modality_ &&
         a.normalized_ == b.normalized_ && a.ids_ == b.ids_ &&
         a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(float)) == 0;
}

std::string encode_store(const EmbeddingStore& store) {
  io::BinaryWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(store.modality()));
  w.u8(store.normalized() ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u64(store.size());
  const auto values = store.values();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& id = store.id(i);
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.bytes(id);
    w.f32s(values.subspan(i * store.dim(), store.dim()));
  }
  return w.buffer();
}

EmbeddingStore decode_store(std::string_view bytes, const std::string& context) {
  io::BinaryReader r(bytes, context);
  if (bytes.size() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kFormat, context + ": bad magic (expected CEMB)");
  }
  const auto version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kFormat, context + ": unsupported version " + std::to_string(version));
  }
  const auto modality = r.u8();
  if (modality > 1) throw Error(ErrorCode::kFormat, context + ": bad modality byte");
  const auto normalized = r.u8();
  if (normalized > 1) throw Error(ErrorCode::kFormat, context + ": bad normalized byte");
  const auto dim = r.u32();
  if (dim == 0) throw Error(ErrorCode::kFormat, context + ": zero dimension");
  const auto count = r.u64();

  EmbeddingStore store(dim, static_cast<Modality>(modality), normalized == 1);
  // Each record is at least 2 + 1 + 4*dim bytes; cap the reservation by what
  // the buffer could possibly hold.
  store.reserve(std::min<std::uint64_t>(count, r.remaining() / (3 + 4ull * dim)));
  std::vector<float> buf(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.u16();
    std::string id(r.bytes(len));
    r.f32s(buf);
    store.add(std::move(id), buf);
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kFormat, context + ": trailing bytes after last record");
  }
  return store;
}

EmbeddingStore load_store(const std::filesystem::path& path) {
  return decode_store(io::read_file(path), path.string());
}

void save_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode_store(store));
}

double normalize_in_place(std::span<float> v) {
  const double norm = norm64(v);
  if (norm <= kDegenerateNorm) return norm;
  for (float& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
  return norm;
}

EmbeddingStore l2_normalize(const EmbeddingStore& store) {
  EmbeddingStore out(store.dim(), store.modality(), true);
  out.reserve(store.size());
  std::vector<float> buf(store.dim());
  const auto values = store.values();
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto src = values.subspan(i * store.dim(), store.dim());
    std::copy(src.begin(), src.end(), buf.begin());
    if (normalize_in_place(buf) <= kDegenerateNorm) {
      throw Error(ErrorCode::kDegenerate, "vector '" + store.id(i) + "' has (near-)zero norm");
    }
    out.add(store.id(i), buf);
  }
  return out;
}

EmbeddingStore select(const EmbeddingStore& store, std::span<const std::string> ids) {
  EmbeddingStore out(store.dim(), store.modality(), store.normalized());
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto v = store.at(id);
    out.add(id, std::span<const float>(v.data(), store.dim()));
  }
  return out;
}

}  // namespace embedkit
