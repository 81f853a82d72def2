#include "embedkit/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "embedkit/error.hpp"

namespace embedkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIntegrity: return "integrity error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kDegenerate: return "degenerate-vector error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kRange: return "range error";
    case ErrorCode::kLookup: return "lookup error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kDivergence: return "divergence error";
    case ErrorCode::kEmpty: return "empty-universe error";
    case ErrorCode::kConfig: return "config error";
  }
  return "error";
}

namespace io {

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::string_view in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void BinaryWriter::u16(std::uint16_t v) { put_le(buffer_, v); }
void BinaryWriter::u32(std::uint32_t v) { put_le(buffer_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(buffer_, v); }
void BinaryWriter::f32(float v) { put_le(buffer_, std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::f32s(std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    buffer_.append(p, values.size_bytes());
  } else {
    for (float v : values) f32(v);
  }
}

void BinaryReader::need(std::size_t n) const {
  if (remaining() < n) {
    std::ostringstream msg;
    msg << context_ << ": truncated file (needed " << n << " bytes at offset "
        << pos_ << ", " << remaining() << " available)";
    throw Error(ErrorCode::kIo, msg.str());
  }
}

std::string_view BinaryReader::bytes(std::size_t n) {
  need(n);
  auto out = data_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t BinaryReader::u8() { return get_le<std::uint8_t>(bytes(1)); }
std::uint16_t BinaryReader::u16() { return get_le<std::uint16_t>(bytes(2)); }
std::uint32_t BinaryReader::u32() { return get_le<std::uint32_t>(bytes(4)); }
std::uint64_t BinaryReader::u64() { return get_le<std::uint64_t>(bytes(8)); }
float BinaryReader::f32() { return std::bit_cast<float>(u32()); }

void BinaryReader::f32s(std::span<float> out) {
  auto raw = bytes(out.size_bytes());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), raw.data(), raw.size());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<float>(get_le<std::uint32_t>(raw.substr(4 * i, 4)));
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for reading");
  }
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return contents;
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot rename onto " + path.string());
  }
}

}  // namespace io
}  // namespace embedkit
