#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace embedkit::io {

/// Appends little-endian encodings to an in-memory buffer.
class BinaryWriter {
 public:
  void bytes(std::string_view data) { buffer_.append(data); }
  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32(float v);
  void f32s(std::span<const float> values);

  const std::string& buffer() const noexcept { return buffer_; }

 private:
  std::string buffer_;
};

/// Reads little-endian encodings from a byte buffer; running past the end
/// throws an I/O error that names `context`.
class BinaryReader {
 public:
  BinaryReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::string_view bytes(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  void f32s(std::span<float> out);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace embedkit::io
