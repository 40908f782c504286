#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dtg::io {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

/// Appends fixed-width little-endian values to a byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  void raw(std::span<const std::uint8_t> v) { buf_.insert(buf_.end(), v.begin(), v.end()); }
  void string(std::string_view s);  // u64 length prefix

  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader over a byte span; throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::vector<double> f64s(std::size_t count);
  std::string string();

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void expect_end() const;

 private:
  std::span<const std::uint8_t> need(std::size_t n);

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

/// Writes `<magic> v<version>\n`, the payload, then the FNV-1a checksum of
/// everything before it.
void write_framed_file(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version, std::span<const std::uint8_t> payload);

/// Reads a file written by write_framed_file and returns the payload.
/// Throws IoError, FormatError, VersionError or ChecksumError.
std::vector<std::uint8_t> read_framed_file(const std::filesystem::path& path,
                                           std::string_view magic, std::uint32_t version);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dtg::io
