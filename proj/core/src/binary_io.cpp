#include "dtg/binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dtg/errors.hpp"

namespace dtg::io {

static_assert(sizeof(double) == 8);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> v) {
  for (double x : v) f64(x);
}

void ByteWriter::string(std::string_view s) {
  u64(s.size());
  buf_.insert(buf_.end(), s.begin(), s.end());
}

std::span<const std::uint8_t> ByteReader::need(std::size_t n) {
  if (remaining() < n) {
    throw FormatError("unexpected end of data: need " + std::to_string(n) + " bytes, have " +
                      std::to_string(remaining()));
  }
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return need(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> ByteReader::f64s(std::size_t count) {
  if (remaining() / 8 < count) throw FormatError("unexpected end of data in f64 array");
  std::vector<double> out(count);
  for (double& x : out) x = f64();
  return out;
}

std::string ByteReader::string() {
  const auto n = u64();
  if (n > remaining()) throw FormatError("string length exceeds data");
  auto b = need(static_cast<std::size_t>(n));
  return {b.begin(), b.end()};
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw FormatError(std::to_string(remaining()) + " trailing bytes after payload");
  }
}

void write_framed_file(const std::filesystem::path& path, std::string_view magic,
                       std::uint32_t version, std::span<const std::uint8_t> payload) {
  ByteWriter w;
  const std::string header = std::string(magic) + " v" + std::to_string(version) + "\n";
  w.raw({reinterpret_cast<const std::uint8_t*>(header.data()), header.size()});
  w.raw(payload);
  w.u64(fnv1a64(w.bytes()));
  const auto& bytes = w.bytes();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> read_framed_file(const std::filesystem::path& path,
                                           std::string_view magic, std::uint32_t version) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  const std::string prefix = std::string(magic) + " v";
  const auto newline = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end() || bytes.size() < prefix.size() ||
      std::memcmp(bytes.data(), prefix.data(), prefix.size()) != 0) {
    throw FormatError(path.string() + ": missing '" + prefix + "' header");
  }
  const std::string found(bytes.begin() + static_cast<std::ptrdiff_t>(prefix.size()), newline);
  if (found != std::to_string(version)) {
    throw VersionError(path.string() + ": unsupported version v" + found + " (expected v" +
                       std::to_string(version) + ")");
  }
  const auto header_len = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  if (bytes.size() < header_len + 8) throw FormatError(path.string() + ": truncated file");

  const std::size_t body_end = bytes.size() - 8;
  ByteReader tail({bytes.data() + body_end, 8});
  const std::uint64_t stored = tail.u64();
  if (stored != fnv1a64({bytes.data(), body_end})) {
    throw ChecksumError(path.string() + ": checksum mismatch (file truncated or corrupted)");
  }
  return {bytes.begin() + static_cast<std::ptrdiff_t>(header_len),
          bytes.begin() + static_cast<std::ptrdiff_t>(body_end)};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace dtg::io
