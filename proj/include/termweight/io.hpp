#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

namespace termweight {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// splitmix64 finalizer; used to derive independent seeds from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Little-endian binary encoder.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view bytes) { buffer_.append(bytes); }
  void f64s(std::span<const double> values);

  const std::string& bytes() const& { return buffer_; }
  std::string bytes() && { return std::move(buffer_); }
  std::size_t size() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view raw(std::size_t n);

  std::size_t offset() const { return offset_; }
  bool done() const { return offset_ == bytes_.size(); }

 private:
  void require(std::size_t n) const;

  std::string_view bytes_;
  std::size_t offset_ = 0;
};

/// Container used by model files: one line of JSON, a newline, then a binary
/// payload.
std::string pack_header_file(const nlohmann::json& header, std::string_view payload);
std::pair<nlohmann::json, std::string_view> unpack_header_file(std::string_view bytes);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace termweight
