#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace forgesr {

/// Derives a stage seed from the master seed.
///
/// seed = first 8 bytes, read little-endian, of
///   SHA-256( le64(master) || le32(len(stage)) || utf8(stage) || le64(index) )
///
/// All integers are encoded little-endian regardless of host byte order, so
/// any implementation reproduces the same value from the same triple.
std::uint64_t seed_for(std::uint64_t master, std::string_view stage, std::uint64_t index);

// Lowercase hex SHA-256 digests.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::string& path);

// Incremental hasher for digesting many images into one manifest field.
class Sha256 {
public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::string hex_digest();

private:
  void* ctx_;
};

}  // namespace forgesr
