#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

namespace rjm::artifact {

// Every on-disk artifact starts with two text lines:
//
//   RJMART <kind> <version>
//   config_hash <16 hex digits>
//
// followed by a kind-specific payload.
inline constexpr std::string_view kMagic = "RJMART";

struct Header {
  std::string kind;
  int version = 0;
  std::string config_hash;
};

/// 64-bit FNV-1a. Stable across platforms; used for config/content addressing.
class Hasher {
 public:
  Hasher& update(std::string_view bytes);
  Hasher& update(std::int64_t value);
  Hasher& update(double value);
  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_hex(std::string_view bytes);

void write_header(std::ostream& out, const Header& header);

/// Reads and validates the header. Throws StaleArtifactError naming `stage`
/// when the magic, kind or version do not match.
Header read_header(std::istream& in, std::string_view kind, int version, std::string_view stage);

/// Throws StaleArtifactError naming `stage` if the stored hash differs.
void expect_hash(const Header& header, std::string_view expected, std::string_view stage);

std::string read_text(const std::filesystem::path& path);

/// Writes through a temporary file and renames, so readers never observe a
/// half-written artifact.
void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace rjm::artifact
