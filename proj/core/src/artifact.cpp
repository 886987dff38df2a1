#include "rjm/artifact.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rjm/error.hpp"

namespace rjm::artifact {

Hasher& Hasher::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    state_ ^= c;
    state_ *= 0x100000001b3ULL;
  }
  // Length separator so ("ab","c") and ("a","bc") differ.
  state_ ^= bytes.size();
  state_ *= 0x100000001b3ULL;
  return *this;
}

Hasher& Hasher::update(std::int64_t value) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  return update(std::string_view(buf, 8));
}

Hasher& Hasher::update(double value) {
  return update(static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(value)));
}

std::string Hasher::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hash_hex(std::string_view bytes) { return Hasher{}.update(bytes).hex(); }

void write_header(std::ostream& out, const Header& header) {
  out << kMagic << ' ' << header.kind << ' ' << header.version << '\n';
  out << "config_hash " << header.config_hash << '\n';
}

Header read_header(std::istream& in, std::string_view kind, int version, std::string_view stage) {
  std::string line;
  if (!std::getline(in, line)) {
    throw StaleArtifactError(std::string(stage), "empty artifact, expected '" + std::string(kind) + "'");
  }
  std::istringstream first(line);
  std::string magic;
  Header header;
  first >> magic >> header.kind >> header.version;
  if (magic != kMagic) {
    throw StaleArtifactError(std::string(stage), "not an rjm artifact (bad magic)");
  }
  if (header.kind != kind) {
    throw StaleArtifactError(std::string(stage),
                             "artifact kind '" + header.kind + "', expected '" + std::string(kind) + "'");
  }
  if (header.version != version) {
    throw StaleArtifactError(std::string(stage), "artifact '" + header.kind + "' has version " +
                                                     std::to_string(header.version) + ", expected " +
                                                     std::to_string(version));
  }
  if (!std::getline(in, line) || line.rfind("config_hash ", 0) != 0) {
    throw StaleArtifactError(std::string(stage), "artifact '" + header.kind + "' lacks a config_hash line");
  }
  header.config_hash = line.substr(12);
  return header;
}

void expect_hash(const Header& header, std::string_view expected, std::string_view stage) {
  if (header.config_hash != expected) {
    throw StaleArtifactError(std::string(stage), "artifact '" + header.kind + "' was built with config " +
                                                     header.config_hash + " but the current config expects " +
                                                     std::string(expected));
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rjm::artifact
