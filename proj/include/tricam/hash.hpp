#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace tricam {

/// 64-bit FNV-1a, used to fingerprint artifacts in run manifests.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hash_file(const std::filesystem::path& path);

}  // namespace tricam
