#include "tricam/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "tricam/error.hpp"

namespace tricam {

void Fnv1a::update(std::span<const std::uint8_t> bytes) {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update(std::string_view text) {
  update({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  Fnv1a h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = static_cast<std::size_t>(in.gcount());
    h.update({reinterpret_cast<const std::uint8_t*>(buf.data()), got});
  }
  return h.hex();
}

}  // namespace tricam
