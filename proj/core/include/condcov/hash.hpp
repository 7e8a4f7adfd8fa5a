#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace condcov {

/// 64-bit FNV-1a, used for dataset and model fingerprints.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t size) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(const T& v) noexcept {
    bytes(&v, sizeof(T));
  }
  void text(std::string_view s) noexcept {
    value(static_cast<std::uint64_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace condcov
