#ifndef BVLSM_HASH_H
#define BVLSM_HASH_H

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bvlsm {

// 64-bit MurmurHash2-A variant. Deterministic and seedable; used for Bloom
// filter double hashing and hash-based lane dispatch.
uint64_t Hash64(const void* data, size_t n, uint64_t seed);

inline uint64_t Hash64(std::string_view s, uint64_t seed) {
  return Hash64(s.data(), s.size(), seed);
}

}  // namespace bvlsm

#endif  // BVLSM_HASH_H
