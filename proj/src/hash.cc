#include "bvlsm/hash.h"

#include <cstring>

namespace bvlsm {

uint64_t Hash64(const void* data, size_t n, uint64_t seed) {
  const uint64_t m = 0xc6a4a7935bd1e995ull;
  const int r = 47;

  uint64_t h = seed ^ (n * m);

  const uint8_t* p = static_cast<const uint8_t*>(data);
  const uint8_t* end = p + (n & ~size_t{7});

  while (p != end) {
    uint64_t k;
    std::memcpy(&k, p, 8);
    p += 8;

    k *= m;
    k ^= k >> r;
    k *= m;

    h ^= k;
    h *= m;
  }

  switch (n & 7) {
    case 7:
      h ^= static_cast<uint64_t>(p[6]) << 48;
      [[fallthrough]];
    case 6:
      h ^= static_cast<uint64_t>(p[5]) << 40;
      [[fallthrough]];
    case 5:
      h ^= static_cast<uint64_t>(p[4]) << 32;
      [[fallthrough]];
    case 4:
      h ^= static_cast<uint64_t>(p[3]) << 24;
      [[fallthrough]];
    case 3:
      h ^= static_cast<uint64_t>(p[2]) << 16;
      [[fallthrough]];
    case 2:
      h ^= static_cast<uint64_t>(p[1]) << 8;
      [[fallthrough]];
    case 1:
      h ^= static_cast<uint64_t>(p[0]);
      h *= m;
  }

  h ^= h >> r;
  h *= m;
  h ^= h >> r;
  return h;
}

}  // namespace bvlsm
