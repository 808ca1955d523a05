#include "bvlsm/crc32c.h"

#include <array>

namespace bvlsm {
namespace crc32c {

namespace {

// Slicing-by-8 tables, built once at startup from the reflected Castagnoli
// polynomial.
struct Tables {
  uint32_t t[8][256];

  Tables() {
    const uint32_t poly = 0x82F63B78u;  // 0x1EDC6F41 reflected
    for (uint32_t i = 0; i < 256; i++) {
      uint32_t crc = i;
      for (int j = 0; j < 8; j++) {
        crc = (crc & 1) ? (crc >> 1) ^ poly : crc >> 1;
      }
      t[0][i] = crc;
    }
    for (uint32_t i = 0; i < 256; i++) {
      uint32_t crc = t[0][i];
      for (int k = 1; k < 8; k++) {
        crc = t[0][crc & 0xFF] ^ (crc >> 8);
        t[k][i] = crc;
      }
    }
  }
};

const Tables& tables() {
  static const Tables kTables;
  return kTables;
}

}  // namespace

uint32_t Extend(uint32_t crc, const char* data, size_t n) {
  const Tables& tab = tables();
  const uint8_t* p = reinterpret_cast<const uint8_t*>(data);
  uint32_t c = crc ^ 0xFFFFFFFFu;

  while (n >= 8) {
    uint32_t lo = c ^ (static_cast<uint32_t>(p[0]) |
                       (static_cast<uint32_t>(p[1]) << 8) |
                       (static_cast<uint32_t>(p[2]) << 16) |
                       (static_cast<uint32_t>(p[3]) << 24));
    c = tab.t[7][lo & 0xFF] ^ tab.t[6][(lo >> 8) & 0xFF] ^
        tab.t[5][(lo >> 16) & 0xFF] ^ tab.t[4][lo >> 24] ^ tab.t[3][p[4]] ^
        tab.t[2][p[5]] ^ tab.t[1][p[6]] ^ tab.t[0][p[7]];
    p += 8;
    n -= 8;
  }
  while (n--) {
    c = tab.t[0][(c ^ *p++) & 0xFF] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

}  // namespace crc32c
}  // namespace bvlsm
