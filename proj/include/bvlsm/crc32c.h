#ifndef BVLSM_CRC32C_H
#define BVLSM_CRC32C_H

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bvlsm {
namespace crc32c {

// CRC-32C (Castagnoli polynomial 0x1EDC6F41), reflected, init and final
// xor 0xFFFFFFFF. Check value: crc of "123456789" is 0xE3069283.
uint32_t Extend(uint32_t crc, const char* data, size_t n);

inline uint32_t Value(const char* data, size_t n) { return Extend(0, data, n); }

inline uint32_t Value(std::string_view s) { return Value(s.data(), s.size()); }

}  // namespace crc32c
}  // namespace bvlsm

#endif  // BVLSM_CRC32C_H
