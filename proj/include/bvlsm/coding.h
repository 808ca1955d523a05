#ifndef BVLSM_CODING_H
#define BVLSM_CODING_H

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace bvlsm {

// Little-endian fixed-width integers everywhere; varints only for lengths.

inline void EncodeFixed32(char* dst, uint32_t v) {
  uint8_t* p = reinterpret_cast<uint8_t*>(dst);
  p[0] = static_cast<uint8_t>(v);
  p[1] = static_cast<uint8_t>(v >> 8);
  p[2] = static_cast<uint8_t>(v >> 16);
  p[3] = static_cast<uint8_t>(v >> 24);
}

inline void EncodeFixed64(char* dst, uint64_t v) {
  uint8_t* p = reinterpret_cast<uint8_t*>(dst);
  for (int i = 0; i < 8; i++) {
    p[i] = static_cast<uint8_t>(v >> (8 * i));
  }
}

inline uint32_t DecodeFixed32(const char* src) {
  const uint8_t* p = reinterpret_cast<const uint8_t*>(src);
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

inline uint64_t DecodeFixed64(const char* src) {
  const uint8_t* p = reinterpret_cast<const uint8_t*>(src);
  uint64_t v = 0;
  for (int i = 0; i < 8; i++) {
    v |= static_cast<uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

inline void PutFixed32(std::string* dst, uint32_t v) {
  char buf[4];
  EncodeFixed32(buf, v);
  dst->append(buf, 4);
}

inline void PutFixed64(std::string* dst, uint64_t v) {
  char buf[8];
  EncodeFixed64(buf, v);
  dst->append(buf, 8);
}

// LEB128-style base-128 varint: low 7 bits per byte, high bit set while more
// groups follow. A 64-bit value needs at most 10 bytes.
constexpr int kMaxVarintLen64 = 10;

inline int VarintLength(uint64_t v) {
  int len = 1;
  while (v >= 0x80) {
    v >>= 7;
    len++;
  }
  return len;
}

inline void PutUvarint(std::string* dst, uint64_t v) {
  while (v >= 0x80) {
    dst->push_back(static_cast<char>(v | 0x80));
    v >>= 7;
  }
  dst->push_back(static_cast<char>(v));
}

// Decodes a varint from the front of *input, advancing it past the consumed
// bytes. Returns false when no terminated varint exists within 10 bytes.
inline bool GetUvarint(std::string_view* input, uint64_t* value) {
  uint64_t result = 0;
  for (int i = 0; i < kMaxVarintLen64 && i < static_cast<int>(input->size());
       i++) {
    uint8_t byte = static_cast<uint8_t>((*input)[i]);
    result |= static_cast<uint64_t>(byte & 0x7F) << (7 * i);
    if ((byte & 0x80) == 0) {
      input->remove_prefix(i + 1);
      *value = result;
      return true;
    }
  }
  return false;
}

inline bool GetLengthPrefixed(std::string_view* input, std::string_view* out) {
  uint64_t len = 0;
  if (!GetUvarint(input, &len)) return false;
  if (len > input->size()) return false;
  *out = input->substr(0, len);
  input->remove_prefix(static_cast<size_t>(len));
  return true;
}

inline void PutLengthPrefixed(std::string* dst, std::string_view s) {
  PutUvarint(dst, s.size());
  dst->append(s.data(), s.size());
}

}  // namespace bvlsm

#endif  // BVLSM_CODING_H
