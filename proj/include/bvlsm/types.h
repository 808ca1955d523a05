#ifndef BVLSM_TYPES_H
#define BVLSM_TYPES_H

#include <cstdint>
#include <string>
#include <string_view>

#include "bvlsm/status.h"

namespace bvlsm {

// Keys and values are raw byte strings. Keys compare lexicographically by
// unsigned byte value (std::string already does), are non-empty and at most
// 4096 bytes; enforcement happens at the engine boundary.
using SequenceNumber = uint64_t;

constexpr SequenceNumber kMaxSequenceNumber = ~uint64_t{0};

enum class EntryKind : uint8_t { kPut = 0, kDelete = 1 };

enum class PayloadKind : uint8_t { kInline = 0, kPointer = 1, kNone = 2 };

// Pointer to a separated big value: which value-log file, where the record
// starts, and how long the value payload is. Encodes to exactly 16 bytes.
struct ValueOffset {
  uint32_t file_id = 0;
  uint64_t offset = 0;
  uint32_t length = 0;

  bool operator==(const ValueOffset&) const = default;
};

constexpr size_t kValueOffsetEncodedSize = 16;

void EncodeValueOffset(std::string* dst, const ValueOffset& voff);
Status DecodeValueOffset(std::string_view* input, ValueOffset* voff);

// The payload half of an InternalEntry; what MemTable and SSTable lookups
// return.
struct EntryValue {
  EntryKind kind = EntryKind::kPut;
  PayloadKind payload = PayloadKind::kNone;
  std::string inline_value;
  ValueOffset pointer;

  bool operator==(const EntryValue&) const = default;
};

// One sequenced record flowing through WAL, MemTable and SSTables.
// Invariants: Delete carries no payload; Put carries Inline or Pointer.
struct InternalEntry {
  std::string key;
  SequenceNumber seq = 0;
  EntryKind kind = EntryKind::kPut;
  PayloadKind payload = PayloadKind::kNone;
  std::string inline_value;
  ValueOffset pointer;

  bool operator==(const InternalEntry&) const = default;

  EntryValue value() const {
    return EntryValue{kind, payload, inline_value, pointer};
  }

  // Bytes this entry charges against MemTable capacity:
  // key + payload + fixed 32-byte bookkeeping overhead.
  size_t charged_size() const {
    size_t payload_bytes = 0;
    if (payload == PayloadKind::kInline) {
      payload_bytes = inline_value.size();
    } else if (payload == PayloadKind::kPointer) {
      payload_bytes = kValueOffsetEncodedSize;
    }
    return key.size() + payload_bytes + 32;
  }

  static InternalEntry Put(std::string key, SequenceNumber seq,
                           std::string value) {
    InternalEntry e;
    e.key = std::move(key);
    e.seq = seq;
    e.kind = EntryKind::kPut;
    e.payload = PayloadKind::kInline;
    e.inline_value = std::move(value);
    return e;
  }

  static InternalEntry PutPointer(std::string key, SequenceNumber seq,
                                  const ValueOffset& voff) {
    InternalEntry e;
    e.key = std::move(key);
    e.seq = seq;
    e.kind = EntryKind::kPut;
    e.payload = PayloadKind::kPointer;
    e.pointer = voff;
    return e;
  }

  static InternalEntry Tombstone(std::string key, SequenceNumber seq) {
    InternalEntry e;
    e.key = std::move(key);
    e.seq = seq;
    e.kind = EntryKind::kDelete;
    e.payload = PayloadKind::kNone;
    return e;
  }
};

// Entry wire layout:
//   seq (8 LE) | kind (1) | payload tag (1) | key_len varint | key
//   | Inline:  value_len varint | value
//   | Pointer: file_id (4 LE) | offset (8 LE) | length (4 LE)
//   | None:    nothing
void EncodeEntry(const InternalEntry& entry, std::string* dst);

// Decodes one entry from the front of input. When consumed is non-null it
// receives the number of bytes the entry occupied (input may hold more).
// Otherwise trailing bytes are an error.
Status DecodeEntry(std::string_view input, InternalEntry* entry,
                   size_t* consumed = nullptr);

// Ordering used by MemTable, SSTables and merges: key ascending, and for
// equal keys newest (largest seq) first.
inline bool EntryOrderLess(std::string_view lkey, SequenceNumber lseq,
                           std::string_view rkey, SequenceNumber rseq) {
  if (lkey != rkey) return lkey < rkey;
  return lseq > rseq;
}

}  // namespace bvlsm

#endif  // BVLSM_TYPES_H
