#include "bvlsm/types.h"

#include "bvlsm/coding.h"

namespace bvlsm {

void EncodeValueOffset(std::string* dst, const ValueOffset& voff) {
  PutFixed32(dst, voff.file_id);
  PutFixed64(dst, voff.offset);
  PutFixed32(dst, voff.length);
}

Status DecodeValueOffset(std::string_view* input, ValueOffset* voff) {
  if (input->size() < kValueOffsetEncodedSize) {
    return Status::Corruption("truncated ValueOffset");
  }
  voff->file_id = DecodeFixed32(input->data());
  voff->offset = DecodeFixed64(input->data() + 4);
  voff->length = DecodeFixed32(input->data() + 12);
  input->remove_prefix(kValueOffsetEncodedSize);
  return Status::OK();
}

void EncodeEntry(const InternalEntry& entry, std::string* dst) {
  PutFixed64(dst, entry.seq);
  dst->push_back(static_cast<char>(entry.kind));
  dst->push_back(static_cast<char>(entry.payload));
  PutLengthPrefixed(dst, entry.key);
  switch (entry.payload) {
    case PayloadKind::kInline:
      PutLengthPrefixed(dst, entry.inline_value);
      break;
    case PayloadKind::kPointer:
      EncodeValueOffset(dst, entry.pointer);
      break;
    case PayloadKind::kNone:
      break;
  }
}

Status DecodeEntry(std::string_view input, InternalEntry* entry,
                   size_t* consumed) {
  const size_t total = input.size();
  if (input.size() < 10) return Status::Corruption("entry header truncated");
  entry->seq = DecodeFixed64(input.data());
  uint8_t kind = static_cast<uint8_t>(input[8]);
  uint8_t payload = static_cast<uint8_t>(input[9]);
  if (kind > 1) return Status::Corruption("bad entry kind tag");
  if (payload > 2) return Status::Corruption("bad payload tag");
  entry->kind = static_cast<EntryKind>(kind);
  entry->payload = static_cast<PayloadKind>(payload);
  input.remove_prefix(10);

  std::string_view key;
  if (!GetLengthPrefixed(&input, &key)) {
    return Status::Corruption("entry key truncated");
  }
  if (key.empty()) return Status::Corruption("empty key");
  entry->key.assign(key);

  entry->inline_value.clear();
  entry->pointer = ValueOffset{};
  switch (entry->payload) {
    case PayloadKind::kInline: {
      std::string_view value;
      if (!GetLengthPrefixed(&input, &value)) {
        return Status::Corruption("entry value truncated");
      }
      entry->inline_value.assign(value);
      break;
    }
    case PayloadKind::kPointer: {
      Status s = DecodeValueOffset(&input, &entry->pointer);
      if (!s.ok()) return s;
      break;
    }
    case PayloadKind::kNone:
      break;
  }

  if (entry->kind == EntryKind::kDelete &&
      entry->payload != PayloadKind::kNone) {
    return Status::Corruption("delete entry with payload");
  }
  if (entry->kind == EntryKind::kPut && entry->payload == PayloadKind::kNone) {
    return Status::Corruption("put entry without payload");
  }

  if (consumed != nullptr) {
    *consumed = total - input.size();
  } else if (!input.empty()) {
    return Status::Corruption("trailing bytes after entry");
  }
  return Status::OK();
}

}  // namespace bvlsm
