#include "bvlsm/memtable.h"

#include <mutex>

namespace bvlsm {

Status MemTable::Insert(const InternalEntry& entry) {
  if (immutable_.load(std::memory_order_acquire)) {
    return Status::InvalidArgument("insert into immutable memtable");
  }
  std::unique_lock<std::shared_mutex> lock(mu_);
  table_[{entry.key, entry.seq}] = entry.value();
  size_.fetch_add(entry.charged_size(), std::memory_order_relaxed);
  SequenceNumber prev = max_seq_.load(std::memory_order_relaxed);
  while (entry.seq > prev &&
         !max_seq_.compare_exchange_weak(prev, entry.seq)) {
  }
  return Status::OK();
}

std::optional<EntryValue> MemTable::Get(std::string_view key,
                                        SequenceNumber at_seq) const {
  std::shared_lock<std::shared_mutex> lock(mu_);
  // Entries for a key are ordered newest-first, so the first entry at or
  // below (key, at_seq) is the visible one.
  auto it = table_.lower_bound({std::string(key), at_seq});
  if (it == table_.end() || it->first.first != key) return std::nullopt;
  return it->second;
}

void MemTable::Seal() { immutable_.store(true, std::memory_order_release); }

size_t MemTable::entry_count() const {
  std::shared_lock<std::shared_mutex> lock(mu_);
  return table_.size();
}

InternalEntry MemTable::Iterator::entry() const {
  InternalEntry e;
  e.key = it_->first.first;
  e.seq = it_->first.second;
  e.kind = it_->second.kind;
  e.payload = it_->second.payload;
  e.inline_value = it_->second.inline_value;
  e.pointer = it_->second.pointer;
  return e;
}

}  // namespace bvlsm
