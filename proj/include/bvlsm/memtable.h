#ifndef BVLSM_MEMTABLE_H
#define BVLSM_MEMTABLE_H

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "bvlsm/status.h"
#include "bvlsm/types.h"

namespace bvlsm {

// Ordered in-memory write buffer. Iteration yields keys ascending and, for
// equal keys, newest sequence first. Single writer, concurrent readers;
// once sealed the table is immutable and lock-free to share.
class MemTable {
 public:
  MemTable() = default;
  MemTable(const MemTable&) = delete;
  MemTable& operator=(const MemTable&) = delete;

  // Size accounting: key bytes + payload bytes (inline length, 16 for a
  // pointer, 0 for a tombstone) + 32 fixed overhead per entry.
  Status Insert(const InternalEntry& entry);

  // Newest entry with seq <= at_seq; tombstones are returned, not hidden.
  std::optional<EntryValue> Get(std::string_view key,
                                SequenceNumber at_seq) const;

  void Seal();
  bool immutable() const { return immutable_.load(std::memory_order_acquire); }

  size_t ApproximateSize() const {
    return size_.load(std::memory_order_relaxed);
  }
  size_t entry_count() const;
  bool empty() const { return entry_count() == 0; }
  SequenceNumber max_seq() const {
    return max_seq_.load(std::memory_order_relaxed);
  }

  // WAL segments with id < this can be retired once the table is flushed.
  void set_retire_wal_upto(uint64_t id) { retire_wal_upto_ = id; }
  uint64_t retire_wal_upto() const { return retire_wal_upto_; }

  // Sorted snapshot iteration; the table must be sealed first.
  class Iterator {
   public:
    explicit Iterator(const MemTable* mt) : mt_(mt), it_(mt->table_.begin()) {}
    bool Valid() const { return it_ != mt_->table_.end(); }
    void Next() { ++it_; }
    InternalEntry entry() const;

   private:
    const MemTable* mt_;
    std::map<std::pair<std::string, SequenceNumber>, EntryValue,
             bool (*)(const std::pair<std::string, SequenceNumber>&,
                      const std::pair<std::string, SequenceNumber>&)>::
        const_iterator it_;
  };

  Iterator NewIterator() const { return Iterator(this); }

 private:
  friend class Iterator;

  using MapKey = std::pair<std::string, SequenceNumber>;

  static bool KeyLess(const MapKey& a, const MapKey& b) {
    return EntryOrderLess(a.first, a.second, b.first, b.second);
  }

  mutable std::shared_mutex mu_;
  std::map<MapKey, EntryValue, bool (*)(const MapKey&, const MapKey&)> table_{
      &MemTable::KeyLess};
  std::atomic<size_t> size_{0};
  std::atomic<SequenceNumber> max_seq_{0};
  std::atomic<bool> immutable_{false};
  uint64_t retire_wal_upto_ = 0;
};

}  // namespace bvlsm

#endif  // BVLSM_MEMTABLE_H
