#ifndef BVLSM_BVCACHE_H
#define BVLSM_BVCACHE_H

#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "bvlsm/config.h"
#include "bvlsm/metrics.h"
#include "bvlsm/status.h"
#include "bvlsm/types.h"

namespace bvlsm {

// Fixed-capacity cache of recently written big-value pointers. New writes
// enter at the head; eviction removes the least-recent or least-frequent
// entry. Entries holding resident bytes (values whose durable write is still
// pending) are pinned and never evicted.
//
// Charged size per entry: key bytes + 16 (pointer) + resident bytes + 48.
class BVCache {
 public:
  BVCache(size_t capacity_bytes, CachePolicy policy, MetricsRegistry* metrics);

  // New keys: inserted at the head with access_count 1. Existing keys:
  // updated in place, access_count incremented, moved to the head. Evicts
  // until the charge fits.
  //   TooLarge: the entry alone exceeds capacity; it is not cached.
  //   Busy: every other entry is pinned; the entry is not cached (callers
  //         sync the value store and retry without resident bytes).
  // epoch_out identifies this insertion for OnPersisted(key, epoch).
  Status Insert(std::string_view key, const ValueOffset& voff,
                std::optional<std::string> resident,
                uint64_t* epoch_out = nullptr);

  struct Hit {
    ValueOffset voff;
    std::optional<std::string> resident;
  };
  // Updates access count and timestamp on hit; counts hits/misses.
  std::optional<Hit> Get(std::string_view key);

  // Evicts one unpinned entry per the policy. Busy when all are pinned.
  Status Evict(std::string* evicted_key);

  // Releases resident bytes once the value is durable; idempotent. The
  // keyed overload releases unconditionally; the epoch overload only if the
  // entry still belongs to that insertion.
  void OnPersisted(std::string_view key);
  void OnPersisted(std::string_view key, uint64_t epoch);

  size_t charged_size() const;
  size_t entry_count() const;
  size_t capacity() const { return capacity_; }
  void Clear();

  // Index/deque cross-check for tests.
  bool CheckConsistency() const;

 private:
  struct CacheEntry {
    std::string key;
    ValueOffset voff;
    std::optional<std::string> resident;
    uint64_t access_count = 0;
    uint64_t last_access = 0;
    uint64_t epoch = 0;
  };

  static size_t Charge(const CacheEntry& e) {
    return e.key.size() + kValueOffsetEncodedSize +
           (e.resident ? e.resident->size() : 0) + 48;
  }

  // Returns deque_.end() when every entry is pinned.
  std::list<CacheEntry>::iterator PickVictimLocked();
  void EraseLocked(std::list<CacheEntry>::iterator it);

  const size_t capacity_;
  const CachePolicy policy_;
  MetricsRegistry* const metrics_;

  mutable std::mutex mu_;
  std::list<CacheEntry> deque_;  // head = most recent write
  std::unordered_map<std::string, std::list<CacheEntry>::iterator> index_;
  size_t charged_ = 0;
  uint64_t tick_ = 0;
  uint64_t next_epoch_ = 1;
};

}  // namespace bvlsm

#endif  // BVLSM_BVCACHE_H
