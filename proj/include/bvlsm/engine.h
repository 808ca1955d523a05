#ifndef BVLSM_ENGINE_H
#define BVLSM_ENGINE_H

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>

#include "bvlsm/bvcache.h"
#include "bvlsm/bvstore.h"
#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/memtable.h"
#include "bvlsm/metrics.h"
#include "bvlsm/sstable.h"
#include "bvlsm/status.h"
#include "bvlsm/version.h"
#include "bvlsm/wal.h"

namespace bvlsm {

struct WriteOptions {
  // Per-write WAL mode; absent means the engine config applies.
  std::optional<WalMode> wal_mode;
};

// The full write/read path: separation decision, ordered durability (BValue
// record before WAL record), MemTable lifecycle, flush, compaction, pointer
// resolution through the cache, and recovery.
//
// Directory layout: wal/, bvalue/, sst/, MANIFEST-*, CURRENT.
class Engine {
 public:
  static Status Open(const std::string& dir, const Config& config,
                     std::unique_ptr<Engine>* out);
  ~Engine();

  Status Put(const WriteOptions& opts, std::string_view key,
             std::string_view value);
  Status Delete(const WriteOptions& opts, std::string_view key);

  // NotFound for absent or deleted keys.
  Status Get(std::string_view key, std::string* value);

  // Seals the current MemTable (if non-empty) and waits until the immutable
  // queue is fully flushed.
  Status Flush();

  // Runs one compaction round synchronously if any level needs it.
  Status CompactOnce(bool* ran = nullptr);
  // Repeats until no level needs compaction.
  Status CompactAll();

  // Drains all pending BValue lane buffers.
  Status SyncBValues();

  Status Close();

  const Config& config() const { return config_; }
  MetricsRegistry* metrics() { return &metrics_; }
  std::string StatsText() const { return metrics_.SnapshotText(); }
  SequenceNumber last_sequence() const {
    return last_seq_.load(std::memory_order_acquire);
  }

  BValueStore* bvstore() { return bvstore_.get(); }
  BVCache* cache() { return cache_.get(); }
  VersionSet* versions() { return versions_.get(); }

 private:
  Engine(std::string dir, const Config& config, Env* env);

  Status Recover();
  Status ReplaySegment(const std::string& path, bool last_segment);
  Status WriteImpl(const WriteOptions& opts, std::string_view key,
                   std::string_view value, EntryKind kind);
  Status SealMemTableLocked(std::unique_lock<std::mutex>& state_lock);
  Status SearchEntry(std::string_view key, SequenceNumber at_seq,
                     std::optional<EntryValue>* result);
  Status ResolveValue(std::string_view key, const EntryValue& ev,
                      std::string* value);
  Status FlushOneTable(const std::shared_ptr<MemTable>& mt,
                       bool advance_log_number);
  Status DoCompactOnce(bool* ran);
  void RemoveObsoleteFiles();
  void FlushThread();
  void CompactThread();
  uint64_t AllocateOutputFile();

  const std::string dir_;
  const Config config_;
  Env* const env_;
  MetricsRegistry metrics_;

  std::unique_ptr<VersionSet> versions_;
  std::unique_ptr<TableCache> table_cache_;
  std::unique_ptr<BValueStore> bvstore_;
  std::unique_ptr<BVCache> cache_;
  std::unique_ptr<WalWriter> wal_;

  std::mutex commit_mu_;  // single commit order for writers

  std::mutex state_mu_;
  std::condition_variable flush_cv_;    // imms_ became non-empty
  std::condition_variable flushed_cv_;  // imms_ shrank (stall release)
  std::condition_variable compact_cv_;
  std::shared_ptr<MemTable> mt_;
  std::deque<std::shared_ptr<MemTable>> imms_;  // oldest first
  std::set<uint64_t> pending_outputs_;
  Status bg_error_;
  bool shutdown_ = false;
  bool compact_wakeup_ = false;

  std::atomic<SequenceNumber> last_seq_{0};
  std::atomic<bool> closed_{false};

  std::mutex compact_run_mu_;  // one compaction at a time

  std::thread flush_thread_;
  std::thread compact_thread_;
};

}  // namespace bvlsm

#endif  // BVLSM_ENGINE_H
