#ifndef BVLSM_METRICS_H
#define BVLSM_METRICS_H

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "bvlsm/status.h"

namespace bvlsm {

enum class Counter : int {
  kUserBytesIn = 0,
  kWalBytes,
  kWalRecords,
  kBValueBytes,
  kBValueAppends,
  kBValueReads,
  kBValueDeadBytes,
  kFlushBytes,
  kFlushCount,
  kCompactionReadBytes,
  kCompactionWriteBytes,
  kCompactionCount,
  kCacheHits,
  kCacheMisses,
  kStallMicros,
  kMemTableSeals,
  kSstBlocksRead,
  kBloomChecks,
  kBloomNegatives,
  kNumCounters,  // sentinel
};

const char* CounterName(Counter c);

// Monotone byte-level accounting plus a wall-clock interval ring for
// instantaneous/cumulative throughput reporting.
class MetricsRegistry {
 public:
  explicit MetricsRegistry(int bucket_width_ms = 10000);

  void Record(Counter c, uint64_t delta);
  // Name-based recording; unknown names are an error.
  Status Record(std::string_view name, uint64_t delta);

  uint64_t Get(Counter c) const;

  // Consistent point-in-time copy, ordered by counter name.
  std::map<std::string, uint64_t> Snapshot() const;
  // Flat "name=value" lines, one per counter, plus write_amplification.
  std::string SnapshotText() const;

  // (wal + bvalue + flush + compaction_write) / user_bytes_in; 0 when no
  // user bytes have been recorded.
  double WriteAmplification() const;

  // Throughput accounting: one completed operation carrying `bytes`.
  void RecordOp(uint64_t bytes);

  struct IntervalPoint {
    double bucket_start_s = 0;
    double instant_mb_s = 0;
    double cumavg_mb_s = 0;
    double ops_s = 0;
    uint64_t bytes = 0;
    uint64_t ops = 0;
  };
  // One point per bucket from the first recorded op through now; empty
  // buckets are present with zeros.
  std::vector<IntervalPoint> IntervalSeries() const;
  // CSV: bucket_start_s,instant_mb_s,cumavg_mb_s,ops_s
  std::string IntervalCsv() const;

  int bucket_width_ms() const { return bucket_width_ms_; }

 private:
  struct Bucket {
    uint64_t bytes = 0;
    uint64_t ops = 0;
  };

  std::atomic<uint64_t> counters_[static_cast<int>(Counter::kNumCounters)];

  const int bucket_width_ms_;
  mutable std::mutex interval_mu_;
  std::chrono::steady_clock::time_point series_start_{};
  bool series_started_ = false;
  std::vector<Bucket> buckets_;
};

}  // namespace bvlsm

#endif  // BVLSM_METRICS_H
