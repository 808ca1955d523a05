#include "bvlsm/metrics.h"

#include <cstdio>

namespace bvlsm {

namespace {

constexpr const char* kCounterNames[] = {
    "user_bytes_in",
    "wal_bytes",
    "wal_records",
    "bvalue_bytes",
    "bvalue_appends",
    "bvalue_reads",
    "bvalue_dead_bytes",
    "flush_bytes",
    "flush_count",
    "compaction_read_bytes",
    "compaction_write_bytes",
    "compaction_count",
    "cache_hits",
    "cache_misses",
    "stall_micros",
    "memtable_seals",
    "sst_blocks_read",
    "bloom_checks",
    "bloom_negatives",
};

static_assert(sizeof(kCounterNames) / sizeof(kCounterNames[0]) ==
              static_cast<size_t>(Counter::kNumCounters));

}  // namespace

const char* CounterName(Counter c) {
  return kCounterNames[static_cast<int>(c)];
}

MetricsRegistry::MetricsRegistry(int bucket_width_ms)
    : bucket_width_ms_(bucket_width_ms) {
  for (auto& c : counters_) c.store(0, std::memory_order_relaxed);
}

void MetricsRegistry::Record(Counter c, uint64_t delta) {
  counters_[static_cast<int>(c)].fetch_add(delta, std::memory_order_relaxed);
}

Status MetricsRegistry::Record(std::string_view name, uint64_t delta) {
  for (int i = 0; i < static_cast<int>(Counter::kNumCounters); i++) {
    if (name == kCounterNames[i]) {
      Record(static_cast<Counter>(i), delta);
      return Status::OK();
    }
  }
  return Status::InvalidArgument("unknown counter: " + std::string(name));
}

uint64_t MetricsRegistry::Get(Counter c) const {
  return counters_[static_cast<int>(c)].load(std::memory_order_relaxed);
}

std::map<std::string, uint64_t> MetricsRegistry::Snapshot() const {
  std::map<std::string, uint64_t> out;
  for (int i = 0; i < static_cast<int>(Counter::kNumCounters); i++) {
    out[kCounterNames[i]] = counters_[i].load(std::memory_order_relaxed);
  }
  return out;
}

double MetricsRegistry::WriteAmplification() const {
  const uint64_t user = Get(Counter::kUserBytesIn);
  if (user == 0) return 0.0;
  const uint64_t written =
      Get(Counter::kWalBytes) + Get(Counter::kBValueBytes) +
      Get(Counter::kFlushBytes) + Get(Counter::kCompactionWriteBytes);
  return static_cast<double>(written) / static_cast<double>(user);
}

std::string MetricsRegistry::SnapshotText() const {
  std::string out;
  char line[128];
  for (const auto& [name, value] : Snapshot()) {
    std::snprintf(line, sizeof(line), "%s=%llu\n", name.c_str(),
                  static_cast<unsigned long long>(value));
    out += line;
  }
  std::snprintf(line, sizeof(line), "write_amplification=%.4f\n",
                WriteAmplification());
  out += line;
  return out;
}

void MetricsRegistry::RecordOp(uint64_t bytes) {
  std::lock_guard<std::mutex> lock(interval_mu_);
  auto now = std::chrono::steady_clock::now();
  if (!series_started_) {
    series_started_ = true;
    series_start_ = now;
  }
  auto elapsed_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now - series_start_)
          .count();
  size_t idx = static_cast<size_t>(elapsed_ms / bucket_width_ms_);
  if (idx >= buckets_.size()) buckets_.resize(idx + 1);
  buckets_[idx].bytes += bytes;
  buckets_[idx].ops += 1;
}

std::vector<MetricsRegistry::IntervalPoint> MetricsRegistry::IntervalSeries()
    const {
  std::lock_guard<std::mutex> lock(interval_mu_);
  std::vector<IntervalPoint> out;
  if (!series_started_) return out;
  const double width_s = bucket_width_ms_ / 1000.0;
  uint64_t cum_bytes = 0;
  for (size_t i = 0; i < buckets_.size(); i++) {
    cum_bytes += buckets_[i].bytes;
    IntervalPoint p;
    p.bucket_start_s = static_cast<double>(i) * width_s;
    p.bytes = buckets_[i].bytes;
    p.ops = buckets_[i].ops;
    p.instant_mb_s =
        static_cast<double>(buckets_[i].bytes) / (1024.0 * 1024.0) / width_s;
    double elapsed_s = static_cast<double>(i + 1) * width_s;
    p.cumavg_mb_s =
        static_cast<double>(cum_bytes) / (1024.0 * 1024.0) / elapsed_s;
    p.ops_s = static_cast<double>(buckets_[i].ops) / width_s;
    out.push_back(p);
  }
  return out;
}

std::string MetricsRegistry::IntervalCsv() const {
  std::string out = "bucket_start_s,instant_mb_s,cumavg_mb_s,ops_s\n";
  char line[160];
  for (const auto& p : IntervalSeries()) {
    std::snprintf(line, sizeof(line), "%.3f,%.3f,%.3f,%.1f\n", p.bucket_start_s,
                  p.instant_mb_s, p.cumavg_mb_s, p.ops_s);
    out += line;
  }
  return out;
}

}  // namespace bvlsm
