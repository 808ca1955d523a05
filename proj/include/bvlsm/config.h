#ifndef BVLSM_CONFIG_H
#define BVLSM_CONFIG_H

#include <cstddef>
#include <cstdint>

#include "bvlsm/status.h"

namespace bvlsm {

class Env;

enum class WalMode { kSync, kAsync, kDisabled };

// kInline keeps every value in the LSM pipeline; it exists as a baseline for
// the benchmark comparisons.
enum class SeparationMode { kSeparated, kInline };

enum class CachePolicy { kRecency, kFrequency };

enum class LaneDispatch { kRoundRobin, kHash };

struct Config {
  // Values strictly larger than this bypass the WAL/MemTable/SSTable path.
  size_t separation_threshold = 4096;
  size_t max_key_size = 4096;
  size_t max_value_size = 64ull << 20;

  size_t memtable_size = 128ull << 20;
  int max_immutable_memtables = 2;

  int l0_compaction_trigger = 4;
  int level_size_ratio = 10;
  int num_levels = 7;
  uint64_t sst_file_size = 8ull << 20;  // compaction output split target
  size_t sst_block_size = 4096;
  int bloom_bits_per_key = 10;

  int bvalue_lanes = 4;
  uint64_t bvalue_file_rotate_size = 256ull << 20;
  LaneDispatch bvalue_dispatch = LaneDispatch::kRoundRobin;

  size_t bvcache_capacity = 0;  // 0 means "same as memtable_size"
  CachePolicy cache_policy = CachePolicy::kRecency;

  WalMode wal_mode = WalMode::kSync;
  int async_flush_interval_ms = 50;

  SeparationMode separation = SeparationMode::kSeparated;

  int interval_bucket_ms = 10000;

  Env* env = nullptr;  // nullptr selects Env::Default()

  size_t cache_capacity() const {
    return bvcache_capacity != 0 ? bvcache_capacity : memtable_size;
  }

  Status Validate() const {
    if (bvalue_lanes < 1) return Status::InvalidArgument("bvalue_lanes < 1");
    if (level_size_ratio < 2) {
      return Status::InvalidArgument("level_size_ratio < 2");
    }
    if (memtable_size == 0 || max_value_size == 0 || sst_block_size == 0 ||
        bvalue_file_rotate_size == 0 || sst_file_size == 0) {
      return Status::InvalidArgument("sizes must be > 0");
    }
    if (max_immutable_memtables < 1) {
      return Status::InvalidArgument("max_immutable_memtables < 1");
    }
    if (l0_compaction_trigger < 1) {
      return Status::InvalidArgument("l0_compaction_trigger < 1");
    }
    if (num_levels < 2) return Status::InvalidArgument("num_levels < 2");
    if (bloom_bits_per_key < 1) {
      return Status::InvalidArgument("bloom_bits_per_key < 1");
    }
    if (async_flush_interval_ms < 1) {
      return Status::InvalidArgument("async_flush_interval_ms < 1");
    }
    return Status::OK();
  }
};

}  // namespace bvlsm

#endif  // BVLSM_CONFIG_H
