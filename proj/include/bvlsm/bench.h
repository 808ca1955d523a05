#ifndef BVLSM_BENCH_H
#define BVLSM_BENCH_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/status.h"

namespace bvlsm {
namespace bench {

enum class Pattern { kRandomWrite, kSequentialWrite, kReadRandom, kMixedYcsbA };
enum class KeyDist { kUniform, kZipfian };

struct WorkloadSpec {
  Pattern pattern = Pattern::kRandomWrite;
  size_t key_size = 16;
  size_t value_size = 4096;
  uint64_t total_bytes = 0;  // user bytes to write; 0 means use op_count
  uint64_t op_count = 0;
  uint64_t preload = 0;  // records loaded before ReadRandom / MixedYcsbA
  KeyDist dist = KeyDist::kUniform;
  double zipf_theta = 0.99;
  uint64_t seed = 1;
  std::string dir;
  std::string out_dir;        // report files land here when non-empty
  double max_duration_s = 0;  // stop after this long (0 = no limit)
  double rate_limit_mbps = 0;  // pace user bytes (0 = unlimited)
  Config config;  // wal mode, separation mode, lanes, threshold, sizes
};

struct BenchReport {
  uint64_t ops = 0;
  double elapsed_s = 0;
  double ops_per_s = 0;
  double mb_per_s = 0;
  double p50_us = 0;
  double p95_us = 0;
  double p99_us = 0;
  uint64_t op_stream_digest = 0;  // same seed, same spec => same digest
  uint64_t content_digest = 0;    // over final visible key/value contents
  std::map<std::string, uint64_t> counters;
  std::string intervals_csv;
  std::string metrics_text;
  std::string summary_text;
};

// Executes the workload deterministically for the given seed and fills the
// report; when out_dir is set, writes summary.txt, intervals.csv and
// metrics.txt there.
Status RunWorkload(const WorkloadSpec& spec, BenchReport* report);

struct LaneResult {
  int lanes = 0;
  double mb_per_s = 0;
  double elapsed_s = 0;
  std::vector<uint64_t> per_lane_records;
};

// Runs the same durable big-value append workload against the value store
// directly, once per lane count, with `threads` concurrent writers.
Status CompareLanes(Env* env, const std::string& dir_base, size_t value_size,
                    const std::vector<int>& lane_counts, uint64_t total_bytes,
                    int threads, std::vector<LaneResult>* results);

std::string FormatLaneTable(const std::vector<LaneResult>& results);

}  // namespace bench
}  // namespace bvlsm

#endif  // BVLSM_BENCH_H
