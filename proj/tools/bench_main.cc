// Benchmark CLI: workload runs and lane-parallelism comparisons against a
// local store directory.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bvlsm/bench.h"
#include "bvlsm/engine.h"

namespace {

using bvlsm::Config;
using bvlsm::SeparationMode;
using bvlsm::Status;
using bvlsm::WalMode;
namespace bench = bvlsm::bench;

WalMode ParseWal(const std::string& s) {
  if (s == "async") return WalMode::kAsync;
  if (s == "off") return WalMode::kDisabled;
  return WalMode::kSync;
}

bench::Pattern ParsePattern(const std::string& s) {
  if (s == "seqwrite") return bench::Pattern::kSequentialWrite;
  if (s == "readrandom") return bench::Pattern::kReadRandom;
  if (s == "ycsb-a") return bench::Pattern::kMixedYcsbA;
  return bench::Pattern::kRandomWrite;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bvlsm benchmark harness"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "execute one workload");
  std::string pattern = "randwrite";
  std::string wal = "sync";
  std::string mode = "separated";
  std::string dist = "uniform";
  std::string dir;
  std::string out_dir;
  uint64_t value_size = 4096, key_size = 16, bytes = 0, ops = 0, preload = 0;
  uint64_t seed = 1;
  int lanes = 4, interval_ms = 100;
  uint64_t threshold = 4096, memtable_bytes = 16ull << 20;
  double duration_s = 0, rate_mbps = 0;
  run->add_option("--pattern", pattern,
                  "randwrite|seqwrite|readrandom|ycsb-a");
  run->add_option("--wal", wal, "sync|async|off");
  run->add_option("--value-size", value_size, "value bytes");
  run->add_option("--key-size", key_size, "key bytes");
  run->add_option("--bytes", bytes, "total user bytes to write");
  run->add_option("--ops", ops, "op count (alternative to --bytes)");
  run->add_option("--preload", preload, "records preloaded for read mixes");
  run->add_option("--mode", mode, "separated|inline");
  run->add_option("--lanes", lanes, "bvalue lanes");
  run->add_option("--threshold", threshold, "separation threshold bytes");
  run->add_option("--memtable-bytes", memtable_bytes, "memtable size");
  run->add_option("--dist", dist, "uniform|zipfian");
  run->add_option("--seed", seed, "rng seed");
  run->add_option("--dir", dir, "store directory")->required();
  run->add_option("--interval-ms", interval_ms, "throughput bucket width");
  run->add_option("--out", out_dir, "report directory");
  run->add_option("--duration-s", duration_s, "stop after this many seconds");
  run->add_option("--rate-mbps", rate_mbps, "pace writes to this rate");

  // --- compare-lanes ---
  auto* cmp = app.add_subcommand("compare-lanes",
                                 "append throughput per lane count");
  std::string lanes_list = "1,4";
  std::string cmp_dir;
  uint64_t cmp_value_size = 65536, cmp_bytes = 64ull << 20;
  int threads = 4;
  cmp->add_option("--value-size", cmp_value_size, "value bytes");
  cmp->add_option("--lanes", lanes_list, "comma-separated lane counts");
  cmp->add_option("--bytes", cmp_bytes, "total bytes per configuration");
  cmp->add_option("--threads", threads, "writer threads");
  cmp->add_option("--dir", cmp_dir, "working directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    bench::WorkloadSpec spec;
    spec.pattern = ParsePattern(pattern);
    spec.key_size = key_size;
    spec.value_size = value_size;
    spec.total_bytes = bytes;
    spec.op_count = ops;
    spec.preload = preload;
    spec.dist = dist == "zipfian" ? bench::KeyDist::kZipfian
                                  : bench::KeyDist::kUniform;
    spec.seed = seed;
    spec.dir = dir;
    spec.out_dir = out_dir;
    spec.max_duration_s = duration_s;
    spec.rate_limit_mbps = rate_mbps;
    spec.config.wal_mode = ParseWal(wal);
    spec.config.separation = mode == "inline" ? SeparationMode::kInline
                                              : SeparationMode::kSeparated;
    spec.config.bvalue_lanes = lanes;
    spec.config.separation_threshold = threshold;
    spec.config.memtable_size = memtable_bytes;
    spec.config.interval_bucket_ms = interval_ms;

    bench::BenchReport report;
    Status s = bench::RunWorkload(spec, &report);
    if (!s.ok()) {
      std::fprintf(stderr, "run failed: %s\n", s.ToString().c_str());
      return 1;
    }
    std::fputs(report.summary_text.c_str(), stdout);
    if (!out_dir.empty()) {
      std::printf("reports written to %s\n", out_dir.c_str());
    }
    return 0;
  }

  // compare-lanes
  std::vector<int> lane_counts;
  size_t pos = 0;
  while (pos < lanes_list.size()) {
    size_t comma = lanes_list.find(',', pos);
    std::string tok = lanes_list.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) lane_counts.push_back(std::stoi(tok));
    pos = comma == std::string::npos ? lanes_list.size() : comma + 1;
  }
  std::vector<bench::LaneResult> results;
  Status s = bench::CompareLanes(bvlsm::Env::Default(), cmp_dir,
                                 cmp_value_size, lane_counts, cmp_bytes,
                                 threads, &results);
  if (!s.ok()) {
    std::fprintf(stderr, "compare-lanes failed: %s\n", s.ToString().c_str());
    return 1;
  }
  std::fputs(bench::FormatLaneTable(results).c_str(), stdout);
  return 0;
}
