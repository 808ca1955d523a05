#include "bvlsm/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "bvlsm/bvstore.h"
#include "bvlsm/engine.h"
#include "bvlsm/hash.h"

namespace bvlsm {
namespace bench {

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::string FormatKey(size_t key_size, uint64_t index) {
  char buf[32];
  int n = std::snprintf(buf, sizeof(buf), "%020llu",
                        static_cast<unsigned long long>(index));
  std::string key(buf, static_cast<size_t>(n));
  if (key.size() > key_size) return key.substr(key.size() - key_size);
  return std::string(key_size - key.size(), 'k') + key;
}

void FillValue(std::mt19937_64& rng, size_t n, std::string* out) {
  out->resize(n);
  size_t i = 0;
  while (i + 8 <= n) {
    uint64_t v = rng();
    std::memcpy(out->data() + i, &v, 8);
    i += 8;
  }
  if (i < n) {
    uint64_t v = rng();
    std::memcpy(out->data() + i, &v, n - i);
  }
}

// Standard YCSB-style Zipfian item generator over [0, n).
class ZipfianGenerator {
 public:
  ZipfianGenerator(uint64_t n, double theta) : n_(n), theta_(theta) {
    for (uint64_t i = 1; i <= n_; i++) {
      zeta_n_ += 1.0 / std::pow(static_cast<double>(i), theta_);
    }
    zeta2_ = 1.0 + 1.0 / std::pow(2.0, theta_);
    alpha_ = 1.0 / (1.0 - theta_);
    eta_ = (1.0 - std::pow(2.0 / static_cast<double>(n_), 1.0 - theta_)) /
           (1.0 - zeta2_ / zeta_n_);
  }

  uint64_t Next(std::mt19937_64& rng) {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double uz = u * zeta_n_;
    if (uz < 1.0) return 0;
    if (uz < zeta2_) return 1;
    return static_cast<uint64_t>(
        static_cast<double>(n_) *
        std::pow(eta_ * u - eta_ + 1.0, alpha_));
  }

 private:
  uint64_t n_;
  double theta_;
  double zeta_n_ = 0;
  double zeta2_ = 0;
  double alpha_ = 0;
  double eta_ = 0;
};

uint64_t MixDigest(uint64_t digest, std::string_view data) {
  return Hash64(data, digest ^ 0x9E3779B97F4A7C15ull);
}

double Percentile(std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0;
  size_t idx = static_cast<size_t>(p * static_cast<double>(sorted.size() - 1));
  return sorted[idx];
}

Status WriteReportFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return Status::IOError("cannot write " + path);
  out << content;
  return out.good() ? Status::OK() : Status::IOError("short write " + path);
}

}  // namespace

Status RunWorkload(const WorkloadSpec& spec, BenchReport* report) {
  *report = BenchReport{};
  if (spec.dir.empty()) return Status::InvalidArgument("dir required");
  if (spec.key_size < 1 || spec.key_size > 32) {
    return Status::InvalidArgument("key_size must be 1..32");
  }
  if (spec.total_bytes == 0 && spec.op_count == 0) {
    return Status::InvalidArgument("one of total_bytes/op_count required");
  }
  if (spec.dist == KeyDist::kZipfian && spec.pattern != Pattern::kMixedYcsbA &&
      spec.pattern != Pattern::kReadRandom) {
    return Status::InvalidArgument("zipfian applies to readrandom/ycsb-a");
  }

  const uint64_t bytes_per_op = spec.key_size + spec.value_size;
  const uint64_t target_ops = spec.op_count != 0
                                  ? spec.op_count
                                  : std::max<uint64_t>(1, spec.total_bytes /
                                                              bytes_per_op);

  std::unique_ptr<Engine> engine;
  Status s = Engine::Open(spec.dir, spec.config, &engine);
  if (!s.ok()) return s;

  std::mt19937_64 rng(spec.seed);
  std::mt19937_64 value_rng(spec.seed ^ 0xDEADBEEFCAFEF00Dull);
  WriteOptions wopts;

  const bool needs_preload = spec.pattern == Pattern::kReadRandom ||
                             spec.pattern == Pattern::kMixedYcsbA;
  const uint64_t preload = needs_preload
                               ? (spec.preload != 0 ? spec.preload
                                                    : std::max<uint64_t>(
                                                          1, target_ops / 2))
                               : 0;
  std::string value;
  for (uint64_t i = 0; i < preload; i++) {
    FillValue(value_rng, spec.value_size, &value);
    s = engine->Put(wopts, FormatKey(spec.key_size, i), value);
    if (!s.ok()) {
      engine->Close();
      return s;
    }
  }

  std::unique_ptr<ZipfianGenerator> zipf;
  if (spec.dist == KeyDist::kZipfian) {
    zipf = std::make_unique<ZipfianGenerator>(std::max<uint64_t>(1, preload),
                                              spec.zipf_theta);
  }

  const uint64_t keyspace = std::max<uint64_t>(1, 2 * target_ops);
  std::vector<double> latencies;
  latencies.reserve(std::min<uint64_t>(target_ops, 2'000'000));
  uint64_t digest = 0x811C9DC5;
  std::vector<uint64_t> touched;  // indices written (content digest)
  touched.reserve(std::min<uint64_t>(target_ops + preload, 4'000'000));
  for (uint64_t i = 0; i < preload; i++) touched.push_back(i);

  const auto start = Clock::now();
  uint64_t user_bytes = 0;
  uint64_t ops_done = 0;
  std::string key;

  for (uint64_t i = 0; i < target_ops; i++) {
    if (spec.max_duration_s > 0 &&
        Seconds(start, Clock::now()) >= spec.max_duration_s) {
      break;
    }
    if (spec.rate_limit_mbps > 0) {
      const double budget_s = static_cast<double>(user_bytes) /
                              (spec.rate_limit_mbps * 1024.0 * 1024.0);
      const double elapsed = Seconds(start, Clock::now());
      if (budget_s > elapsed) {
        std::this_thread::sleep_for(
            std::chrono::duration<double>(budget_s - elapsed));
      }
    }

    bool is_read = false;
    uint64_t idx = 0;
    switch (spec.pattern) {
      case Pattern::kRandomWrite:
        idx = rng() % keyspace;
        break;
      case Pattern::kSequentialWrite:
        idx = i;
        break;
      case Pattern::kReadRandom:
        is_read = true;
        idx = zipf ? zipf->Next(rng) : rng() % std::max<uint64_t>(1, preload);
        break;
      case Pattern::kMixedYcsbA:
        is_read = (rng() & 1) != 0;
        idx = zipf ? zipf->Next(rng) : rng() % std::max<uint64_t>(1, preload);
        break;
    }
    key = FormatKey(spec.key_size, idx);
    digest = MixDigest(digest, is_read ? "R" : "W");
    digest = MixDigest(digest, key);

    const auto op_start = Clock::now();
    if (is_read) {
      s = engine->Get(key, &value);
      if (!s.ok() && !s.IsNotFound()) break;
    } else {
      FillValue(value_rng, spec.value_size, &value);
      digest = MixDigest(digest, value);
      s = engine->Put(wopts, key, value);
      if (!s.ok()) break;
      user_bytes += bytes_per_op;
      touched.push_back(idx);
    }
    latencies.push_back(
        Seconds(op_start, Clock::now()) * 1e6);
    ops_done++;
  }
  const double elapsed = Seconds(start, Clock::now());
  if (!s.ok() && !s.IsNotFound()) {
    engine->Close();
    return Status::IOError("workload aborted at op " +
                           std::to_string(ops_done) + ": " + s.ToString());
  }

  // Content digest over the final visible state of every touched key.
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  uint64_t content = 0xCBF29CE484222325ull;
  for (uint64_t idx : touched) {
    key = FormatKey(spec.key_size, idx);
    Status gs = engine->Get(key, &value);
    if (gs.ok()) {
      content = MixDigest(content, key);
      content = MixDigest(content, value);
    } else if (!gs.IsNotFound()) {
      engine->Close();
      return gs;
    }
  }

  report->ops = ops_done;
  report->elapsed_s = elapsed;
  report->ops_per_s = elapsed > 0 ? static_cast<double>(ops_done) / elapsed : 0;
  report->mb_per_s =
      elapsed > 0
          ? static_cast<double>(user_bytes) / (1024.0 * 1024.0) / elapsed
          : 0;
  std::sort(latencies.begin(), latencies.end());
  report->p50_us = Percentile(latencies, 0.50);
  report->p95_us = Percentile(latencies, 0.95);
  report->p99_us = Percentile(latencies, 0.99);
  report->op_stream_digest = digest;
  report->content_digest = content;
  report->counters = engine->metrics()->Snapshot();
  report->intervals_csv = engine->metrics()->IntervalCsv();
  report->metrics_text = engine->StatsText();

  char line[256];
  std::string summary;
  std::snprintf(line, sizeof(line), "ops %llu\n",
                static_cast<unsigned long long>(report->ops));
  summary += line;
  std::snprintf(line, sizeof(line), "elapsed_s %.3f\n", report->elapsed_s);
  summary += line;
  std::snprintf(line, sizeof(line), "ops_per_s %.1f\n", report->ops_per_s);
  summary += line;
  std::snprintf(line, sizeof(line), "mb_per_s %.2f\n", report->mb_per_s);
  summary += line;
  std::snprintf(line, sizeof(line), "p50_us %.1f\np95_us %.1f\np99_us %.1f\n",
                report->p50_us, report->p95_us, report->p99_us);
  summary += line;
  std::snprintf(line, sizeof(line), "op_stream_digest %016llx\n",
                static_cast<unsigned long long>(report->op_stream_digest));
  summary += line;
  std::snprintf(line, sizeof(line), "content_digest %016llx\n",
                static_cast<unsigned long long>(report->content_digest));
  summary += line;
  report->summary_text = summary;

  s = engine->Close();
  if (!s.ok()) return s;

  if (!spec.out_dir.empty()) {
    Env* host = Env::Default();
    Status ds = host->CreateDirIfMissing(spec.out_dir);
    if (!ds.ok()) return ds;
    ds = WriteReportFile(spec.out_dir + "/summary.txt", report->summary_text);
    if (!ds.ok()) return ds;
    ds = WriteReportFile(spec.out_dir + "/intervals.csv",
                         report->intervals_csv);
    if (!ds.ok()) return ds;
    ds = WriteReportFile(spec.out_dir + "/metrics.txt", report->metrics_text);
    if (!ds.ok()) return ds;
  }
  return Status::OK();
}

Status CompareLanes(Env* env, const std::string& dir_base, size_t value_size,
                    const std::vector<int>& lane_counts, uint64_t total_bytes,
                    int threads, std::vector<LaneResult>* results) {
  results->clear();
  if (lane_counts.empty()) {
    return Status::InvalidArgument("lanes list must be non-empty");
  }
  if (value_size == 0 || total_bytes == 0 || threads < 1) {
    return Status::InvalidArgument("value_size, bytes, threads must be > 0");
  }

  for (int lanes : lane_counts) {
    if (lanes < 1) return Status::InvalidArgument("lane count must be >= 1");
    Config config;
    config.bvalue_lanes = lanes;
    config.env = env;
    const std::string dir = dir_base + "/lanes" + std::to_string(lanes);
    Status s = env->CreateDirIfMissing(dir);
    if (!s.ok()) return s;

    MetricsRegistry metrics;
    std::unique_ptr<BValueStore> store;
    s = BValueStore::Open(env, dir, config, &metrics, &store);
    if (!s.ok()) return s;

    const uint64_t total_records =
        std::max<uint64_t>(1, total_bytes / value_size);
    std::atomic<uint64_t> next_record{0};
    std::vector<Status> thread_status(static_cast<size_t>(threads));

    const auto start = Clock::now();
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; t++) {
      workers.emplace_back([&, t] {
        std::mt19937_64 rng(0x5EED + static_cast<uint64_t>(t));
        std::string value;
        FillValue(rng, value_size, &value);
        while (true) {
          const uint64_t i = next_record.fetch_add(1);
          if (i >= total_records) return;
          char key[32];
          std::snprintf(key, sizeof(key), "bv%012llu",
                        static_cast<unsigned long long>(i));
          ValueOffset voff;
          Status as = store->Append(key, value, /*durable=*/true, &voff);
          if (!as.ok()) {
            thread_status[static_cast<size_t>(t)] = as;
            return;
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    Status ss = store->SyncAll();
    const double elapsed = Seconds(start, Clock::now());

    for (const auto& ts : thread_status) {
      if (!ts.ok()) return ts;
    }
    if (!ss.ok()) return ss;

    LaneResult r;
    r.lanes = lanes;
    r.elapsed_s = elapsed;
    r.mb_per_s = elapsed > 0
                     ? static_cast<double>(total_records * value_size) /
                           (1024.0 * 1024.0) / elapsed
                     : 0;
    for (int l = 0; l < lanes; l++) {
      r.per_lane_records.push_back(store->LaneRecordCount(l));
    }
    results->push_back(std::move(r));
    s = store->Close();
    if (!s.ok()) return s;
  }
  return Status::OK();
}

std::string FormatLaneTable(const std::vector<LaneResult>& results) {
  std::string out = "lanes  MB/s      records_per_lane\n";
  char line[256];
  for (const auto& r : results) {
    std::string counts;
    for (uint64_t c : r.per_lane_records) {
      if (!counts.empty()) counts += ",";
      counts += std::to_string(c);
    }
    std::snprintf(line, sizeof(line), "%-6d %-9.2f %s\n", r.lanes, r.mb_per_s,
                  counts.c_str());
    out += line;
  }
  if (results.size() >= 2 && results.front().mb_per_s > 0) {
    std::snprintf(line, sizeof(line),
                  "throughput ratio (%d lanes / %d lanes): %.2f\n",
                  results.back().lanes, results.front().lanes,
                  results.back().mb_per_s / results.front().mb_per_s);
    out += line;
  }
  return out;
}

}  // namespace bench
}  // namespace bvlsm
