#ifndef BVLSM_WAL_H
#define BVLSM_WAL_H

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/metrics.h"
#include "bvlsm/status.h"

namespace bvlsm {

// Record layout, back-to-back with no padding:
//   crc (4 LE, over type byte + payload) | length (4 LE) | type (1) | payload
constexpr size_t kWalHeaderSize = 9;
constexpr uint8_t kWalRecordFull = 1;

struct WalReplaySummary {
  uint64_t records_ok = 0;
  bool truncated = false;
};

// Wraps payload in the crc+length+type envelope. The manifest uses the same
// record discipline.
void EncodeWalRecord(std::string* dst, std::string_view payload);

// Appender for one log segment. The engine's commit path is the only
// appender; a background thread drains the async tail buffer.
class WalWriter {
 public:
  static Status Open(Env* env, const std::string& dir, uint64_t segment_id,
                     int async_flush_interval_ms, MetricsRegistry* metrics,
                     std::unique_ptr<WalWriter>* out);
  ~WalWriter();

  // Sync: record written and device-synchronized before return.
  // Async: record buffered; drained at least every flush interval or when
  //        the buffer exceeds 1 MiB.
  // Disabled: no-op, nothing counted.
  Status Append(std::string_view entry_payload, WalMode mode);

  // Runs before every drain batch hits the file; the engine uses it to sync
  // BValue lanes so a replayed pointer can never dangle.
  void SetPreDrainHook(std::function<Status()> hook);

  // Drains and syncs the buffer now.
  Status Drain();

  // Drains + syncs + closes the current segment, then switches appends to a
  // fresh one.
  Status Rotate(uint64_t new_segment_id);

  Status Close();

  uint64_t segment_id() const { return segment_id_; }

  static std::string SegmentFileName(const std::string& dir, uint64_t id);
  // Parses "<id:020d>.log"; returns false for other names.
  static bool ParseSegmentFileName(std::string_view name, uint64_t* id);

 private:
  WalWriter(Env* env, std::string dir, int interval_ms,
            MetricsRegistry* metrics);

  Status DrainBufferLocked();
  void DrainThread();

  Env* const env_;
  const std::string dir_;
  const int interval_ms_;
  MetricsRegistry* const metrics_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::unique_ptr<WritableFile> file_;
  uint64_t segment_id_ = 0;
  std::string buffer_;
  std::function<Status()> pre_drain_hook_;
  Status sticky_error_;
  bool closed_ = false;
  bool shutdown_ = false;
  std::thread drain_thread_;

  static constexpr size_t kAsyncBufferLimit = 1 << 20;
};

// Invokes the visitor once per crc-valid record in file order; stops at the
// first incomplete header or crc failure and reports truncated=true. A
// visitor error aborts the replay and propagates.
Status ReplayWalFile(Env* env, const std::string& path,
                     const std::function<Status(std::string_view)>& visitor,
                     WalReplaySummary* summary);

}  // namespace bvlsm

#endif  // BVLSM_WAL_H
