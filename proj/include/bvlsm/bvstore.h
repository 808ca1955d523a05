#ifndef BVLSM_BVSTORE_H
#define BVLSM_BVSTORE_H

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/metrics.h"
#include "bvlsm/status.h"
#include "bvlsm/types.h"

namespace bvlsm {

// On-disk record envelope:
//   magic (4 LE) | crc (4 LE, over key_len..value) | key_len varint | key
//   | value_len varint | value
constexpr uint32_t kBValueMagic = 0x42564C31;  // "BVL1"

using DurableCallback = std::function<void(const Status&)>;

// Append-only big-value store. Each lane owns its current file exclusively
// and drains its pending buffer on a dedicated thread, so appends can
// proceed in parallel across lanes. Files are never deleted or overwritten.
class BValueStore {
 public:
  static Status Open(Env* env, const std::string& dir, const Config& config,
                     MetricsRegistry* metrics,
                     std::unique_ptr<BValueStore>* out);
  ~BValueStore();

  // durable=true: device-synchronized before return.
  // durable=false: enqueued on the lane's pending buffer; on_durable (if any)
  // fires after the background drain has written and synced the record.
  // Either way *voff identifies the record and can be read back immediately.
  Status Append(std::string_view key, std::string_view value, bool durable,
                ValueOffset* voff, DurableCallback on_durable = {});

  // Exact value bytes at voff, serving pending (not yet drained) records
  // from the buffer. Verifies magic and crc for on-disk reads.
  Status Read(const ValueOffset& voff, std::string* value);

  // Magic + crc + length check without returning the payload.
  Status ValidateRecord(const ValueOffset& voff);

  // Drains every lane and resolves all outstanding completion handles.
  Status SyncAll();

  Status Close();

  int lanes() const { return static_cast<int>(lanes_.size()); }
  uint64_t LaneRecordCount(int lane) const;

  static std::string FileName(const std::string& dir, uint32_t file_id);
  static bool ParseFileName(std::string_view name, uint32_t* file_id);

  // Bytes one record occupies on disk.
  static uint64_t RecordSize(size_t key_len, size_t value_len);

  // Offline audit: yields (key, ValueOffset) for every valid record in
  // offset order, stopping at the first torn record.
  static Status ScanFile(Env* env, const std::string& path, uint32_t file_id,
                         std::vector<std::pair<std::string, ValueOffset>>* out,
                         bool* truncated);

 private:
  struct Lane;
  struct PendingWrite;

  BValueStore(Env* env, std::string dir, const Config& config,
              MetricsRegistry* metrics);

  Status RecoverLane(Lane* lane, uint32_t file_id);
  Status RotateLaneLocked(Lane* lane);
  Status PersistMeta();
  void DrainLoop(Lane* lane);
  Status ReadDurable(const ValueOffset& voff, std::string* key,
                     std::string* value);
  Status GetReadHandle(uint32_t file_id,
                       std::shared_ptr<RandomAccessFile>* out);

  Env* const env_;
  const std::string dir_;
  const uint64_t rotate_size_;
  const size_t max_value_size_;
  const LaneDispatch dispatch_;
  MetricsRegistry* const metrics_;

  std::vector<std::unique_ptr<Lane>> lanes_;
  std::atomic<uint64_t> dispatch_counter_{0};
  std::atomic<bool> closed_{false};

  mutable std::mutex store_mu_;  // file id allocation + registries
  uint32_t next_file_id_ = 0;
  std::vector<std::pair<uint32_t, int>> file_lane_;  // current file per lane
  std::map<uint32_t, std::shared_ptr<RandomAccessFile>> read_handles_;

  std::mutex meta_mu_;
};

}  // namespace bvlsm

#endif  // BVLSM_BVSTORE_H
