#include "bvlsm/wal.h"

#include <cinttypes>
#include <cstdio>

#include "bvlsm/coding.h"
#include "bvlsm/crc32c.h"

namespace bvlsm {

std::string WalWriter::SegmentFileName(const std::string& dir, uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%020" PRIu64 ".log", id);
  return dir + "/" + buf;
}

bool WalWriter::ParseSegmentFileName(std::string_view name, uint64_t* id) {
  if (name.size() != 24 || name.substr(20) != ".log") return false;
  uint64_t v = 0;
  for (char c : name.substr(0, 20)) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<uint64_t>(c - '0');
  }
  *id = v;
  return true;
}

WalWriter::WalWriter(Env* env, std::string dir, int interval_ms,
                     MetricsRegistry* metrics)
    : env_(env), dir_(std::move(dir)), interval_ms_(interval_ms),
      metrics_(metrics) {}

Status WalWriter::Open(Env* env, const std::string& dir, uint64_t segment_id,
                       int async_flush_interval_ms, MetricsRegistry* metrics,
                       std::unique_ptr<WalWriter>* out) {
  auto wal = std::unique_ptr<WalWriter>(
      new WalWriter(env, dir, async_flush_interval_ms, metrics));
  Status s = env->NewWritableFile(SegmentFileName(dir, segment_id),
                                  /*truncate=*/true, &wal->file_);
  if (!s.ok()) return s;
  wal->segment_id_ = segment_id;
  wal->drain_thread_ = std::thread(&WalWriter::DrainThread, wal.get());
  *out = std::move(wal);
  return Status::OK();
}

WalWriter::~WalWriter() { Close(); }

void WalWriter::SetPreDrainHook(std::function<Status()> hook) {
  std::lock_guard<std::mutex> lock(mu_);
  pre_drain_hook_ = std::move(hook);
}

void EncodeWalRecord(std::string* dst, std::string_view payload) {
  char type = static_cast<char>(kWalRecordFull);
  uint32_t crc = crc32c::Extend(0, &type, 1);
  crc = crc32c::Extend(crc, payload.data(), payload.size());
  PutFixed32(dst, crc);
  PutFixed32(dst, static_cast<uint32_t>(payload.size()));
  dst->push_back(type);
  dst->append(payload);
}

Status WalWriter::Append(std::string_view entry_payload, WalMode mode) {
  if (mode == WalMode::kDisabled) return Status::OK();

  std::unique_lock<std::mutex> lock(mu_);
  if (closed_) return Status::Closed("wal closed");
  if (!sticky_error_.ok()) return sticky_error_;

  std::string record;
  record.reserve(kWalHeaderSize + entry_payload.size());
  EncodeWalRecord(&record, entry_payload);

  if (mode == WalMode::kAsync) {
    buffer_.append(record);
    if (buffer_.size() > kAsyncBufferLimit) {
      return DrainBufferLocked();
    }
    return Status::OK();
  }

  // Sync: anything buffered ahead of this record must land first to keep
  // file order equal to commit order.
  Status s = DrainBufferLocked();
  if (!s.ok()) return s;
  s = file_->Append(record);
  if (s.ok()) s = file_->Sync();
  if (!s.ok()) {
    sticky_error_ = s;
    return s;
  }
  metrics_->Record(Counter::kWalBytes, record.size());
  metrics_->Record(Counter::kWalRecords, 1);
  return Status::OK();
}

Status WalWriter::DrainBufferLocked() {
  if (buffer_.empty()) return Status::OK();
  if (!sticky_error_.ok()) return sticky_error_;
  if (pre_drain_hook_) {
    Status s = pre_drain_hook_();
    if (!s.ok()) {
      sticky_error_ = s;
      return s;
    }
  }
  uint64_t records = 0;
  for (size_t pos = 0; pos + kWalHeaderSize <= buffer_.size();) {
    uint32_t len = DecodeFixed32(buffer_.data() + pos + 4);
    pos += kWalHeaderSize + len;
    records++;
  }
  Status s = file_->Append(buffer_);
  if (s.ok()) s = file_->Sync();
  if (!s.ok()) {
    sticky_error_ = s;
    return s;
  }
  metrics_->Record(Counter::kWalBytes, buffer_.size());
  metrics_->Record(Counter::kWalRecords, records);
  buffer_.clear();
  return Status::OK();
}

Status WalWriter::Drain() {
  std::lock_guard<std::mutex> lock(mu_);
  if (closed_) return Status::Closed("wal closed");
  return DrainBufferLocked();
}

Status WalWriter::Rotate(uint64_t new_segment_id) {
  std::lock_guard<std::mutex> lock(mu_);
  if (closed_) return Status::Closed("wal closed");
  Status s = DrainBufferLocked();
  if (!s.ok()) return s;
  s = file_->Sync();
  if (s.ok()) s = file_->Close();
  if (!s.ok()) {
    sticky_error_ = s;
    return s;
  }
  s = env_->NewWritableFile(SegmentFileName(dir_, new_segment_id),
                            /*truncate=*/true, &file_);
  if (!s.ok()) {
    sticky_error_ = s;
    return s;
  }
  segment_id_ = new_segment_id;
  return Status::OK();
}

Status WalWriter::Close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (closed_) return Status::OK();
    DrainBufferLocked();
    if (file_) file_->Close();
    closed_ = true;
    shutdown_ = true;
    cv_.notify_all();
  }
  if (drain_thread_.joinable()) drain_thread_.join();
  return sticky_error_;
}

void WalWriter::DrainThread() {
  std::unique_lock<std::mutex> lock(mu_);
  while (!shutdown_) {
    cv_.wait_for(lock, std::chrono::milliseconds(interval_ms_),
                 [this] { return shutdown_; });
    if (shutdown_) break;
    DrainBufferLocked();
  }
}

Status ReplayWalFile(Env* env, const std::string& path,
                     const std::function<Status(std::string_view)>& visitor,
                     WalReplaySummary* summary) {
  *summary = WalReplaySummary{};
  std::string content;
  Status s = ReadFileToString(env, path, &content);
  if (!s.ok()) return s;

  size_t pos = 0;
  while (true) {
    if (pos + kWalHeaderSize > content.size()) {
      summary->truncated = pos != content.size();
      return Status::OK();
    }
    uint32_t crc = DecodeFixed32(content.data() + pos);
    uint32_t len = DecodeFixed32(content.data() + pos + 4);
    uint8_t type = static_cast<uint8_t>(content[pos + 8]);
    if (type != kWalRecordFull ||
        pos + kWalHeaderSize + len > content.size()) {
      summary->truncated = true;
      return Status::OK();
    }
    std::string_view typed(content.data() + pos + 8, 1 + len);
    if (crc32c::Value(typed) != crc) {
      summary->truncated = true;
      return Status::OK();
    }
    std::string_view payload(content.data() + pos + kWalHeaderSize, len);
    s = visitor(payload);
    if (!s.ok()) return s;
    summary->records_ok++;
    pos += kWalHeaderSize + len;
  }
}

}  // namespace bvlsm
