#include "bvlsm/bvstore.h"

#include <algorithm>
#include <cinttypes>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <set>
#include <thread>

#include "bvlsm/coding.h"
#include "bvlsm/crc32c.h"
#include "bvlsm/hash.h"

namespace bvlsm {

namespace {

constexpr uint32_t kNoFile = ~uint32_t{0};
constexpr const char* kMetaFileName = "CURRENT_LANES";

void EncodeRecord(std::string_view key, std::string_view value,
                  std::string* out, size_t* value_pos) {
  std::string body;
  body.reserve(key.size() + value.size() + 8);
  PutLengthPrefixed(&body, key);
  size_t value_at = body.size() + VarintLength(value.size());
  PutLengthPrefixed(&body, value);
  out->clear();
  out->reserve(8 + body.size());
  PutFixed32(out, kBValueMagic);
  PutFixed32(out, crc32c::Value(body));
  *value_pos = 8 + value_at;
  out->append(body);
}

}  // namespace

struct BValueStore::PendingWrite {
  uint32_t file_id = 0;
  uint64_t offset = 0;
  std::string record;
  size_t value_pos = 0;
  uint32_t value_len = 0;
  DurableCallback done;
  bool completed = false;
  Status result;
};

struct BValueStore::Lane {
  int id = 0;
  std::mutex mu;
  std::condition_variable cv;
  uint32_t file_id = kNoFile;
  uint64_t tail = 0;  // next record offset in the current file
  std::map<uint32_t, std::unique_ptr<WritableFile>> open_files;
  std::deque<std::shared_ptr<PendingWrite>> queue;
  bool draining = false;
  bool shutdown = false;
  Status sticky;
  std::atomic<uint64_t> records{0};
  std::atomic<uint32_t> meta_file_id{kNoFile};
  std::thread drain_thread;
};

std::string BValueStore::FileName(const std::string& dir, uint32_t file_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%010u.bvl", file_id);
  return dir + "/" + buf;
}

bool BValueStore::ParseFileName(std::string_view name, uint32_t* file_id) {
  if (name.size() != 14 || name.substr(10) != ".bvl") return false;
  uint64_t v = 0;
  for (char c : name.substr(0, 10)) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<uint64_t>(c - '0');
  }
  if (v > 0xFFFFFFFFull) return false;
  *file_id = static_cast<uint32_t>(v);
  return true;
}

uint64_t BValueStore::RecordSize(size_t key_len, size_t value_len) {
  return 8 + VarintLength(key_len) + key_len + VarintLength(value_len) +
         value_len;
}

BValueStore::BValueStore(Env* env, std::string dir, const Config& config,
                         MetricsRegistry* metrics)
    : env_(env), dir_(std::move(dir)),
      rotate_size_(config.bvalue_file_rotate_size),
      max_value_size_(config.max_value_size),
      dispatch_(config.bvalue_dispatch), metrics_(metrics) {}

Status BValueStore::Open(Env* env, const std::string& dir,
                         const Config& config, MetricsRegistry* metrics,
                         std::unique_ptr<BValueStore>* out) {
  auto store = std::unique_ptr<BValueStore>(
      new BValueStore(env, dir, config, metrics));
  Status s = env->CreateDirIfMissing(dir);
  if (!s.ok()) return s;

  // The highest id on disk wins over the meta file; meta can be stale after
  // a crash between rotation and its rewrite.
  std::vector<std::string> children;
  s = env->GetChildren(dir, &children);
  if (!s.ok()) return s;
  uint32_t max_id = 0;
  bool any_file = false;
  for (const auto& name : children) {
    uint32_t id;
    if (ParseFileName(name, &id)) {
      any_file = true;
      max_id = std::max(max_id, id);
    }
  }
  store->next_file_id_ = any_file ? max_id + 1 : 0;

  int lane_count = config.bvalue_lanes;
  std::vector<uint32_t> lane_files;
  const std::string meta_path = dir + "/" + kMetaFileName;
  if (env->FileExists(meta_path)) {
    std::string meta;
    s = ReadFileToString(env, meta_path, &meta);
    if (!s.ok()) return s;
    int parsed_lanes = 0;
    std::vector<long long> parsed_files;
    size_t pos = 0;
    while (pos < meta.size()) {
      size_t eol = meta.find('\n', pos);
      std::string line = meta.substr(
          pos, eol == std::string::npos ? std::string::npos : eol - pos);
      pos = eol == std::string::npos ? meta.size() : eol + 1;
      int lane_id;
      long long fid;
      if (std::sscanf(line.c_str(), "lanes %d", &parsed_lanes) == 1) continue;
      if (std::sscanf(line.c_str(), "lane %d %lld", &lane_id, &fid) == 2) {
        parsed_files.push_back(fid);
      }
    }
    if (parsed_lanes < 1 ||
        parsed_files.size() != static_cast<size_t>(parsed_lanes)) {
      return Status::Corruption("malformed " + meta_path);
    }
    lane_count = parsed_lanes;  // lane count is fixed at store creation
    lane_files.reserve(parsed_files.size());
    for (long long fid : parsed_files) {
      lane_files.push_back(fid < 0 ? kNoFile : static_cast<uint32_t>(fid));
    }
  } else {
    lane_files.assign(static_cast<size_t>(lane_count), kNoFile);
  }

  store->lanes_.reserve(static_cast<size_t>(lane_count));
  for (int i = 0; i < lane_count; i++) {
    auto lane = std::make_unique<Lane>();
    lane->id = i;
    store->lanes_.push_back(std::move(lane));
  }
  store->file_lane_.assign(static_cast<size_t>(lane_count),
                           {kNoFile, /*lane=*/0});

  for (int i = 0; i < lane_count; i++) {
    if (lane_files[static_cast<size_t>(i)] != kNoFile) {
      s = store->RecoverLane(store->lanes_[static_cast<size_t>(i)].get(),
                             lane_files[static_cast<size_t>(i)]);
      if (!s.ok()) return s;
    }
  }

  if (!env->FileExists(meta_path)) {
    s = store->PersistMeta();
    if (!s.ok()) return s;
  }

  for (auto& lane : store->lanes_) {
    lane->drain_thread =
        std::thread(&BValueStore::DrainLoop, store.get(), lane.get());
  }
  *out = std::move(store);
  return Status::OK();
}

// Scans the lane's active file, truncates any torn tail, and reopens it for
// appending. Records past the last valid one were never acknowledged as
// durable: a pointer reaches the WAL only after its record is synced.
Status BValueStore::RecoverLane(Lane* lane, uint32_t file_id) {
  const std::string path = FileName(dir_, file_id);
  uint64_t valid_len = 0;
  uint64_t record_count = 0;
  if (env_->FileExists(path)) {
    std::vector<std::pair<std::string, ValueOffset>> records;
    bool truncated = false;
    Status s = ScanFile(env_, path, file_id, &records, &truncated);
    if (!s.ok()) return s;
    record_count = records.size();
    if (!records.empty()) {
      const ValueOffset& last = records.back().second;
      valid_len = last.offset +
                  RecordSize(records.back().first.size(), last.length);
    }
    if (truncated) {
      s = env_->Truncate(path, valid_len);
      if (!s.ok()) return s;
    }
  }
  std::unique_ptr<WritableFile> file;
  Status s = env_->NewWritableFile(path, /*truncate=*/false, &file);
  if (!s.ok()) return s;
  lane->open_files[file_id] = std::move(file);
  lane->file_id = file_id;
  lane->meta_file_id.store(file_id, std::memory_order_relaxed);
  lane->tail = valid_len;
  lane->records.store(record_count, std::memory_order_relaxed);
  {
    std::lock_guard<std::mutex> lock(store_mu_);
    file_lane_[static_cast<size_t>(lane->id)] = {file_id, lane->id};
  }
  return Status::OK();
}

Status BValueStore::PersistMeta() {
  std::lock_guard<std::mutex> lock(meta_mu_);
  std::string meta = "lanes " + std::to_string(lanes_.size()) + "\n";
  for (const auto& lane : lanes_) {
    uint32_t fid = lane->meta_file_id.load(std::memory_order_relaxed);
    meta += "lane " + std::to_string(lane->id) + " " +
            (fid == kNoFile ? std::string("-1") : std::to_string(fid)) + "\n";
  }
  return WriteStringToFileSync(env_, meta, dir_ + "/" + kMetaFileName);
}

Status BValueStore::RotateLaneLocked(Lane* lane) {
  uint32_t new_id;
  {
    std::lock_guard<std::mutex> lock(store_mu_);
    new_id = next_file_id_++;
    file_lane_[static_cast<size_t>(lane->id)] = {new_id, lane->id};
  }
  std::unique_ptr<WritableFile> file;
  Status s = env_->NewWritableFile(FileName(dir_, new_id), /*truncate=*/true,
                                   &file);
  if (!s.ok()) return s;

  // With an empty queue the old file is fully written; retire it here.
  // Otherwise the drain closes it after the last queued record lands.
  if (lane->file_id != kNoFile && lane->queue.empty() && !lane->draining) {
    auto it = lane->open_files.find(lane->file_id);
    if (it != lane->open_files.end()) {
      it->second->Sync();
      it->second->Close();
      lane->open_files.erase(it);
    }
  }

  lane->open_files[new_id] = std::move(file);
  lane->file_id = new_id;
  lane->meta_file_id.store(new_id, std::memory_order_relaxed);
  lane->tail = 0;
  return PersistMeta();
}

Status BValueStore::Append(std::string_view key, std::string_view value,
                           bool durable, ValueOffset* voff,
                           DurableCallback on_durable) {
  if (closed_.load(std::memory_order_acquire)) {
    return Status::Closed("bvalue store closed");
  }
  if (value.size() > max_value_size_) {
    return Status::TooLarge("value exceeds max_value_size");
  }

  size_t lane_idx;
  if (dispatch_ == LaneDispatch::kRoundRobin) {
    lane_idx = static_cast<size_t>(
        dispatch_counter_.fetch_add(1, std::memory_order_relaxed) %
        lanes_.size());
  } else {
    lane_idx = static_cast<size_t>(Hash64(key, 0x7C03A7C03A7ull) %
                                   lanes_.size());
  }
  Lane* lane = lanes_[lane_idx].get();

  auto pw = std::make_shared<PendingWrite>();
  EncodeRecord(key, value, &pw->record, &pw->value_pos);
  pw->value_len = static_cast<uint32_t>(value.size());
  pw->done = std::move(on_durable);

  metrics_->Record(Counter::kBValueAppends, 1);

  std::unique_lock<std::mutex> lock(lane->mu);
  if (!lane->sticky.ok()) return lane->sticky;
  if (lane->shutdown) return Status::Closed("bvalue store closed");

  if (lane->file_id == kNoFile || lane->tail >= rotate_size_) {
    Status s = RotateLaneLocked(lane);
    if (!s.ok()) {
      lane->sticky = s;
      return s;
    }
  }

  pw->file_id = lane->file_id;
  pw->offset = lane->tail;
  lane->tail += pw->record.size();
  lane->records.fetch_add(1, std::memory_order_relaxed);
  *voff = ValueOffset{pw->file_id, pw->offset,
                      static_cast<uint32_t>(value.size())};

  if (durable && lane->queue.empty() && !lane->draining) {
    // Fast path: write and sync on the caller's thread.
    WritableFile* file = lane->open_files.at(pw->file_id).get();
    Status s = file->Append(pw->record);
    if (s.ok()) s = file->Sync();
    if (!s.ok()) {
      lane->sticky = s;
      return s;
    }
    metrics_->Record(Counter::kBValueBytes, pw->record.size());
    lock.unlock();
    if (pw->done) pw->done(Status::OK());
    return Status::OK();
  }

  lane->queue.push_back(pw);
  lane->cv.notify_all();
  if (durable) {
    lane->cv.wait(lock, [&] { return pw->completed; });
    return pw->result;
  }
  return Status::OK();
}

void BValueStore::DrainLoop(Lane* lane) {
  std::unique_lock<std::mutex> lock(lane->mu);
  while (true) {
    lane->cv.wait(lock,
                  [&] { return !lane->queue.empty() || lane->shutdown; });
    if (lane->queue.empty() && lane->shutdown) return;

    lane->draining = true;
    std::vector<std::shared_ptr<PendingWrite>> batch(lane->queue.begin(),
                                                     lane->queue.end());
    // Handles stay valid outside the lock: only this thread erases them and
    // rotation only inserts new ones.
    std::vector<std::pair<uint32_t, WritableFile*>> files;
    for (const auto& pw : batch) {
      if (files.empty() || files.back().first != pw->file_id) {
        files.emplace_back(pw->file_id,
                           lane->open_files.at(pw->file_id).get());
      }
    }
    lock.unlock();

    Status s;
    uint64_t bytes = 0;
    for (const auto& pw : batch) {
      if (!s.ok()) break;
      for (const auto& [fid, file] : files) {
        if (fid == pw->file_id) {
          s = file->Append(pw->record);
          bytes += pw->record.size();
          break;
        }
      }
    }
    for (const auto& [fid, file] : files) {
      if (!s.ok()) break;
      s = file->Sync();
    }
    if (s.ok()) metrics_->Record(Counter::kBValueBytes, bytes);

    // Completion handles resolve after the device write and before SyncAll
    // waiters can observe an empty queue.
    for (const auto& pw : batch) {
      if (pw->done) pw->done(s);
    }

    lock.lock();
    for (size_t i = 0; i < batch.size(); i++) lane->queue.pop_front();
    for (const auto& pw : batch) {
      pw->completed = true;
      pw->result = s;
    }
    if (!s.ok()) lane->sticky = s;

    // Close rotated-away files once nothing queued still targets them.
    std::set<uint32_t> still_queued;
    for (const auto& pw : lane->queue) still_queued.insert(pw->file_id);
    for (auto it = lane->open_files.begin(); it != lane->open_files.end();) {
      if (it->first != lane->file_id && !still_queued.count(it->first)) {
        it->second->Close();
        it = lane->open_files.erase(it);
      } else {
        ++it;
      }
    }
    lane->draining = false;
    lane->cv.notify_all();
  }
}

Status BValueStore::SyncAll() {
  for (auto& lane : lanes_) {
    std::unique_lock<std::mutex> lock(lane->mu);
    lane->cv.wait(lock, [&] {
      return (lane->queue.empty() && !lane->draining) || !lane->sticky.ok();
    });
    if (!lane->sticky.ok()) return lane->sticky;
  }
  return Status::OK();
}

Status BValueStore::GetReadHandle(uint32_t file_id,
                                  std::shared_ptr<RandomAccessFile>* out) {
  std::lock_guard<std::mutex> lock(store_mu_);
  auto it = read_handles_.find(file_id);
  if (it != read_handles_.end()) {
    *out = it->second;
    return Status::OK();
  }
  std::unique_ptr<RandomAccessFile> file;
  Status s = env_->NewRandomAccessFile(FileName(dir_, file_id), &file);
  if (!s.ok()) return s;
  *out = std::shared_ptr<RandomAccessFile>(std::move(file));
  read_handles_[file_id] = *out;
  return Status::OK();
}

Status BValueStore::ReadDurable(const ValueOffset& voff, std::string* key,
                                std::string* value) {
  std::shared_ptr<RandomAccessFile> file;
  Status s = GetReadHandle(voff.file_id, &file);
  if (!s.ok()) return s;

  // First probe covers magic + crc + the key_len varint.
  std::string head;
  s = file->Read(voff.offset, 8 + kMaxVarintLen64, &head);
  if (!s.ok()) return s;
  if (head.size() < 10) return Status::Corruption("bvalue record truncated");
  if (DecodeFixed32(head.data()) != kBValueMagic) {
    return Status::Corruption("bvalue record magic mismatch");
  }
  const uint32_t crc = DecodeFixed32(head.data() + 4);
  std::string_view rest(head.data() + 8, head.size() - 8);
  uint64_t key_len = 0;
  if (!GetUvarint(&rest, &key_len)) {
    return Status::Corruption("bvalue record key_len malformed");
  }

  const uint64_t body_upper = VarintLength(key_len) + key_len +
                              kMaxVarintLen64 + voff.length;
  std::string body;
  s = file->Read(voff.offset + 8, static_cast<size_t>(body_upper), &body);
  if (!s.ok()) return s;

  std::string_view in(body);
  std::string_view key_view, value_view;
  if (!GetLengthPrefixed(&in, &key_view) ||
      !GetLengthPrefixed(&in, &value_view)) {
    return Status::Corruption("bvalue record truncated");
  }
  if (value_view.size() != voff.length) {
    return Status::Corruption("bvalue record length mismatch");
  }
  const size_t body_len = body.size() - in.size();
  if (crc32c::Value(body.data(), body_len) != crc) {
    return Status::Corruption("bvalue record crc mismatch");
  }
  if (key != nullptr) key->assign(key_view);
  if (value != nullptr) value->assign(value_view);
  return Status::OK();
}

Status BValueStore::Read(const ValueOffset& voff, std::string* value) {
  // Pending records are still in some lane's queue; serve them from memory.
  int lane_id = -1;
  {
    std::lock_guard<std::mutex> lock(store_mu_);
    for (const auto& [fid, lid] : file_lane_) {
      if (fid == voff.file_id) {
        lane_id = lid;
        break;
      }
    }
  }
  if (lane_id >= 0) {
    Lane* lane = lanes_[static_cast<size_t>(lane_id)].get();
    std::lock_guard<std::mutex> lock(lane->mu);
    for (const auto& pw : lane->queue) {
      if (pw->file_id == voff.file_id && pw->offset == voff.offset) {
        if (pw->value_len != voff.length) {
          return Status::Corruption("bvalue record length mismatch");
        }
        value->assign(pw->record, pw->value_pos, pw->value_len);
        metrics_->Record(Counter::kBValueReads, 1);
        return Status::OK();
      }
    }
  }
  Status s = ReadDurable(voff, nullptr, value);
  if (s.ok()) metrics_->Record(Counter::kBValueReads, 1);
  return s;
}

Status BValueStore::ValidateRecord(const ValueOffset& voff) {
  int lane_id = -1;
  {
    std::lock_guard<std::mutex> lock(store_mu_);
    for (const auto& [fid, lid] : file_lane_) {
      if (fid == voff.file_id) {
        lane_id = lid;
        break;
      }
    }
  }
  if (lane_id >= 0) {
    Lane* lane = lanes_[static_cast<size_t>(lane_id)].get();
    std::lock_guard<std::mutex> lock(lane->mu);
    for (const auto& pw : lane->queue) {
      if (pw->file_id == voff.file_id && pw->offset == voff.offset) {
        return pw->value_len == voff.length
                   ? Status::OK()
                   : Status::Corruption("bvalue record length mismatch");
      }
    }
  }
  return ReadDurable(voff, nullptr, nullptr);
}

uint64_t BValueStore::LaneRecordCount(int lane) const {
  return lanes_[static_cast<size_t>(lane)]->records.load(
      std::memory_order_relaxed);
}

Status BValueStore::Close() {
  if (closed_.exchange(true)) return Status::OK();
  Status result;
  for (auto& lane : lanes_) {
    {
      std::lock_guard<std::mutex> lock(lane->mu);
      lane->shutdown = true;
      lane->cv.notify_all();
    }
    if (lane->drain_thread.joinable()) lane->drain_thread.join();
    std::lock_guard<std::mutex> lock(lane->mu);
    for (auto& [fid, file] : lane->open_files) {
      file->Sync();
      Status s = file->Close();
      if (!s.ok() && result.ok()) result = s;
    }
    lane->open_files.clear();
    if (!lane->sticky.ok() && result.ok()) result = lane->sticky;
  }
  return result;
}

BValueStore::~BValueStore() { Close(); }

Status BValueStore::ScanFile(
    Env* env, const std::string& path, uint32_t file_id,
    std::vector<std::pair<std::string, ValueOffset>>* out, bool* truncated) {
  out->clear();
  *truncated = false;
  std::string content;
  Status s = ReadFileToString(env, path, &content);
  if (!s.ok()) return s;

  size_t pos = 0;
  while (pos < content.size()) {
    std::string_view rest(content.data() + pos, content.size() - pos);
    if (rest.size() < 10 || DecodeFixed32(rest.data()) != kBValueMagic) {
      *truncated = true;
      return Status::OK();
    }
    const uint32_t crc = DecodeFixed32(rest.data() + 4);
    std::string_view body = rest.substr(8);
    std::string_view key, value;
    if (!GetLengthPrefixed(&body, &key) || !GetLengthPrefixed(&body, &value)) {
      *truncated = true;
      return Status::OK();
    }
    const size_t body_len = rest.size() - 8 - body.size();
    if (crc32c::Value(rest.data() + 8, body_len) != crc) {
      *truncated = true;
      return Status::OK();
    }
    out->emplace_back(std::string(key),
                      ValueOffset{file_id, pos,
                                  static_cast<uint32_t>(value.size())});
    pos += 8 + body_len;
  }
  return Status::OK();
}

}  // namespace bvlsm
