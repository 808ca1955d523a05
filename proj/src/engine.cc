#include "bvlsm/engine.h"

#include <algorithm>
#include <chrono>

#include "bvlsm/compaction.h"
#include "bvlsm/types.h"

namespace bvlsm {

namespace {

class MemTableIter : public EntryIterator {
 public:
  explicit MemTableIter(std::shared_ptr<const MemTable> mt)
      : mt_(std::move(mt)), it_(mt_->NewIterator()) {
    if (it_.Valid()) current_ = it_.entry();
  }

  bool Valid() const override { return it_.Valid(); }
  const InternalEntry& entry() const override { return current_; }
  void Next() override {
    it_.Next();
    if (it_.Valid()) current_ = it_.entry();
  }

 private:
  std::shared_ptr<const MemTable> mt_;
  MemTable::Iterator it_;
  InternalEntry current_;
};

}  // namespace

Engine::Engine(std::string dir, const Config& config, Env* env)
    : dir_(std::move(dir)), config_(config), env_(env),
      metrics_(config.interval_bucket_ms) {}

Status Engine::Open(const std::string& dir, const Config& config,
                    std::unique_ptr<Engine>* out) {
  Status s = config.Validate();
  if (!s.ok()) return s;
  Env* env = config.env != nullptr ? config.env : Env::Default();

  auto engine = std::unique_ptr<Engine>(new Engine(dir, config, env));
  s = engine->Recover();
  if (!s.ok()) return s;
  *out = std::move(engine);
  return Status::OK();
}

Status Engine::Recover() {
  for (const std::string& d :
       {dir_, dir_ + "/wal", dir_ + "/sst", dir_ + "/bvalue"}) {
    Status s = env_->CreateDirIfMissing(d);
    if (!s.ok()) return s;
  }

  Status s = VersionSet::Open(env_, dir_, config_, &versions_);
  if (!s.ok()) return s;
  table_cache_ = std::make_unique<TableCache>(env_, config_, dir_ + "/sst",
                                              &metrics_);
  s = BValueStore::Open(env_, dir_ + "/bvalue", config_, &metrics_, &bvstore_);
  if (!s.ok()) return s;
  cache_ = std::make_unique<BVCache>(config_.cache_capacity(),
                                     config_.cache_policy, &metrics_);

  mt_ = std::make_shared<MemTable>();
  last_seq_.store(versions_->recovered_last_sequence());

  // File numbers already on disk must never be reissued: a reused WAL id
  // would truncate a segment that still holds unflushed entries.
  std::vector<std::string> children;
  s = env_->GetChildren(dir_ + "/wal", &children);
  if (!s.ok()) return s;
  std::vector<uint64_t> segments;
  for (const auto& name : children) {
    uint64_t id;
    if (WalWriter::ParseSegmentFileName(name, &id)) {
      segments.push_back(id);
      versions_->MarkFileNumberUsed(id);
    }
  }
  s = env_->GetChildren(dir_ + "/sst", &children);
  if (!s.ok()) return s;
  for (const auto& name : children) {
    uint64_t number;
    if (ParseSstFileName(name, &number)) {
      versions_->MarkFileNumberUsed(number);
    }
  }

  std::sort(segments.begin(), segments.end());
  const uint64_t min_live = versions_->log_number();
  std::vector<uint64_t> live_segments;
  for (uint64_t id : segments) {
    if (id >= min_live) live_segments.push_back(id);
  }
  for (size_t i = 0; i < live_segments.size(); i++) {
    s = ReplaySegment(WalWriter::SegmentFileName(dir_ + "/wal",
                                                 live_segments[i]),
                      i + 1 == live_segments.size());
    if (!s.ok()) return s;
  }

  const uint64_t new_segment = versions_->NewFileNumber();
  s = WalWriter::Open(env_, dir_ + "/wal", new_segment,
                      config_.async_flush_interval_ms, &metrics_, &wal_);
  if (!s.ok()) return s;
  wal_->SetPreDrainHook([this] { return bvstore_->SyncAll(); });

  RemoveObsoleteFiles();

  flush_thread_ = std::thread(&Engine::FlushThread, this);
  compact_thread_ = std::thread(&Engine::CompactThread, this);
  return Status::OK();
}

Status Engine::ReplaySegment(const std::string& path, bool last_segment) {
  WalReplaySummary summary;
  Status s = ReplayWalFile(
      env_, path,
      [&](std::string_view payload) -> Status {
        InternalEntry entry;
        Status ds = DecodeEntry(payload, &entry);
        if (!ds.ok()) {
          return Status::Corruption("wal entry undecodable in " + path + ": " +
                                    ds.ToString());
        }
        if (entry.payload == PayloadKind::kPointer) {
          // Sync ordering (and the async pre-drain barrier) guarantee the
          // record is durable before its WAL entry; a miss is store
          // corruption, not a torn tail.
          ds = bvstore_->ValidateRecord(entry.pointer);
          if (!ds.ok()) {
            return Status::Corruption("dangling value pointer in " + path +
                                      ": " + ds.ToString());
          }
        }
        SequenceNumber seq = entry.seq;
        ds = mt_->Insert(entry);
        if (!ds.ok()) return ds;
        if (seq > last_seq_.load()) last_seq_.store(seq);
        if (mt_->ApproximateSize() >= config_.memtable_size) {
          // Mid-replay flush; the covering segments stay live, so a crash
          // here replays the same records again (deduplicated in
          // compaction).
          mt_->Seal();
          ds = FlushOneTable(mt_, /*advance_log_number=*/false);
          if (!ds.ok()) return ds;
          mt_ = std::make_shared<MemTable>();
        }
        return Status::OK();
      },
      &summary);
  if (!s.ok()) return s;
  if (summary.truncated && !last_segment) {
    return Status::Corruption("wal segment torn mid-stream: " + path);
  }
  return Status::OK();
}

Status Engine::Put(const WriteOptions& opts, std::string_view key,
                   std::string_view value) {
  return WriteImpl(opts, key, value, EntryKind::kPut);
}

Status Engine::Delete(const WriteOptions& opts, std::string_view key) {
  return WriteImpl(opts, key, {}, EntryKind::kDelete);
}

Status Engine::WriteImpl(const WriteOptions& opts, std::string_view key,
                         std::string_view value, EntryKind kind) {
  if (closed_.load(std::memory_order_acquire)) {
    return Status::Closed("engine closed");
  }
  if (key.empty() || key.size() > config_.max_key_size) {
    return Status::InvalidArgument("key must be 1..max_key_size bytes");
  }
  if (value.size() > config_.max_value_size) {
    return Status::TooLarge("value exceeds max_value_size");
  }
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    if (!bg_error_.ok()) return bg_error_;
  }

  const WalMode mode = opts.wal_mode.value_or(config_.wal_mode);
  const bool separated = kind == EntryKind::kPut &&
                         config_.separation == SeparationMode::kSeparated &&
                         value.size() > config_.separation_threshold;

  // Big values go to their lane before the commit section so lanes can run
  // in parallel and the WAL never sees a pointer whose record is not yet
  // (being made) durable.
  ValueOffset voff;
  std::shared_ptr<std::atomic<bool>> durable_flag;
  std::shared_ptr<std::atomic<uint64_t>> epoch_slot;
  if (separated) {
    if (mode == WalMode::kSync) {
      Status s = bvstore_->Append(key, value, /*durable=*/true, &voff);
      if (!s.ok()) return s;
    } else {
      durable_flag = std::make_shared<std::atomic<bool>>(false);
      epoch_slot = std::make_shared<std::atomic<uint64_t>>(0);
      std::string key_copy(key);
      BVCache* cache = cache_.get();
      Status s = bvstore_->Append(
          key, value, /*durable=*/false, &voff,
          [cache, key_copy, durable_flag, epoch_slot](const Status& st) {
            durable_flag->store(true);
            if (!st.ok()) return;
            uint64_t epoch = epoch_slot->load();
            if (epoch != 0) cache->OnPersisted(key_copy, epoch);
          });
      if (!s.ok()) return s;
    }
  }

  InternalEntry entry;
  if (kind == EntryKind::kDelete) {
    entry = InternalEntry::Tombstone(std::string(key), 0);
  } else if (separated) {
    entry = InternalEntry::PutPointer(std::string(key), 0, voff);
  } else {
    entry = InternalEntry::Put(std::string(key), 0, std::string(value));
  }

  {
    std::lock_guard<std::mutex> commit_lock(commit_mu_);
    const SequenceNumber seq = last_seq_.load(std::memory_order_relaxed) + 1;
    entry.seq = seq;

    std::string payload;
    EncodeEntry(entry, &payload);
    Status s = wal_->Append(payload, mode);
    if (!s.ok()) return s;

    s = mt_->Insert(entry);
    if (!s.ok()) return s;
    last_seq_.store(seq, std::memory_order_release);

    const uint64_t user_bytes = key.size() + value.size();
    metrics_.Record(Counter::kUserBytesIn, user_bytes);
    metrics_.RecordOp(user_bytes);

    if (mt_->ApproximateSize() >= config_.memtable_size) {
      std::unique_lock<std::mutex> state_lock(state_mu_);
      s = SealMemTableLocked(state_lock);
      if (!s.ok()) return s;
    }
  }

  if (separated) {
    std::optional<std::string> resident;
    if (mode != WalMode::kSync) resident = std::string(value);
    uint64_t epoch = 0;
    Status cs = cache_->Insert(key, voff, std::move(resident), &epoch);
    if (cs.IsBusy()) {
      // Every cached entry is pinned: force durability, then cache the
      // pointer alone.
      Status ss = bvstore_->SyncAll();
      if (ss.ok()) cache_->Insert(key, voff, std::nullopt, &epoch);
    }
    if (epoch_slot && epoch != 0) {
      epoch_slot->store(epoch);
      if (durable_flag->load()) cache_->OnPersisted(key, epoch);
    }
  }
  return Status::OK();
}

// Seals the mutable table, rotates the WAL, and queues the flush. Blocks
// (backpressure, not error) while the immutable queue is full.
Status Engine::SealMemTableLocked(std::unique_lock<std::mutex>& state_lock) {
  if (imms_.size() >= static_cast<size_t>(config_.max_immutable_memtables)) {
    auto start = std::chrono::steady_clock::now();
    flushed_cv_.wait(state_lock, [&] {
      return imms_.size() <
                 static_cast<size_t>(config_.max_immutable_memtables) ||
             shutdown_ || !bg_error_.ok();
    });
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    metrics_.Record(Counter::kStallMicros, static_cast<uint64_t>(micros));
    if (shutdown_) return Status::Closed("engine closing");
    if (!bg_error_.ok()) return bg_error_;
  }

  mt_->Seal();
  metrics_.Record(Counter::kMemTableSeals, 1);
  const uint64_t next_segment = versions_->NewFileNumber();
  Status s = wal_->Rotate(next_segment);
  if (!s.ok()) return s;
  mt_->set_retire_wal_upto(next_segment);
  imms_.push_back(mt_);
  mt_ = std::make_shared<MemTable>();
  flush_cv_.notify_one();
  return Status::OK();
}

Status Engine::Get(std::string_view key, std::string* value) {
  if (closed_.load(std::memory_order_acquire)) {
    return Status::Closed("engine closed");
  }
  std::optional<EntryValue> found;
  Status s = SearchEntry(key, last_seq_.load(std::memory_order_acquire),
                         &found);
  if (!s.ok()) return s;
  if (!found || found->kind == EntryKind::kDelete) {
    return Status::NotFound("key absent");
  }
  return ResolveValue(key, *found, value);
}

Status Engine::SearchEntry(std::string_view key, SequenceNumber at_seq,
                           std::optional<EntryValue>* result) {
  result->reset();

  std::shared_ptr<MemTable> mt;
  std::vector<std::shared_ptr<MemTable>> imms;
  std::shared_ptr<const Version> version;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    mt = mt_;
    imms.assign(imms_.begin(), imms_.end());
    version = versions_->current();
  }

  *result = mt->Get(key, at_seq);
  if (*result) return Status::OK();
  for (auto it = imms.rbegin(); it != imms.rend(); ++it) {  // newest first
    *result = (*it)->Get(key, at_seq);
    if (*result) return Status::OK();
  }

  // L0 newest first; sequence windows across L0 files are disjoint.
  for (const auto& meta : version->level(0)) {
    if (key < meta.min_key || key > meta.max_key) continue;
    std::shared_ptr<SSTableReader> reader;
    Status s = table_cache_->Get(meta.file_number, &reader);
    if (!s.ok()) return s;
    s = reader->Get(key, at_seq, result);
    if (!s.ok()) return s;
    if (*result) return Status::OK();
  }

  for (int level = 1; level < version->num_levels(); level++) {
    const auto& tables = version->level(level);
    // Disjoint and sorted by min key: binary search the one candidate.
    size_t lo = 0, hi = tables.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (tables[mid].max_key < key) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo == tables.size() || key < tables[lo].min_key) continue;
    std::shared_ptr<SSTableReader> reader;
    Status s = table_cache_->Get(tables[lo].file_number, &reader);
    if (!s.ok()) return s;
    s = reader->Get(key, at_seq, result);
    if (!s.ok()) return s;
    if (*result) return Status::OK();
  }
  return Status::OK();
}

Status Engine::ResolveValue(std::string_view key, const EntryValue& ev,
                            std::string* value) {
  switch (ev.payload) {
    case PayloadKind::kInline:
      *value = ev.inline_value;
      return Status::OK();
    case PayloadKind::kPointer: {
      auto hit = cache_->Get(key);
      if (hit && hit->voff == ev.pointer && hit->resident) {
        *value = *hit->resident;  // served without touching BValue files
        return Status::OK();
      }
      return bvstore_->Read(ev.pointer, value);
    }
    case PayloadKind::kNone:
      break;
  }
  return Status::Corruption("entry without payload in read path");
}

Status Engine::Flush() {
  if (closed_.load(std::memory_order_acquire)) {
    return Status::Closed("engine closed");
  }
  {
    std::lock_guard<std::mutex> commit_lock(commit_mu_);
    std::unique_lock<std::mutex> state_lock(state_mu_);
    if (!mt_->empty()) {
      Status s = SealMemTableLocked(state_lock);
      if (!s.ok()) return s;
    }
  }
  std::unique_lock<std::mutex> state_lock(state_mu_);
  flushed_cv_.wait(state_lock,
                   [&] { return imms_.empty() || !bg_error_.ok(); });
  return bg_error_;
}

Status Engine::SyncBValues() { return bvstore_->SyncAll(); }

uint64_t Engine::AllocateOutputFile() {
  const uint64_t n = versions_->NewFileNumber();
  std::lock_guard<std::mutex> lock(state_mu_);
  pending_outputs_.insert(n);
  return n;
}

Status Engine::FlushOneTable(const std::shared_ptr<MemTable>& mt,
                             bool advance_log_number) {
  VersionEdit edit;
  std::vector<uint64_t> outputs;
  if (!mt->empty()) {
    const uint64_t file_number = AllocateOutputFile();
    outputs.push_back(file_number);
    MemTableIter it(mt);
    TableMeta meta;
    Status s = BuildSSTable(env_, config_, dir_ + "/sst", file_number, &it,
                            &meta);
    if (!s.ok()) return s;
    meta.level = 0;
    metrics_.Record(Counter::kFlushBytes, meta.file_size);
    metrics_.Record(Counter::kFlushCount, 1);
    edit.added.emplace_back(0, std::move(meta));
    edit.last_sequence = mt->max_seq();
  }
  if (advance_log_number && mt->retire_wal_upto() > 0) {
    edit.log_number = mt->retire_wal_upto();
  }
  Status s = versions_->Commit(std::move(edit));
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    for (uint64_t n : outputs) pending_outputs_.erase(n);
  }
  return s;
}

void Engine::FlushThread() {
  std::unique_lock<std::mutex> lock(state_mu_);
  while (true) {
    flush_cv_.wait(lock, [&] { return !imms_.empty() || shutdown_; });
    if (imms_.empty() && shutdown_) return;
    auto mt = imms_.front();
    lock.unlock();

    Status s = FlushOneTable(mt, /*advance_log_number=*/true);
    if (s.ok()) RemoveObsoleteFiles();

    lock.lock();
    if (!s.ok()) {
      bg_error_ = s;
      flushed_cv_.notify_all();
      return;
    }
    imms_.pop_front();
    flushed_cv_.notify_all();
    compact_wakeup_ = true;
    compact_cv_.notify_one();
  }
}

Status Engine::DoCompactOnce(bool* ran) {
  if (ran != nullptr) *ran = false;
  std::lock_guard<std::mutex> run_lock(compact_run_mu_);
  auto job = versions_->PickCompaction();
  if (!job) return Status::OK();

  auto base = versions_->current();
  VersionEdit edit;
  Status s = RunCompaction(env_, config_, dir_ + "/sst",
                           [this] { return AllocateOutputFile(); }, *base,
                           *job, table_cache_.get(), &metrics_, &edit);
  std::vector<uint64_t> outputs;
  for (const auto& [level, meta] : edit.added) outputs.push_back(meta.file_number);
  if (s.ok()) s = versions_->Commit(edit);
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    for (uint64_t n : outputs) pending_outputs_.erase(n);
  }
  if (!s.ok()) return s;

  for (uint64_t f : edit.deleted_files) table_cache_->Evict(f);
  RemoveObsoleteFiles();
  if (ran != nullptr) *ran = true;
  return Status::OK();
}

Status Engine::CompactOnce(bool* ran) {
  if (closed_.load(std::memory_order_acquire)) {
    return Status::Closed("engine closed");
  }
  return DoCompactOnce(ran);
}

Status Engine::CompactAll() {
  bool ran = true;
  while (ran) {
    Status s = CompactOnce(&ran);
    if (!s.ok()) return s;
  }
  return Status::OK();
}

void Engine::CompactThread() {
  std::unique_lock<std::mutex> lock(state_mu_);
  while (true) {
    compact_cv_.wait(lock, [&] { return compact_wakeup_ || shutdown_; });
    if (shutdown_) return;
    compact_wakeup_ = false;
    lock.unlock();

    bool ran = true;
    while (ran) {
      Status s = DoCompactOnce(&ran);
      if (!s.ok()) {
        lock.lock();
        bg_error_ = s;
        flushed_cv_.notify_all();
        return;
      }
    }
    lock.lock();
  }
}

void Engine::RemoveObsoleteFiles() {
  auto version = versions_->current();
  const std::set<uint64_t> live = version->LiveFiles();
  std::set<uint64_t> pending;
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    pending = pending_outputs_;
  }

  std::vector<std::string> children;
  if (env_->GetChildren(dir_ + "/sst", &children).ok()) {
    for (const auto& name : children) {
      uint64_t number;
      if (!ParseSstFileName(name, &number)) continue;
      if (live.count(number) || pending.count(number)) continue;
      table_cache_->Evict(number);
      env_->RemoveFile(dir_ + "/sst/" + name);
    }
  }

  const uint64_t min_live_wal = versions_->log_number();
  const uint64_t active = wal_ != nullptr ? wal_->segment_id() : 0;
  if (env_->GetChildren(dir_ + "/wal", &children).ok()) {
    for (const auto& name : children) {
      uint64_t id;
      if (!WalWriter::ParseSegmentFileName(name, &id)) continue;
      if (id < min_live_wal && id != active) {
        env_->RemoveFile(dir_ + "/wal/" + name);
      }
    }
  }
}

Status Engine::Close() {
  if (closed_.exchange(true)) return Status::OK();
  {
    std::lock_guard<std::mutex> lock(state_mu_);
    shutdown_ = true;
    flush_cv_.notify_all();
    flushed_cv_.notify_all();
    compact_cv_.notify_all();
  }
  if (flush_thread_.joinable()) flush_thread_.join();
  if (compact_thread_.joinable()) compact_thread_.join();

  Status result;
  if (wal_) {
    Status s = wal_->Close();  // drains; pre-drain hook syncs bvalue lanes
    if (!s.ok()) result = s;
  }
  if (bvstore_) {
    Status s = bvstore_->Close();
    if (!s.ok() && result.ok()) result = s;
  }
  return result;
}

Engine::~Engine() { Close(); }

}  // namespace bvlsm
