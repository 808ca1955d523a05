#include "bvlsm/version.h"

#include <algorithm>
#include <cstdio>

#include "bvlsm/coding.h"
#include "bvlsm/wal.h"

namespace bvlsm {

namespace {

constexpr const char* kCurrentFileName = "CURRENT";

// Edit field tags.
constexpr uint64_t kTagAddedTable = 1;
constexpr uint64_t kTagDeletedFile = 2;
constexpr uint64_t kTagLastSequence = 3;
constexpr uint64_t kTagNextFileNumber = 4;
constexpr uint64_t kTagLogNumber = 5;

std::string ManifestFileName(const std::string& dir, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "MANIFEST-%06d", n);
  return dir + "/" + buf;
}

}  // namespace

uint64_t Version::LevelBytes(int n) const {
  uint64_t total = 0;
  for (const auto& t : levels_[static_cast<size_t>(n)]) total += t.file_size;
  return total;
}

std::vector<TableMeta> Version::Overlapping(int level,
                                            std::string_view smallest,
                                            std::string_view largest) const {
  std::vector<TableMeta> out;
  for (const auto& t : levels_[static_cast<size_t>(level)]) {
    if (t.max_key < smallest || t.min_key > largest) continue;
    out.push_back(t);
  }
  return out;
}

bool Version::HasOverlapBelow(int level, std::string_view key) const {
  for (int l = level + 1; l < num_levels(); l++) {
    for (const auto& t : levels_[static_cast<size_t>(l)]) {
      if (key >= t.min_key && key <= t.max_key) return true;
    }
  }
  return false;
}

std::set<uint64_t> Version::LiveFiles() const {
  std::set<uint64_t> out;
  for (const auto& level : levels_) {
    for (const auto& t : level) out.insert(t.file_number);
  }
  return out;
}

Status Version::SanityCheck() const {
  for (int l = 1; l < num_levels(); l++) {
    const auto& tables = levels_[static_cast<size_t>(l)];
    for (size_t i = 0; i + 1 < tables.size(); i++) {
      if (!(tables[i].max_key < tables[i + 1].min_key)) {
        return Status::Corruption("level " + std::to_string(l) +
                                  " tables overlap or are unsorted");
      }
    }
  }
  return Status::OK();
}

void VersionEdit::EncodeTo(std::string* dst) const {
  for (const auto& [level, meta] : added) {
    PutUvarint(dst, kTagAddedTable);
    PutUvarint(dst, static_cast<uint64_t>(level));
    PutUvarint(dst, meta.file_number);
    PutUvarint(dst, meta.file_size);
    PutUvarint(dst, meta.entry_count);
    PutLengthPrefixed(dst, meta.min_key);
    PutLengthPrefixed(dst, meta.max_key);
  }
  for (uint64_t f : deleted_files) {
    PutUvarint(dst, kTagDeletedFile);
    PutUvarint(dst, f);
  }
  if (last_sequence) {
    PutUvarint(dst, kTagLastSequence);
    PutUvarint(dst, *last_sequence);
  }
  if (next_file_number) {
    PutUvarint(dst, kTagNextFileNumber);
    PutUvarint(dst, *next_file_number);
  }
  if (log_number) {
    PutUvarint(dst, kTagLogNumber);
    PutUvarint(dst, *log_number);
  }
}

Status VersionEdit::DecodeFrom(std::string_view input, VersionEdit* edit) {
  *edit = VersionEdit{};
  while (!input.empty()) {
    uint64_t tag = 0;
    if (!GetUvarint(&input, &tag)) {
      return Status::Corruption("version edit tag malformed");
    }
    switch (tag) {
      case kTagAddedTable: {
        uint64_t level = 0;
        TableMeta meta;
        std::string_view min_key, max_key;
        if (!GetUvarint(&input, &level) ||
            !GetUvarint(&input, &meta.file_number) ||
            !GetUvarint(&input, &meta.file_size) ||
            !GetUvarint(&input, &meta.entry_count) ||
            !GetLengthPrefixed(&input, &min_key) ||
            !GetLengthPrefixed(&input, &max_key)) {
          return Status::Corruption("version edit added-table malformed");
        }
        meta.level = static_cast<int>(level);
        meta.min_key.assign(min_key);
        meta.max_key.assign(max_key);
        edit->added.emplace_back(static_cast<int>(level), std::move(meta));
        break;
      }
      case kTagDeletedFile: {
        uint64_t f = 0;
        if (!GetUvarint(&input, &f)) {
          return Status::Corruption("version edit deleted-file malformed");
        }
        edit->deleted_files.push_back(f);
        break;
      }
      case kTagLastSequence: {
        uint64_t v = 0;
        if (!GetUvarint(&input, &v)) {
          return Status::Corruption("version edit last-sequence malformed");
        }
        edit->last_sequence = v;
        break;
      }
      case kTagNextFileNumber: {
        uint64_t v = 0;
        if (!GetUvarint(&input, &v)) {
          return Status::Corruption("version edit next-file malformed");
        }
        edit->next_file_number = v;
        break;
      }
      case kTagLogNumber: {
        uint64_t v = 0;
        if (!GetUvarint(&input, &v)) {
          return Status::Corruption("version edit log-number malformed");
        }
        edit->log_number = v;
        break;
      }
      default:
        return Status::Corruption("version edit unknown tag");
    }
  }
  return Status::OK();
}

Status VersionSet::ApplyEdit(const Config& config, const Version& base,
                             const VersionEdit& edit, Version* out) {
  *out = base;
  for (uint64_t f : edit.deleted_files) {
    bool found = false;
    for (auto& level : out->levels_) {
      for (auto it = level.begin(); it != level.end(); ++it) {
        if (it->file_number == f) {
          level.erase(it);
          found = true;
          break;
        }
      }
      if (found) break;
    }
    if (!found) {
      return Status::Corruption("edit deletes unknown file " +
                                std::to_string(f));
    }
  }
  for (const auto& [level, meta] : edit.added) {
    if (level < 0 || level >= config.num_levels) {
      return Status::Corruption("edit adds table at invalid level");
    }
    auto& tables = out->levels_[static_cast<size_t>(level)];
    TableMeta m = meta;
    m.level = level;
    if (level == 0) {
      tables.insert(tables.begin(), std::move(m));  // newest first
    } else {
      auto pos = std::lower_bound(
          tables.begin(), tables.end(), m,
          [](const TableMeta& a, const TableMeta& b) {
            return a.min_key < b.min_key;
          });
      tables.insert(pos, std::move(m));
    }
  }
  return out->SanityCheck();
}

VersionSet::VersionSet(Env* env, std::string db_dir, const Config& config)
    : env_(env), dir_(std::move(db_dir)), config_(config),
      compact_cursor_(static_cast<size_t>(config.num_levels)) {}

Status VersionSet::Open(Env* env, const std::string& db_dir,
                        const Config& config,
                        std::unique_ptr<VersionSet>* out) {
  auto vs = std::unique_ptr<VersionSet>(new VersionSet(env, db_dir, config));
  auto version = std::make_shared<Version>(config.num_levels);

  const std::string current_path = db_dir + "/" + kCurrentFileName;
  if (env->FileExists(current_path)) {
    std::string manifest_name;
    Status s = ReadFileToString(env, current_path, &manifest_name);
    if (!s.ok()) return s;
    while (!manifest_name.empty() && manifest_name.back() == '\n') {
      manifest_name.pop_back();
    }
    const std::string manifest_path = db_dir + "/" + manifest_name;
    if (!env->FileExists(manifest_path)) {
      return Status::Corruption("CURRENT names missing manifest: " +
                                manifest_name);
    }

    uint64_t valid_bytes = 0;
    WalReplaySummary summary;
    Status apply_status;
    s = ReplayWalFile(
        env, manifest_path,
        [&](std::string_view payload) -> Status {
          VersionEdit edit;
          Status ds = VersionEdit::DecodeFrom(payload, &edit);
          if (!ds.ok()) return ds;
          auto next = std::make_shared<Version>(config.num_levels);
          ds = ApplyEdit(config, *version, edit, next.get());
          if (!ds.ok()) return ds;
          version = std::move(next);
          if (edit.last_sequence) {
            vs->last_sequence_ = std::max(vs->last_sequence_,
                                          *edit.last_sequence);
          }
          if (edit.next_file_number) {
            vs->next_file_number_.store(*edit.next_file_number);
          }
          if (edit.log_number) vs->log_number_ = *edit.log_number;
          valid_bytes += kWalHeaderSize + payload.size();
          return Status::OK();
        },
        &summary);
    if (!s.ok()) return s;
    // A torn tail is an edit whose commit never returned; drop it so new
    // commits append after the last complete record.
    if (summary.truncated) {
      s = env->Truncate(manifest_path, valid_bytes);
      if (!s.ok()) return s;
    }
    s = env->NewWritableFile(manifest_path, /*truncate=*/false,
                             &vs->manifest_);
    if (!s.ok()) return s;
    vs->current_ = std::move(version);
    *out = std::move(vs);
    return Status::OK();
  }

  // Fresh store.
  const std::string manifest_name = "MANIFEST-000001";
  Status s = env->NewWritableFile(db_dir + "/" + manifest_name,
                                  /*truncate=*/true, &vs->manifest_);
  if (!s.ok()) return s;
  VersionEdit init;
  init.next_file_number = 1;
  init.last_sequence = 0;
  init.log_number = 0;
  std::string payload, record;
  init.EncodeTo(&payload);
  EncodeWalRecord(&record, payload);
  s = vs->manifest_->Append(record);
  if (s.ok()) s = vs->manifest_->Sync();
  if (!s.ok()) return s;
  s = WriteStringToFileSync(env, manifest_name + "\n", current_path);
  if (!s.ok()) return s;
  vs->current_ = std::move(version);
  *out = std::move(vs);
  return Status::OK();
}

std::shared_ptr<const Version> VersionSet::current() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_;
}

uint64_t VersionSet::NewFileNumber() {
  return next_file_number_.fetch_add(1, std::memory_order_relaxed);
}

void VersionSet::MarkFileNumberUsed(uint64_t number) {
  uint64_t prev = next_file_number_.load(std::memory_order_relaxed);
  while (prev <= number &&
         !next_file_number_.compare_exchange_weak(prev, number + 1)) {
  }
}

uint64_t VersionSet::log_number() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_number_;
}

Status VersionSet::Commit(VersionEdit edit) {
  std::lock_guard<std::mutex> lock(mu_);
  edit.next_file_number = next_file_number_.load(std::memory_order_relaxed);

  auto next = std::make_shared<Version>(config_.num_levels);
  Status s = ApplyEdit(config_, *current_, edit, next.get());
  if (!s.ok()) return s;

  std::string payload, record;
  edit.EncodeTo(&payload);
  EncodeWalRecord(&record, payload);
  s = manifest_->Append(record);
  if (s.ok()) s = manifest_->Sync();
  if (!s.ok()) return s;

  current_ = std::move(next);
  if (edit.last_sequence) {
    last_sequence_ = std::max(last_sequence_, *edit.last_sequence);
  }
  if (edit.log_number) log_number_ = std::max(log_number_, *edit.log_number);
  return Status::OK();
}

uint64_t VersionSet::level_target(int level) const {
  // L1 target is 8 memtables' worth; each deeper level multiplies by the
  // configured ratio.
  uint64_t target = 8 * static_cast<uint64_t>(config_.memtable_size);
  for (int i = 1; i < level; i++) {
    target *= static_cast<uint64_t>(config_.level_size_ratio);
  }
  return target;
}

std::optional<CompactionJob> VersionSet::PickCompaction() {
  std::lock_guard<std::mutex> lock(mu_);
  const Version& v = *current_;

  if (v.level(0).size() >=
      static_cast<size_t>(config_.l0_compaction_trigger)) {
    CompactionJob job;
    job.level = 0;
    job.inputs = v.level(0);
    std::string smallest = job.inputs[0].min_key;
    std::string largest = job.inputs[0].max_key;
    for (const auto& t : job.inputs) {
      smallest = std::min(smallest, t.min_key);
      largest = std::max(largest, t.max_key);
    }
    job.next_inputs = v.Overlapping(1, smallest, largest);
    return job;
  }

  for (int level = 1; level + 1 < config_.num_levels; level++) {
    if (v.LevelBytes(level) <= level_target(level)) continue;
    const auto& tables = v.level(level);
    if (tables.empty()) continue;
    // Round-robin cursor: first table past the last victim, wrapping.
    const TableMeta* victim = nullptr;
    for (const auto& t : tables) {
      if (t.min_key > compact_cursor_[static_cast<size_t>(level)]) {
        victim = &t;
        break;
      }
    }
    if (victim == nullptr) victim = &tables[0];
    compact_cursor_[static_cast<size_t>(level)] = victim->max_key;

    CompactionJob job;
    job.level = level;
    job.inputs = {*victim};
    job.next_inputs = v.Overlapping(level + 1, victim->min_key,
                                    victim->max_key);
    return job;
  }
  return std::nullopt;
}

}  // namespace bvlsm
