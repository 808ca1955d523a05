#ifndef BVLSM_VERSION_H
#define BVLSM_VERSION_H

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/sstable.h"
#include "bvlsm/status.h"
#include "bvlsm/types.h"

namespace bvlsm {

// Immutable snapshot of the level layout. L0 is ordered newest-first and may
// overlap; L1+ are sorted by min key with pairwise-disjoint ranges.
class Version {
 public:
  explicit Version(int num_levels) : levels_(num_levels) {}

  int num_levels() const { return static_cast<int>(levels_.size()); }
  const std::vector<TableMeta>& level(int n) const {
    return levels_[static_cast<size_t>(n)];
  }
  uint64_t LevelBytes(int n) const;

  // Tables in `level` whose key range intersects [smallest, largest].
  std::vector<TableMeta> Overlapping(int level, std::string_view smallest,
                                     std::string_view largest) const;

  // True when any level strictly below `level` has a table covering key.
  bool HasOverlapBelow(int level, std::string_view key) const;

  std::set<uint64_t> LiveFiles() const;

  // L1+ ordering and disjointness.
  Status SanityCheck() const;

 private:
  friend class VersionSet;
  std::vector<std::vector<TableMeta>> levels_;
};

// One manifest record. Applying an edit to a valid Version yields the next
// valid Version.
struct VersionEdit {
  std::vector<std::pair<int, TableMeta>> added;
  std::vector<uint64_t> deleted_files;
  std::optional<SequenceNumber> last_sequence;
  std::optional<uint64_t> next_file_number;
  std::optional<uint64_t> log_number;  // wal segments below this are retired

  void EncodeTo(std::string* dst) const;
  static Status DecodeFrom(std::string_view input, VersionEdit* edit);
};

struct CompactionJob {
  int level = 0;  // input level; output goes to level+1
  std::vector<TableMeta> inputs;
  std::vector<TableMeta> next_inputs;

  int output_level() const { return level + 1; }
};

// Level metadata + manifest persistence. Commits append a checksummed edit
// to the manifest, sync it, then apply it in memory; recovery replays the
// manifest named by CURRENT from the start.
class VersionSet {
 public:
  static Status Open(Env* env, const std::string& db_dir, const Config& config,
                     std::unique_ptr<VersionSet>* out);

  std::shared_ptr<const Version> current() const;

  // Stamps next_file_number, persists, applies. On failure the in-memory
  // version is untouched.
  Status Commit(VersionEdit edit);

  uint64_t NewFileNumber();
  // Keeps the counter ahead of numbers observed on disk so orphans are
  // never reissued.
  void MarkFileNumberUsed(uint64_t number);
  // Largest sequence number recorded in the manifest at open time.
  SequenceNumber recovered_last_sequence() const { return last_sequence_; }
  uint64_t log_number() const;

  // L0 file-count trigger first, then the lowest level over its size
  // target (victim chosen by a round-robin cursor).
  std::optional<CompactionJob> PickCompaction();

  uint64_t level_target(int level) const;

  static Status ApplyEdit(const Config& config, const Version& base,
                          const VersionEdit& edit, Version* out);

 private:
  VersionSet(Env* env, std::string db_dir, const Config& config);

  Env* const env_;
  const std::string dir_;
  const Config config_;

  mutable std::mutex mu_;
  std::shared_ptr<const Version> current_;
  std::unique_ptr<WritableFile> manifest_;
  std::atomic<uint64_t> next_file_number_{1};
  SequenceNumber last_sequence_ = 0;
  uint64_t log_number_ = 0;
  std::vector<std::string> compact_cursor_;
};

}  // namespace bvlsm

#endif  // BVLSM_VERSION_H
