#ifndef BVLSM_SSTABLE_H
#define BVLSM_SSTABLE_H

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/metrics.h"
#include "bvlsm/status.h"
#include "bvlsm/types.h"

namespace bvlsm {

constexpr uint32_t kSstMagic = 0x53535431;  // "SST1"

struct TableMeta {
  uint64_t file_number = 0;
  int level = 0;
  uint64_t file_size = 0;
  uint64_t entry_count = 0;
  std::string min_key;
  std::string max_key;
};

// Sorted-entry stream shared by memtable snapshots, table readers and the
// compaction merger.
class EntryIterator {
 public:
  virtual ~EntryIterator() = default;
  virtual bool Valid() const = 0;
  virtual const InternalEntry& entry() const = 0;
  virtual void Next() = 0;
  // Set when iteration stopped early (corruption, IO).
  virtual Status status() const { return Status::OK(); }
};

std::string SstFileName(const std::string& dir, uint64_t file_number);
bool ParseSstFileName(std::string_view name, uint64_t* file_number);

// Streaming writer for `dir/<file_number:010d>.sst`. Entries must arrive in
// strictly increasing (key asc, seq desc) order and at least one entry is
// required before Finish().
//
// File layout:
//   data blocks (entries back-to-back, split at config.sst_block_size)
//   index block: per data block { last_key, offset (8), length (4) }
//   bloom block: fixed32 nbits | bit bytes | k (1)
//   footer body: index_off (8) | index_len (4) | bloom_off (8) |
//                bloom_len (4) | entry_count (8) | min_key | max_key
//   footer tail: crc (4, over body) | footer_len (4) | magic (4)
class SSTableBuilder {
 public:
  SSTableBuilder(Env* env, const Config& config, const std::string& dir,
                 uint64_t file_number);

  Status Add(const InternalEntry& entry);
  uint64_t EstimatedSize() const { return offset_ + block_.size(); }
  uint64_t entry_count() const { return entry_count_; }

  // Writes index, bloom and footer, then syncs and closes the file.
  Status Finish(TableMeta* meta);

 private:
  Status EnsureOpen();
  Status FlushBlock();

  Env* const env_;
  const Config config_;
  const std::string path_;
  const uint64_t file_number_;
  std::unique_ptr<WritableFile> file_;
  std::string block_;
  std::string index_;
  std::vector<std::string> keys_;
  uint64_t offset_ = 0;
  uint64_t entry_count_ = 0;
  std::string min_key_, max_key_, last_block_key_;
  std::string prev_key_;
  SequenceNumber prev_seq_ = 0;
  Status status_;
};

// One-shot build from a sorted, non-empty entry stream.
Status BuildSSTable(Env* env, const Config& config, const std::string& dir,
                    uint64_t file_number, EntryIterator* input,
                    TableMeta* meta);

class SSTableReader : public std::enable_shared_from_this<SSTableReader> {
 public:
  static Status Open(Env* env, const Config& config, const std::string& dir,
                     uint64_t file_number, MetricsRegistry* metrics,
                     std::shared_ptr<SSTableReader>* out);

  // Newest visible entry for key, or nullopt. Consults the Bloom filter
  // before touching any data block; a returned tombstone is a real result.
  Status Get(std::string_view key, SequenceNumber at_seq,
             std::optional<EntryValue>* result) const;

  // Entries in (key asc, seq desc) order within [begin, end) on user keys.
  // Null bounds mean unbounded.
  std::unique_ptr<EntryIterator> NewIterator(
      const std::string* begin = nullptr, const std::string* end = nullptr)
      const;

  uint64_t entry_count() const { return entry_count_; }
  uint64_t file_size() const { return file_size_; }
  const std::string& min_key() const { return min_key_; }
  const std::string& max_key() const { return max_key_; }

 private:
  friend class SSTableIterator;

  struct IndexEntry {
    std::string last_key;
    uint64_t offset = 0;
    uint32_t length = 0;
  };

  SSTableReader() = default;

  Status ReadBlock(size_t index_pos, std::vector<InternalEntry>* out) const;
  bool BloomMayContain(std::string_view key) const;

  std::unique_ptr<RandomAccessFile> file_;
  std::string path_;
  MetricsRegistry* metrics_ = nullptr;
  std::vector<IndexEntry> index_;
  std::string bloom_bits_;
  uint32_t bloom_nbits_ = 0;
  int bloom_k_ = 0;
  uint64_t entry_count_ = 0;
  uint64_t file_size_ = 0;
  std::string min_key_;
  std::string max_key_;
};

// Open-reader map shared by the read path and compaction.
class TableCache {
 public:
  TableCache(Env* env, const Config& config, std::string sst_dir,
             MetricsRegistry* metrics)
      : env_(env), config_(config), dir_(std::move(sst_dir)),
        metrics_(metrics) {}

  Status Get(uint64_t file_number, std::shared_ptr<SSTableReader>* out);
  void Evict(uint64_t file_number);

 private:
  Env* const env_;
  const Config config_;
  const std::string dir_;
  MetricsRegistry* const metrics_;
  std::mutex mu_;
  std::map<uint64_t, std::shared_ptr<SSTableReader>> readers_;
};

}  // namespace bvlsm

#endif  // BVLSM_SSTABLE_H
