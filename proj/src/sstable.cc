#include "bvlsm/sstable.h"

#include <cinttypes>
#include <cstdio>

#include "bvlsm/coding.h"
#include "bvlsm/crc32c.h"
#include "bvlsm/hash.h"

namespace bvlsm {

namespace {

constexpr uint64_t kBloomSeed1 = 0xA5A5A5A55A5A5A5Aull;
constexpr uint64_t kBloomSeed2 = 0x0123456789ABCDEFull;
constexpr int kBloomK = 7;

// g_i = h1 + i * h2 over an nbits-sized bit array.
void BloomAdd(std::string* bits, uint32_t nbits, std::string_view key) {
  uint64_t h1 = Hash64(key, kBloomSeed1);
  uint64_t h2 = Hash64(key, kBloomSeed2) | 1;
  for (int i = 0; i < kBloomK; i++) {
    uint64_t bit = (h1 + static_cast<uint64_t>(i) * h2) % nbits;
    (*bits)[bit / 8] |= static_cast<char>(1u << (bit % 8));
  }
}

bool BloomTest(std::string_view bits, uint32_t nbits, int k,
               std::string_view key) {
  uint64_t h1 = Hash64(key, kBloomSeed1);
  uint64_t h2 = Hash64(key, kBloomSeed2) | 1;
  for (int i = 0; i < k; i++) {
    uint64_t bit = (h1 + static_cast<uint64_t>(i) * h2) % nbits;
    if ((static_cast<uint8_t>(bits[bit / 8]) & (1u << (bit % 8))) == 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::string SstFileName(const std::string& dir, uint64_t file_number) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%010" PRIu64 ".sst", file_number);
  return dir + "/" + buf;
}

bool ParseSstFileName(std::string_view name, uint64_t* file_number) {
  if (name.size() != 14 || name.substr(10) != ".sst") return false;
  uint64_t v = 0;
  for (char c : name.substr(0, 10)) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<uint64_t>(c - '0');
  }
  *file_number = v;
  return true;
}

SSTableBuilder::SSTableBuilder(Env* env, const Config& config,
                               const std::string& dir, uint64_t file_number)
    : env_(env), config_(config), path_(SstFileName(dir, file_number)),
      file_number_(file_number) {}

Status SSTableBuilder::EnsureOpen() {
  if (file_) return Status::OK();
  return env_->NewWritableFile(path_, /*truncate=*/true, &file_);
}

Status SSTableBuilder::FlushBlock() {
  if (block_.empty()) return Status::OK();
  PutLengthPrefixed(&index_, last_block_key_);
  PutFixed64(&index_, offset_);
  PutFixed32(&index_, static_cast<uint32_t>(block_.size()));
  Status s = file_->Append(block_);
  offset_ += block_.size();
  block_.clear();
  return s;
}

Status SSTableBuilder::Add(const InternalEntry& e) {
  if (!status_.ok()) return status_;
  if (entry_count_ > 0 && !EntryOrderLess(prev_key_, prev_seq_, e.key, e.seq)) {
    status_ = Status::InvalidArgument("unsorted sstable input");
    return status_;
  }
  Status s = EnsureOpen();
  if (!s.ok()) return status_ = s;

  std::string encoded;
  EncodeEntry(e, &encoded);
  if (!block_.empty() &&
      block_.size() + encoded.size() > config_.sst_block_size) {
    s = FlushBlock();
    if (!s.ok()) return status_ = s;
  }
  if (entry_count_ == 0) min_key_ = e.key;
  block_.append(encoded);
  last_block_key_ = e.key;
  max_key_ = e.key;
  keys_.push_back(e.key);
  entry_count_++;
  prev_key_ = e.key;
  prev_seq_ = e.seq;
  return Status::OK();
}

Status SSTableBuilder::Finish(TableMeta* meta) {
  if (!status_.ok()) return status_;
  if (entry_count_ == 0) {
    return Status::InvalidArgument("cannot build empty sstable");
  }
  Status s = FlushBlock();
  if (!s.ok()) return status_ = s;

  const uint64_t index_off = offset_;
  s = file_->Append(index_);
  if (!s.ok()) return status_ = s;
  offset_ += index_.size();

  uint64_t nbits64 = std::max<uint64_t>(
      64, entry_count_ * static_cast<uint64_t>(config_.bloom_bits_per_key));
  nbits64 = (nbits64 + 7) / 8 * 8;
  const uint32_t nbits = static_cast<uint32_t>(nbits64);
  std::string bloom_block;
  PutFixed32(&bloom_block, nbits);
  std::string bits(nbits / 8, '\0');
  for (const auto& k : keys_) BloomAdd(&bits, nbits, k);
  bloom_block.append(bits);
  bloom_block.push_back(static_cast<char>(kBloomK));

  const uint64_t bloom_off = offset_;
  s = file_->Append(bloom_block);
  if (!s.ok()) return status_ = s;
  offset_ += bloom_block.size();

  std::string footer;
  PutFixed64(&footer, index_off);
  PutFixed32(&footer, static_cast<uint32_t>(index_.size()));
  PutFixed64(&footer, bloom_off);
  PutFixed32(&footer, static_cast<uint32_t>(bloom_block.size()));
  PutFixed64(&footer, entry_count_);
  PutLengthPrefixed(&footer, min_key_);
  PutLengthPrefixed(&footer, max_key_);
  const uint32_t footer_crc = crc32c::Value(footer);
  PutFixed32(&footer, footer_crc);
  const uint32_t footer_len = static_cast<uint32_t>(footer.size());
  PutFixed32(&footer, footer_len);
  PutFixed32(&footer, kSstMagic);

  s = file_->Append(footer);
  if (s.ok()) s = file_->Sync();
  if (s.ok()) s = file_->Close();
  if (!s.ok()) return status_ = s;
  offset_ += footer.size();

  meta->file_number = file_number_;
  meta->file_size = offset_;
  meta->entry_count = entry_count_;
  meta->min_key = min_key_;
  meta->max_key = max_key_;
  return Status::OK();
}

Status BuildSSTable(Env* env, const Config& config, const std::string& dir,
                    uint64_t file_number, EntryIterator* input,
                    TableMeta* meta) {
  if (!input->Valid()) {
    return Status::InvalidArgument("cannot build empty sstable");
  }
  SSTableBuilder builder(env, config, dir, file_number);
  for (; input->Valid(); input->Next()) {
    Status s = builder.Add(input->entry());
    if (!s.ok()) return s;
  }
  Status s = input->status();
  if (!s.ok()) return s;
  return builder.Finish(meta);
}

Status SSTableReader::Open(Env* env, const Config& config,
                           const std::string& dir, uint64_t file_number,
                           MetricsRegistry* metrics,
                           std::shared_ptr<SSTableReader>* out) {
  (void)config;
  auto reader = std::shared_ptr<SSTableReader>(new SSTableReader());
  reader->path_ = SstFileName(dir, file_number);
  reader->metrics_ = metrics;
  Status s = env->NewRandomAccessFile(reader->path_, &reader->file_);
  if (!s.ok()) return s;
  uint64_t size = 0;
  s = env->GetFileSize(reader->path_, &size);
  if (!s.ok()) return s;
  if (size < 8) return Status::Corruption("sstable too small: " + reader->path_);
  reader->file_size_ = size;

  std::string tail;
  s = reader->file_->Read(size - 8, 8, &tail);
  if (!s.ok()) return s;
  if (tail.size() != 8 || DecodeFixed32(tail.data() + 4) != kSstMagic) {
    return Status::Corruption("bad sstable magic: " + reader->path_);
  }
  const uint32_t footer_len = DecodeFixed32(tail.data());
  if (footer_len + 8 > size || footer_len < 4) {
    return Status::Corruption("bad sstable footer length: " + reader->path_);
  }
  std::string footer;
  s = reader->file_->Read(size - 8 - footer_len, footer_len, &footer);
  if (!s.ok()) return s;
  if (footer.size() != footer_len) {
    return Status::Corruption("short sstable footer read: " + reader->path_);
  }
  const uint32_t stored_crc = DecodeFixed32(footer.data() + footer_len - 4);
  if (crc32c::Value(footer.data(), footer_len - 4) != stored_crc) {
    return Status::Corruption("sstable footer crc mismatch: " + reader->path_);
  }

  std::string_view body(footer.data(), footer_len - 4);
  if (body.size() < 32) {
    return Status::Corruption("sstable footer truncated: " + reader->path_);
  }
  const uint64_t index_off = DecodeFixed64(body.data());
  const uint32_t index_len = DecodeFixed32(body.data() + 8);
  const uint64_t bloom_off = DecodeFixed64(body.data() + 12);
  const uint32_t bloom_len = DecodeFixed32(body.data() + 20);
  reader->entry_count_ = DecodeFixed64(body.data() + 24);
  body.remove_prefix(32);
  std::string_view min_key, max_key;
  if (!GetLengthPrefixed(&body, &min_key) ||
      !GetLengthPrefixed(&body, &max_key)) {
    return Status::Corruption("sstable footer keys truncated: " +
                              reader->path_);
  }
  reader->min_key_.assign(min_key);
  reader->max_key_.assign(max_key);

  std::string index_block;
  s = reader->file_->Read(index_off, index_len, &index_block);
  if (!s.ok()) return s;
  if (index_block.size() != index_len) {
    return Status::Corruption("short sstable index read: " + reader->path_);
  }
  std::string_view in(index_block);
  while (!in.empty()) {
    std::string_view key;
    if (!GetLengthPrefixed(&in, &key) || in.size() < 12) {
      return Status::Corruption("sstable index malformed: " + reader->path_);
    }
    IndexEntry ie;
    ie.last_key.assign(key);
    ie.offset = DecodeFixed64(in.data());
    ie.length = DecodeFixed32(in.data() + 8);
    in.remove_prefix(12);
    reader->index_.push_back(std::move(ie));
  }

  std::string bloom_block;
  s = reader->file_->Read(bloom_off, bloom_len, &bloom_block);
  if (!s.ok()) return s;
  if (bloom_block.size() != bloom_len || bloom_len < 5) {
    return Status::Corruption("sstable bloom malformed: " + reader->path_);
  }
  reader->bloom_nbits_ = DecodeFixed32(bloom_block.data());
  reader->bloom_k_ = static_cast<uint8_t>(bloom_block.back());
  if (bloom_block.size() != 4 + reader->bloom_nbits_ / 8 + 1) {
    return Status::Corruption("sstable bloom size mismatch: " + reader->path_);
  }
  reader->bloom_bits_ = bloom_block.substr(4, reader->bloom_nbits_ / 8);

  *out = std::move(reader);
  return Status::OK();
}

bool SSTableReader::BloomMayContain(std::string_view key) const {
  if (metrics_ != nullptr) metrics_->Record(Counter::kBloomChecks, 1);
  if (BloomTest(bloom_bits_, bloom_nbits_, bloom_k_, key)) return true;
  if (metrics_ != nullptr) metrics_->Record(Counter::kBloomNegatives, 1);
  return false;
}

Status SSTableReader::ReadBlock(size_t index_pos,
                                std::vector<InternalEntry>* out) const {
  const IndexEntry& ie = index_[index_pos];
  std::string raw;
  Status s = file_->Read(ie.offset, ie.length, &raw);
  if (!s.ok()) return s;
  if (raw.size() != ie.length) {
    return Status::Corruption("short sstable block read: " + path_);
  }
  if (metrics_ != nullptr) metrics_->Record(Counter::kSstBlocksRead, 1);
  out->clear();
  std::string_view in(raw);
  while (!in.empty()) {
    InternalEntry e;
    size_t consumed = 0;
    s = DecodeEntry(in, &e, &consumed);
    if (!s.ok()) {
      return Status::Corruption("sstable block entry malformed: " + path_);
    }
    in.remove_prefix(consumed);
    out->push_back(std::move(e));
  }
  return Status::OK();
}

Status SSTableReader::Get(std::string_view key, SequenceNumber at_seq,
                          std::optional<EntryValue>* result) const {
  result->reset();
  if (key < min_key_ || key > max_key_) return Status::OK();
  if (!BloomMayContain(key)) return Status::OK();

  // First block whose last key is >= key.
  size_t lo = 0, hi = index_.size();
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (index_[mid].last_key < key) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  std::vector<InternalEntry> entries;
  for (size_t pos = lo; pos < index_.size(); pos++) {
    Status s = ReadBlock(pos, &entries);
    if (!s.ok()) return s;
    for (const auto& e : entries) {
      if (e.key != key) {
        if (e.key > key) return Status::OK();
        continue;
      }
      if (e.seq <= at_seq) {
        *result = e.value();
        return Status::OK();
      }
    }
    // All entries in this block were for smaller keys or newer sequence
    // numbers; the key may continue in the next block only if it is the
    // block's last key.
    if (index_[pos].last_key != key) return Status::OK();
  }
  return Status::OK();
}

class SSTableIterator : public EntryIterator {
 public:
  SSTableIterator(std::shared_ptr<const SSTableReader> reader,
                  const std::string* begin, const std::string* end)
      : reader_(std::move(reader)) {
    if (begin != nullptr) begin_ = *begin;
    if (end != nullptr) end_ = *end;
    has_begin_ = begin != nullptr;
    has_end_ = end != nullptr;
    SeekToStart();
  }

  bool Valid() const override { return valid_; }
  const InternalEntry& entry() const override { return entries_[pos_]; }

  void Next() override {
    pos_++;
    if (pos_ >= entries_.size()) {
      block_++;
      LoadBlock();
    }
    CheckBounds();
  }

  Status status() const override { return status_; }

 private:
  void SeekToStart() {
    const auto& index = Index();
    if (!has_begin_) {
      block_ = 0;
      LoadBlock();
      CheckBounds();
      return;
    }
    size_t lo = 0, hi = index.size();
    while (lo < hi) {
      size_t mid = (lo + hi) / 2;
      if (index[mid].last_key < begin_) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    block_ = lo;
    LoadBlock();
    while (valid_ && entries_[pos_].key < begin_) {
      pos_++;
      if (pos_ >= entries_.size()) {
        block_++;
        LoadBlock();
      }
    }
    CheckBounds();
  }

  const std::vector<SSTableReader::IndexEntry>& Index() const {
    return reader_->index_;
  }

  void LoadBlock() {
    pos_ = 0;
    entries_.clear();
    valid_ = false;
    if (block_ >= Index().size()) return;
    Status s = reader_->ReadBlock(block_, &entries_);
    if (!s.ok()) {
      status_ = s;
      return;
    }
    valid_ = !entries_.empty();
  }

  void CheckBounds() {
    if (valid_ && pos_ < entries_.size()) {
      if (has_end_ && entries_[pos_].key >= end_) valid_ = false;
    } else {
      valid_ = false;
    }
  }

  std::shared_ptr<const SSTableReader> reader_;
  std::string begin_, end_;
  bool has_begin_ = false, has_end_ = false;
  size_t block_ = 0;
  size_t pos_ = 0;
  std::vector<InternalEntry> entries_;
  bool valid_ = false;
  Status status_;
};

std::unique_ptr<EntryIterator> SSTableReader::NewIterator(
    const std::string* begin, const std::string* end) const {
  return std::make_unique<SSTableIterator>(shared_from_this(), begin, end);
}

Status TableCache::Get(uint64_t file_number,
                       std::shared_ptr<SSTableReader>* out) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = readers_.find(file_number);
  if (it != readers_.end()) {
    *out = it->second;
    return Status::OK();
  }
  Status s = SSTableReader::Open(env_, config_, dir_, file_number, metrics_,
                                 out);
  if (!s.ok()) return s;
  readers_[file_number] = *out;
  return Status::OK();
}

void TableCache::Evict(uint64_t file_number) {
  std::lock_guard<std::mutex> lock(mu_);
  readers_.erase(file_number);
}

}  // namespace bvlsm
