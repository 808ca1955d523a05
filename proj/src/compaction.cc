#include "bvlsm/compaction.h"

#include "bvlsm/bvstore.h"

namespace bvlsm {

MergingIterator::MergingIterator(
    std::vector<std::unique_ptr<EntryIterator>> children)
    : children_(std::move(children)) {
  FindSmallest();
}

void MergingIterator::FindSmallest() {
  current_ = -1;
  for (size_t i = 0; i < children_.size(); i++) {
    if (!children_[i]->Valid()) continue;
    if (current_ < 0) {
      current_ = static_cast<int>(i);
      continue;
    }
    const InternalEntry& a = children_[i]->entry();
    const InternalEntry& b = children_[static_cast<size_t>(current_)]->entry();
    if (EntryOrderLess(a.key, a.seq, b.key, b.seq)) {
      current_ = static_cast<int>(i);
    }
  }
}

bool MergingIterator::Valid() const { return current_ >= 0; }

const InternalEntry& MergingIterator::entry() const {
  return children_[static_cast<size_t>(current_)]->entry();
}

void MergingIterator::Next() {
  children_[static_cast<size_t>(current_)]->Next();
  FindSmallest();
}

Status MergingIterator::status() const {
  for (const auto& child : children_) {
    Status s = child->status();
    if (!s.ok()) return s;
  }
  return Status::OK();
}

Status RunCompaction(Env* env, const Config& config,
                     const std::string& sst_dir,
                     const std::function<uint64_t()>& next_file_number,
                     const Version& base, const CompactionJob& job,
                     TableCache* cache, MetricsRegistry* metrics,
                     VersionEdit* edit) {
  *edit = VersionEdit{};

  std::vector<std::unique_ptr<EntryIterator>> children;
  uint64_t bytes_read = 0;
  for (const auto* input_list : {&job.inputs, &job.next_inputs}) {
    for (const auto& meta : *input_list) {
      std::shared_ptr<SSTableReader> reader;
      Status s = cache->Get(meta.file_number, &reader);
      if (!s.ok()) return s;
      children.push_back(reader->NewIterator());
      bytes_read += meta.file_size;
      edit->deleted_files.push_back(meta.file_number);
    }
  }
  MergingIterator merged(std::move(children));

  const int output_level = job.output_level();
  std::unique_ptr<SSTableBuilder> builder;
  uint64_t builder_file = 0;
  uint64_t bytes_written = 0;

  auto finish_output = [&]() -> Status {
    if (!builder) return Status::OK();
    TableMeta meta;
    Status s = builder->Finish(&meta);
    if (!s.ok()) return s;
    meta.level = output_level;
    bytes_written += meta.file_size;
    edit->added.emplace_back(output_level, std::move(meta));
    builder.reset();
    return Status::OK();
  };

  std::string last_key;
  bool have_last = false;
  for (; merged.Valid(); merged.Next()) {
    const InternalEntry& e = merged.entry();
    const bool newest_for_key = !have_last || e.key != last_key;
    have_last = true;
    last_key = e.key;

    bool keep = newest_for_key;
    if (keep && e.kind == EntryKind::kDelete &&
        !base.HasOverlapBelow(output_level, e.key)) {
      // Tombstone at the bottom of the key's range: nothing left to shadow.
      keep = false;
    }
    if (!keep) {
      if (e.payload == PayloadKind::kPointer) {
        metrics->Record(Counter::kBValueDeadBytes,
                        BValueStore::RecordSize(e.key.size(),
                                                e.pointer.length));
      }
      continue;
    }

    if (!builder) {
      builder_file = next_file_number();
      builder = std::make_unique<SSTableBuilder>(env, config, sst_dir,
                                                 builder_file);
    }
    Status s = builder->Add(e);
    if (!s.ok()) return s;
    if (builder->EstimatedSize() >= config.sst_file_size) {
      s = finish_output();
      if (!s.ok()) return s;
    }
  }
  Status s = merged.status();
  if (!s.ok()) return s;
  s = finish_output();
  if (!s.ok()) return s;

  metrics->Record(Counter::kCompactionReadBytes, bytes_read);
  metrics->Record(Counter::kCompactionWriteBytes, bytes_written);
  metrics->Record(Counter::kCompactionCount, 1);
  return Status::OK();
}

}  // namespace bvlsm
