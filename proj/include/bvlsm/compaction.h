#ifndef BVLSM_COMPACTION_H
#define BVLSM_COMPACTION_H

#include <functional>
#include <memory>
#include <vector>

#include "bvlsm/config.h"
#include "bvlsm/env.h"
#include "bvlsm/metrics.h"
#include "bvlsm/sstable.h"
#include "bvlsm/status.h"
#include "bvlsm/version.h"

namespace bvlsm {

// K-way merge over sorted child streams in (key asc, seq desc) order.
class MergingIterator : public EntryIterator {
 public:
  explicit MergingIterator(std::vector<std::unique_ptr<EntryIterator>> children);

  bool Valid() const override;
  const InternalEntry& entry() const override;
  void Next() override;
  Status status() const override;

 private:
  void FindSmallest();

  std::vector<std::unique_ptr<EntryIterator>> children_;
  int current_ = -1;
};

// Merges the job's inputs, keeps the newest entry per key, drops older
// duplicates, drops tombstones only when no deeper level overlaps the key,
// and writes outputs at level+1 split at the table-size target. BValue files
// are never touched; dropped pointer entries are accounted as dead bytes.
// Returns the edit deleting inputs and adding outputs; the caller commits it.
Status RunCompaction(Env* env, const Config& config, const std::string& sst_dir,
                     const std::function<uint64_t()>& next_file_number,
                     const Version& base, const CompactionJob& job,
                     TableCache* cache, MetricsRegistry* metrics,
                     VersionEdit* edit);

}  // namespace bvlsm

#endif  // BVLSM_COMPACTION_H
