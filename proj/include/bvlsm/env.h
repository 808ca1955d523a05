#ifndef BVLSM_ENV_H
#define BVLSM_ENV_H

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "bvlsm/status.h"

namespace bvlsm {

// Append-only writable file.
class WritableFile {
 public:
  virtual ~WritableFile() = default;
  virtual Status Append(std::string_view data) = 0;
  // Flushes application buffers and synchronizes to the device.
  virtual Status Sync() = 0;
  virtual Status Close() = 0;
};

class RandomAccessFile {
 public:
  virtual ~RandomAccessFile() = default;
  // Reads up to n bytes at offset into *out (resized to the bytes actually
  // read). A short read at end-of-file is not an error.
  virtual Status Read(uint64_t offset, size_t n, std::string* out) const = 0;
};

// Filesystem abstraction. The default implementation is POSIX; an in-memory
// implementation with crash simulation backs the test harnesses.
class Env {
 public:
  virtual ~Env() = default;

  static Env* Default();  // process-wide POSIX env

  // Opens for appending. When truncate is true any existing file is
  // discarded; otherwise writes continue at the current end.
  virtual Status NewWritableFile(const std::string& path, bool truncate,
                                 std::unique_ptr<WritableFile>* out) = 0;
  virtual Status NewRandomAccessFile(
      const std::string& path, std::unique_ptr<RandomAccessFile>* out) = 0;

  virtual bool FileExists(const std::string& path) = 0;
  virtual Status GetFileSize(const std::string& path, uint64_t* size) = 0;
  // Names (not paths) of directory entries.
  virtual Status GetChildren(const std::string& dir,
                             std::vector<std::string>* out) = 0;
  virtual Status CreateDirIfMissing(const std::string& dir) = 0;
  virtual Status RemoveFile(const std::string& path) = 0;
  virtual Status Truncate(const std::string& path, uint64_t size) = 0;
  // Atomic replace.
  virtual Status RenameFile(const std::string& from, const std::string& to) = 0;
};

Status ReadFileToString(Env* env, const std::string& path, std::string* out);

// Writes via a temp file, syncs, then renames over the target.
Status WriteStringToFileSync(Env* env, std::string_view data,
                             const std::string& path);

// In-memory Env with crash-injection hooks used by the recovery tests. All
// state lives in this object; files survive across engine instances opened
// against it, which models reopen-after-crash without touching the real
// filesystem.
class MemEnv : public Env {
 public:
  MemEnv();
  ~MemEnv() override;

  Status NewWritableFile(const std::string& path, bool truncate,
                         std::unique_ptr<WritableFile>* out) override;
  Status NewRandomAccessFile(const std::string& path,
                             std::unique_ptr<RandomAccessFile>* out) override;
  bool FileExists(const std::string& path) override;
  Status GetFileSize(const std::string& path, uint64_t* size) override;
  Status GetChildren(const std::string& dir,
                     std::vector<std::string>* out) override;
  Status CreateDirIfMissing(const std::string& dir) override;
  Status RemoveFile(const std::string& path) override;
  Status Truncate(const std::string& path, uint64_t size) override;
  Status RenameFile(const std::string& from, const std::string& to) override;

  // --- crash injection ---
  // After n more Sync() calls succeed, the next sync and every operation
  // that follows fails with IOError, as if the process lost its disk.
  void ArmCrashAfterSyncs(uint64_t n);
  // Total Sync() calls observed so far (armed runs included).
  uint64_t sync_count() const;
  // Discards unsynced data: every file keeps its synced prefix plus a
  // random-length cut of the unsynced suffix (torn tail). Clears the crashed
  // flag so a fresh engine can be opened against the surviving state.
  void SimulateCrash(uint64_t rng_seed);
  bool crashed() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bvlsm

#endif  // BVLSM_ENV_H
