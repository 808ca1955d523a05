#include <algorithm>
#include <map>
#include <mutex>
#include <random>
#include <set>

#include "bvlsm/env.h"

namespace bvlsm {

namespace {

struct FileState {
  std::mutex mu;
  std::string content;
  size_t synced_size = 0;
};

}  // namespace

struct MemEnv::Impl {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<FileState>> files;
  std::set<std::string> dirs;
  uint64_t sync_count = 0;
  bool armed = false;
  uint64_t remaining_ok_syncs = 0;
  bool crashed = false;

  Status CheckAlive() {
    if (crashed) return Status::IOError("simulated crash: device lost");
    return Status::OK();
  }

  // Returns true when this sync is allowed to take effect.
  bool OnSync() {
    sync_count++;
    if (!armed) return true;
    if (remaining_ok_syncs == 0) {
      crashed = true;
      armed = false;
      return false;
    }
    remaining_ok_syncs--;
    return true;
  }
};

namespace {

class MemWritableFile : public WritableFile {
 public:
  MemWritableFile(MemEnv::Impl* env, std::shared_ptr<FileState> file)
      : env_(env), file_(std::move(file)) {}

  Status Append(std::string_view data) override {
    {
      std::lock_guard<std::mutex> env_lock(env_->mu);
      Status s = env_->CheckAlive();
      if (!s.ok()) return s;
    }
    std::lock_guard<std::mutex> lock(file_->mu);
    file_->content.append(data);
    return Status::OK();
  }

  Status Sync() override {
    std::lock_guard<std::mutex> env_lock(env_->mu);
    Status s = env_->CheckAlive();
    if (!s.ok()) return s;
    if (!env_->OnSync()) return Status::IOError("simulated crash during sync");
    std::lock_guard<std::mutex> lock(file_->mu);
    file_->synced_size = file_->content.size();
    return Status::OK();
  }

  Status Close() override { return Status::OK(); }

 private:
  MemEnv::Impl* env_;
  std::shared_ptr<FileState> file_;
};

class MemRandomAccessFile : public RandomAccessFile {
 public:
  explicit MemRandomAccessFile(std::shared_ptr<FileState> file)
      : file_(std::move(file)) {}

  Status Read(uint64_t offset, size_t n, std::string* out) const override {
    std::lock_guard<std::mutex> lock(file_->mu);
    out->clear();
    if (offset >= file_->content.size()) return Status::OK();
    size_t avail = file_->content.size() - static_cast<size_t>(offset);
    out->assign(file_->content.data() + offset, std::min(n, avail));
    return Status::OK();
  }

 private:
  std::shared_ptr<FileState> file_;
};

}  // namespace

MemEnv::MemEnv() : impl_(std::make_unique<Impl>()) {}
MemEnv::~MemEnv() = default;

Status MemEnv::NewWritableFile(const std::string& path, bool truncate,
                               std::unique_ptr<WritableFile>* out) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Status s = impl_->CheckAlive();
  if (!s.ok()) return s;
  auto& slot = impl_->files[path];
  if (!slot) slot = std::make_shared<FileState>();
  if (truncate) {
    std::lock_guard<std::mutex> flock(slot->mu);
    slot->content.clear();
    slot->synced_size = 0;
  }
  *out = std::make_unique<MemWritableFile>(impl_.get(), slot);
  return Status::OK();
}

Status MemEnv::NewRandomAccessFile(const std::string& path,
                                   std::unique_ptr<RandomAccessFile>* out) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto it = impl_->files.find(path);
  if (it == impl_->files.end()) {
    return Status::IOError("no such file: " + path);
  }
  *out = std::make_unique<MemRandomAccessFile>(it->second);
  return Status::OK();
}

bool MemEnv::FileExists(const std::string& path) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->files.count(path) > 0;
}

Status MemEnv::GetFileSize(const std::string& path, uint64_t* size) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto it = impl_->files.find(path);
  if (it == impl_->files.end()) {
    return Status::IOError("no such file: " + path);
  }
  std::lock_guard<std::mutex> flock(it->second->mu);
  *size = it->second->content.size();
  return Status::OK();
}

Status MemEnv::GetChildren(const std::string& dir,
                           std::vector<std::string>* out) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  out->clear();
  std::set<std::string> names;
  const std::string prefix = dir + "/";
  for (const auto& [path, file] : impl_->files) {
    if (path.rfind(prefix, 0) != 0) continue;
    std::string rest = path.substr(prefix.size());
    size_t slash = rest.find('/');
    names.insert(slash == std::string::npos ? rest : rest.substr(0, slash));
  }
  for (const auto& d : impl_->dirs) {
    if (d.rfind(prefix, 0) != 0) continue;
    std::string rest = d.substr(prefix.size());
    size_t slash = rest.find('/');
    names.insert(slash == std::string::npos ? rest : rest.substr(0, slash));
  }
  out->assign(names.begin(), names.end());
  return Status::OK();
}

Status MemEnv::CreateDirIfMissing(const std::string& dir) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Status s = impl_->CheckAlive();
  if (!s.ok()) return s;
  impl_->dirs.insert(dir);
  return Status::OK();
}

Status MemEnv::RemoveFile(const std::string& path) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Status s = impl_->CheckAlive();
  if (!s.ok()) return s;
  if (impl_->files.erase(path) == 0) {
    return Status::IOError("no such file: " + path);
  }
  return Status::OK();
}

Status MemEnv::Truncate(const std::string& path, uint64_t size) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Status s = impl_->CheckAlive();
  if (!s.ok()) return s;
  auto it = impl_->files.find(path);
  if (it == impl_->files.end()) {
    return Status::IOError("no such file: " + path);
  }
  std::lock_guard<std::mutex> flock(it->second->mu);
  auto& f = *it->second;
  if (size < f.content.size()) f.content.resize(static_cast<size_t>(size));
  f.synced_size = std::min(f.synced_size, static_cast<size_t>(size));
  return Status::OK();
}

Status MemEnv::RenameFile(const std::string& from, const std::string& to) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  Status s = impl_->CheckAlive();
  if (!s.ok()) return s;
  auto it = impl_->files.find(from);
  if (it == impl_->files.end()) {
    return Status::IOError("no such file: " + from);
  }
  impl_->files[to] = it->second;
  impl_->files.erase(it);
  return Status::OK();
}

void MemEnv::ArmCrashAfterSyncs(uint64_t n) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->armed = true;
  impl_->remaining_ok_syncs = n;
}

uint64_t MemEnv::sync_count() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->sync_count;
}

bool MemEnv::crashed() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->crashed;
}

void MemEnv::SimulateCrash(uint64_t rng_seed) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::mt19937_64 rng(rng_seed);
  for (auto& [path, file] : impl_->files) {
    std::lock_guard<std::mutex> flock(file->mu);
    if (file->content.size() > file->synced_size) {
      size_t unsynced = file->content.size() - file->synced_size;
      size_t keep = file->synced_size +
                    static_cast<size_t>(rng() % (unsynced + 1));
      file->content.resize(keep);
    }
    file->synced_size = file->content.size();
  }
  impl_->crashed = false;
  impl_->armed = false;
}

}  // namespace bvlsm
