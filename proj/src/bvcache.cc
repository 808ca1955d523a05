#include "bvlsm/bvcache.h"

namespace bvlsm {

BVCache::BVCache(size_t capacity_bytes, CachePolicy policy,
                 MetricsRegistry* metrics)
    : capacity_(capacity_bytes), policy_(policy), metrics_(metrics) {}

std::list<BVCache::CacheEntry>::iterator BVCache::PickVictimLocked() {
  auto victim = deque_.end();
  for (auto it = deque_.begin(); it != deque_.end(); ++it) {
    if (it->resident) continue;  // pinned until durable
    if (victim == deque_.end()) {
      victim = it;
      continue;
    }
    if (policy_ == CachePolicy::kRecency) {
      if (it->last_access < victim->last_access) victim = it;
    } else {
      if (it->access_count < victim->access_count ||
          (it->access_count == victim->access_count &&
           it->last_access < victim->last_access)) {
        victim = it;
      }
    }
  }
  return victim;
}

void BVCache::EraseLocked(std::list<CacheEntry>::iterator it) {
  charged_ -= Charge(*it);
  index_.erase(it->key);
  deque_.erase(it);
}

Status BVCache::Insert(std::string_view key, const ValueOffset& voff,
                       std::optional<std::string> resident,
                       uint64_t* epoch_out) {
  std::lock_guard<std::mutex> lock(mu_);
  tick_++;

  const size_t new_charge = key.size() + kValueOffsetEncodedSize +
                            (resident ? resident->size() : 0) + 48;
  auto idx = index_.find(std::string(key));

  if (new_charge > capacity_) {
    if (idx != index_.end()) EraseLocked(idx->second);
    return Status::TooLarge("cache entry exceeds capacity");
  }

  uint64_t epoch = next_epoch_++;
  if (idx != index_.end()) {
    auto it = idx->second;
    charged_ -= Charge(*it);
    it->voff = voff;
    it->resident = std::move(resident);
    it->access_count++;
    it->last_access = tick_;
    it->epoch = epoch;
    charged_ += Charge(*it);
    deque_.splice(deque_.begin(), deque_, it);
  } else {
    CacheEntry e;
    e.key.assign(key);
    e.voff = voff;
    e.resident = std::move(resident);
    e.access_count = 1;
    e.last_access = tick_;
    e.epoch = epoch;
    deque_.push_front(std::move(e));
    index_[deque_.front().key] = deque_.begin();
    charged_ += Charge(deque_.front());
  }

  while (charged_ > capacity_) {
    auto victim = PickVictimLocked();
    if (victim == deque_.end()) {
      // Everything else is pinned; withdraw this entry so the capacity
      // invariant holds. The caller syncs the store and retries.
      auto self = index_.find(std::string(key));
      if (self != index_.end()) EraseLocked(self->second);
      return Status::Busy("all cache entries pinned");
    }
    EraseLocked(victim);
  }
  if (epoch_out != nullptr) *epoch_out = epoch;
  return Status::OK();
}

std::optional<BVCache::Hit> BVCache::Get(std::string_view key) {
  std::lock_guard<std::mutex> lock(mu_);
  tick_++;
  auto idx = index_.find(std::string(key));
  if (idx == index_.end()) {
    metrics_->Record(Counter::kCacheMisses, 1);
    return std::nullopt;
  }
  auto it = idx->second;
  it->access_count++;
  it->last_access = tick_;
  metrics_->Record(Counter::kCacheHits, 1);
  return Hit{it->voff, it->resident};
}

Status BVCache::Evict(std::string* evicted_key) {
  std::lock_guard<std::mutex> lock(mu_);
  if (deque_.empty()) return Status::NotFound("cache empty");
  auto victim = PickVictimLocked();
  if (victim == deque_.end()) return Status::Busy("all cache entries pinned");
  if (evicted_key != nullptr) *evicted_key = victim->key;
  EraseLocked(victim);
  return Status::OK();
}

void BVCache::OnPersisted(std::string_view key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto idx = index_.find(std::string(key));
  if (idx == index_.end() || !idx->second->resident) return;
  charged_ -= idx->second->resident->size();
  idx->second->resident.reset();
}

void BVCache::OnPersisted(std::string_view key, uint64_t epoch) {
  std::lock_guard<std::mutex> lock(mu_);
  auto idx = index_.find(std::string(key));
  if (idx == index_.end() || !idx->second->resident) return;
  if (idx->second->epoch != epoch) return;  // a newer write owns the slot
  charged_ -= idx->second->resident->size();
  idx->second->resident.reset();
}

size_t BVCache::charged_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return charged_;
}

size_t BVCache::entry_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return deque_.size();
}

void BVCache::Clear() {
  std::lock_guard<std::mutex> lock(mu_);
  deque_.clear();
  index_.clear();
  charged_ = 0;
}

bool BVCache::CheckConsistency() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (index_.size() != deque_.size()) return false;
  size_t charge = 0;
  for (auto it = deque_.begin(); it != deque_.end(); ++it) {
    auto idx = index_.find(it->key);
    if (idx == index_.end()) return false;
    if (idx->second != it) return false;
    charge += Charge(*it);
  }
  return charge == charged_ && charge <= capacity_;
}

}  // namespace bvlsm
