#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

namespace rangekit {

/// A point (or step) on the two-dimensional integer lattice.
struct Vec2i {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend bool operator==(Vec2i a, Vec2i b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(Vec2i a, Vec2i b) { return !(a == b); }
  friend Vec2i operator+(Vec2i a, Vec2i b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2i operator-(Vec2i a, Vec2i b) { return {a.x - b.x, a.y - b.y}; }
  Vec2i operator-() const { return {-x, -y}; }
};

inline std::uint64_t pack_site(Vec2i v) {
  return (std::uint64_t(std::uint32_t(v.x)) << 32) | std::uint64_t(std::uint32_t(v.y));
}

inline Vec2i unpack_site(std::uint64_t k) {
  return {std::int32_t(std::uint32_t(k >> 32)), std::int32_t(std::uint32_t(k))};
}

// Slot marker: (INT32_MIN, INT32_MIN) is unreachable for any walk of
// length < 2^30 started at the origin with bounded steps.
inline constexpr std::uint64_t kEmptySite =
    (std::uint64_t(0x80000000u) << 32) | std::uint64_t(0x80000000u);

inline std::uint64_t site_hash(std::uint64_t k) {
  // splitmix64 finalizer
  k ^= k >> 30;
  k *= 0xbf58476d1ce4e5b9ull;
  k ^= k >> 27;
  k *= 0x94d049bb133111ebull;
  k ^= k >> 31;
  return k;
}

/// Open-addressing set of lattice sites (linear probing, power-of-two
/// capacity). Insert-only; clear() reuses the allocation. Tuned for the
/// hot loop of range counting, where std::unordered_set is several times
/// slower.
class SiteSet {
 public:
  explicit SiteSet(std::size_t expected = 64) { rehash(capacity_for(expected)); }

  /// Inserts v; returns true if it was not present.
  bool insert(Vec2i v) {
    if (size_ + 1 > (mask_ + 1) - ((mask_ + 1) >> 2)) rehash((mask_ + 1) * 2);
    const std::uint64_t key = pack_site(v);
    std::size_t i = site_hash(key) & mask_;
    while (true) {
      std::uint64_t k = slots_[i];
      if (k == kEmptySite) {
        slots_[i] = key;
        ++size_;
        return true;
      }
      if (k == key) return false;
      i = (i + 1) & mask_;
    }
  }

  bool contains(Vec2i v) const {
    const std::uint64_t key = pack_site(v);
    std::size_t i = site_hash(key) & mask_;
    while (true) {
      std::uint64_t k = slots_[i];
      if (k == kEmptySite) return false;
      if (k == key) return true;
      i = (i + 1) & mask_;
    }
  }

  std::size_t size() const { return size_; }

  void clear() {
    std::fill(slots_.begin(), slots_.end(), kEmptySite);
    size_ = 0;
  }

 private:
  static std::size_t capacity_for(std::size_t expected) {
    std::size_t c = 64;
    while (c < expected * 2) c <<= 1;
    return c;
  }

  void rehash(std::size_t new_cap) {
    std::vector<std::uint64_t> old;
    old.swap(slots_);
    slots_.assign(new_cap, kEmptySite);
    mask_ = new_cap - 1;
    size_ = 0;
    for (std::uint64_t k : old) {
      if (k == kEmptySite) continue;
      std::size_t i = site_hash(k) & mask_;
      while (slots_[i] != kEmptySite) i = (i + 1) & mask_;
      slots_[i] = k;
      ++size_;
    }
  }

  std::vector<std::uint64_t> slots_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

/// Open-addressing site -> 64-bit value map with the same layout tricks
/// as SiteSet. Used for occupation counts and for the prefix-sum tables
/// of the shifted intersection-count dynamic program.
template <class V>
class SiteMap {
 public:
  explicit SiteMap(std::size_t expected = 64) { rehash(capacity_for(expected)); }

  V& operator[](Vec2i v) {
    if (size_ + 1 > (mask_ + 1) - ((mask_ + 1) >> 2)) rehash((mask_ + 1) * 2);
    const std::uint64_t key = pack_site(v);
    std::size_t i = site_hash(key) & mask_;
    while (true) {
      std::uint64_t k = keys_[i];
      if (k == kEmptySite) {
        keys_[i] = key;
        vals_[i] = V{};
        ++size_;
        return vals_[i];
      }
      if (k == key) return vals_[i];
      i = (i + 1) & mask_;
    }
  }

  const V* find(Vec2i v) const {
    const std::uint64_t key = pack_site(v);
    std::size_t i = site_hash(key) & mask_;
    while (true) {
      std::uint64_t k = keys_[i];
      if (k == kEmptySite) return nullptr;
      if (k == key) return &vals_[i];
      i = (i + 1) & mask_;
    }
  }

  std::size_t size() const { return size_; }

  void clear() {
    std::fill(keys_.begin(), keys_.end(), kEmptySite);
    size_ = 0;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i <= mask_; ++i)
      if (keys_[i] != kEmptySite) f(unpack_site(keys_[i]), vals_[i]);
  }

 private:
  static std::size_t capacity_for(std::size_t expected) {
    std::size_t c = 64;
    while (c < expected * 2) c <<= 1;
    return c;
  }

  void rehash(std::size_t new_cap) {
    std::vector<std::uint64_t> old_keys;
    std::vector<V> old_vals;
    old_keys.swap(keys_);
    old_vals.swap(vals_);
    keys_.assign(new_cap, kEmptySite);
    vals_.assign(new_cap, V{});
    mask_ = new_cap - 1;
    size_ = 0;
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
      if (old_keys[i] == kEmptySite) continue;
      std::size_t j = site_hash(old_keys[i]) & mask_;
      while (keys_[j] != kEmptySite) j = (j + 1) & mask_;
      keys_[j] = old_keys[i];
      vals_[j] = old_vals[i];
      ++size_;
    }
  }

  std::vector<std::uint64_t> keys_;
  std::vector<V> vals_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace rangekit
