#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hammersim/adjacency.hpp"
#include "hammersim/ecc.hpp"
#include "hammersim/geometry.hpp"
#include "hammersim/rng.hpp"
#include "hammersim/victim.hpp"

namespace hammersim {

struct ReservePoolExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probability that one specific neighbor of a row closed n times is never
// given a preventive refresh, under the refresh-one-neighbor-with-probability-p
// rule (p/2 per side). Evaluated in log space so large n does not underflow to
// a meaningless zero. The both-sides variant refreshes both neighbors when the
// p-event fires, giving (1-p)^n.
inline double para_failure_probability(double p, uint64_t n, bool both_sides = false) {
  if (p < 0.0 || p > 1.0) throw ConfigError("para_failure_probability: p outside [0,1]");
  double per_close = both_sides ? p : p / 2.0;
  if (per_close == 0.0) return 1.0;
  if (per_close >= 1.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(double(n) * std::log1p(-per_close));
}

// Actions a policy may request from the engine. Neighbor refreshes execute at
// the triggering command's timestamp, count as one extra activation each, and
// do not hammer their own neighbors.
struct MitigationAction {
  enum class Kind : uint8_t {
    RefreshLeftNeighbor,
    RefreshRightNeighbor,
    RefreshBothNeighbors,
    RemapRow,
  };
  Kind kind;
  RowAddress row;  // subject row (logical)
};

// Observer interface over engine events. Policies are deterministic given
// their own seeded stream; none touches another's randomness.
class MitigationPolicy {
 public:
  virtual ~MitigationPolicy() = default;
  virtual void on_row_open(RowAddress, uint64_t, std::vector<MitigationAction>&) {}
  virtual void on_row_close(RowAddress, uint64_t, std::vector<MitigationAction>&) {}
  virtual void on_refresh_round(uint64_t) {}
  virtual void on_flip_detected(WordAddress, EccClass, std::vector<MitigationAction>&) {}
};

struct ParaConfig {
  double p = 0.005;
  bool both_sides = false;  // refresh both neighbors instead of one chosen side
  uint64_t rng_seed = 0;

  void validate() const {
    if (p < 0.0 || p > 1.0) throw ConfigError("para: p outside [0,1]");
  }
};

// Solution 7: on each row closure, with probability p refresh one adjacent
// row, chosen uniformly. State is exactly one RNG stream.
class ParaPolicy final : public MitigationPolicy {
 public:
  explicit ParaPolicy(const ParaConfig& cfg) : cfg_(cfg), rng_(cfg.rng_seed) { cfg_.validate(); }

  void on_row_close(RowAddress addr, uint64_t, std::vector<MitigationAction>& out) override {
    if (!rng_.bernoulli(cfg_.p)) return;
    if (cfg_.both_sides) {
      out.push_back({MitigationAction::Kind::RefreshBothNeighbors, addr});
      return;
    }
    bool left = rng_.next_double() < 0.5;
    out.push_back({left ? MitigationAction::Kind::RefreshLeftNeighbor
                        : MitigationAction::Kind::RefreshRightNeighbor,
                   addr});
  }

 private:
  ParaConfig cfg_;
  Rng rng_;
};

enum class CounterMode : uint8_t { Full, Capped };

struct CounterConfig {
  CounterMode mode = CounterMode::Full;
  uint64_t capacity = 64;       // capped mode only
  uint32_t mit_threshold = 1;   // T

  void validate() const {
    if (mit_threshold < 1) throw ConfigError("counter: threshold must be >= 1");
    if (mode == CounterMode::Capped && capacity < 1)
      throw ConfigError("counter: capacity must be >= 1");
  }
};

// Solution 6: detection logic counting activations per row. Full mode keeps
// one counter per row; capped mode keeps only the most recently activated
// rows' counters, evicting least-recently-activated tags. An evicted row
// loses its count, which is exactly the weakness an alternating two-row
// pattern exploits when the table is small.
class CounterPolicy final : public MitigationPolicy {
 public:
  CounterPolicy(const CounterConfig& cfg, const Geometry& geom) : cfg_(cfg), geom_(geom) {
    cfg_.validate();
    if (cfg_.mode == CounterMode::Full) full_counts_.assign(geom.row_count(), 0);
  }

  void on_row_open(RowAddress addr, uint64_t, std::vector<MitigationAction>& out) override {
    uint32_t count =
        cfg_.mode == CounterMode::Full ? bump_full(addr) : bump_capped(addr);
    if (count >= cfg_.mit_threshold) {
      reset(addr);
      out.push_back({MitigationAction::Kind::RefreshBothNeighbors, addr});
    }
  }

 private:
  uint32_t bump_full(RowAddress addr) { return ++full_counts_[geom_.row_index(addr.bank, addr.row)]; }

  uint32_t bump_capped(RowAddress addr) {
    uint64_t key = geom_.row_index(addr.bank, addr.row);
    auto it = tags_.find(key);
    if (it != tags_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.lru_it);
      return ++it->second.count;
    }
    if (tags_.size() >= cfg_.capacity) {
      tags_.erase(lru_.back());
      lru_.pop_back();
    }
    lru_.push_front(key);
    tags_.emplace(key, Entry{1, lru_.begin()});
    return 1;
  }

  void reset(RowAddress addr) {
    uint64_t key = geom_.row_index(addr.bank, addr.row);
    if (cfg_.mode == CounterMode::Full) {
      full_counts_[key] = 0;
    } else if (auto it = tags_.find(key); it != tags_.end()) {
      it->second.count = 0;
    }
  }

  struct Entry {
    uint32_t count;
    std::list<uint64_t>::iterator lru_it;
  };

  CounterConfig cfg_;
  Geometry geom_;
  std::vector<uint32_t> full_counts_;
  std::unordered_map<uint64_t, Entry> tags_;
  std::list<uint64_t> lru_;  // front = most recently activated
};

// Spare physical rows available for retiring vulnerable ones. Spares (and the
// logical addresses that initially map to them) must not be used by traffic.
struct RemapTable {
  std::deque<RowAddress> reserve_pool;
  std::vector<std::pair<RowAddress, uint32_t>> installed;  // logical row -> physical spare

  RowAddress take_spare(uint32_t bank) {
    for (auto it = reserve_pool.begin(); it != reserve_pool.end(); ++it) {
      if (it->bank == bank) {
        RowAddress spare = *it;
        reserve_pool.erase(it);
        return spare;
      }
    }
    throw ReservePoolExhausted("no spare row left in bank " + std::to_string(bank));
  }

  // Convenience pool: the top `per_bank` physical rows of every bank.
  static RemapTable top_rows_pool(const Geometry& geom, uint32_t per_bank) {
    if (per_bank >= geom.rows_per_bank)
      throw ConfigError("remap: reserve pool larger than bank");
    RemapTable t;
    for (uint32_t b = 0; b < geom.banks; ++b)
      for (uint32_t r = geom.rows_per_bank - per_bank; r < geom.rows_per_bank; ++r)
        t.reserve_pool.push_back(RowAddress{b, r});
    return t;
  }
};

// Solution 4: one-time static retirement. Every row the profiling scan saw a
// flip in is remapped to a spare; the vulnerable cells stay behind in the
// now-unreachable physical row.
inline void remap_static(const std::vector<FlipRecord>& profile_scan, RemapTable& table,
                         AdjacencyMap& map) {
  std::unordered_set<uint64_t> seen;
  for (const FlipRecord& flip : profile_scan) {
    uint32_t logical = map.logical_row(flip.bank, flip.row);
    if (!seen.insert(map.geometry().row_index(flip.bank, logical)).second) continue;
    RowAddress spare = table.take_spare(flip.bank);
    uint32_t spare_owner = map.logical_row(spare.bank, spare.row);
    map.swap_mapping(flip.bank, logical, spare_owner);
    table.installed.emplace_back(RowAddress{flip.bank, logical}, spare.row);
  }
}

// Solution 5: dynamic retirement, fed by SECDED detection events. The first
// corrected or detected-uncorrectable event for a row retires it; an
// uncorrectable word's contents move as-is and stay wrong.
class DynamicRemapPolicy final : public MitigationPolicy {
 public:
  explicit DynamicRemapPolicy(RemapTable table) : table_(std::move(table)) {}

  void on_flip_detected(WordAddress word, EccClass cls,
                        std::vector<MitigationAction>& out) override {
    if (cls != EccClass::Corrected && cls != EccClass::DetectedUncorrectable) return;
    uint64_t key = (uint64_t(word.bank) << 32) | word.row;
    if (!remapped_.insert(key).second) return;
    out.push_back({MitigationAction::Kind::RemapRow, RowAddress{word.bank, word.row}});
  }

  RemapTable& table() { return table_; }

 private:
  RemapTable table_;
  std::unordered_set<uint64_t> remapped_;  // logical rows already retired
};

}  // namespace hammersim
