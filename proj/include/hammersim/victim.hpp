#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hammersim/geometry.hpp"
#include "hammersim/rng.hpp"

namespace hammersim {

#if defined(__GNUC__) || defined(__clang__)
#define HAMMERSIM_VICTIM_HOT inline __attribute__((always_inline))
#define HAMMERSIM_VICTIM_NOINLINE __attribute__((noinline))
#else
#define HAMMERSIM_VICTIM_HOT inline
#define HAMMERSIM_VICTIM_NOINLINE
#endif

struct ProfileTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ThresholdDistribution : uint8_t { Uniform, LogUniform };

// Per-module victim population: how many 64-bit words contain k vulnerable
// bits, and the hammer-count range those bits are assigned. The built-in
// populations reproduce the measured multi-bit error counts of the most
// vulnerable module from each of the three major manufacturers; NULL models
// an invulnerable chip.
//
// The default threshold range is an artifact parameter chosen so that an
// 8ms-class refresh interval (160,000 achievable activations at tRC = 50ns)
// flips nothing, while a 128ms interval flips everything.
struct VictimProfile {
  std::string name = "NONE";
  std::array<uint64_t, 4> words_with_k_victims{0, 0, 0, 0};
  uint32_t threshold_min = 165'000;
  uint32_t threshold_max = 1'250'000;
  ThresholdDistribution distribution = ThresholdDistribution::Uniform;

  static VictimProfile builtin(const std::string& name) {
    VictimProfile p;
    p.name = name;
    if (name == "A23") {
      p.words_with_k_victims = {9'709'721, 181'856, 2'248, 18};
    } else if (name == "B11") {
      p.words_with_k_victims = {2'632'280, 13'638, 47, 0};
    } else if (name == "C19") {
      p.words_with_k_victims = {141'821, 42, 0, 0};
    } else if (name == "NULL" || name == "NONE") {
      p.words_with_k_victims = {0, 0, 0, 0};
    } else {
      throw ConfigError("unknown victim profile '" + name + "'");
    }
    return p;
  }

  // Desk-scale variant: word counts divided (rounded down) to fit a shrunken
  // geometry.
  VictimProfile scaled(uint64_t divisor) const {
    VictimProfile p = *this;
    p.name = name + "/" + std::to_string(divisor);
    for (auto& c : p.words_with_k_victims) c /= divisor;
    return p;
  }

  uint64_t total_victim_words() const {
    uint64_t n = 0;
    for (auto c : words_with_k_victims) n += c;
    return n;
  }
  uint64_t total_victim_bits() const {
    uint64_t n = 0;
    for (size_t k = 0; k < 4; ++k) n += words_with_k_victims[k] * (k + 1);
    return n;
  }

  void validate() const {
    if (threshold_min < 1) throw ConfigError("profile: threshold_min must be >= 1");
    if (threshold_max < threshold_min)
      throw ConfigError("profile: threshold_max < threshold_min");
  }
};

// One disturbance-induced bit flip. Addresses are physical.
struct FlipRecord {
  uint64_t time_ns = 0;
  uint32_t bank = 0;
  uint32_t row = 0;
  uint32_t word = 0;
  uint8_t bit = 0;
  uint32_t aggressor_row = 0;
  bool operator==(const FlipRecord&) const = default;
};

struct VictimCell {
  uint32_t word = 0;
  uint8_t bit = 0;
  bool flipped = false;
  uint32_t threshold = 1;
};

// Holds every vulnerable cell of the rank, bucketed by physical row.
//
// All victims in a row share one disturbance history: any activation of an
// adjacent row hits them all, and any activation or refresh of their own row
// restores them all. The accumulated count therefore lives per row, and each
// cell carries only its threshold and flip state. Cells are kept sorted by
// threshold so an activation advances a cursor instead of scanning; cells
// un-flipped out of order (rewritten or ECC-repaired) go onto a small revive
// list that is rechecked against the row counter.
class VictimMap {
 public:
  VictimMap(const Geometry& geom) : geom_(geom), rows_(geom.row_count()) {}

  static VictimMap generate(const VictimProfile& profile, const Geometry& geom, uint64_t seed) {
    profile.validate();
    geom.validate();
    uint64_t capacity = geom.word_capacity();
    if (profile.total_victim_words() > capacity)
      throw ProfileTooLarge("profile '" + profile.name + "' needs " +
                            std::to_string(profile.total_victim_words()) + " words, geometry has " +
                            std::to_string(capacity));

    VictimMap map(geom);
    Rng rng(seed);
    std::unordered_set<uint64_t> used_words;
    used_words.reserve(size_t(profile.total_victim_words() * 2));

    const double log_min = std::log(double(profile.threshold_min));
    const double log_max = std::log(double(profile.threshold_max));

    for (size_t k = 0; k < 4; ++k) {
      for (uint64_t i = 0; i < profile.words_with_k_victims[k]; ++i) {
        uint64_t word_key;
        do {
          word_key = rng.next_below(capacity);
        } while (!used_words.insert(word_key).second);

        uint64_t bits_in_word = 0;  // bitmask of chosen positions
        for (size_t b = 0; b <= k; ++b) {
          uint32_t bit;
          do {
            bit = uint32_t(rng.next_below(Geometry::bits_per_word));
          } while ((bits_in_word >> bit) & 1);
          bits_in_word |= 1ull << bit;

          VictimCell cell;
          cell.word = uint32_t(word_key % geom.words_per_row);
          cell.bit = uint8_t(bit);
          if (profile.threshold_min == profile.threshold_max) {
            cell.threshold = profile.threshold_min;
          } else if (profile.distribution == ThresholdDistribution::Uniform) {
            cell.threshold =
                uint32_t(rng.next_in_range(profile.threshold_min, profile.threshold_max));
          } else {
            double u = rng.next_double();
            auto thr = uint64_t(std::llround(std::exp(log_min + u * (log_max - log_min))));
            cell.threshold = uint32_t(
                std::clamp<uint64_t>(thr, profile.threshold_min, profile.threshold_max));
          }
          map.rows_[word_key / geom.words_per_row].cells.push_back(cell);
          ++map.total_bits_;
        }
      }
    }
    map.finalize();
    return map;
  }

  struct ManualCell {
    uint32_t bank, row, word;
    uint8_t bit;
    uint32_t threshold;
  };

  static VictimMap from_cells(const Geometry& geom, const std::vector<ManualCell>& cells) {
    VictimMap map(geom);
    for (const auto& c : cells) {
      if (!geom.contains_word(c.bank, c.row, c.word) || c.bit >= Geometry::bits_per_word ||
          c.threshold < 1)
        throw ConfigError("victim cell out of range");
      map.rows_[geom.row_index(c.bank, c.row)].cells.push_back(
          VictimCell{c.word, c.bit, false, c.threshold});
      ++map.total_bits_;
    }
    map.finalize();
    return map;
  }

  // Text map format, one cell per line: bank,row,word,bit,threshold.
  static VictimMap load(const std::string& path, const Geometry& geom) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open victim map: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("#victim-map v1", 0) != 0)
      throw ConfigError("victim map missing '#victim-map v1' header: " + path);

    VictimMap map(geom);
    size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      uint32_t bank, row, word, bit, threshold;
      if (std::sscanf(line.c_str(), "%u,%u,%u,%u,%u", &bank, &row, &word, &bit, &threshold) != 5)
        throw ConfigError("victim map line " + std::to_string(line_no) + ": bad format");
      if (!geom.contains_word(bank, row, word) || bit >= Geometry::bits_per_word || threshold < 1)
        throw ConfigError("victim map line " + std::to_string(line_no) + ": out of range");
      map.rows_[geom.row_index(bank, row)].cells.push_back(
          VictimCell{word, uint8_t(bit), false, threshold});
      ++map.total_bits_;
    }
    map.finalize();
    return map;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open victim map for writing: " + path);
    out << "#victim-map v1\n";
    for (uint64_t idx = 0; idx < rows_.size(); ++idx) {
      auto cells = rows_[idx].cells;
      std::sort(cells.begin(), cells.end(), [](const VictimCell& a, const VictimCell& b) {
        return a.word != b.word ? a.word < b.word : a.bit < b.bit;
      });
      uint32_t bank = uint32_t(idx / geom_.rows_per_bank);
      uint32_t row = uint32_t(idx % geom_.rows_per_bank);
      for (const auto& c : cells)
        out << bank << ',' << row << ',' << c.word << ',' << unsigned(c.bit) << ','
            << c.threshold << '\n';
    }
  }

  uint64_t total_victim_bits() const { return total_bits_; }
  bool empty() const { return total_bits_ == 0; }

  // Disturbance from an activation of the physically adjacent row `aggressor`.
  // Newly flipped cells are appended to `out`; the caller owns applying them
  // to the backing store.
  HAMMERSIM_VICTIM_HOT void hammer_row(uint32_t bank, uint32_t row, uint64_t time_ns,
                                       uint32_t aggressor, std::vector<FlipRecord>& out) {
    RowVictims& rv = rows_[uint64_t(bank) * geom_.rows_per_bank + row];
    if (rv.cells.empty()) return;
    uint32_t count = ++rv.hammer_count;
    while (rv.next_idx < rv.cells.size() && rv.cells[rv.next_idx].threshold <= count) {
      VictimCell& cell = rv.cells[rv.next_idx];
      if (!cell.flipped) {
        cell.flipped = true;
        out.push_back(FlipRecord{time_ns, bank, row, cell.word, cell.bit, aggressor});
      }
      ++rv.next_idx;
    }
    if (!rv.revived.empty()) recheck_revived(rv, bank, row, time_ns, aggressor, out);
  }

  // Activation or refresh of a row restores the charge of its own victims:
  // the accumulated count clears, flip state does not.
  HAMMERSIM_VICTIM_HOT void restore_row(uint32_t bank, uint32_t row) {
    rows_[uint64_t(bank) * geom_.rows_per_bank + row].hammer_count = 0;
  }

  // A write (or an ECC repair) rewrites correct data into the given bits of a
  // word; matching flipped cells become flippable again.
  void clear_flips(uint32_t bank, uint32_t row, uint32_t word, uint64_t bit_mask) {
    RowVictims& rv = rows_[uint64_t(bank) * geom_.rows_per_bank + row];
    for (uint32_t i = 0; i < rv.cells.size(); ++i) {
      VictimCell& cell = rv.cells[i];
      if (cell.word == word && cell.flipped && (bit_mask >> cell.bit) & 1) {
        cell.flipped = false;
        if (i < rv.next_idx) rv.revived.push_back(i);
      }
    }
  }

  uint32_t hammer_count(uint32_t bank, uint32_t row) const {
    return rows_[uint64_t(bank) * geom_.rows_per_bank + row].hammer_count;
  }

  template <typename Fn>
  void for_each_cell(Fn&& fn) const {
    for (uint64_t idx = 0; idx < rows_.size(); ++idx) {
      uint32_t bank = uint32_t(idx / geom_.rows_per_bank);
      uint32_t row = uint32_t(idx % geom_.rows_per_bank);
      for (const VictimCell& cell : rows_[idx].cells) fn(bank, row, cell);
    }
  }

  // Clears all accumulated disturbance and flip state, keeping the cell
  // population; used to rerun a trace against a fresh chip.
  void reset_state() {
    for (auto& rv : rows_) {
      rv.hammer_count = 0;
      rv.next_idx = 0;
      rv.revived.clear();
      for (auto& cell : rv.cells) cell.flipped = false;
    }
  }

  bool row_has_victims(uint32_t bank, uint32_t row) const {
    return !rows_[uint64_t(bank) * geom_.rows_per_bank + row].cells.empty();
  }

  const std::vector<VictimCell>& row_cells(uint32_t bank, uint32_t row) const {
    return rows_[uint64_t(bank) * geom_.rows_per_bank + row].cells;
  }

  // Largest threshold <= cap among a row's cells, 0 if none.
  uint32_t max_threshold_at_most(uint32_t bank, uint32_t row, uint64_t cap) const {
    const auto& cells = rows_[uint64_t(bank) * geom_.rows_per_bank + row].cells;
    uint32_t best = 0;
    for (const auto& c : cells)
      if (c.threshold <= cap && c.threshold > best) best = c.threshold;
    return best;
  }

  const Geometry& geometry() const { return geom_; }

 private:
  struct RowVictims {
    uint32_t hammer_count = 0;
    uint32_t next_idx = 0;  // cells [0, next_idx) flipped unless on revive list
    std::vector<VictimCell> cells;
    std::vector<uint32_t> revived;
  };

  void finalize() {
    for (auto& rv : rows_) {
      std::sort(rv.cells.begin(), rv.cells.end(), [](const VictimCell& a, const VictimCell& b) {
        if (a.threshold != b.threshold) return a.threshold < b.threshold;
        if (a.word != b.word) return a.word < b.word;
        return a.bit < b.bit;
      });
    }
  }

  HAMMERSIM_VICTIM_NOINLINE void recheck_revived(RowVictims& rv, uint32_t bank, uint32_t row,
                                                 uint64_t time_ns, uint32_t aggressor,
                                                 std::vector<FlipRecord>& out) {
    uint32_t count = rv.hammer_count;
    for (size_t i = 0; i < rv.revived.size();) {
      VictimCell& cell = rv.cells[rv.revived[i]];
      if (!cell.flipped && cell.threshold <= count) {
        cell.flipped = true;
        out.push_back(FlipRecord{time_ns, bank, row, cell.word, cell.bit, aggressor});
        rv.revived[i] = rv.revived.back();
        rv.revived.pop_back();
      } else if (cell.flipped) {
        rv.revived[i] = rv.revived.back();
        rv.revived.pop_back();
      } else {
        ++i;
      }
    }
  }

  Geometry geom_;
  std::vector<RowVictims> rows_;
  uint64_t total_bits_ = 0;
};

}  // namespace hammersim
