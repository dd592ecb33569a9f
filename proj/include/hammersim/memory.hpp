#pragma once

#include <bit>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hammersim/geometry.hpp"

namespace hammersim {

// Sparse word store addressed by physical location. Words never written read
// back as the fill pattern (all-ones by default: fully charged cells, so a
// disturbance flip is a 1 -> 0 discharge of the stored image).
//
// Alongside the current contents we track which bits are wrong relative to the
// last written value; that mask is what the SECDED classifier sees.
class MemoryStore {
 public:
  MemoryStore(const Geometry& geom, uint64_t fill = ~0ull) : geom_(geom), fill_(fill) {}

  uint64_t fill_pattern() const { return fill_; }

  uint64_t read(uint64_t word_key) const {
    auto it = words_.find(word_key);
    return it == words_.end() ? fill_ : it->second;
  }

  // A write restores correct data: any pending flip marks on the word clear.
  void write(uint64_t word_key, uint64_t value) {
    words_[word_key] = value;
    auto it = masks_.find(word_key);
    if (it != masks_.end()) {
      masks_.erase(it);
      corrupted_by_row_[word_key / geom_.words_per_row].erase(word_key);
    }
  }

  // Inverts one stored bit and records it as wrong.
  void apply_flip(uint64_t word_key, uint32_t bit) {
    uint64_t bit_mask = 1ull << bit;
    auto [it, inserted] = words_.try_emplace(word_key, fill_);
    it->second ^= bit_mask;
    masks_[word_key] ^= bit_mask;
    corrupted_by_row_[word_key / geom_.words_per_row].insert(word_key);
  }

  uint64_t wrong_bits(uint64_t word_key) const {
    auto it = masks_.find(word_key);
    return it == masks_.end() ? 0 : it->second;
  }

  unsigned flip_count(uint64_t word_key) const {
    return unsigned(std::popcount(wrong_bits(word_key)));
  }

  // Restores the single wrong bit of a word (SECDED repair path).
  void repair_single(uint64_t word_key) {
    auto it = masks_.find(word_key);
    if (it == masks_.end()) return;
    words_[word_key] ^= it->second;
    masks_.erase(it);
    corrupted_by_row_[word_key / geom_.words_per_row].erase(word_key);
  }

  // Word keys in a physical row that currently hold wrong bits.
  std::vector<uint64_t> corrupted_words_in_row(uint64_t row_index) const {
    auto it = corrupted_by_row_.find(row_index);
    if (it == corrupted_by_row_.end()) return {};
    return {it->second.begin(), it->second.end()};
  }

  // Moves a physical row's contents (including wrongness) to another physical
  // row, used when a row is retired.
  void move_row(uint64_t src_row_index, uint64_t dst_row_index) {
    for (uint32_t col = 0; col < geom_.words_per_row; ++col) {
      uint64_t src = src_row_index * geom_.words_per_row + col;
      uint64_t dst = dst_row_index * geom_.words_per_row + col;
      auto wit = words_.find(src);
      if (wit != words_.end()) {
        words_[dst] = wit->second;
        words_.erase(wit);
      } else {
        words_.erase(dst);
      }
      auto mit = masks_.find(src);
      uint64_t dst_mask = 0;
      if (mit != masks_.end()) {
        dst_mask = mit->second;
        masks_.erase(mit);
      }
      if (dst_mask) {
        masks_[dst] = dst_mask;
        corrupted_by_row_[dst_row_index].insert(dst);
      } else {
        auto cit = corrupted_by_row_.find(dst_row_index);
        if (cit != corrupted_by_row_.end()) cit->second.erase(dst);
      }
    }
    corrupted_by_row_.erase(src_row_index);
  }

  const std::unordered_map<uint64_t, uint64_t>& wrong_words() const { return masks_; }

 private:
  Geometry geom_;
  uint64_t fill_;
  std::unordered_map<uint64_t, uint64_t> words_;
  std::unordered_map<uint64_t, uint64_t> masks_;
  std::unordered_map<uint64_t, std::unordered_set<uint64_t>> corrupted_by_row_;
};

}  // namespace hammersim
