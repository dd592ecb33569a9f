#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "hammersim/geometry.hpp"

namespace hammersim {

// Logical-to-physical row mapping, identity unless rows have been remapped.
// Disturbance is a property of physical placement, so neighbor lookups walk
// physical row space and translate back.
//
// Remapping is installed as transpositions, which keeps the per-bank mapping
// a bijection by construction.
class AdjacencyMap {
 public:
  explicit AdjacencyMap(const Geometry& geom) : geom_(geom) {}

  bool is_identity() const { return to_phys_.empty(); }

  uint32_t physical_row(uint32_t bank, uint32_t logical) const {
    if (to_phys_.empty()) return logical;
    auto it = to_phys_.find(key(bank, logical));
    return it == to_phys_.end() ? logical : it->second;
  }

  uint32_t logical_row(uint32_t bank, uint32_t physical) const {
    if (to_logical_.empty()) return physical;
    auto it = to_logical_.find(key(bank, physical));
    return it == to_logical_.end() ? physical : it->second;
  }

  // Swaps the physical targets of two logical rows.
  void swap_mapping(uint32_t bank, uint32_t logical_a, uint32_t logical_b) {
    if (!geom_.contains_row(bank, logical_a) || !geom_.contains_row(bank, logical_b))
      throw ConfigError("adjacency: remap row out of range");
    uint32_t pa = physical_row(bank, logical_a);
    uint32_t pb = physical_row(bank, logical_b);
    set(bank, logical_a, pb);
    set(bank, logical_b, pa);
  }

  struct Neighbors {
    std::optional<RowAddress> left;
    std::optional<RowAddress> right;
  };

  // Physical neighbors of a logical row, as logical addresses. Boundary rows
  // have a single neighbor.
  Neighbors neighbors(RowAddress logical) const {
    Neighbors n;
    uint32_t phys = physical_row(logical.bank, logical.row);
    if (phys > 0) n.left = RowAddress{logical.bank, logical_row(logical.bank, phys - 1)};
    if (phys + 1 < geom_.rows_per_bank)
      n.right = RowAddress{logical.bank, logical_row(logical.bank, phys + 1)};
    return n;
  }

  const Geometry& geometry() const { return geom_; }

 private:
  static uint64_t key(uint32_t bank, uint32_t row) { return (uint64_t(bank) << 32) | row; }

  void set(uint32_t bank, uint32_t logical, uint32_t physical) {
    if (logical == physical) {
      to_phys_.erase(key(bank, logical));
      to_logical_.erase(key(bank, physical));
    } else {
      to_phys_[key(bank, logical)] = physical;
      to_logical_[key(bank, physical)] = logical;
    }
  }

  Geometry geom_;
  std::unordered_map<uint64_t, uint32_t> to_phys_;
  std::unordered_map<uint64_t, uint32_t> to_logical_;
};

}  // namespace hammersim
