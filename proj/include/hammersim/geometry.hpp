#pragma once

#include <cstdint>
#include <stdexcept>

namespace hammersim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One DRAM rank. The default instance is the 2GB rank used throughout the
// measurements this model is calibrated against: eight banks of 32K rows,
// each row 8KB (1024 64-bit words).
struct Geometry {
  uint32_t banks = 8;
  uint32_t rows_per_bank = 32768;
  uint32_t words_per_row = 1024;
  static constexpr uint32_t bits_per_word = 64;

  void validate() const {
    if (banks < 1) throw ConfigError("geometry: banks must be >= 1");
    if (rows_per_bank < 2) throw ConfigError("geometry: rows_per_bank must be >= 2");
    if (words_per_row < 1) throw ConfigError("geometry: words_per_row must be >= 1");
  }

  uint64_t row_count() const { return uint64_t(banks) * rows_per_bank; }
  uint64_t word_capacity() const { return row_count() * words_per_row; }

  bool contains_row(uint32_t bank, uint32_t row) const {
    return bank < banks && row < rows_per_bank;
  }
  bool contains_word(uint32_t bank, uint32_t row, uint32_t col) const {
    return contains_row(bank, row) && col < words_per_row;
  }

  // Flat index for per-row tables.
  uint64_t row_index(uint32_t bank, uint32_t row) const {
    return uint64_t(bank) * rows_per_bank + row;
  }
  // Flat index for the backing store.
  uint64_t word_index(uint32_t bank, uint32_t row, uint32_t col) const {
    return row_index(bank, row) * words_per_row + col;
  }

  bool operator==(const Geometry&) const = default;
};

struct RowAddress {
  uint32_t bank = 0;
  uint32_t row = 0;
  bool operator==(const RowAddress&) const = default;
};

struct WordAddress {
  uint32_t bank = 0;
  uint32_t row = 0;
  uint32_t word = 0;
  bool operator==(const WordAddress&) const = default;
};

}  // namespace hammersim
