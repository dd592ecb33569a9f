#pragma once

#include <array>
#include <cstdint>

namespace hammersim {

// SECDED outcome for one 64-bit word, as a pure function of how many of its
// bits are wrong. Three or more flips are classified pessimistically as a
// silent miscorrection.
enum class EccClass : uint8_t { Clean = 0, Corrected, DetectedUncorrectable, SilentCorruption };

inline const char* to_string(EccClass c) {
  switch (c) {
    case EccClass::Clean: return "clean";
    case EccClass::Corrected: return "corrected";
    case EccClass::DetectedUncorrectable: return "detected_uncorrectable";
    case EccClass::SilentCorruption: return "silent_corruption";
  }
  return "?";
}

constexpr EccClass classify_word(unsigned flip_count) {
  if (flip_count == 0) return EccClass::Clean;
  if (flip_count == 1) return EccClass::Corrected;
  if (flip_count == 2) return EccClass::DetectedUncorrectable;
  return EccClass::SilentCorruption;
}

using EccClassCounts = std::array<uint64_t, 4>;

}  // namespace hammersim
