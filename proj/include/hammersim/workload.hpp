#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hammersim/command.hpp"
#include "hammersim/geometry.hpp"
#include "hammersim/rng.hpp"
#include "hammersim/timing.hpp"

namespace hammersim {

struct InvalidSpec : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PatternKind : uint8_t { SingleSided, DoubleSided, Random, BenignStream };

inline PatternKind pattern_kind_from_string(const std::string& s) {
  if (s == "single_sided") return PatternKind::SingleSided;
  if (s == "double_sided") return PatternKind::DoubleSided;
  if (s == "random") return PatternKind::Random;
  if (s == "benign_stream") return PatternKind::BenignStream;
  throw InvalidSpec("unknown pattern kind '" + s + "'");
}

// Trace generator parameters. `count` is the number of activations per
// aggressor row. single_sided accepts either one row or an inclusive row
// range (hammering each row in turn); double_sided takes two aggressors
// exactly two rows apart, sandwiching one victim.
struct PatternSpec {
  PatternKind kind = PatternKind::SingleSided;
  uint32_t bank = 0;
  uint32_t row = 0;
  std::optional<uint32_t> row2;
  std::optional<uint32_t> row_end;  // single_sided range, inclusive
  uint64_t count = 1;
  uint64_t period_ns = 0;  // 0 = tRC
  uint64_t start_ns = 0;
  uint64_t seed = 0;

  uint64_t effective_period(const TimingParams& timing) const {
    return period_ns == 0 ? timing.t_rc_ns : period_ns;
  }

  void validate(const Geometry& geom, const TimingParams& timing) const {
    if (bank >= geom.banks) throw InvalidSpec("pattern: bank out of range");
    if (count < 1) throw InvalidSpec("pattern: count must be >= 1");
    if (effective_period(timing) < timing.t_rc_ns)
      throw InvalidSpec("pattern: period_ns below t_rc_ns");
    switch (kind) {
      case PatternKind::SingleSided:
        if (!geom.contains_row(bank, row)) throw InvalidSpec("pattern: row out of range");
        if (row_end && (*row_end < row || !geom.contains_row(bank, *row_end)))
          throw InvalidSpec("pattern: bad row range");
        break;
      case PatternKind::DoubleSided: {
        if (!row2) throw InvalidSpec("pattern: double_sided needs a second row");
        if (!geom.contains_row(bank, row) || !geom.contains_row(bank, *row2))
          throw InvalidSpec("pattern: row out of range");
        uint32_t lo = std::min(row, *row2), hi = std::max(row, *row2);
        if (hi - lo != 2)
          throw InvalidSpec("pattern: double_sided rows must sandwich one victim (distance 2)");
        break;
      }
      case PatternKind::Random:
      case PatternKind::BenignStream:
        break;
    }
  }
};

// Emits the trace through `sink(const Command&)` so multi-million-activation
// patterns never need to be materialized. Each hammer iteration is an
// ACT/RD/PRE triple: reads disturb neighbors just as writes do, and keeping
// the RD exercises ECC-on-read paths.
template <typename Sink>
void generate_pattern(const PatternSpec& spec, const Geometry& geom, const TimingParams& timing,
                      Sink&& sink) {
  spec.validate(geom, timing);
  const uint64_t period = spec.effective_period(timing);
  uint64_t t = spec.start_ns;

  auto hammer_once = [&](uint32_t row) {
    sink(Command::act(t, spec.bank, row));
    sink(Command::rd(t, spec.bank, 0));
    sink(Command::pre(t, spec.bank));
    t += period;
  };

  switch (spec.kind) {
    case PatternKind::SingleSided: {
      uint32_t last = spec.row_end.value_or(spec.row);
      for (uint32_t r = spec.row; r <= last; ++r)
        for (uint64_t i = 0; i < spec.count; ++i) hammer_once(r);
      break;
    }
    case PatternKind::DoubleSided:
      for (uint64_t i = 0; i < spec.count; ++i) {
        hammer_once(spec.row);
        hammer_once(*spec.row2);
      }
      break;
    case PatternKind::Random: {
      Rng rng(spec.seed);
      for (uint64_t i = 0; i < spec.count; ++i)
        hammer_once(uint32_t(rng.next_below(geom.rows_per_bank)));
      break;
    }
    case PatternKind::BenignStream: {
      // Row-local access bursts with low row reuse: open a row, touch a few
      // consecutive columns (mixed reads and writes), close, move on.
      Rng rng(spec.seed);
      for (uint64_t i = 0; i < spec.count; ++i) {
        uint32_t row = uint32_t(rng.next_below(geom.rows_per_bank));
        sink(Command::act(t, spec.bank, row));
        uint32_t burst = 2 + uint32_t(rng.next_below(7));
        uint32_t col0 = uint32_t(rng.next_below(geom.words_per_row));
        for (uint32_t j = 0; j < burst; ++j) {
          uint32_t col = (col0 + j) % geom.words_per_row;
          if (rng.bernoulli(0.5))
            sink(Command::wr(t, spec.bank, col, rng.next_u64()));
          else
            sink(Command::rd(t, spec.bank, col));
        }
        sink(Command::pre(t, spec.bank));
        t += period;
      }
      break;
    }
  }
}

inline std::vector<Command> generate_trace(const PatternSpec& spec, const Geometry& geom,
                                           const TimingParams& timing) {
  std::vector<Command> cmds;
  generate_pattern(spec, geom, timing, [&](const Command& c) { cmds.push_back(c); });
  return cmds;
}

}  // namespace hammersim
