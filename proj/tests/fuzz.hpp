#pragma once

// Protocol-valid random trace generator shared by the property tests.

#include <cstdint>
#include <vector>

#include "hammersim/command.hpp"
#include "hammersim/geometry.hpp"
#include "hammersim/rng.hpp"
#include "hammersim/timing.hpp"

namespace fuzz {

struct Options {
  bool writes = true;
  bool reads = true;
};

// Random but legal: ACT only on closed banks with tRC honored, RD/WR/PRE only
// on open banks, timestamps nondecreasing.
inline std::vector<hammersim::Command> random_valid_trace(const hammersim::Geometry& geom,
                                                          const hammersim::TimingParams& timing,
                                                          uint64_t seed, size_t n_commands,
                                                          Options opt = {}) {
  using hammersim::Command;
  hammersim::Rng rng(seed);
  std::vector<int64_t> open(geom.banks, -1);
  std::vector<uint64_t> last_act(geom.banks, 0);
  std::vector<bool> has_act(geom.banks, false);
  std::vector<Command> cmds;
  cmds.reserve(n_commands);
  uint64_t t = 0;

  while (cmds.size() < n_commands) {
    t += rng.next_below(timing.t_rc_ns);
    auto bank = uint32_t(rng.next_below(geom.banks));
    if (open[bank] < 0) {
      auto row = uint32_t(rng.next_below(geom.rows_per_bank));
      uint64_t earliest = has_act[bank] ? last_act[bank] + timing.t_rc_ns : 0;
      if (t < earliest) t = earliest;
      cmds.push_back(Command::act(t, bank, row));
      open[bank] = row;
      last_act[bank] = t;
      has_act[bank] = true;
    } else {
      uint64_t choice = rng.next_below(4);
      if (choice == 0 && opt.reads) {
        cmds.push_back(Command::rd(t, bank, uint32_t(rng.next_below(geom.words_per_row))));
      } else if (choice == 1 && opt.writes) {
        cmds.push_back(
            Command::wr(t, bank, uint32_t(rng.next_below(geom.words_per_row)), rng.next_u64()));
      } else {
        cmds.push_back(Command::pre(t, bank));
        open[bank] = -1;
      }
    }
  }
  return cmds;
}

}  // namespace fuzz
