#pragma once

#include <cstdint>

#include "hammersim/geometry.hpp"

namespace hammersim {

// Timing constants. Only tRC is enforced on the command stream since it alone
// bounds the achievable hammer rate; REF service time is modeled as zero.
//
// t_refi is truncated to integer nanoseconds (64ms / 8192 = 7812ns); the
// division remainder is absorbed into the final interval of each retention
// window so that window boundaries stay exact.
struct TimingParams {
  uint64_t t_rc_ns = 50;
  uint64_t retention_window_ns = 64'000'000;
  uint64_t ref_commands_per_window = 8192;
  // Refresh-rate mitigation knob. scale > 1 shortens the effective window;
  // rounds then arrive every floor(t_refi / scale) ns.
  double refresh_scale = 1.0;

  void validate() const {
    if (t_rc_ns < 1) throw ConfigError("timing: t_rc_ns must be >= 1");
    if (ref_commands_per_window < 1)
      throw ConfigError("timing: ref_commands_per_window must be >= 1");
    if (retention_window_ns < ref_commands_per_window)
      throw ConfigError("timing: retention window shorter than one REF per command");
    if (!(refresh_scale > 0.0)) throw ConfigError("timing: refresh_scale must be > 0");
    if (effective_t_refi_ns() < 1)
      throw ConfigError("timing: refresh_scale too large, t_refi truncates to 0");
  }

  uint64_t t_refi_ns() const { return retention_window_ns / ref_commands_per_window; }

  uint64_t effective_t_refi_ns() const {
    if (refresh_scale == 1.0) return t_refi_ns();
    return static_cast<uint64_t>(static_cast<double>(t_refi_ns()) / refresh_scale);
  }
  uint64_t effective_window_ns() const {
    if (refresh_scale == 1.0) return retention_window_ns;
    return static_cast<uint64_t>(static_cast<double>(retention_window_ns) / refresh_scale);
  }

  // Upper bound on ACTs one bank can absorb within a retention window:
  // 64ms / 50ns = 1,280,000 with defaults.
  uint64_t max_activations_per_window() const { return retention_window_ns / t_rc_ns; }

  // Rows refreshed per bank per REF command.
  uint32_t rows_per_refresh(const Geometry& geom) const {
    return static_cast<uint32_t>((geom.rows_per_bank + ref_commands_per_window - 1) /
                                 ref_commands_per_window);
  }

  bool operator==(const TimingParams&) const = default;
};

// Mitigation 3: run all of memory at an increased refresh rate. scale 7.8
// shortens the nominal 64ms window to ~8.2ms.
inline TimingParams increased_refresh(TimingParams base, double scale) {
  if (scale < 1.0) throw ConfigError("increased_refresh: scale must be >= 1");
  base.refresh_scale = scale;
  base.validate();
  return base;
}

// Deterministic timetable of auto-scheduled refresh rounds. Round g lands in
// window w = g / rpw at offset (g % rpw + 1) * t_refi from the window start,
// which folds the truncation remainder into each window's final interval.
class RefreshSchedule {
 public:
  RefreshSchedule(const TimingParams& timing, const Geometry& geom)
      : window_ns_(timing.effective_window_ns()),
        t_refi_ns_(timing.effective_t_refi_ns()),
        rounds_per_window_(timing.ref_commands_per_window),
        rows_per_round_(timing.rows_per_refresh(geom)),
        rows_per_bank_(geom.rows_per_bank) {}

  uint64_t round_time(uint64_t round) const {
    uint64_t w = round / rounds_per_window_;
    uint64_t j = round % rounds_per_window_;
    return w * window_ns_ + (j + 1) * t_refi_ns_;
  }

  uint64_t rows_per_round() const { return rows_per_round_; }
  uint64_t window_ns() const { return window_ns_; }

  // True when the round-robin pointer lines up with the window exactly, i.e.
  // every row is refreshed once per window at a fixed phase. The closed-form
  // per-row refresh times below are only valid in that regime.
  bool row_phase_is_periodic() const {
    return rounds_per_window_ * rows_per_round_ == rows_per_bank_;
  }

  // Next time > t at which `row` is refreshed (requires periodic phase).
  uint64_t next_refresh_of_row(uint32_t row, uint64_t t) const {
    uint64_t j = row / rows_per_round_;  // round index within the window
    uint64_t offset = (j + 1) * t_refi_ns_;
    uint64_t w = t / window_ns_;
    uint64_t cand = w * window_ns_ + offset;
    if (cand <= t) cand += window_ns_;
    return cand;
  }

 private:
  uint64_t window_ns_;
  uint64_t t_refi_ns_;
  uint64_t rounds_per_window_;
  uint64_t rows_per_round_;
  uint64_t rows_per_bank_;
};

}  // namespace hammersim
