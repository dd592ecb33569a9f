#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hammersim/config.hpp"
#include "hammersim/engine.hpp"
#include "hammersim/metrics.hpp"
#include "hammersim/mitigation.hpp"
#include "hammersim/timing.hpp"
#include "hammersim/workload.hpp"

namespace hammersim {

enum class SweepParameter : uint8_t { RefreshIntervalMs, ParaP };

struct SweepSpec {
  SweepParameter parameter = SweepParameter::RefreshIntervalMs;
  std::vector<double> values;  // monotone increasing for refresh sweeps
  SimConfig base;
  uint64_t trials_per_point = 1;
  uint64_t base_seed = 1;

  void validate() const {
    if (values.empty()) throw ConfigError("sweep: no values");
    if (parameter == SweepParameter::RefreshIntervalMs)
      for (size_t i = 1; i < values.size(); ++i)
        if (values[i] <= values[i - 1])
          throw ConfigError("sweep: refresh intervals must increase monotonically");
  }
};

struct SweepPoint {
  double value = 0;
  uint64_t flips_total = 0;
  uint64_t victim_bits = 0;
  uint64_t achievable_activations = 0;  // per victim, between its restores
  Metrics metrics;
};

// Merge of metrics files: componentwise sums, earliest first flip, latest end
// time.
struct ReportSummary {
  uint64_t runs = 0;
  Metrics totals;

  std::string to_text() const {
    std::ostringstream os;
    os << "runs = " << runs << '\n'
       << "flips_total = " << totals.flips_total << '\n'
       << "total_activations = " << totals.total_activations << '\n'
       << "mitigation_extra_activations = " << totals.mitigation_extra_activations << '\n'
       << "overhead_ratio = " << totals.overhead_ratio() << '\n'
       << "refresh_rounds = " << totals.refresh_rounds << '\n'
       << "ecc_clean = " << totals.ecc_class_counts[0] << '\n'
       << "ecc_corrected = " << totals.ecc_class_counts[1] << '\n'
       << "ecc_detected_uncorrectable = " << totals.ecc_class_counts[2] << '\n'
       << "ecc_silent_corruption = " << totals.ecc_class_counts[3] << '\n'
       << "first_flip_time_ns = " << totals.first_flip_time_ns << '\n'
       << "simulated_end_time_ns = " << totals.simulated_end_time_ns << '\n'
       << "protocol_violations = " << totals.protocol_violations << '\n';
    return os.str();
  }
};

inline ReportSummary merge_metrics(const std::vector<Metrics>& runs) {
  ReportSummary s;
  s.runs = runs.size();
  for (const Metrics& m : runs) {
    s.totals.total_activations += m.total_activations;
    s.totals.mitigation_extra_activations += m.mitigation_extra_activations;
    s.totals.refresh_rounds += m.refresh_rounds;
    s.totals.flips_total += m.flips_total;
    for (size_t k = 0; k < 4; ++k) s.totals.ecc_class_counts[k] += m.ecc_class_counts[k];
    if (m.first_flip_time_ns >= 0 &&
        (s.totals.first_flip_time_ns < 0 || m.first_flip_time_ns < s.totals.first_flip_time_ns))
      s.totals.first_flip_time_ns = m.first_flip_time_ns;
    s.totals.simulated_end_time_ns =
        std::max(s.totals.simulated_end_time_ns, m.simulated_end_time_ns);
    s.totals.protocol_violations += m.protocol_violations;
  }
  return s;
}


namespace detail {

// Worst-case hammer schedule for one refresh interval.
//
// Saturating every aggressor row for a whole interval is the adversary the
// sweep models, but simulating that costs interval/tRC activations per row.
// The flip outcome only depends on whether a victim's inter-restore hit count
// reaches its threshold, and tRC bounds that count by C = interval/tRC, so
// hammering each victim row's neighbor B times in one refresh-to-refresh gap,
// with B just covering the row's largest threshold <= C, produces exactly the
// flip set of the saturating adversary:
//   - every cell with threshold <= C receives >= threshold hits between two
//     restores of its row (the burst is aligned to sit inside one gap), and
//   - no cell with threshold > C can flip under any trace, because the bank
//     cannot issue more than C activations inside one gap.
// A few full-length probe bursts are kept so the no-flip points still
// exercise a saturating pattern rather than an empty trace.
inline void worst_case_hammer(Engine& engine, uint32_t probe_stride) {
  const Geometry& geom = engine.geometry();
  const TimingParams& timing = engine.timing();
  const VictimMap& victims = engine.victims();
  RefreshSchedule sched(timing, geom);
  if (!sched.row_phase_is_periodic())
    throw ConfigError(
        "sweep: rows_per_bank must equal ref_commands_per_window * rows-per-REF "
        "for the worst-case schedule");
  const uint64_t t_rc = timing.t_rc_ns;
  const uint64_t achievable = sched.window_ns() / t_rc;

  struct Burst {
    uint32_t aggressor;
    uint32_t align_row;  // victim row whose refresh gap the burst sits in
    uint64_t count;
  };

  uint64_t cursor = 0;  // timestamps stay monotone across banks
  for (uint32_t bank = 0; bank < geom.banks; ++bank) {
    std::vector<Burst> plan;
    for (uint32_t v = 0; v < geom.rows_per_bank; ++v) {
      uint64_t need = victims.max_threshold_at_most(bank, v, achievable);
      if (need > 0) {
        uint32_t aggr = v + 1 < geom.rows_per_bank ? v + 1 : v - 1;
        plan.push_back(Burst{aggr, v, need});
      }
      if (probe_stride && v % probe_stride == 0) {
        uint32_t align = v > 0 ? v - 1 : v + 1;
        plan.push_back(Burst{v, align, achievable});
      }
    }
    for (const Burst& burst : plan) {
      uint64_t start = sched.next_refresh_of_row(burst.align_row, cursor) + 1;
      for (uint64_t i = 0; i < burst.count; ++i) {
        uint64_t t = start + i * t_rc;
        engine.feed_act(t, bank, burst.aggressor);
        engine.feed_rd(t, bank, 0);
        engine.feed_pre(t, bank);
      }
      cursor = start + burst.count * t_rc;
    }
  }
}

}  // namespace detail

// Errors-vs-refresh-interval sweep under the worst-case hammer schedule.
//
// One victim population is sampled from the base seed and reused across every
// interval: the sweep varies the refresh interval of a single device, the way
// the measurement it reproduces retested one module per interval. That fixed
// population also makes the flip counts provably monotone nondecreasing in
// the interval (the vulnerable-threshold sets nest), reaching zero once the
// achievable activation count drops below the smallest threshold. Per-point
// seeds (base_seed + index) still feed any per-run randomness, so adding
// sweep points never changes existing points' results.
inline std::vector<SweepPoint> sweep_refresh(const SweepSpec& spec, uint32_t probe_rows = 16) {
  spec.validate();

  SimConfig map_cfg = spec.base;
  map_cfg.master_seed = spec.base_seed;
  map_cfg.geometry.validate();
  const VictimMap device_map = Engine::make_victim_map(map_cfg);

  std::vector<SweepPoint> points;
  for (size_t i = 0; i < spec.values.size(); ++i) {
    SimConfig cfg = spec.base;
    cfg.timing.retention_window_ns = uint64_t(std::llround(spec.values[i] * 1e6));
    cfg.master_seed = spec.base_seed + i;
    cfg.mitigation.kind = MitigationKind::None;
    cfg.validate();

    VictimMap fresh_map = device_map;
    fresh_map.reset_state();
    Engine engine(cfg, std::move(fresh_map), AdjacencyMap(cfg.geometry));
    engine.set_record_events(false);
    uint32_t stride =
        probe_rows == 0 ? 0 : std::max<uint32_t>(1, cfg.geometry.rows_per_bank / probe_rows);
    detail::worst_case_hammer(engine, stride);
    RunResult result = engine.finish();

    SweepPoint point;
    point.value = spec.values[i];
    point.flips_total = result.metrics.flips_total;
    point.victim_bits = engine.victims().total_victim_bits();
    point.achievable_activations = engine.timing().max_activations_per_window();
    point.metrics = result.metrics;
    points.push_back(std::move(point));
  }
  return points;
}

// PARA overhead sweep: a fixed single-sided hammer trace, trials_per_point
// independently seeded runs per p, metrics summed per point.
inline std::vector<SweepPoint> sweep_para_p(const SweepSpec& spec, uint64_t closures = 100'000) {
  spec.validate();
  std::vector<SweepPoint> points;
  for (size_t i = 0; i < spec.values.size(); ++i) {
    SweepPoint point;
    point.value = spec.values[i];
    std::vector<Metrics> trials;

    for (uint64_t trial = 0; trial < std::max<uint64_t>(1, spec.trials_per_point); ++trial) {
      SimConfig cfg = spec.base;
      cfg.mitigation.kind = MitigationKind::Para;
      cfg.mitigation.p = spec.values[i];
      uint64_t point_seed = spec.base_seed + i;
      cfg.master_seed = trial == 0 ? point_seed : Rng::substream(point_seed, "trial").next_u64() + trial;
      cfg.validate();

      Engine engine(cfg);
      engine.set_record_events(false);
      PatternSpec pattern;
      pattern.kind = PatternKind::SingleSided;
      pattern.row = cfg.geometry.rows_per_bank / 2;
      pattern.count = closures;
      generate_pattern(pattern, cfg.geometry, cfg.timing,
                       [&](const Command& c) { engine.feed(c); });
      RunResult result = engine.finish();
      trials.push_back(result.metrics);
      point.victim_bits = engine.victims().total_victim_bits();
    }

    point.metrics = merge_metrics(trials).totals;
    point.flips_total = point.metrics.flips_total;
    points.push_back(std::move(point));
  }
  return points;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points, const std::string& param_name,
                             const std::string& profile_name) {
  std::ostringstream os;
  os << param_name << ",profile,flips_total,victim_bits,achievable_activations,"
     << "total_activations,mitigation_extra_activations\n";
  for (const auto& p : points) {
    os << p.value << ',' << profile_name << ',' << p.flips_total << ',' << p.victim_bits << ','
       << p.achievable_activations << ',' << p.metrics.total_activations << ','
       << p.metrics.mitigation_extra_activations << '\n';
  }
  return os.str();
}

// Monte Carlo check of the PARA guarantee: simulate `trials` independent
// sequences of n closures of one row through the real policy; a trial fails
// if the chosen victim side is never preventively refreshed. The empirical
// failure frequency must bracket (1 - p/2)^n within 3 sigma.
struct ParaValidation {
  double p = 0;
  uint64_t n = 0;
  uint64_t trials = 0;
  uint64_t failures = 0;
  double empirical = 0;
  double ci_half_width = 0;  // 3 sigma binomial
  double analytic = 0;

  bool analytic_within_ci() const {
    return std::abs(empirical - analytic) <= ci_half_width + 1e-12;
  }
};

inline ParaValidation monte_carlo_para(double p, uint64_t n, uint64_t trials, uint64_t seed,
                                       bool both_sides = false) {
  if (trials < 1) throw ConfigError("monte_carlo_para: trials must be >= 1");
  Rng trial_seeds(seed);
  std::vector<MitigationAction> actions;
  const RowAddress row{0, 5};  // interior row: both neighbors exist
  uint64_t failures = 0;

  for (uint64_t trial = 0; trial < trials; ++trial) {
    ParaConfig pc;
    pc.p = p;
    pc.both_sides = both_sides;
    pc.rng_seed = trial_seeds.next_u64();
    ParaPolicy para(pc);
    bool victim_refreshed = false;
    for (uint64_t i = 0; i < n && !victim_refreshed; ++i) {
      actions.clear();
      para.on_row_close(row, 0, actions);
      for (const auto& a : actions)
        if (a.kind == MitigationAction::Kind::RefreshRightNeighbor ||
            a.kind == MitigationAction::Kind::RefreshBothNeighbors)
          victim_refreshed = true;
    }
    if (!victim_refreshed) ++failures;
  }

  ParaValidation v;
  v.p = p;
  v.n = n;
  v.trials = trials;
  v.failures = failures;
  v.empirical = double(failures) / double(trials);
  v.ci_half_width = 3.0 * std::sqrt(v.empirical * (1.0 - v.empirical) / double(trials));
  v.analytic = para_failure_probability(p, n, both_sides);
  return v;
}

inline std::string merged_csv(const std::vector<Metrics>& runs) {
  std::ostringstream os;
  os << Metrics::csv_header() << '\n';
  for (const Metrics& m : runs) os << m.to_csv_row() << '\n';
  return os.str();
}

}  // namespace hammersim
