#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "hammersim/ecc.hpp"
#include "hammersim/geometry.hpp"
#include "hammersim/mitigation.hpp"
#include "hammersim/timing.hpp"
#include "hammersim/victim.hpp"

namespace hammersim {

enum class MitigationKind : uint8_t { None, Para, Refresh, Counter, StaticRemap, DynamicRemap };

inline MitigationKind mitigation_kind_from_string(const std::string& s) {
  if (s == "none") return MitigationKind::None;
  if (s == "para") return MitigationKind::Para;
  if (s == "refresh") return MitigationKind::Refresh;
  if (s == "counter") return MitigationKind::Counter;
  if (s == "static_remap") return MitigationKind::StaticRemap;
  if (s == "dynamic_remap") return MitigationKind::DynamicRemap;
  throw ConfigError("unknown mitigation kind '" + s + "'");
}

inline const char* to_string(MitigationKind k) {
  switch (k) {
    case MitigationKind::None: return "none";
    case MitigationKind::Para: return "para";
    case MitigationKind::Refresh: return "refresh";
    case MitigationKind::Counter: return "counter";
    case MitigationKind::StaticRemap: return "static_remap";
    case MitigationKind::DynamicRemap: return "dynamic_remap";
  }
  return "?";
}

struct MitigationConfig {
  MitigationKind kind = MitigationKind::None;
  double p = 0.005;              // para
  bool para_both_sides = false;  // para variant: refresh both neighbors
  double scale = 1.0;            // refresh
  uint32_t threshold = 1;        // counter T
  CounterMode counter_mode = CounterMode::Full;
  uint64_t capacity = 64;        // counter, capped mode
  uint32_t reserve_rows = 0;     // remap spares per bank
};

struct EccSettings {
  bool enabled = false;
  bool scrub_on_refresh = true;  // evaluate words of a row when it refreshes
};

struct FaultConfig {
  std::string profile = "NULL";
  uint64_t profile_scale = 1;  // divide built-in word counts (desk-scale runs)
  uint32_t threshold_min = 165'000;
  uint32_t threshold_max = 1'250'000;
  ThresholdDistribution distribution = ThresholdDistribution::Uniform;
  std::string victim_map_path;  // non-empty: load instead of generating
  uint64_t fill_pattern = ~0ull;

  VictimProfile resolve_profile() const {
    VictimProfile p = VictimProfile::builtin(profile);
    if (profile_scale > 1) p = p.scaled(profile_scale);
    p.threshold_min = threshold_min;
    p.threshold_max = threshold_max;
    p.distribution = distribution;
    return p;
  }
};

// Everything a run needs. The master seed deterministically derives the named
// substreams (victim-map, para, workload), so one seed pins the whole run.
struct SimConfig {
  Geometry geometry;
  TimingParams timing;
  FaultConfig fault;
  MitigationConfig mitigation;
  EccSettings ecc;
  uint64_t master_seed = 1;
  std::string trace_path;

  uint64_t seed_for(std::string_view stream) const {
    uint64_t s = master_seed;
    return splitmix64_next(s) ^ fnv1a64(stream);
  }

  void validate() const {
    geometry.validate();
    timing.validate();
    if (fault.threshold_min < 1 || fault.threshold_max < fault.threshold_min)
      throw ConfigError("fault: bad threshold range");
    if (mitigation.kind == MitigationKind::Para && (mitigation.p < 0 || mitigation.p > 1))
      throw ConfigError("mitigation: para p outside [0,1]");
    if (mitigation.kind == MitigationKind::Refresh && mitigation.scale < 1.0)
      throw ConfigError("mitigation: refresh scale must be >= 1");
    if (mitigation.kind == MitigationKind::Counter && mitigation.threshold < 1)
      throw ConfigError("mitigation: counter threshold must be >= 1");
    if ((mitigation.kind == MitigationKind::StaticRemap ||
         mitigation.kind == MitigationKind::DynamicRemap) &&
        mitigation.reserve_rows < 1)
      throw ConfigError("mitigation: remap needs reserve_rows >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

// Config file: one `section.key = value` per line, '#' comments. Unknown keys
// are hard errors so typos cannot silently fall back to defaults.
inline void apply_config_line(SimConfig& cfg, const std::string& key, const std::string& value) {
  auto u64 = [&] { return std::stoull(value); };
  auto u32 = [&] { return uint32_t(std::stoul(value)); };
  auto f64 = [&] { return std::stod(value); };

  if (key == "geometry.banks") cfg.geometry.banks = u32();
  else if (key == "geometry.rows_per_bank") cfg.geometry.rows_per_bank = u32();
  else if (key == "geometry.words_per_row") cfg.geometry.words_per_row = u32();
  else if (key == "timing.t_rc_ns") cfg.timing.t_rc_ns = u64();
  else if (key == "timing.retention_window_ns") cfg.timing.retention_window_ns = u64();
  else if (key == "timing.ref_commands_per_window") cfg.timing.ref_commands_per_window = u64();
  else if (key == "timing.refresh_scale") cfg.timing.refresh_scale = f64();
  else if (key == "fault.profile") cfg.fault.profile = value;
  else if (key == "fault.profile_scale") cfg.fault.profile_scale = u64();
  else if (key == "fault.threshold_min") cfg.fault.threshold_min = u32();
  else if (key == "fault.threshold_max") cfg.fault.threshold_max = u32();
  else if (key == "fault.threshold_distribution") {
    if (value == "uniform") cfg.fault.distribution = ThresholdDistribution::Uniform;
    else if (value == "log_uniform") cfg.fault.distribution = ThresholdDistribution::LogUniform;
    else throw ConfigError("config: bad fault.threshold_distribution '" + value + "'");
  } else if (key == "fault.victim_map") cfg.fault.victim_map_path = value;
  else if (key == "fault.fill_pattern") cfg.fault.fill_pattern = std::stoull(value, nullptr, 16);
  else if (key == "mitigation.kind") cfg.mitigation.kind = mitigation_kind_from_string(value);
  else if (key == "mitigation.p") cfg.mitigation.p = f64();
  else if (key == "mitigation.both_sides")
    cfg.mitigation.para_both_sides = detail::parse_bool(value, key);
  else if (key == "mitigation.scale") cfg.mitigation.scale = f64();
  else if (key == "mitigation.threshold") cfg.mitigation.threshold = u32();
  else if (key == "mitigation.mode") {
    if (value == "full") cfg.mitigation.counter_mode = CounterMode::Full;
    else if (value == "capped") cfg.mitigation.counter_mode = CounterMode::Capped;
    else throw ConfigError("config: bad mitigation.mode '" + value + "'");
  } else if (key == "mitigation.capacity") cfg.mitigation.capacity = u64();
  else if (key == "mitigation.reserve_rows") cfg.mitigation.reserve_rows = u32();
  else if (key == "ecc.enabled") cfg.ecc.enabled = detail::parse_bool(value, key);
  else if (key == "ecc.scrub_on_refresh")
    cfg.ecc.scrub_on_refresh = detail::parse_bool(value, key);
  else if (key == "seed.master") cfg.master_seed = u64();
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline SimConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  SimConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    try {
      apply_config_line(cfg, key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

}  // namespace hammersim
