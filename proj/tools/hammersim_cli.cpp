#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hammersim/hammersim.hpp"

namespace fs = std::filesystem;
using namespace hammersim;

namespace {

SimConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return SimConfig{};
  return load_config_file(path);
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << contents;
}

int cmd_run(const std::string& config_path, const std::string& trace_path,
            const std::string& out_dir) {
  SimConfig cfg = load_config_or_default(config_path);
  if (!trace_path.empty()) cfg.trace_path = trace_path;
  if (cfg.trace_path.empty()) throw ConfigError("run: no trace given (--trace or config)");
  cfg.validate();

  Engine engine(cfg);
  RunResult result = engine.run_trace_file(cfg.trace_path);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "metrics.txt", result.metrics.to_text());
  write_file(fs::path(out_dir) / "metrics.csv",
             Metrics::csv_header() + "\n" + result.metrics.to_csv_row() + "\n");
  {
    std::ofstream out(fs::path(out_dir) / "fliplog.csv");
    out << flip_log_csv_header() << '\n';
    for (const FlipRecord& f : result.flips) out << flip_log_csv_row(f) << '\n';
  }

  std::cout << result.metrics.to_text();
  for (const ViolationRecord& v : result.violations)
    std::cerr << "violation at line " << v.position << " (t=" << v.time_ns
              << "ns): " << to_string(v.kind) << " " << v.detail << '\n';
  return result.metrics.protocol_violations > 0 ? 2 : 0;
}

int cmd_gen_trace(const std::string& config_path, const std::string& pattern, uint32_t bank,
                  uint32_t row, int64_t row2, int64_t row_end, uint64_t count, uint64_t period_ns,
                  uint64_t seed, const std::string& out_path) {
  SimConfig cfg = load_config_or_default(config_path);
  PatternSpec spec;
  spec.kind = pattern_kind_from_string(pattern);
  spec.bank = bank;
  spec.row = row;
  if (row2 >= 0) spec.row2 = uint32_t(row2);
  if (row_end >= 0) spec.row_end = uint32_t(row_end);
  spec.count = count;
  spec.period_ns = period_ns;
  spec.seed = seed;

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write trace: " + out_path);
  generate_pattern(spec, cfg.geometry, cfg.timing,
                   [&](const Command& c) { out << format_trace_line(c) << '\n'; });
  return 0;
}

int cmd_gen_profile(const std::string& config_path, const std::string& name, uint64_t seed,
                    uint64_t scale, const std::string& out_path) {
  SimConfig cfg = load_config_or_default(config_path);
  cfg.fault.profile = name;
  cfg.fault.profile_scale = scale;
  VictimMap map = VictimMap::generate(cfg.fault.resolve_profile(), cfg.geometry, seed);
  map.save(out_path);
  std::cout << "victim words: " << cfg.fault.resolve_profile().total_victim_words()
            << ", victim bits: " << map.total_victim_bits() << '\n';
  return 0;
}

int cmd_sweep_refresh(const std::string& config_path, const std::string& intervals,
                      const std::string& profile, uint64_t seed, const std::string& out_path) {
  SweepSpec spec;
  spec.parameter = SweepParameter::RefreshIntervalMs;
  spec.base = load_config_or_default(config_path);
  if (!profile.empty()) spec.base.fault.profile = profile;
  spec.base_seed = seed;

  std::stringstream ss(intervals);
  std::string item;
  while (std::getline(ss, item, ',')) spec.values.push_back(std::stod(item));

  auto points = sweep_refresh(spec);
  std::string csv = sweep_csv(points, "interval_ms", spec.base.fault.profile);
  if (out_path.empty())
    std::cout << csv;
  else
    write_file(out_path, csv);
  return 0;
}

int cmd_validate_para(double p, uint64_t n, uint64_t trials, uint64_t seed, bool both_sides) {
  ParaValidation v = monte_carlo_para(p, n, trials, seed, both_sides);
  std::printf("p = %g, n = %llu, trials = %llu\n", v.p, (unsigned long long)v.n,
              (unsigned long long)v.trials);
  std::printf("empirical_failure_prob = %.6g\n", v.empirical);
  std::printf("ci_half_width_3sigma = %.6g\n", v.ci_half_width);
  std::printf("analytic_failure_prob = %.6g\n", v.analytic);
  std::printf("analytic_within_ci = %s\n", v.analytic_within_ci() ? "yes" : "no");
  return v.analytic_within_ci() ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_path) {
  std::vector<Metrics> runs;
  for (const std::string& f : files) runs.push_back(Metrics::load(f));
  ReportSummary summary = merge_metrics(runs);
  std::cout << summary.to_text();
  std::string csv = merged_csv(runs);
  if (!out_path.empty())
    write_file(out_path, csv);
  else
    std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven DRAM disturbance simulator"};
  app.require_subcommand(1);

  std::string config_path, trace_path, out_dir = "out";
  auto* run = app.add_subcommand("run", "simulate a trace against a config");
  run->add_option("--config", config_path, "config file");
  run->add_option("--trace", trace_path, "command trace file");
  run->add_option("--out", out_dir, "output directory");

  std::string gt_config, gt_pattern = "single_sided", gt_out;
  uint32_t gt_bank = 0, gt_row = 0;
  int64_t gt_row2 = -1, gt_row_end = -1;
  uint64_t gt_count = 1, gt_period = 0, gt_seed = 1;
  auto* gen_trace = app.add_subcommand("gen-trace", "generate an access-pattern trace");
  gen_trace->add_option("--pattern", gt_pattern,
                        "single_sided|double_sided|random|benign_stream");
  gen_trace->add_option("--config", gt_config, "config file (geometry/timing)");
  gen_trace->add_option("--bank", gt_bank, "bank index");
  gen_trace->add_option("--row", gt_row, "aggressor row");
  gen_trace->add_option("--row2", gt_row2, "second aggressor (double_sided)");
  gen_trace->add_option("--row-end", gt_row_end, "end of row range (single_sided)");
  gen_trace->add_option("--count", gt_count, "activations per aggressor row");
  gen_trace->add_option("--period-ns", gt_period, "inter-ACT spacing (default tRC)");
  gen_trace->add_option("--seed", gt_seed, "pattern seed");
  gen_trace->add_option("--out", gt_out, "output trace file")->required();

  std::string gp_config, gp_name = "C19", gp_out;
  uint64_t gp_seed = 1, gp_scale = 1;
  auto* gen_profile = app.add_subcommand("gen-profile", "generate a victim map");
  gen_profile->add_option("--name", gp_name, "A23|B11|C19|NULL");
  gen_profile->add_option("--config", gp_config, "config file (geometry)");
  gen_profile->add_option("--seed", gp_seed, "placement seed");
  gen_profile->add_option("--scale", gp_scale, "divide word counts (desk scale)");
  gen_profile->add_option("--out", gp_out, "output map file")->required();

  std::string sw_config, sw_intervals = "8,16,32,64,128", sw_profile, sw_out;
  uint64_t sw_seed = 1;
  auto* sweep = app.add_subcommand("sweep-refresh", "errors vs refresh interval sweep");
  sweep->add_option("--intervals-ms", sw_intervals, "comma list, increasing");
  sweep->add_option("--profile", sw_profile, "victim profile name");
  sweep->add_option("--config", sw_config, "base config file");
  sweep->add_option("--seed", sw_seed, "base seed (per point: seed + index)");
  sweep->add_option("--out", sw_out, "output CSV (default stdout)");

  double vp_p = 0.005;
  uint64_t vp_n = 100, vp_trials = 100000, vp_seed = 1;
  bool vp_both = false;
  auto* validate = app.add_subcommand("validate-para", "Monte Carlo vs analytic PARA guarantee");
  validate->add_option("--p", vp_p, "refresh probability");
  validate->add_option("--n", vp_n, "closures per trial");
  validate->add_option("--trials", vp_trials, "trial count");
  validate->add_option("--seed", vp_seed, "seed");
  validate->add_flag("--both-sides", vp_both, "refresh both neighbors on the p-event");

  std::vector<std::string> rp_files;
  std::string rp_out;
  auto* report = app.add_subcommand("report", "merge metrics files");
  report->add_option("files", rp_files, "metrics.txt files")->required();
  report->add_option("--out", rp_out, "merged CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, trace_path, out_dir);
    if (*gen_trace)
      return cmd_gen_trace(gt_config, gt_pattern, gt_bank, gt_row, gt_row2, gt_row_end, gt_count,
                           gt_period, gt_seed, gt_out);
    if (*gen_profile) return cmd_gen_profile(gp_config, gp_name, gp_seed, gp_scale, gp_out);
    if (*sweep) return cmd_sweep_refresh(sw_config, sw_intervals, sw_profile, sw_seed, sw_out);
    if (*validate) return cmd_validate_para(vp_p, vp_n, vp_trials, vp_seed, vp_both);
    if (*report) return cmd_report(rp_files, rp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
