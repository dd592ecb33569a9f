#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hammersim/adjacency.hpp"
#include "hammersim/command.hpp"
#include "hammersim/config.hpp"
#include "hammersim/ecc.hpp"
#include "hammersim/memory.hpp"
#include "hammersim/metrics.hpp"
#include "hammersim/mitigation.hpp"
#include "hammersim/timing.hpp"
#include "hammersim/victim.hpp"

namespace hammersim {

#if defined(__GNUC__) || defined(__clang__)
#define HAMMERSIM_NOINLINE __attribute__((noinline))
#define HAMMERSIM_COLD __attribute__((cold))
#define HAMMERSIM_HOT inline __attribute__((always_inline))
#else
#define HAMMERSIM_NOINLINE
#define HAMMERSIM_COLD
#define HAMMERSIM_HOT inline
#endif

enum class Violation : uint8_t { None, Protocol, Timing, OutOfOrder };

inline const char* to_string(Violation v) {
  switch (v) {
    case Violation::None: return "none";
    case Violation::Protocol: return "protocol";
    case Violation::Timing: return "timing";
    case Violation::OutOfOrder: return "out_of_order";
  }
  return "?";
}

struct ViolationRecord {
  uint64_t position;  // trace line number / command index
  uint64_t time_ns;
  Violation kind;
  std::string detail;
};

// Observable protocol events, mainly for tests and single-step callers; bulk
// runs keep recording off.
struct Event {
  enum class Kind : uint8_t {
    RowOpened,
    RowClosed,
    WordRead,
    WordWritten,
    RowRefreshed,
    RefreshRoundDone,
  };
  Kind kind;
  uint32_t bank = 0;
  uint32_t row = 0;
  uint32_t col = 0;
};

struct BankState {
  int64_t open_row = -1;  // -1 = closed
  uint64_t last_act_time_ns = 0;
  bool has_last_act = false;
  uint32_t next_ref_row = 0;  // round-robin refresh pointer (physical)
};

struct RunResult {
  Metrics metrics;
  std::vector<FlipRecord> flips;
  std::vector<ViolationRecord> violations;
};

// One rank, one controller, one fault model, strictly deterministic given
// (config, trace, seed). Trace commands and auto-scheduled refresh rounds are
// processed in global time order; on a timestamp tie the refresh round goes
// first. Commands that violate the protocol are counted and dropped, never
// fatal, so fuzzed traces still produce a report.
class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : Engine(cfg, make_victim_map(cfg), AdjacencyMap(cfg.geometry)) {}

  Engine(const SimConfig& cfg, VictimMap victims, AdjacencyMap adjacency)
      : cfg_(cfg),
        geom_(cfg.geometry),
        timing_(effective_timing(cfg)),
        memory_(cfg.geometry, cfg.fault.fill_pattern),
        victims_(std::move(victims)),
        adjacency_(std::move(adjacency)),
        banks_(cfg.geometry.banks) {
    cfg_.validate();
    rows_per_round_ = timing_.rows_per_refresh(geom_);
    rounds_per_window_ = timing_.ref_commands_per_window;
    t_refi_eff_ = timing_.effective_t_refi_ns();
    window_eff_ = timing_.effective_window_ns();
    next_round_time_ = t_refi_eff_;

    switch (cfg_.mitigation.kind) {
      case MitigationKind::None:
      case MitigationKind::Refresh:
        break;
      case MitigationKind::Para: {
        ParaConfig pc;
        pc.p = cfg_.mitigation.p;
        pc.both_sides = cfg_.mitigation.para_both_sides;
        pc.rng_seed = cfg_.seed_for("para");
        policy_ = std::make_unique<ParaPolicy>(pc);
        break;
      }
      case MitigationKind::Counter: {
        CounterConfig cc;
        cc.mode = cfg_.mitigation.counter_mode;
        cc.capacity = cfg_.mitigation.capacity;
        cc.mit_threshold = cfg_.mitigation.threshold;
        policy_ = std::make_unique<CounterPolicy>(cc, geom_);
        break;
      }
      case MitigationKind::StaticRemap:
        install_static_remap();
        break;
      case MitigationKind::DynamicRemap:
        policy_ = std::make_unique<DynamicRemapPolicy>(
            RemapTable::top_rows_pool(geom_, cfg_.mitigation.reserve_rows));
        break;
    }
  }

  // Applies one command at its timestamp, firing any refresh rounds due first.
  Violation step(const Command& cmd) { return step_at(cmd, ++position_fallback_); }

  // Per-kind entry points; these keep generated-pattern hot loops free of the
  // command-kind dispatch.
  HAMMERSIM_HOT void feed_act(uint64_t t, uint32_t bank, uint32_t row) {
    Command cmd = Command::act(t, bank, row);
    uint64_t pos = ++position_fallback_;
    if (record_events_) events_.clear();
    if (!advance_clock(cmd.time_ns)) {
      reject(cmd, pos, Violation::OutOfOrder, "timestamp decreases");
      return;
    }
    handle_act(cmd, pos);
  }
  HAMMERSIM_HOT void feed_rd(uint64_t t, uint32_t bank, uint32_t col) {
    Command cmd = Command::rd(t, bank, col);
    uint64_t pos = ++position_fallback_;
    if (record_events_) events_.clear();
    if (!advance_clock(cmd.time_ns)) {
      reject(cmd, pos, Violation::OutOfOrder, "timestamp decreases");
      return;
    }
    handle_rd(cmd, pos);
  }
  HAMMERSIM_HOT void feed_pre(uint64_t t, uint32_t bank) {
    Command cmd = Command::pre(t, bank);
    uint64_t pos = ++position_fallback_;
    if (record_events_) events_.clear();
    if (!advance_clock(cmd.time_ns)) {
      reject(cmd, pos, Violation::OutOfOrder, "timestamp decreases");
      return;
    }
    handle_pre(cmd, pos);
  }


  template <typename Source>
  RunResult run(Source&& src) {
    bool prev = record_events_;
    record_events_ = false;
    Command cmd;
    while (src.next(cmd)) step_at(cmd, src.position());
    record_events_ = prev;
    return finish();
  }

  RunResult run_commands(const std::vector<Command>& cmds) {
    struct VectorSource {
      const std::vector<Command>* cmds;
      size_t i = 0;
      bool next(Command& out) {
        if (i >= cmds->size()) return false;
        out = (*cmds)[i++];
        return true;
      }
      uint64_t position() const { return i; }
    } src{&cmds};
    return run(src);
  }

  RunResult run_trace_file(const std::string& path) {
    struct FileSource {
      std::ifstream in;
      size_t line_no = 0;
      std::string line;
      bool next(Command& out) {
        while (std::getline(in, line)) {
          ++line_no;
          if (auto cmd = parse_trace_line(line, line_no)) {
            out = *cmd;
            return true;
          }
        }
        return false;
      }
      uint64_t position() const { return line_no; }
    } src;
    src.in.open(path);
    if (!src.in) throw ConfigError("cannot open trace file: " + path);
    return run(src);
  }

  // Push interface for generated command streams.
  HAMMERSIM_HOT void feed(const Command& cmd) { step_at(cmd, ++position_fallback_); }

  // Ends a run: classifies every word against its final wrong-bit multiset
  // and hands over the flip log.
  RunResult finish() {
    RunResult result;
    metrics_.simulated_end_time_ns = last_time_;
    metrics_.ecc_class_counts = {0, 0, 0, 0};
    uint64_t corrupted = 0;
    for (const auto& [key, mask] : memory_.wrong_words()) {
      if (mask == 0) continue;
      ++corrupted;
      ++metrics_.ecc_count(classify_word(unsigned(std::popcount(mask))));
    }
    metrics_.ecc_count(EccClass::Clean) = geom_.word_capacity() - corrupted;
    result.metrics = metrics_;
    result.flips = std::move(flips_);
    flips_.clear();
    result.violations = std::move(violations_);
    violations_.clear();
    return result;
  }

  // -- test and driver access --------------------------------------------

  const std::vector<Event>& last_events() const { return events_; }
  void set_record_events(bool on) { record_events_ = on; }
  Metrics& metrics() { return metrics_; }
  MemoryStore& memory() { return memory_; }
  VictimMap& victims() { return victims_; }
  AdjacencyMap& adjacency() { return adjacency_; }
  const TimingParams& timing() const { return timing_; }
  const Geometry& geometry() const { return geom_; }
  const BankState& bank(uint32_t b) const { return banks_[b]; }

  // Reads through the logical-to-physical mapping without protocol checks.
  uint64_t peek_word(uint32_t bank, uint32_t logical_row, uint32_t col) const {
    uint32_t phys = adjacency_.physical_row(bank, logical_row);
    return memory_.read(geom_.word_index(bank, phys, col));
  }

  static VictimMap make_victim_map(const SimConfig& cfg) {
    if (!cfg.fault.victim_map_path.empty())
      return VictimMap::load(cfg.fault.victim_map_path, cfg.geometry);
    return VictimMap::generate(cfg.fault.resolve_profile(), cfg.geometry,
                               cfg.seed_for("victim-map"));
  }

 private:
  static TimingParams effective_timing(const SimConfig& cfg) {
    TimingParams t = cfg.timing;
    if (cfg.mitigation.kind == MitigationKind::Refresh)
      t = increased_refresh(t, cfg.mitigation.scale);
    return t;
  }

  // Fires refresh rounds due at or before t (ties: refresh first), then
  // admits the command unless its timestamp runs backwards.
  HAMMERSIM_HOT bool advance_clock(uint64_t t) {
    while (next_round_time_ <= t) {
      do_refresh_round(next_round_time_);
      advance_round_clock();
    }
    if (t < last_time_) return false;
    last_time_ = t;
    return true;
  }

  Violation step_at(const Command& cmd, uint64_t position) {
    if (record_events_) events_.clear();
    if (!advance_clock(cmd.time_ns))
      return reject(cmd, position, Violation::OutOfOrder, "timestamp decreases");

    switch (cmd.kind) {
      case CommandKind::Act: return handle_act(cmd, position);
      case CommandKind::Pre: return handle_pre(cmd, position);
      case CommandKind::Rd: return handle_rd(cmd, position);
      case CommandKind::Wr: return handle_wr(cmd, position);
      case CommandKind::Ref:
        do_refresh_round(cmd.time_ns);
        return Violation::None;
    }
    return Violation::None;
  }

  HAMMERSIM_HOT Violation handle_act(const Command& cmd, uint64_t position) {
    if (cmd.bank >= geom_.banks || cmd.row >= geom_.rows_per_bank)
      return reject(cmd, position, Violation::Protocol, "ACT address out of range");
    BankState& bank = banks_[cmd.bank];
    if (bank.open_row >= 0)
      return reject(cmd, position, Violation::Protocol, "ACT on open bank");
    if (bank.has_last_act && cmd.time_ns - bank.last_act_time_ns < timing_.t_rc_ns)
      return reject(cmd, position, Violation::Timing, "ACT-to-ACT closer than tRC");

    bank.open_row = cmd.row;
    bank.last_act_time_ns = cmd.time_ns;
    bank.has_last_act = true;
    ++metrics_.total_activations;

    uint32_t phys = adjacency_.physical_row(cmd.bank, cmd.row);
    victims_.restore_row(cmd.bank, phys);
    if (phys > 0) victims_.hammer_row(cmd.bank, phys - 1, cmd.time_ns, phys, scratch_flips_);
    if (phys + 1 < geom_.rows_per_bank)
      victims_.hammer_row(cmd.bank, phys + 1, cmd.time_ns, phys, scratch_flips_);
    if (!scratch_flips_.empty()) commit_flips();

    if (record_events_) events_.push_back({Event::Kind::RowOpened, cmd.bank, cmd.row, 0});
    if (policy_) {
      policy_->on_row_open(RowAddress{cmd.bank, cmd.row}, cmd.time_ns, actions_);
      if (!actions_.empty()) exec_actions(cmd.time_ns);
    }
    return Violation::None;
  }

  HAMMERSIM_HOT Violation handle_pre(const Command& cmd, uint64_t position) {
    if (cmd.bank >= geom_.banks)
      return reject(cmd, position, Violation::Protocol, "PRE bank out of range");
    BankState& bank = banks_[cmd.bank];
    if (bank.open_row < 0)
      return reject(cmd, position, Violation::Protocol, "PRE on closed bank");
    auto closed = uint32_t(bank.open_row);
    bank.open_row = -1;
    if (record_events_) events_.push_back({Event::Kind::RowClosed, cmd.bank, closed, 0});
    if (policy_) {
      policy_->on_row_close(RowAddress{cmd.bank, closed}, cmd.time_ns, actions_);
      if (!actions_.empty()) exec_actions(cmd.time_ns);
    }
    return Violation::None;
  }

  HAMMERSIM_HOT Violation handle_rd(const Command& cmd, uint64_t position) {
    if (cmd.bank >= geom_.banks || cmd.col >= geom_.words_per_row)
      return reject(cmd, position, Violation::Protocol, "RD address out of range");
    BankState& bank = banks_[cmd.bank];
    if (bank.open_row < 0)
      return reject(cmd, position, Violation::Protocol, "RD on closed bank");
    if (cfg_.ecc.enabled) {
      uint32_t phys = adjacency_.physical_row(cmd.bank, uint32_t(bank.open_row));
      evaluate_word(cmd.bank, phys, cmd.col, cmd.time_ns);
    }
    if (record_events_)
      events_.push_back({Event::Kind::WordRead, cmd.bank, uint32_t(bank.open_row), cmd.col});
    return Violation::None;
  }

  HAMMERSIM_HOT Violation handle_wr(const Command& cmd, uint64_t position) {
    if (cmd.bank >= geom_.banks || cmd.col >= geom_.words_per_row)
      return reject(cmd, position, Violation::Protocol, "WR address out of range");
    BankState& bank = banks_[cmd.bank];
    if (bank.open_row < 0)
      return reject(cmd, position, Violation::Protocol, "WR on closed bank");
    uint32_t phys = adjacency_.physical_row(cmd.bank, uint32_t(bank.open_row));
    memory_.write(geom_.word_index(cmd.bank, phys, cmd.col), cmd.data);
    if (victims_.row_has_victims(cmd.bank, phys))
      victims_.clear_flips(cmd.bank, phys, cmd.col, ~0ull);
    if (record_events_)
      events_.push_back({Event::Kind::WordWritten, cmd.bank, uint32_t(bank.open_row), cmd.col});
    return Violation::None;
  }

  HAMMERSIM_NOINLINE void do_refresh_round(uint64_t t) {
    for (uint32_t b = 0; b < geom_.banks; ++b) {
      BankState& bank = banks_[b];
      for (uint64_t i = 0; i < rows_per_round_; ++i) {
        uint32_t row = bank.next_ref_row;
        refresh_physical_row(b, row, t, false);
        bank.next_ref_row = row + 1 == geom_.rows_per_bank ? 0 : row + 1;
      }
    }
    ++metrics_.refresh_rounds;
    last_time_ = t > last_time_ ? t : last_time_;
    if (record_events_) events_.push_back({Event::Kind::RefreshRoundDone, 0, 0, 0});
    if (policy_) policy_->on_refresh_round(t);
  }

  // A refresh restores charge: victim counters in the row reset, already
  // flipped cells keep their wrong value. Preventive (mitigation-issued)
  // refreshes additionally count as extra activations, and do not hammer.
  void refresh_physical_row(uint32_t bank, uint32_t phys_row, uint64_t t, bool preventive) {
    victims_.restore_row(bank, phys_row);
    if (preventive) {
      ++metrics_.mitigation_extra_activations;
      ++metrics_.total_activations;
    }
    if (cfg_.ecc.enabled && cfg_.ecc.scrub_on_refresh) scrub_row(bank, phys_row, t);
    if (record_events_) events_.push_back({Event::Kind::RowRefreshed, bank, phys_row, 0});
  }

  void scrub_row(uint32_t bank, uint32_t phys_row, uint64_t t) {
    auto words = memory_.corrupted_words_in_row(geom_.row_index(bank, phys_row));
    for (uint64_t key : words)
      evaluate_word(bank, phys_row, uint32_t(key % geom_.words_per_row), t);
  }

  // SECDED evaluation of one word. A single wrong bit is repaired in place; a
  // detectable event is reported to the active policy.
  HAMMERSIM_NOINLINE void evaluate_word(uint32_t bank, uint32_t phys_row, uint32_t col, uint64_t t) {
    uint64_t key = geom_.word_index(bank, phys_row, col);
    uint64_t mask = memory_.wrong_bits(key);
    if (mask == 0) return;
    EccClass cls = classify_word(unsigned(std::popcount(mask)));
    if (cls == EccClass::Corrected) {
      memory_.repair_single(key);
      victims_.clear_flips(bank, phys_row, col, mask);
    }
    if (cls == EccClass::SilentCorruption) return;  // miscorrection, no event
    if (policy_) {
      uint32_t logical = adjacency_.logical_row(bank, phys_row);
      policy_->on_flip_detected(WordAddress{bank, logical, col}, cls, actions_);
      if (!actions_.empty()) exec_actions(t);
    }
  }

  HAMMERSIM_NOINLINE void exec_actions(uint64_t t) {
    // Actions may cascade: a preventive refresh can scrub a word whose
    // detection event emits further actions. Those land on the same list and
    // are drained by this loop; nested calls must not restart it.
    if (draining_actions_) return;
    draining_actions_ = true;
    for (size_t i = 0; i < actions_.size(); ++i) {
      MitigationAction a = actions_[i];
      switch (a.kind) {
        case MitigationAction::Kind::RefreshLeftNeighbor:
          refresh_neighbor(a.row, t, true, false);
          break;
        case MitigationAction::Kind::RefreshRightNeighbor:
          refresh_neighbor(a.row, t, false, true);
          break;
        case MitigationAction::Kind::RefreshBothNeighbors:
          refresh_neighbor(a.row, t, true, true);
          break;
        case MitigationAction::Kind::RemapRow:
          execute_remap(a.row);
          break;
      }
    }
    actions_.clear();
    draining_actions_ = false;
  }

  // Resolves a subject row's physical neighbors and refreshes the requested
  // side(s). A one-sided request on a boundary row falls back to the row's
  // single existing neighbor.
  void refresh_neighbor(RowAddress subject, uint64_t t, bool left, bool right) {
    uint32_t phys = adjacency_.physical_row(subject.bank, subject.row);
    bool has_left = phys > 0;
    bool has_right = phys + 1 < geom_.rows_per_bank;
    if (left && !right && !has_left) { left = false; right = true; }
    if (right && !left && !has_right) { right = false; left = true; }
    if (left && has_left) refresh_physical_row(subject.bank, phys - 1, t, true);
    if (right && has_right) refresh_physical_row(subject.bank, phys + 1, t, true);
  }

  void execute_remap(RowAddress logical) {
    auto* remap = dynamic_cast<DynamicRemapPolicy*>(policy_.get());
    if (!remap) return;
    RowAddress spare = remap->table().take_spare(logical.bank);
    uint32_t old_phys = adjacency_.physical_row(logical.bank, logical.row);
    uint32_t spare_owner = adjacency_.logical_row(spare.bank, spare.row);
    adjacency_.swap_mapping(logical.bank, logical.row, spare_owner);
    memory_.move_row(geom_.row_index(logical.bank, old_phys),
                     geom_.row_index(spare.bank, spare.row));
    remap->table().installed.emplace_back(logical, spare.row);
  }

  // Static retirement happens before the run: a post-manufacturing profiling
  // scan (adversarial hammering of every row for a full retention window)
  // flags exactly the cells whose threshold is achievable within the window.
  void install_static_remap() {
    std::vector<FlipRecord> scan;
    uint64_t achievable = timing_.max_activations_per_window();
    victims_.for_each_cell([&](uint32_t bank, uint32_t row, const VictimCell& cell) {
      if (cell.threshold <= achievable)
        scan.push_back(FlipRecord{0, bank, row, cell.word, cell.bit, row});
    });
    RemapTable table = RemapTable::top_rows_pool(geom_, cfg_.mitigation.reserve_rows);
    remap_static(scan, table, adjacency_);
  }

  HAMMERSIM_NOINLINE void commit_flips() {
    for (const FlipRecord& flip : scratch_flips_) {
      memory_.apply_flip(geom_.word_index(flip.bank, flip.row, flip.word), flip.bit);
      ++metrics_.flips_total;
      if (metrics_.first_flip_time_ns < 0)
        metrics_.first_flip_time_ns = int64_t(flip.time_ns);
      ++metrics_.flips_by_row[{flip.bank, flip.row}];
      flips_.push_back(flip);
    }
    scratch_flips_.clear();
  }

  HAMMERSIM_NOINLINE HAMMERSIM_COLD Violation reject(const Command& cmd, uint64_t position,
                                                   Violation kind, const char* why) {
    ++metrics_.protocol_violations;
    if (violations_.size() < kMaxViolationRecords)
      violations_.push_back(ViolationRecord{
          position, cmd.time_ns, kind,
          std::string(to_string(cmd.kind)) + ": " + why});
    return kind;
  }

  void advance_round_clock() {
    if (++round_in_window_ == rounds_per_window_) {
      round_in_window_ = 0;
      window_base_ += window_eff_;
    }
    next_round_time_ = window_base_ + (round_in_window_ + 1) * t_refi_eff_;
  }

  static constexpr size_t kMaxViolationRecords = 1024;

  SimConfig cfg_;
  Geometry geom_;
  TimingParams timing_;
  MemoryStore memory_;
  VictimMap victims_;
  AdjacencyMap adjacency_;
  std::vector<BankState> banks_;
  std::unique_ptr<MitigationPolicy> policy_;

  uint64_t rows_per_round_ = 1;
  uint64_t rounds_per_window_ = 1;
  uint64_t t_refi_eff_ = 1;
  uint64_t window_eff_ = 1;
  uint64_t next_round_time_ = 0;
  uint64_t round_in_window_ = 0;
  uint64_t window_base_ = 0;

  uint64_t last_time_ = 0;
  uint64_t position_fallback_ = 0;

  Metrics metrics_;
  std::vector<FlipRecord> flips_;
  std::vector<FlipRecord> scratch_flips_;
  std::vector<ViolationRecord> violations_;
  std::vector<MitigationAction> actions_;
  std::vector<Event> events_;
  bool record_events_ = true;
  bool draining_actions_ = false;
};

// Runs the trace named by the config.
inline RunResult run(const SimConfig& cfg) {
  Engine engine(cfg);
  return engine.run_trace_file(cfg.trace_path);
}

inline std::string flip_log_csv_header() { return "time_ns,bank,row,word,bit,aggressor_row"; }

inline std::string flip_log_csv_row(const FlipRecord& f) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%llu,%u,%u,%u,%u,%u", (unsigned long long)f.time_ns, f.bank,
                f.row, f.word, unsigned(f.bit), f.aggressor_row);
  return buf;
}

}  // namespace hammersim
