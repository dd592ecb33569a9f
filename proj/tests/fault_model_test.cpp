#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fuzz.hpp"
#include "hammersim/hammersim.hpp"
#include "oracle.hpp"

using namespace hammersim;

namespace {

SimConfig no_refresh_config(Geometry geom) {
  SimConfig cfg;
  cfg.geometry = geom;
  cfg.timing.retention_window_ns = 1'000'000'000'000ull;
  return cfg;
}

// engine wrapper around a hand-placed victim population
Engine manual_engine(Geometry geom, const std::vector<VictimMap::ManualCell>& cells,
                     SimConfig cfg) {
  cfg.geometry = geom;
  return Engine(cfg, VictimMap::from_cells(geom, cells), AdjacencyMap(geom));
}

}  // namespace

TEST_CASE("built-in profiles carry the measured multi-bit error counts") {
  auto a23 = VictimProfile::builtin("A23");
  CHECK(a23.words_with_k_victims == std::array<uint64_t, 4>{9'709'721, 181'856, 2'248, 18});
  auto b11 = VictimProfile::builtin("B11");
  CHECK(b11.words_with_k_victims == std::array<uint64_t, 4>{2'632'280, 13'638, 47, 0});
  auto c19 = VictimProfile::builtin("C19");
  CHECK(c19.words_with_k_victims == std::array<uint64_t, 4>{141'821, 42, 0, 0});
  auto none = VictimProfile::builtin("NULL");
  CHECK(none.total_victim_words() == 0);
  CHECK_THROWS_AS(VictimProfile::builtin("Z99"), ConfigError);
}

TEST_CASE("profile scaling rounds word counts down") {
  auto a23 = VictimProfile::builtin("A23").scaled(64);
  CHECK(a23.words_with_k_victims == std::array<uint64_t, 4>{151'714, 2'841, 35, 0});
  auto c19 = VictimProfile::builtin("C19").scaled(64);
  CHECK(c19.words_with_k_victims == std::array<uint64_t, 4>{2'215, 0, 0, 0});
}

TEST_CASE("generated C19 map places the full measured population") {
  // full 2GB geometry, full profile: 141,821 + 42 words, 141,821 + 2*42 bits
  VictimMap map = VictimMap::generate(VictimProfile::builtin("C19"), Geometry{}, 1234);
  CHECK(map.total_victim_bits() == 141'905);

  uint64_t words_single = 0, words_double = 0;
  std::unordered_map<uint64_t, int> per_word;
  map.for_each_cell([&](uint32_t bank, uint32_t row, const VictimCell& cell) {
    ++per_word[Geometry{}.word_index(bank, row, cell.word)];
  });
  for (auto& [word, k] : per_word) (k == 1 ? words_single : words_double)++;
  CHECK(words_single == 141'821);
  CHECK(words_double == 42);
}

TEST_CASE("NULL profile yields an empty map") {
  VictimMap map = VictimMap::generate(VictimProfile::builtin("NULL"), Geometry{1, 64, 8}, 7);
  CHECK(map.empty());
  CHECK(map.total_victim_bits() == 0);
}

TEST_CASE("thresholds are sampled within the configured range") {
  VictimProfile p = VictimProfile::builtin("C19").scaled(64);
  p.threshold_min = 200;
  p.threshold_max = 900;
  VictimMap map = VictimMap::generate(p, Geometry{1, 4096, 1024}, 99);
  uint32_t lo = ~0u, hi = 0;
  map.for_each_cell([&](uint32_t, uint32_t, const VictimCell& c) {
    lo = std::min(lo, c.threshold);
    hi = std::max(hi, c.threshold);
  });
  CHECK(lo >= 200);
  CHECK(hi <= 900);

  p.distribution = ThresholdDistribution::LogUniform;
  VictimMap lmap = VictimMap::generate(p, Geometry{1, 4096, 1024}, 99);
  lo = ~0u, hi = 0;
  lmap.for_each_cell([&](uint32_t, uint32_t, const VictimCell& c) {
    lo = std::min(lo, c.threshold);
    hi = std::max(hi, c.threshold);
  });
  CHECK(lo >= 200);
  CHECK(hi <= 900);
}

TEST_CASE("same (profile, geometry, seed) twice gives byte-identical maps") {
  VictimProfile p = VictimProfile::builtin("C19").scaled(256);
  Geometry geom{1, 1024, 64};
  VictimMap a = VictimMap::generate(p, geom, 42);
  VictimMap b = VictimMap::generate(p, geom, 42);
  std::string pa = "/tmp/hammersim_map_a.txt", pb = "/tmp/hammersim_map_b.txt";
  a.save(pa);
  b.save(pb);
  std::ifstream fa(pa), fb(pb);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().rfind("#victim-map v1\n", 0) == 0);

  VictimMap c = VictimMap::generate(p, geom, 43);  // different seed differs
  std::string pc = "/tmp/hammersim_map_c.txt";
  c.save(pc);
  std::ifstream fc(pc);
  std::stringstream sc;
  sc << fc.rdbuf();
  CHECK(sa.str() != sc.str());
  std::remove(pa.c_str());
  std::remove(pb.c_str());
  std::remove(pc.c_str());
}

TEST_CASE("map export and import round-trip") {
  VictimProfile p = VictimProfile::builtin("B11").scaled(4096);
  Geometry geom{2, 256, 16};
  VictimMap map = VictimMap::generate(p, geom, 5);
  std::string path = "/tmp/hammersim_map_rt.txt";
  map.save(path);
  VictimMap loaded = VictimMap::load(path, geom);
  CHECK(loaded.total_victim_bits() == map.total_victim_bits());
  std::string path2 = "/tmp/hammersim_map_rt2.txt";
  loaded.save(path2);
  std::ifstream f1(path), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("profiles larger than the geometry are rejected") {
  VictimProfile p = VictimProfile::builtin("C19");  // ~142K words
  CHECK_THROWS_AS(VictimMap::generate(p, Geometry{1, 16, 8}, 1), ProfileTooLarge);
}

TEST_CASE("victim flips when adjacent activations reach its threshold") {
  // victim in row 7, threshold 3; hammer row 6
  Engine engine = manual_engine(Geometry{1, 32, 8}, {{0, 7, 2, 11, 3}},
                                no_refresh_config(Geometry{1, 32, 8}));
  uint64_t t = 0;
  for (int i = 0; i < 2; ++i, t += 50) {
    engine.step(Command::act(t, 0, 6));
    engine.step(Command::pre(t, 0));
  }
  CHECK(engine.metrics().flips_total == 0);
  engine.step(Command::act(t, 0, 6));  // third activation
  CHECK(engine.metrics().flips_total == 1);
  CHECK(engine.metrics().first_flip_time_ns == int64_t(t));
  // stored bit inverted: fill is all-ones, bit 11 cleared
  CHECK(engine.peek_word(0, 7, 2) == (~0ull ^ (1ull << 11)));
}

TEST_CASE("both adjacent wordlines accumulate into one victim counter") {
  // victim in row 7, threshold 4; two ACTs on row 6 plus two on row 8 flip it
  Engine engine = manual_engine(Geometry{1, 32, 8}, {{0, 7, 0, 0, 4}},
                                no_refresh_config(Geometry{1, 32, 8}));
  uint64_t t = 0;
  for (uint32_t row : {6u, 6u, 8u}) {
    engine.step(Command::act(t, 0, row));
    engine.step(Command::pre(t, 0));
    t += 50;
  }
  CHECK(engine.metrics().flips_total == 0);
  engine.step(Command::act(t, 0, 8));  // fourth adjacent activation
  CHECK(engine.metrics().flips_total == 1);
}

TEST_CASE("activating the victim's own row restores its charge") {
  // threshold 3: two hits, own-row ACT (reset), two hits, third post-reset hit
  Engine engine = manual_engine(Geometry{1, 32, 8}, {{0, 7, 0, 0, 3}},
                                no_refresh_config(Geometry{1, 32, 8}));
  uint64_t t = 0;
  auto hammer = [&](uint32_t row) {
    engine.step(Command::act(t, 0, row));
    engine.step(Command::pre(t, 0));
    t += 50;
  };
  hammer(6);
  hammer(6);
  hammer(7);  // victim row itself: counter resets
  hammer(6);
  hammer(6);
  CHECK(engine.metrics().flips_total == 0);  // 5 aggressor ACTs, no flip
  hammer(6);                                 // third post-reset activation
  CHECK(engine.metrics().flips_total == 1);
}

TEST_CASE("refresh resets the counter but keeps the flip") {
  SimConfig cfg;
  cfg.geometry = {1, 32, 8};
  cfg.timing.retention_window_ns = 32'000;  // t_refi 1000, row 7 refreshed in round 7
  cfg.timing.ref_commands_per_window = 32;
  Engine engine = manual_engine(cfg.geometry, {{0, 7, 0, 5, 10}}, cfg);

  // 9 hits before row 7's refresh at t=8000
  uint64_t t = 100;
  for (int i = 0; i < 9; ++i, t += 50) {
    engine.step(Command::act(t, 0, 6));
    engine.step(Command::pre(t, 0));
  }
  CHECK(engine.victims().hammer_count(0, 7) == 9);
  // jump past the refresh of row 7, then 9 more hits: still no flip
  t = 8001;
  for (int i = 0; i < 9; ++i, t += 50) {
    engine.step(Command::act(t, 0, 6));
    engine.step(Command::pre(t, 0));
  }
  CHECK(engine.metrics().flips_total == 0);
}

TEST_CASE("a flipped cell survives refresh and reads wrong until rewritten") {
  SimConfig cfg;
  cfg.geometry = {1, 32, 8};
  cfg.timing.retention_window_ns = 32'000;
  cfg.timing.ref_commands_per_window = 32;
  Engine engine = manual_engine(cfg.geometry, {{0, 7, 0, 5, 2}}, cfg);

  engine.step(Command::act(0, 0, 6));
  engine.step(Command::pre(0, 0));
  engine.step(Command::act(50, 0, 6));
  CHECK(engine.metrics().flips_total == 1);
  engine.step(Command::pre(50, 0));

  // drive past several refreshes of row 7: the wrong value is refreshed as-is
  engine.step(Command::act(70'000, 0, 20));
  engine.step(Command::pre(70'000, 0));
  CHECK(engine.peek_word(0, 7, 0) == (~0ull ^ (1ull << 5)));

  // rewriting restores correct data and the cell may flip again later
  engine.step(Command::act(70'100, 0, 7));
  engine.step(Command::wr(70'100, 0, 0, 0xAAAA));
  engine.step(Command::pre(70'100, 0));
  CHECK(engine.peek_word(0, 7, 0) == 0xAAAA);
}

TEST_CASE("write-restore clears the flip and the counter keeps running") {
  Engine engine = manual_engine(Geometry{1, 32, 8}, {{0, 7, 0, 5, 2}},
                                no_refresh_config(Geometry{1, 32, 8}));
  engine.step(Command::act(0, 0, 6));
  engine.step(Command::pre(0, 0));
  engine.step(Command::act(50, 0, 6));
  engine.step(Command::pre(50, 0));
  CHECK(engine.metrics().flips_total == 1);

  engine.step(Command::act(100, 0, 7));  // also resets the hammer counter
  engine.step(Command::wr(100, 0, 0, 0x1234));
  engine.step(Command::pre(100, 0));
  CHECK(engine.peek_word(0, 7, 0) == 0x1234);

  // hammer again: counter runs from its current value and the cell re-flips
  engine.step(Command::act(150, 0, 6));
  engine.step(Command::pre(150, 0));
  CHECK(engine.metrics().flips_total == 1);  // count 1 < 2
  engine.step(Command::act(200, 0, 6));
  CHECK(engine.metrics().flips_total == 2);
  CHECK(engine.peek_word(0, 7, 0) == (0x1234ull ^ (1ull << 5)));
}

TEST_CASE("clear_flips leaves the accumulated count untouched") {
  Geometry geom{1, 8, 4};
  VictimMap map = VictimMap::from_cells(geom, {{0, 3, 0, 7, 2}});
  std::vector<FlipRecord> flips;
  map.hammer_row(0, 3, 10, 2, flips);
  map.hammer_row(0, 3, 20, 2, flips);
  REQUIRE(flips.size() == 1);

  map.clear_flips(0, 3, 0, 1ull << 7);
  CHECK(map.hammer_count(0, 3) == 2);  // count continues from current value
  map.hammer_row(0, 3, 30, 4, flips);  // already past threshold: re-flips now
  REQUIRE(flips.size() == 2);
  CHECK(flips[1].time_ns == 30);
  CHECK(flips[1].aggressor_row == 4);
}

TEST_CASE("flips occur only in rows adjacent to the aggressor") {
  Geometry geom{1, 64, 8};
  std::vector<VictimMap::ManualCell> cells;
  for (uint32_t r = 0; r < 64; r += 3) cells.push_back({0, r, 0, 0, 2});
  SimConfig cfg = no_refresh_config(geom);
  Engine engine(cfg, VictimMap::from_cells(geom, cells), AdjacencyMap(geom));
  engine.set_record_events(false);

  uint64_t t = 0;
  for (int i = 0; i < 10; ++i, t += 50) {
    engine.step(Command::act(t, 0, 30));
    engine.step(Command::pre(t, 0));
  }
  RunResult result = engine.finish();
  for (const FlipRecord& f : result.flips) {
    CHECK(f.aggressor_row == 30);
    CHECK((f.row == 29 || f.row == 31));
  }
}

TEST_CASE("incremental model matches the brute-force recount oracle") {
  for (uint64_t seed = 0; seed < 8; ++seed) {
    Geometry geom{1, 16, 8};
    SimConfig cfg;
    cfg.geometry = geom;
    cfg.timing.retention_window_ns = 16'000;  // rounds interleave with the trace
    cfg.timing.ref_commands_per_window = 16;

    std::vector<VictimMap::ManualCell> cells;
    std::vector<oracle::OracleVictim> ovictims;
    Rng rng(seed * 977 + 3);
    for (int i = 0; i < 12; ++i) {
      auto row = uint32_t(rng.next_below(16));
      auto word = uint32_t(rng.next_below(8));
      auto bit = uint8_t(rng.next_below(64));
      auto thr = uint32_t(1 + rng.next_below(12));
      cells.push_back({0, row, word, bit, thr});
      ovictims.push_back({0, row, word, bit, thr});
    }
    auto cmds = fuzz::random_valid_trace(geom, cfg.timing, seed, 4000);

    Engine engine(cfg, VictimMap::from_cells(geom, cells), AdjacencyMap(geom));
    RunResult result = engine.run_commands(cmds);
    REQUIRE(result.metrics.protocol_violations == 0);

    auto expected = oracle::recount_flips(geom, cfg.timing, ovictims, cmds);
    oracle::sort_flips(result.flips);
    oracle::sort_flips(expected);
    REQUIRE(result.flips.size() == expected.size());
    CHECK(result.flips == expected);
  }
}

TEST_CASE("property: extending a trace never un-flips a cell") {
  Geometry geom{1, 16, 8};
  SimConfig cfg = no_refresh_config(geom);
  std::vector<VictimMap::ManualCell> cells = {
      {0, 3, 0, 0, 4}, {0, 7, 1, 9, 6}, {0, 12, 2, 33, 3}};

  auto cmds = fuzz::random_valid_trace(geom, cfg.timing, 202, 3000);
  std::vector<uint64_t> flip_counts;
  for (size_t prefix : {1000u, 2000u, 3000u}) {
    Engine engine(cfg, VictimMap::from_cells(geom, cells), AdjacencyMap(geom));
    std::vector<Command> slice(cmds.begin(), cmds.begin() + prefix);
    // writes can legitimately clear flips; keep this property on a read-only trace
    std::erase_if(slice, [](const Command& c) { return c.kind == CommandKind::Wr; });
    RunResult r = engine.run_commands(slice);
    flip_counts.push_back(r.metrics.flips_total);
  }
  CHECK(flip_counts[0] <= flip_counts[1]);
  CHECK(flip_counts[1] <= flip_counts[2]);
}

TEST_CASE("property: traces below threshold_min between restores never flip") {
  // threshold soundness: keep every inter-restore run below min threshold
  Geometry geom{1, 16, 8};
  SimConfig cfg = no_refresh_config(geom);
  std::vector<VictimMap::ManualCell> cells = {{0, 5, 0, 0, 8}, {0, 9, 0, 0, 8}};
  Engine engine(cfg, VictimMap::from_cells(geom, cells), AdjacencyMap(geom));

  uint64_t t = 0;
  for (int round = 0; round < 50; ++round) {
    for (uint32_t aggr : {4u, 6u, 8u, 10u}) {
      for (int i = 0; i < 3; ++i, t += 50) {  // 3+3 hits per victim per round < 8
        engine.step(Command::act(t, 0, aggr));
        engine.step(Command::pre(t, 0));
      }
    }
    for (uint32_t victim : {5u, 9u}) {  // restore both victims
      engine.step(Command::act(t, 0, victim));
      engine.step(Command::pre(t, 0));
      t += 50;
    }
  }
  CHECK(engine.metrics().flips_total == 0);
}
