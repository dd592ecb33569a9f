#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hammersim/ecc.hpp"
#include "hammersim/geometry.hpp"

namespace hammersim {

struct MalformedMetricsFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run counters. ecc_class_counts is the end-of-run SECDED classification of
// every word against its wrong-bit multiset; total_activations includes the
// extra activations mitigations injected.
struct Metrics {
  uint64_t total_activations = 0;
  uint64_t mitigation_extra_activations = 0;
  uint64_t refresh_rounds = 0;
  uint64_t flips_total = 0;
  EccClassCounts ecc_class_counts{0, 0, 0, 0};
  int64_t first_flip_time_ns = -1;  // -1: no flip occurred
  uint64_t simulated_end_time_ns = 0;
  uint64_t protocol_violations = 0;
  std::map<std::pair<uint32_t, uint32_t>, uint64_t> flips_by_row;  // (bank, physical row)

  double overhead_ratio() const {
    return total_activations == 0
               ? 0.0
               : double(mitigation_extra_activations) / double(total_activations);
  }

  uint64_t& ecc_count(EccClass c) { return ecc_class_counts[size_t(c)]; }
  uint64_t ecc_count(EccClass c) const { return ecc_class_counts[size_t(c)]; }

  static constexpr const char* kScalarKeys[11] = {
      "total_activations",     "mitigation_extra_activations",
      "refresh_rounds",        "flips_total",
      "ecc_clean",             "ecc_corrected",
      "ecc_detected_uncorrectable", "ecc_silent_corruption",
      "first_flip_time_ns",    "simulated_end_time_ns",
      "protocol_violations"};

  std::string to_text() const {
    std::ostringstream os;
    os << "total_activations = " << total_activations << '\n'
       << "mitigation_extra_activations = " << mitigation_extra_activations << '\n'
       << "refresh_rounds = " << refresh_rounds << '\n'
       << "flips_total = " << flips_total << '\n'
       << "ecc_clean = " << ecc_class_counts[0] << '\n'
       << "ecc_corrected = " << ecc_class_counts[1] << '\n'
       << "ecc_detected_uncorrectable = " << ecc_class_counts[2] << '\n'
       << "ecc_silent_corruption = " << ecc_class_counts[3] << '\n'
       << "first_flip_time_ns = " << first_flip_time_ns << '\n'
       << "simulated_end_time_ns = " << simulated_end_time_ns << '\n'
       << "protocol_violations = " << protocol_violations << '\n';
    return os.str();
  }

  static std::string csv_header() {
    std::string h;
    for (const char* k : kScalarKeys) {
      if (!h.empty()) h += ',';
      h += k;
    }
    return h;
  }

  std::string to_csv_row() const {
    std::ostringstream os;
    os << total_activations << ',' << mitigation_extra_activations << ',' << refresh_rounds << ','
       << flips_total << ',' << ecc_class_counts[0] << ',' << ecc_class_counts[1] << ','
       << ecc_class_counts[2] << ',' << ecc_class_counts[3] << ',' << first_flip_time_ns << ','
       << simulated_end_time_ns << ',' << protocol_violations;
    return os.str();
  }

  // Parses the key = value block written by to_text().
  static Metrics from_text(std::istream& in, const std::string& origin = "<metrics>") {
    Metrics m;
    uint32_t seen = 0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw MalformedMetricsFile(origin + ":" + std::to_string(line_no) +
                                   ": expected key = value");
      std::string key = line.substr(0, line.find_last_not_of(" \t", eq - 1) + 1);
      std::string value = line.substr(line.find_first_not_of(" \t", eq + 1));
      try {
        if (key == "total_activations") m.total_activations = std::stoull(value), seen |= 1u << 0;
        else if (key == "mitigation_extra_activations")
          m.mitigation_extra_activations = std::stoull(value), seen |= 1u << 1;
        else if (key == "refresh_rounds") m.refresh_rounds = std::stoull(value), seen |= 1u << 2;
        else if (key == "flips_total") m.flips_total = std::stoull(value), seen |= 1u << 3;
        else if (key == "ecc_clean") m.ecc_class_counts[0] = std::stoull(value), seen |= 1u << 4;
        else if (key == "ecc_corrected")
          m.ecc_class_counts[1] = std::stoull(value), seen |= 1u << 5;
        else if (key == "ecc_detected_uncorrectable")
          m.ecc_class_counts[2] = std::stoull(value), seen |= 1u << 6;
        else if (key == "ecc_silent_corruption")
          m.ecc_class_counts[3] = std::stoull(value), seen |= 1u << 7;
        else if (key == "first_flip_time_ns")
          m.first_flip_time_ns = std::stoll(value), seen |= 1u << 8;
        else if (key == "simulated_end_time_ns")
          m.simulated_end_time_ns = std::stoull(value), seen |= 1u << 9;
        else if (key == "protocol_violations")
          m.protocol_violations = std::stoull(value), seen |= 1u << 10;
        else
          throw MalformedMetricsFile(origin + ":" + std::to_string(line_no) + ": unknown key '" +
                                     key + "'");
      } catch (const MalformedMetricsFile&) {
        throw;
      } catch (const std::exception&) {
        throw MalformedMetricsFile(origin + ":" + std::to_string(line_no) + ": bad value '" +
                                   value + "'");
      }
    }
    if (seen != (1u << 11) - 1)
      throw MalformedMetricsFile(origin + ": missing metrics keys");
    return m;
  }

  static Metrics load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedMetricsFile("cannot open metrics file: " + path);
    return from_text(in, path);
  }
};

}  // namespace hammersim
