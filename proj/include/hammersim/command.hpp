#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hammersim/geometry.hpp"

namespace hammersim {

enum class CommandKind : uint8_t { Act, Pre, Rd, Wr, Ref };

inline const char* to_string(CommandKind k) {
  switch (k) {
    case CommandKind::Act: return "ACT";
    case CommandKind::Pre: return "PRE";
    case CommandKind::Rd: return "RD";
    case CommandKind::Wr: return "WR";
    case CommandKind::Ref: return "REF";
  }
  return "?";
}

struct Command {
  uint64_t time_ns = 0;
  CommandKind kind = CommandKind::Act;
  uint32_t bank = 0;
  uint32_t row = 0;   // ACT only
  uint32_t col = 0;   // RD/WR only
  uint64_t data = 0;  // WR only

  static Command act(uint64_t t, uint32_t bank, uint32_t row) {
    return {t, CommandKind::Act, bank, row, 0, 0};
  }
  static Command pre(uint64_t t, uint32_t bank) { return {t, CommandKind::Pre, bank, 0, 0, 0}; }
  static Command rd(uint64_t t, uint32_t bank, uint32_t col) {
    return {t, CommandKind::Rd, bank, 0, col, 0};
  }
  static Command wr(uint64_t t, uint32_t bank, uint32_t col, uint64_t data) {
    return {t, CommandKind::Wr, bank, 0, col, data};
  }
  static Command ref(uint64_t t) { return {t, CommandKind::Ref, 0, 0, 0, 0}; }
};

struct TraceParseError : std::runtime_error {
  TraceParseError(size_t line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_no(line) {}
  size_t line_no;
};

namespace detail {

inline std::optional<std::string_view> next_field(std::string_view& rest) {
  if (rest.empty()) return std::nullopt;
  size_t pos = rest.find(',');
  std::string_view field = rest.substr(0, pos);
  rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
  return field;
}

template <typename T>
T parse_uint(std::string_view s, size_t line, int base = 10) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw TraceParseError(line, "bad integer field '" + std::string(s) + "'");
  return value;
}

}  // namespace detail

// Trace line format, comma separated, trailing fields omitted when
// inapplicable:
//   ACT: time_ns,ACT,bank,row
//   PRE: time_ns,PRE,bank
//   RD:  time_ns,RD,bank,col
//   WR:  time_ns,WR,bank,col,data_hex
//   REF: time_ns,REF
// Lines starting with '#' are comments.
inline std::optional<Command> parse_trace_line(std::string_view line, size_t line_no) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  if (line.empty() || line.front() == '#') return std::nullopt;

  std::string_view rest = line;
  auto time_field = detail::next_field(rest);
  auto kind_field = detail::next_field(rest);
  if (!time_field || !kind_field) throw TraceParseError(line_no, "missing fields");

  Command cmd;
  cmd.time_ns = detail::parse_uint<uint64_t>(*time_field, line_no);

  auto need = [&](const char* what) {
    auto f = detail::next_field(rest);
    if (!f) throw TraceParseError(line_no, std::string("missing ") + what);
    return *f;
  };

  if (*kind_field == "ACT") {
    cmd.kind = CommandKind::Act;
    cmd.bank = detail::parse_uint<uint32_t>(need("bank"), line_no);
    cmd.row = detail::parse_uint<uint32_t>(need("row"), line_no);
  } else if (*kind_field == "PRE") {
    cmd.kind = CommandKind::Pre;
    cmd.bank = detail::parse_uint<uint32_t>(need("bank"), line_no);
  } else if (*kind_field == "RD") {
    cmd.kind = CommandKind::Rd;
    cmd.bank = detail::parse_uint<uint32_t>(need("bank"), line_no);
    cmd.col = detail::parse_uint<uint32_t>(need("col"), line_no);
  } else if (*kind_field == "WR") {
    cmd.kind = CommandKind::Wr;
    cmd.bank = detail::parse_uint<uint32_t>(need("bank"), line_no);
    cmd.col = detail::parse_uint<uint32_t>(need("col"), line_no);
    cmd.data = detail::parse_uint<uint64_t>(need("data"), line_no, 16);
  } else if (*kind_field == "REF") {
    cmd.kind = CommandKind::Ref;
  } else {
    throw TraceParseError(line_no, "unknown command kind '" + std::string(*kind_field) + "'");
  }
  if (!rest.empty()) throw TraceParseError(line_no, "trailing fields");
  return cmd;
}

inline std::string format_trace_line(const Command& cmd) {
  char buf[96];
  int n = 0;
  switch (cmd.kind) {
    case CommandKind::Act:
      n = std::snprintf(buf, sizeof buf, "%llu,ACT,%u,%u", (unsigned long long)cmd.time_ns,
                        cmd.bank, cmd.row);
      break;
    case CommandKind::Pre:
      n = std::snprintf(buf, sizeof buf, "%llu,PRE,%u", (unsigned long long)cmd.time_ns, cmd.bank);
      break;
    case CommandKind::Rd:
      n = std::snprintf(buf, sizeof buf, "%llu,RD,%u,%u", (unsigned long long)cmd.time_ns,
                        cmd.bank, cmd.col);
      break;
    case CommandKind::Wr:
      n = std::snprintf(buf, sizeof buf, "%llu,WR,%u,%u,%llx", (unsigned long long)cmd.time_ns,
                        cmd.bank, cmd.col, (unsigned long long)cmd.data);
      break;
    case CommandKind::Ref:
      n = std::snprintf(buf, sizeof buf, "%llu,REF", (unsigned long long)cmd.time_ns);
      break;
  }
  return std::string(buf, size_t(n));
}

inline std::vector<Command> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  std::vector<Command> cmds;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto cmd = parse_trace_line(line, line_no)) cmds.push_back(*cmd);
  }
  return cmds;
}

template <typename Range>
void write_trace_file(const std::string& path, const Range& cmds) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path);
  for (const Command& cmd : cmds) out << format_trace_line(cmd) << '\n';
}

}  // namespace hammersim
