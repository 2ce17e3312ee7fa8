#pragma once

// CSV (RFC 4180, '.' decimal separator) and JSON writers. Every table
// starts with '#'-prefixed provenance lines; JSON mirrors carry the same
// data under "provenance".

#include "regime_risk/app/config.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace regime_risk::app {

/// Shortest round-trippable-enough text for a double; independent of locale.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline json json_num(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  double days_per_year = kTradingDaysPerYear;
  std::vector<std::pair<std::string, std::string>> extra;

  static Provenance of(const std::string& command, const RunConfig& cfg) {
    return {command, cfg.hash, cfg.mc.seed, cfg.days_per_year, {}};
  }

  std::vector<std::pair<std::string, std::string>> items() const {
    std::vector<std::pair<std::string, std::string>> out = {
        {"tool", std::string("regime-risk ") + kVersion},
        {"command", command},
        {"config_hash", config_hash},
        {"seed", std::to_string(seed)},
        {"days_per_year", num(days_per_year)},
    };
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }

  json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : items()) j[k] = v;
    return j;
  }
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::size_t rows() const { return rows_.size(); }

  std::string render(const Provenance& prov) const {
    std::string out;
    for (const auto& [k, v] : prov.items()) out += "# " + k + "=" + v + "\r\n";
    append_row(out, header_);
    for (const auto& r : rows_) append_row(out, r);
    return out;
  }

private:
  static void append_row(std::string& out, const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_field(row[i]);
    }
    out += "\r\n";
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << content;
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

}  // namespace regime_risk::app
