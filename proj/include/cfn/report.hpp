#pragma once

// CSV tables and JSON summaries written by the experiments.
//
// CSV output is a pure function of the inputs (no timestamps) so identical
// runs give identical bytes. JSON summaries additionally carry the version
// string and wall-clock information.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace cfn {

using Json = nlohmann::ordered_json;

const std::string& version_string();

// Shortest round-trip representation ("%.17g"); nan and inf spelled out.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& row(std::vector<std::string> cells);
  std::string str() const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

template <typename T>
std::string cell(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(static_cast<double>(v));
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "1" : "0";
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else {
    return std::string(v);
  }
}

// Creates parent directories. Throws Error when the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

class Stopwatch {
 public:
  Stopwatch();
  double seconds() const;
  const std::string& started_utc() const { return started_; }

 private:
  std::chrono::steady_clock::time_point t0_;
  std::string started_;
};

// {"version", "seed", "wall_clock": {"started_utc", "elapsed_seconds"}, "config", "results"}.
Json make_report(const Json& config, std::uint64_t seed, const Stopwatch& clock, Json results);

// JSON arrays of doubles keep non-finite values as strings.
Json json_number(double x);
Json json_array(const std::vector<double>& v);

}  // namespace cfn
