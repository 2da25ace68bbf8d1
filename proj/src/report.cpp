#include "cfn/report.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "cfn/error.hpp"

#ifndef CFN_VERSION
#define CFN_VERSION "0.0.0-unknown"
#endif

namespace cfn {

const std::string& version_string() {
  static const std::string v = CFN_VERSION;
  return v;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw Error("csv row width does not match the header");
  rows_.push_back(std::move(cells));
  return *this;
}

namespace {

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out += ',';
    const auto& c = cells[k];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      out += c;
    } else {
      out += '"';
      for (char ch : c) {
        if (ch == '"') out += '"';
        out += ch;
      }
      out += '"';
    }
  }
  out += '\n';
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  append_line(out, header_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

Stopwatch::Stopwatch() : t0_(std::chrono::steady_clock::now()) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  started_ = buf;
}

double Stopwatch::seconds() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
}

Json make_report(const Json& config, std::uint64_t seed, const Stopwatch& clock, Json results) {
  Json j;
  j["version"] = version_string();
  j["seed"] = seed;
  j["wall_clock"] = {{"started_utc", clock.started_utc()}, {"elapsed_seconds", clock.seconds()}};
  j["config"] = config;
  j["results"] = std::move(results);
  return j;
}

Json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

Json json_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

}  // namespace cfn
