#pragma once

// CSV ingestion and trace serialisation.

#include "ihcpd/detector.hpp"
#include "ihcpd/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ihcpd::cli {

// Shortest text that reads back exactly: 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view text, double &out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

inline std::string_view first_cell(std::string_view line) {
  const auto comma = line.find(',');
  return trim(comma == std::string_view::npos ? line : line.substr(0, comma));
}

// First column of a CSV file. A non-numeric first row is treated as a header;
// blank lines are skipped.
inline std::vector<double> ingest_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<double> series;
  std::string line;
  std::size_t row = 0;
  bool first_content_row = true;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view cell = first_cell(line);
    if (cell.empty() && trim(line).empty()) continue;
    double v = 0.0;
    if (!parse_double(cell, v)) {
      if (first_content_row) {
        first_content_row = false;
        continue;
      }
      throw InputError(path.string() + ":" + std::to_string(row) + ": non-numeric value '" + std::string(cell) +
                       "'");
    }
    first_content_row = false;
    series.push_back(v);
  }
  if (series.empty()) throw InputError(path.string() + ": no observations");
  return series;
}

// Integer column reader used for change-point lists.
inline std::vector<std::size_t> ingest_indices(const std::filesystem::path &path) {
  std::vector<std::size_t> out;
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  std::size_t row = 0;
  bool first_content_row = true;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view cell = first_cell(line);
    if (cell.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      if (first_content_row) {
        first_content_row = false;
        continue;
      }
      throw InputError(path.string() + ":" + std::to_string(row) + ": not a time index '" + std::string(cell) + "'");
    }
    first_content_row = false;
    out.push_back(v);
  }
  return out;
}

inline void write_file(const std::filesystem::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw InputError("failed writing " + path.string());
}

inline void ensure_directory(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw InputError("cannot create directory " + dir.string());
}

inline constexpr double kPosteriorFloor = 1e-12;

class OutputFile {
public:
  explicit OutputFile(std::filesystem::path path) : path_(std::move(path)), out_(path_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw InputError("cannot write " + path_.string());
  }

  std::ostream &stream() { return out_; }

  void close() {
    out_.flush();
    if (!out_) throw InputError("failed writing " + path_.string());
    out_.close();
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Writes assignments.csv, runlength_map.csv, posterior.csv and changepoints.csv into outdir.
inline void emit_traces(std::span<const double> series, const RunResult &result, const std::filesystem::path &outdir) {
  require(series.size() == result.steps.size(), "emit_traces: series and trace lengths differ");
  ensure_directory(outdir);

  OutputFile assignments(outdir / "assignments.csv");
  OutputFile runlength(outdir / "runlength_map.csv");
  OutputFile posterior(outdir / "posterior.csv");
  OutputFile changepoints(outdir / "changepoints.csv");
  assignments.stream() << "t,x,z_star,k_t\n";
  runlength.stream() << "t,r_star,cp_flag\n";
  posterior.stream() << "t,r,mass\n";
  changepoints.stream() << "t\n";

  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const StepOutput &s = result.steps[i];
    assignments.stream() << s.t << ',' << format_double(series[i]) << ',' << s.z_star << ',' << s.k_t << '\n';
    runlength.stream() << s.t << ',' << s.r_star << ',' << (s.cp_flag ? 1 : 0) << '\n';
    for (const RunLengthMass &m : s.rl_posterior) {
      if (m.mass < kPosteriorFloor) continue;
      posterior.stream() << s.t << ',' << m.r << ',' << format_double(m.mass) << '\n';
    }
  }
  for (std::size_t t : result.changepoints) changepoints.stream() << t << '\n';

  assignments.close();
  runlength.close();
  posterior.close();
  changepoints.close();
}

inline void write_series_csv(const std::filesystem::path &path, std::span<const double> series) {
  std::ostringstream out;
  out << "x\n";
  for (double v : series) out << format_double(v) << '\n';
  write_file(path, out.str());
}

inline void write_indices_csv(const std::filesystem::path &path, std::span<const std::size_t> indices) {
  std::ostringstream out;
  out << "t\n";
  for (std::size_t v : indices) out << v << '\n';
  write_file(path, out.str());
}

} // namespace ihcpd::cli
