#pragma once

// Flat-file artifact layer: CSV payloads with JSON sidecars/manifests.  All
// numeric output goes through format_double (round-trip %.17g) and all
// iteration orders are fixed, so identical runs produce byte-identical files.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "merotherm/cloud.hpp"
#include "merotherm/common.hpp"
#include "merotherm/grid.hpp"
#include "merotherm/measure.hpp"
#include "merotherm/pressure.hpp"
#include "merotherm/transfer.hpp"
#include "merotherm/verify.hpp"

namespace merotherm {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Low-level file helpers.

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw workbench_error("cannot open for writing: " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw workbench_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_json_file(const std::filesystem::path& path, const ojson& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

// Splits one CSV line on commas.  Fields in these artifacts never contain
// commas or quotes, so no quoting rules are needed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_field_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw config_error(where + ": cannot parse number '" + s + "'");
  }
}

// Reads a CSV file, checks the exact header, returns data rows split into
// fields.  Blank trailing lines are ignored.
inline std::vector<std::vector<std::string>> read_csv_rows(
    const std::filesystem::path& path, const std::string& expected_header) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw config_error(path.string() + ": empty file, expected header '" +
                       expected_header + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw config_error(path.string() + ": header is '" + line + "', expected '" +
                       expected_header + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    const std::size_t want = split_csv_line(expected_header).size();
    if (fields.size() != want)
      throw config_error(path.string() + ":" + std::to_string(line_no) +
                         ": expected " + std::to_string(want) + " fields, got " +
                         std::to_string(fields.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JuliaCloud <-> CSV (columns: re,im,depth).

inline void write_cloud_csv(const std::filesystem::path& path, const JuliaCloud& cloud) {
  std::string body = "re,im,depth\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    body += format_double(cloud.points[i].real());
    body += ',';
    body += format_double(cloud.points[i].imag());
    body += ',';
    body += std::to_string(cloud.depths.empty() ? 0 : cloud.depths[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

inline JuliaCloud read_cloud_csv(const std::filesystem::path& path) {
  JuliaCloud cloud;
  const auto rows = detail::read_csv_rows(path, "re,im,depth");
  if (rows.empty()) throw config_error(path.string() + ": no data rows");
  for (const auto& r : rows) {
    const std::string where = path.string();
    const double re = detail::parse_field_double(r[0], where + " column re");
    const double im = detail::parse_field_double(r[1], where + " column im");
    const double dd = detail::parse_field_double(r[2], where + " column depth");
    cloud.points.emplace_back(re, im);
    cloud.depths.push_back(static_cast<int>(dd));
    cloud.depth = std::max(cloud.depth, static_cast<int>(dd));
  }
  cloud.seed = cloud.points.front();
  refresh_cloud_stats(cloud);
  return cloud;
}

// ---------------------------------------------------------------------------
// GridFunction <-> CSV (columns: re,im,value).  The reader also rebuilds the
// backing cloud, which the caller owns.

inline void write_grid_csv(const std::filesystem::path& path, const GridFunction& g) {
  if (g.cloud == nullptr) throw workbench_error("write_grid_csv: no backing cloud");
  std::string body = "re,im,value\n";
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    body += format_double(g.cloud->points[i].real());
    body += ',';
    body += format_double(g.cloud->points[i].imag());
    body += ',';
    body += format_double(g.values[i]);
    body += '\n';
  }
  write_text_file(path, body);
}

// Returns the values and fills `cloud_out` with the grid's points; the
// GridFunction must be rebuilt against `cloud_out` by the caller (it holds a
// non-owning pointer).
inline std::vector<double> read_grid_csv(const std::filesystem::path& path,
                                         JuliaCloud& cloud_out) {
  const auto rows = detail::read_csv_rows(path, "re,im,value");
  if (rows.empty()) throw config_error(path.string() + ": no data rows");
  cloud_out = JuliaCloud{};
  std::vector<double> values;
  for (const auto& r : rows) {
    const std::string where = path.string();
    cloud_out.points.emplace_back(detail::parse_field_double(r[0], where + " column re"),
                                  detail::parse_field_double(r[1], where + " column im"));
    cloud_out.depths.push_back(0);
    values.push_back(detail::parse_field_double(r[2], where + " column value"));
  }
  cloud_out.seed = cloud_out.points.front();
  refresh_cloud_stats(cloud_out);
  return values;
}

// ---------------------------------------------------------------------------
// AtomicMeasure <-> CSV + JSON header.  The CSV holds the merged atom view
// (columns: re,im,weight); the sidecar holds mass, provenance, and warnings.

inline void write_measure(const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path,
                          const AtomicMeasure& mu) {
  std::string body = "re,im,weight\n";
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    body += format_double(mu.points[i].real());
    body += ',';
    body += format_double(mu.points[i].imag());
    body += ',';
    body += format_double(mu.weights[i]);
    body += '\n';
  }
  write_text_file(csv_path, body);

  ojson hdr;
  hdr["atoms"] = mu.points.size();
  hdr["total_mass"] = mu.total_mass;
  hdr["provenance"] = mu.provenance;
  hdr["series_tail"] = mu.series_tail;
  hdr["note"] = mu.note;
  write_json_file(json_path, hdr);
}

// Loads the atom view only; the exact-integration tree payload is not
// serialized, so downstream consumers work from the flat atom list.
inline AtomicMeasure read_measure(const std::filesystem::path& csv_path,
                                  const std::filesystem::path& json_path) {
  AtomicMeasure mu;
  const auto rows = detail::read_csv_rows(csv_path, "re,im,weight");
  if (rows.empty()) throw config_error(csv_path.string() + ": no data rows");
  for (const auto& r : rows) {
    const std::string where = csv_path.string();
    mu.points.emplace_back(detail::parse_field_double(r[0], where + " column re"),
                           detail::parse_field_double(r[1], where + " column im"));
    mu.weights.push_back(detail::parse_field_double(r[2], where + " column weight"));
  }
  const ojson hdr = ojson::parse(read_text_file(json_path), nullptr, true);
  mu.provenance = hdr.value("provenance", std::string{});
  mu.series_tail = hdr.value("series_tail", 0.0);
  mu.note = hdr.value("note", std::string{});
  mu.recompute_total();
  return mu;
}

// ---------------------------------------------------------------------------
// Pressure artifacts: CSV rows t,P,error_bar plus a JSON sidecar carrying the
// per-n diagnostic sequences.

inline ojson pressure_estimate_json(const PressureEstimate& est) {
  ojson j;
  j["t"] = est.t;
  j["tau"] = est.tau;
  j["value"] = est.value;
  j["error_bar"] = est.error_bar;
  j["basepoint"] = {est.basepoint.real(), est.basepoint.imag()};
  j["extrapolation"] = est.extrapolation;
  ojson per = ojson::array();
  for (const auto& [n, a] : est.per_n) per.push_back({{"n", n}, {"value", a}});
  j["per_n"] = per;
  return j;
}

inline void write_pressure_artifacts(const std::filesystem::path& csv_path,
                                     const std::filesystem::path& json_path,
                                     const std::vector<PressureEstimate>& samples) {
  std::string body = "t,P,error_bar\n";
  for (const auto& est : samples) {
    body += format_double(est.t);
    body += ',';
    body += format_double(est.value);
    body += ',';
    body += format_double(est.error_bar);
    body += '\n';
  }
  write_text_file(csv_path, body);

  ojson j = ojson::array();
  for (const auto& est : samples) j.push_back(pressure_estimate_json(est));
  write_json_file(json_path, j);
}

// ---------------------------------------------------------------------------
// Check reports as JSON.

inline ojson check_report_json(const CheckReport& report) {
  ojson j;
  j["lemma_id"] = report.lemma_id;
  j["verdict"] = report.verdict;
  j["samples"] = report.samples;
  ojson fc = ojson::object();
  for (const auto& [k, v] : report.fitted_constants) fc[k] = v;
  j["fitted_constants"] = fc;
  j["tolerance"] = report.tolerance;
  j["notes"] = report.notes;
  return j;
}

}  // namespace merotherm
