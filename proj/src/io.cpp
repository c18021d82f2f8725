#include "pacs/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pacs::io {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) throw std::invalid_argument("CsvTable: row width differs from header");
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += csv_field(fields[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void write_wigner(std::ostream& out, const WignerGrid& grid) {
  out << "# wigner-grid v1\n";
  out << "# x " << format_number(grid.x_axis.min) << ' ' << format_number(grid.x_axis.step) << ' '
      << grid.x_axis.count << '\n';
  out << "# p " << format_number(grid.p_axis.min) << ' ' << format_number(grid.p_axis.step) << ' '
      << grid.p_axis.count << '\n';
  for (Eigen::Index k = 0; k < grid.values.rows(); ++k) {
    for (Eigen::Index l = 0; l < grid.values.cols(); ++l) {
      if (l > 0) out << ' ';
      out << format_number(grid.values(k, l));
    }
    out << '\n';
  }
}

namespace {

GridAxis read_axis(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("wigner grid: missing '" + name + "' axis line");
  std::istringstream fields(line);
  std::string hash, tag;
  GridAxis axis;
  if (!(fields >> hash >> tag >> axis.min >> axis.step >> axis.count) || hash != "#" || tag != name) {
    throw std::runtime_error("wigner grid: malformed '" + name + "' axis line: " + line);
  }
  std::string extra;
  if (fields >> extra) throw std::runtime_error("wigner grid: trailing fields on '" + name + "' axis line");
  return axis;
}

}  // namespace

WignerGrid read_wigner(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "# wigner-grid v1") {
    throw std::runtime_error("wigner grid: missing '# wigner-grid v1' header");
  }
  WignerGrid grid;
  grid.x_axis = read_axis(in, "x");
  grid.p_axis = read_axis(in, "p");
  grid.values.resize(static_cast<Eigen::Index>(grid.p_axis.count), static_cast<Eigen::Index>(grid.x_axis.count));
  for (std::size_t k = 0; k < grid.p_axis.count; ++k) {
    if (!std::getline(in, line)) throw std::runtime_error("wigner grid: fewer rows than the p axis count");
    std::istringstream fields(line);
    for (std::size_t l = 0; l < grid.x_axis.count; ++l) {
      std::string token;
      if (!(fields >> token)) throw std::runtime_error("wigner grid: short row " + std::to_string(k));
      grid.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = std::stod(token);
    }
    std::string extra;
    if (fields >> extra) throw std::runtime_error("wigner grid: long row " + std::to_string(k));
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw std::runtime_error("wigner grid: more rows than the p axis count");
  }
  return grid;
}

std::string fit_summary_json(const ScalingFit& fit, std::size_t clicks, std::size_t n_stages) {
  nlohmann::ordered_json j;
  j["clicks"] = clicks;
  j["n_stages"] = n_stages;
  j["exponent"] = fit.exponent;
  j["prefactor"] = fit.prefactor;
  j["r_squared"] = fit.r_squared;
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto& [lambda, p] : fit.samples) j["samples"].push_back({lambda, p});
  return j.dump(2) + "\n";
}

void write_all(std::span<const OutputFile> files) {
  std::vector<std::filesystem::path> temps;
  auto cleanup = [&temps] {
    std::error_code ec;
    for (const auto& t : temps) std::filesystem::remove(t, ec);
  };
  try {
    for (const auto& f : files) {
      auto tmp = f.path;
      tmp += ".partial";
      temps.push_back(tmp);
      if (f.path.has_parent_path()) std::filesystem::create_directories(f.path.parent_path());
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << f.contents;
      out.close();
      if (!out) throw std::runtime_error("cannot write " + f.path.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(temps[i], files[i].path);
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace pacs::io
