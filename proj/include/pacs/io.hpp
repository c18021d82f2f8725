#pragma once

// Flat-file formats: CSV tables, Wigner grid matrices, fit summaries.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pacs/analysis.hpp"

namespace pacs::io {

/// Shortest decimal form that reads back to the same double; "nan" and "inf" otherwise.
std::string format_number(double value);

/// Quotes a CSV field when it contains a comma, quote, CR or LF (quotes doubled).
std::string csv_field(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  /// Header line then one line per row, each terminated by "\n".
  std::string str() const;
};

// Wigner grid text format:
//   # wigner-grid v1
//   # x <min> <step> <count>
//   # p <min> <step> <count>
//   one line per p value, x values separated by single spaces
void write_wigner(std::ostream& out, const WignerGrid& grid);
WignerGrid read_wigner(std::istream& in);

std::string fit_summary_json(const ScalingFit& fit, std::size_t clicks, std::size_t n_stages);

struct OutputFile {
  std::filesystem::path path;
  std::string contents;
};

/// Writes every file through a temporary sibling and renames once all writes
/// succeeded; on failure no target file is created. Missing parent
/// directories are created.
void write_all(std::span<const OutputFile> files);

}  // namespace pacs::io
