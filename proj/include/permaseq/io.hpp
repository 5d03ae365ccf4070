#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace permaseq {

/// Parses a JSON file; errors read "path:line:col: message".
nlohmann::json read_json_file(const std::string& path);

/// Same, for text already in memory; `name` prefixes error messages.
nlohmann::json parse_json_text(const std::string& text, const std::string& name);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 if absent
  std::vector<double> numeric(const std::string& name) const;
};

/// Plain comma separated values, no quoting.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv_file(const std::string& path);

/// Fixed-width text table.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// Scatter plot of (x, y) with the diagonal y = x.
std::string scatter_svg(const std::vector<double>& x, const std::vector<double>& y,
                        const std::string& title, const std::string& xlabel,
                        const std::string& ylabel);

std::string fmt_double(double v, int precision = 6);

}  // namespace permaseq
