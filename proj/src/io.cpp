#include "stackbench/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "stackbench/errors.hpp"

namespace stackbench {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void cell_error(std::size_t line_no, std::string_view column, std::string_view what) {
  throw LoadError("CSV row " + std::to_string(line_no) + ", column '" + std::string(column) +
                  "': " + std::string(what));
}

double parse_cell(std::string_view cell, std::size_t line_no, std::string_view column) {
  cell = unquote(cell);
  if (cell.empty()) cell_error(line_no, column, "missing value");
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    cell_error(line_no, column, "not a number: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) cell_error(line_no, column, "non-finite value");
  return value;
}

struct ParsedTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

ParsedTable parse_table(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw LoadError("CSV is empty");
  ParsedTable table;
  for (auto cell : split_cells(lines[0])) table.header.emplace_back(unquote(cell));
  const std::size_t width = table.header.size();
  table.rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto cells = split_cells(lines[li]);
    if (cells.size() != width) {
      throw LoadError("CSV row " + std::to_string(li) + ": expected " + std::to_string(width) +
                      " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) row[c] = parse_cell(cells[c], li, table.header[c]);
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw LoadError("CSV has a header but no data rows");
  return table;
}

}  // namespace

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Dataset parse_dataset_csv(std::string_view text, std::string_view label_column) {
  const ParsedTable table = parse_table(text);
  std::size_t label_idx = table.header.size();
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == label_column) label_idx = c;
  }
  if (label_idx == table.header.size()) {
    throw LoadError("CSV has no label column '" + std::string(label_column) + "'");
  }
  const std::size_t n = table.rows.size();
  const std::size_t p = table.header.size() - 1;
  Matrix x(n, p);
  std::vector<int> y(n);
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != label_idx) names.push_back(table.header[c]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    const double label = row[label_idx];
    if (label != 0.0 && label != 1.0) {
      cell_error(i + 1, label_column, "label must be 0 or 1, found " + format_double(label));
    }
    y[i] = static_cast<int>(label);
    std::size_t j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c != label_idx) x(i, j++) = row[c];
    }
  }
  return Dataset(std::move(x), std::move(y), std::move(names));
}

Dataset load_csv(const fs::path& path, std::string_view label_column) {
  try {
    return parse_dataset_csv(read_file(path), label_column);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw LoadError(e.what());
  }
}

std::string dataset_to_csv(const Dataset& data, std::string_view label_column) {
  std::string out;
  for (const auto& name : data.feature_names()) {
    out += name;
    out += ',';
  }
  out += label_column;
  out += '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.features().row(i)) {
      out += format_double(v);
      out += ',';
    }
    out += data.labels()[i] ? '1' : '0';
    out += '\n';
  }
  return out;
}

Matrix load_feature_csv(const fs::path& path, std::string_view drop_column,
                        std::vector<std::string>* names) {
  ParsedTable table;
  try {
    table = parse_table(read_file(path));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw LoadError(e.what());
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] != drop_column) keep.push_back(c);
  }
  if (names) {
    names->clear();
    for (auto c : keep) names->push_back(table.header[c]);
  }
  Matrix x(table.rows.size(), keep.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) x(i, j) = table.rows[i][keep[j]];
  }
  return x;
}

}  // namespace stackbench
