#include "gnrg/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gnrg {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf.data(), ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : out_(path, std::ios::trunc), columns_(std::move(columns)) {
  if (!out_) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << '\n';
}

void CsvWriter::cell(std::string_view text) {
  if (filled_ == columns_.size()) throw std::logic_error("too many cells in CSV row");
  if (filled_) out_ << ',';
  out_ << text;
  ++filled_;
}

CsvWriter& CsvWriter::operator<<(double value) { cell(format_double(value)); return *this; }
CsvWriter& CsvWriter::operator<<(int value) { cell(std::to_string(value)); return *this; }
CsvWriter& CsvWriter::operator<<(long value) { cell(std::to_string(value)); return *this; }
CsvWriter& CsvWriter::operator<<(long long value) { cell(std::to_string(value)); return *this; }
CsvWriter& CsvWriter::operator<<(std::size_t value) { cell(std::to_string(value)); return *this; }
CsvWriter& CsvWriter::operator<<(bool value) { cell(value ? "true" : "false"); return *this; }
CsvWriter& CsvWriter::operator<<(std::string_view value) { cell(value); return *this; }

void CsvWriter::end_row() {
  if (filled_ != columns_.size()) throw std::logic_error("incomplete CSV row");
  out_ << '\n';
  filled_ = 0;
  if (!out_) throw std::runtime_error("CSV write failed");
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::out_of_range("no CSV column " + std::string(name));
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  return std::stod(rows.at(row).at(column(name)));
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  table.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw std::runtime_error("ragged CSV row in " + path.string());
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace gnrg
