#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace gnrg {

/// Shortest round-trip decimal representation; identical doubles always
/// print identically.
std::string format_double(double value);

/// Minimal CSV writer with a fixed column schema. Cells are written in order;
/// end_row() checks the column count.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);

  CsvWriter& operator<<(double value);
  CsvWriter& operator<<(int value);
  CsvWriter& operator<<(long value);
  CsvWriter& operator<<(long long value);
  CsvWriter& operator<<(std::size_t value);
  CsvWriter& operator<<(bool value);
  CsvWriter& operator<<(std::string_view value);
  CsvWriter& operator<<(const char* value) { return *this << std::string_view(value); }
  CsvWriter& operator<<(const std::string& value) { return *this << std::string_view(value); }
  void end_row();

  const std::vector<std::string>& columns() const { return columns_; }

 private:
  void cell(std::string_view text);

  std::ofstream out_;
  std::vector<std::string> columns_;
  std::size_t filled_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
  double number(std::size_t row, std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace gnrg
