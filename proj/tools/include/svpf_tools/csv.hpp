#ifndef SVPF_TOOLS_CSV_HPP
#define SVPF_TOOLS_CSV_HPP

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace svpf::cli {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Builds a CSV in memory: a `# config_hash=` comment line, the header, then rows.
class CsvWriter {
 public:
  CsvWriter(std::string_view config_hash, std::initializer_list<std::string_view> columns);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::size_t v);
  CsvWriter& cell(std::string_view v);
  CsvWriter& empty();
  void end_row();

  const std::string& text() const { return text_; }
  /// Throws IoError when the file cannot be written.
  void write(const std::filesystem::path& path) const;

 private:
  void separator();

  std::string text_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

struct CsvTable {
  std::string config_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace svpf::cli

#endif  // SVPF_TOOLS_CSV_HPP
