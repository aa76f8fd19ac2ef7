#include "svpf_tools/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "svpf/error.hpp"
#include "svpf/serialization.hpp"

namespace svpf::cli {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::string_view config_hash, std::initializer_list<std::string_view> columns)
    : columns_(columns.size()) {
  text_ = "# config_hash=";
  text_ += config_hash;
  text_ += '\n';
  bool first = true;
  for (auto c : columns) {
    if (!first) text_ += ',';
    text_ += c;
    first = false;
  }
  text_ += '\n';
}

void CsvWriter::separator() {
  if (in_row_ >= columns_) throw InvalidArgument("CSV row has more cells than columns");
  if (in_row_ > 0) text_ += ',';
  ++in_row_;
}

CsvWriter& CsvWriter::cell(double v) {
  separator();
  text_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::size_t v) {
  separator();
  text_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view v) {
  separator();
  text_ += v;
  return *this;
}

CsvWriter& CsvWriter::empty() {
  separator();
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw InvalidArgument("CSV row has fewer cells than columns");
  text_ += '\n';
  in_row_ = 0;
}

void CsvWriter::write(const std::filesystem::path& path) const { write_text_file(path, text_); }

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidArgument("no CSV column named " + std::string(name));
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  return std::stod(rows.at(row).at(column(name)));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  CsvTable t;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };
  while (std::getline(in, line)) {
    if (line.rfind("# config_hash=", 0) == 0) {
      t.config_hash = line.substr(14);
    } else if (line.empty() || line[0] == '#') {
      continue;
    } else if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

}  // namespace svpf::cli
