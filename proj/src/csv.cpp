#include "assocmem/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "assocmem/errors.hpp"

namespace assocmem {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path_.string() + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw std::logic_error("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(columns_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += fields[i];
  }
  buffer_ += '\n';
  if (buffer_.size() > (1u << 20)) flush();
}

void CsvWriter::flush() {
  if (buffer_.empty()) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << buffer_;
  if (!out) throw IoError("failed writing " + path_.string());
  buffer_.clear();
}

CsvWriter::~CsvWriter() {
  try {
    flush();
  } catch (...) {
  }
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("CSV is missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path, bool tolerate_partial) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) {
      // Last line without a terminator: only a partial write produces this.
      if (!tolerate_partial) throw IoError("unterminated last line in " + path.string());
      break;
    }
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      if (tolerate_partial) continue;
      throw IoError("row with " + std::to_string(fields.size()) + " fields in " + path.string());
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw IoError("empty CSV file " + path.string());
  return table;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace assocmem
