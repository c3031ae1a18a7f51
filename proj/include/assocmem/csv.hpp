#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace assocmem {

/// Shortest round-trip text for a double: 17 significant digits, '.' decimal,
/// "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double value);

/// Split one CSV line on commas (fields never contain quotes or commas).
std::vector<std::string> split_csv_line(std::string_view line);

/// Writes rows with LF endings; the file is created (or truncated) on open.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& fields);
  /// Flushes buffered rows to disk (also done by the destructor).
  void flush();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws IoError when missing.
  std::size_t column(std::string_view name) const;
};

/// Reads a whole CSV file. Malformed trailing lines (e.g. a partially written
/// journal entry) are dropped when `tolerate_partial` is set.
CsvTable read_csv(const std::filesystem::path& path, bool tolerate_partial = false);

/// Whole-file write through a temporary and rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace assocmem
