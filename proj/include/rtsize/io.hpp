#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rtsize {

// Raised for malformed or inconsistent input files. The message names the
// file location and field where possible.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reals in every CSV output are printed with 6 significant digits.
std::string format_real(double value);

// Minimal RFC-4180 style reader: quoted fields, doubled quotes, no embedded
// newlines.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row
};

// Reads a CSV whose header must equal `expected_header` exactly.
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected_header);

// Flat key = value file. '#' starts a comment; values may be double-quoted.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) > 0; }
  const std::string* find(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  // Relative paths resolve against the directory of the loaded file.
  std::filesystem::path get_path(const std::string& key) const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_;
  std::string origin_;
};

std::string trim(std::string_view s);
double parse_double(std::string_view text, const std::string& what);
long long parse_int(std::string_view text, const std::string& what);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace rtsize
