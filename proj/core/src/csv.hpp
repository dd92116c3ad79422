#pragma once

// Minimal RFC 4180-ish reader/writer: comma separated, optional double quotes,
// header row required. Numbers always use '.' as the decimal separator.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ncd::csv {

class Reader {
  public:
    /// Opens the file and reads the header; throws ParseError if either fails
    /// or a required column is absent.
    Reader(const std::filesystem::path &path, const std::vector<std::string> &required);

    /// Advances to the next non-empty row. Returns false at end of file.
    bool next();

    std::string_view field(std::string_view column) const;
    double number(std::string_view column) const;
    int integer(std::string_view column) const;

    std::size_t row() const noexcept { return row_; }
    const std::string &file() const noexcept { return file_; }

    [[noreturn]] void fail(const std::string &what) const;

  private:
    std::ifstream in_;
    std::string file_;
    std::size_t row_ = 0;
    std::map<std::string, std::size_t, std::less<>> columns_;
    std::vector<std::string> fields_;
};

std::vector<std::string> split_line(std::string_view line);

/// Shortest representation that round-trips to the same double.
std::string format_number(double value);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(std::string_view field);

double parse_double(std::string_view text);
int parse_int(std::string_view text);

} // namespace ncd::csv
