#include "csv.hpp"

#include "ncd/error.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace ncd::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

} // namespace

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.emplace_back(trim(current));
    return out;
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

int parse_int(std::string_view text) {
    text = trim(text);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError("not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

Reader::Reader(const std::filesystem::path &path, const std::vector<std::string> &required)
    : in_(path), file_(path.string()) {
    if (!in_) {
        throw ParseError(file_, 0, "cannot open file");
    }
    std::string header;
    if (!std::getline(in_, header)) {
        throw ParseError(file_, 1, "missing header row");
    }
    row_ = 1;
    if (header.size() >= 3 && static_cast<unsigned char>(header[0]) == 0xEF) {
        header.erase(0, 3); // UTF-8 BOM
    }
    const auto names = split_line(header);
    for (std::size_t i = 0; i < names.size(); ++i) {
        columns_.emplace(names[i], i);
    }
    for (const auto &name : required) {
        if (!columns_.contains(name)) {
            throw ParseError(file_, 1, "missing column '" + name + "'");
        }
    }
}

bool Reader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++row_;
        if (trim(line).empty()) {
            continue;
        }
        fields_ = split_line(line);
        if (fields_.size() != columns_.size()) {
            fail("expected " + std::to_string(columns_.size()) + " fields, found " +
                 std::to_string(fields_.size()));
        }
        return true;
    }
    return false;
}

std::string_view Reader::field(std::string_view column) const {
    const auto it = columns_.find(column);
    if (it == columns_.end()) {
        fail("unknown column '" + std::string(column) + "'");
    }
    return fields_[it->second];
}

double Reader::number(std::string_view column) const {
    try {
        return parse_double(field(column));
    } catch (const ValidationError &e) {
        fail(std::string(column) + ": " + e.what());
    }
}

int Reader::integer(std::string_view column) const {
    try {
        return parse_int(field(column));
    } catch (const ValidationError &e) {
        fail(std::string(column) + ": " + e.what());
    }
}

void Reader::fail(const std::string &what) const {
    throw ParseError(file_, row_, what);
}

} // namespace ncd::csv
