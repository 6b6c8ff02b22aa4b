#pragma once

// Minimal numeric CSV helpers shared by the file formats in this library.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "terrabench/error.hpp"

namespace terrabench::csv {

/// Shortest representation that round-trips through from_chars.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
    field = trim(field);
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(line_no) + ": cannot parse \"" +
                                       std::string(field) + "\"");
    }
    return value;
}

/// Reads a CSV whose first line must equal `header`; returns the data rows split into fields.
inline std::vector<std::vector<std::string_view>> read_rows(const std::filesystem::path& path,
                                                           std::string_view header,
                                                           std::vector<std::string>& storage) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != header) {
        throw Error(ErrorKind::Io, path.string() + ": expected header \"" + std::string(header) + "\"");
    }
    storage.clear();
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        storage.push_back(line);
    }
    const std::size_t width = split(header).size();
    std::vector<std::vector<std::string_view>> rows;
    rows.reserve(storage.size());
    for (std::size_t i = 0; i < storage.size(); ++i) {
        auto fields = split(trim(storage[i]));
        if (fields.size() != width) {
            throw Error(ErrorKind::Io, path.string() + ":" + std::to_string(i + 2) + ": expected " +
                                           std::to_string(width) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace terrabench::csv
