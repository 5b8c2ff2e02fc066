#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace paxcast::csv {

// Minimal RFC-4180 reader: comma separated, optional double-quoted fields.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws naming the column when absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);
Table parse(std::istream& in);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace paxcast::csv
