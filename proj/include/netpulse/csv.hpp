#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace netpulse {

// Line-oriented CSV without quoting: the formats this project reads and
// writes never embed commas in fields. Header row is required.
class CsvTable {
public:
    static CsvTable from_file(const std::string& path);
    static CsvTable from_string(const std::string& text, const std::string& origin = "<memory>");

    const std::vector<std::string>& header() const { return header_; }
    std::size_t rows() const { return cells_.size(); }

    // throws std::runtime_error naming the column when absent
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;

    const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }
    double num(std::size_t row, std::size_t col) const;
    std::int64_t integer(std::size_t row, std::size_t col) const;

private:
    std::string origin_;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::string>> cells_;
};

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& field(const std::string& v);
    CsvWriter& field(std::int64_t v);
    CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
    CsvWriter& field(std::uint32_t v) { return field(static_cast<std::int64_t>(v)); }
    CsvWriter& field(double v); // shortest round-trip formatting
    void end_row();

    const std::string& str() const { return out_; }
    void to_file(const std::string& path) const;

private:
    std::string out_;
    std::size_t width_;
    std::size_t in_row_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// canonical double formatting used by every emitter (shortest round-trip)
std::string format_double(double v);

} // namespace netpulse
