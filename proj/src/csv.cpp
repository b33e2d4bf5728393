#include "netpulse/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace netpulse {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

std::string format_double(double v) {
    // shortest decimal string that parses back to the same double
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

static std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

CsvTable CsvTable::from_file(const std::string& path) {
    return from_string(read_file(path), path);
}

CsvTable CsvTable::from_string(const std::string& text, const std::string& origin) {
    CsvTable t;
    t.origin_ = origin;
    std::size_t pos = 0;
    bool first = true;
    std::size_t lineno = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (first) {
            t.header_ = cells;
            for (std::size_t i = 0; i < cells.size(); ++i) t.index_[cells[i]] = i;
            first = false;
            continue;
        }
        if (cells.size() != t.header_.size())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(t.header_.size()) +
                                     " fields, got " + std::to_string(cells.size()));
        t.cells_.push_back(std::move(cells));
    }
    if (first) throw std::runtime_error(origin + ": missing header row");
    return t;
}

bool CsvTable::has_column(const std::string& name) const {
    return index_.count(name) != 0;
}

std::size_t CsvTable::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw std::runtime_error(origin_ + ": missing required column '" + name + "'");
    return it->second;
}

double CsvTable::num(std::size_t row, std::size_t col) const {
    const std::string& s = cells_[row][col];
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw std::runtime_error(origin_ + ": not a number: '" + s + "' in column '" +
                                 header_[col] + "'");
    return v;
}

std::int64_t CsvTable::integer(std::size_t row, std::size_t col) const {
    const std::string& s = cells_[row][col];
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw std::runtime_error(origin_ + ": not an integer: '" + s + "' in column '" +
                                 header_[col] + "'");
    return v;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out_ += ',';
        out_ += header[i];
    }
    out_ += '\n';
}

CsvWriter& CsvWriter::field(const std::string& v) {
    if (in_row_) out_ += ',';
    out_ += v;
    ++in_row_;
    return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) { return field(std::to_string(v)); }

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

void CsvWriter::end_row() {
    if (in_row_ != width_)
        throw std::logic_error("csv row has " + std::to_string(in_row_) + " fields, header has " +
                               std::to_string(width_));
    out_ += '\n';
    in_row_ = 0;
}

void CsvWriter::to_file(const std::string& path) const { write_file(path, out_); }

} // namespace netpulse
