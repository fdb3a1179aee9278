#include "cycleguard/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cycleguard/error.hpp"

namespace cycleguard {

std::string format_double(double v) {
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw NumericError("format_double: value not representable");
    return std::string(buf, end);
}

std::string format_int(std::int64_t v) {
    char buf[24];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t row, std::size_t col) {
    double v = 0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const char* t = e;
    while (t > b && (t[-1] == ' ' || t[-1] == '\t' || t[-1] == '\r')) --t;
    const auto [p, ec] = std::from_chars(b, t, v);
    if (ec != std::errc() || p != t)
        throw DataError("csv '" + path + "': non-numeric cell '" + cell + "' at data row " +
                        std::to_string(row + 1) + ", column " + std::to_string(col + 1));
    return v;
}

}  // namespace

CsvTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("csv '" + path + "': cannot open");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv '" + path + "': empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    if (table.header.empty()) throw DataError("csv '" + path + "': empty header row");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != table.header.size())
            throw DataError("csv '" + path + "': data row " + std::to_string(row + 1) + " has " +
                            std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(table.header.size()));
        std::vector<double> values;
        values.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) values.push_back(parse_cell(cells[c], path, row, c));
        table.rows.push_back(std::move(values));
        ++row;
    }
    return table;
}

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Tensor& matrix) {
    if (matrix.rank() != 2) throw DimensionError("write_numeric_csv: matrix must be rank 2, got " + matrix.shape().str());
    if (static_cast<std::int64_t>(header.size()) != matrix.dim(1))
        throw DimensionError("write_numeric_csv: header has " + std::to_string(header.size()) +
                             " names for " + std::to_string(matrix.dim(1)) + " columns");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("csv '" + path + "': cannot open for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (std::int64_t r = 0; r < matrix.dim(0); ++r) {
        for (std::int64_t c = 0; c < matrix.dim(1); ++c) {
            if (c) out << ',';
            out << format_double(matrix.at(r, c));
        }
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("csv '" + path + "': write failed");
}

}  // namespace cycleguard
