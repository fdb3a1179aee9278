#pragma once

#include <string>
#include <vector>

#include "cycleguard/tensor.hpp"

namespace cycleguard {

// Shortest decimal text that parses back to exactly the same 64-bit value.
// All CSV output goes through this so emitted files are byte-stable.
std::string format_double(double v);

std::string format_int(std::int64_t v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Strict numeric CSV: one header row, comma separation, every cell parses as
// a real. Errors name the offending row and column.
CsvTable read_numeric_csv(const std::string& path);

void write_numeric_csv(const std::string& path, const std::vector<std::string>& header,
                       const Tensor& matrix);

}  // namespace cycleguard
