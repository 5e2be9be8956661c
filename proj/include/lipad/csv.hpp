#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lipad/tensor.hpp"

namespace lipad {

/// Numeric table with a header row; an optional trailing "label" column is
/// split out when present.
struct CsvTable {
    std::vector<std::string> header;
    Tensor values;
    std::vector<int> labels; // empty when the file has no label column
    bool has_labels = false;
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header, const Tensor& values,
               const std::vector<int>* labels = nullptr);

/// Deterministic float formatting used in every CSV we emit.
std::string format_double(double v);

} // namespace lipad
