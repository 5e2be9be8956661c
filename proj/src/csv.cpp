#include "lipad/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lipad/errors.hpp"

namespace lipad {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}
} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("read_csv: '" + path + "' is empty (missing header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    CsvTable table;
    table.header = split_line(line);
    if (table.header.empty()) throw IoError("read_csv: '" + path + "' has an empty header");
    table.has_labels = table.header.back() == "label";
    const long width = static_cast<long>(table.header.size()) - (table.has_labels ? 1 : 0);
    if (width < 1) throw IoError("read_csv: '" + path + "' has no value columns");

    std::vector<double> data;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (static_cast<long>(cells.size()) != static_cast<long>(table.header.size()))
            throw IoError("read_csv: '" + path + "' line " + std::to_string(line_no) + ": expected " +
                          std::to_string(table.header.size()) + " cells, got " + std::to_string(cells.size()));
        for (long c = 0; c < width; ++c) {
            try {
                size_t used = 0;
                const double v = std::stod(cells[c], &used);
                if (used != cells[c].size()) throw std::invalid_argument("trailing");
                data.push_back(v);
            } catch (const std::exception&) {
                throw IoError("read_csv: '" + path + "' line " + std::to_string(line_no) + ": bad number '" +
                              cells[c] + "'");
            }
        }
        if (table.has_labels) {
            try {
                table.labels.push_back(std::stoi(cells.back()));
            } catch (const std::exception&) {
                throw IoError("read_csv: '" + path + "' line " + std::to_string(line_no) + ": bad label '" +
                              cells.back() + "'");
            }
        }
    }
    const long rows = width > 0 ? static_cast<long>(data.size()) / width : 0;
    table.values = Tensor(rows, width, std::move(data));
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Tensor& values,
               const std::vector<int>* labels) {
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open '" + path + "'");
    for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (long r = 0; r < values.rows(); ++r) {
        for (long c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values.at(r, c));
        if (labels) out << "," << (*labels)[r];
        out << "\n";
    }
    if (!out) throw IoError("write_csv: write failed for '" + path + "'");
}

} // namespace lipad
