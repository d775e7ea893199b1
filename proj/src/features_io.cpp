#include "facefit/features_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "facefit/errors.hpp"

namespace facefit {

void write_features(const std::vector<VecX>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error("cannot open feature file for writing: " + path);
    for (int i = 0; i < dims::code; ++i) {
        char name[8];
        std::snprintf(name, sizeof name, "f%03d", i);
        os << (i ? "," : "") << name;
    }
    os << '\n';
    char buf[40];
    for (const VecX& row : rows) {
        if (row.size() != dims::code)
            throw data_error("feature rows must have 257 entries, got " +
                             std::to_string(row.size()));
        for (int i = 0; i < dims::code; ++i) {
            // %.9g round-trips float32 exactly
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(row[i])));
            os << (i ? "," : "") << buf;
        }
        os << '\n';
    }
    if (!os) throw data_error("failed writing feature file: " + path);
}

std::vector<VecX> parse_features(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open feature file: " + path);
    std::string line;
    if (!std::getline(is, line)) throw data_error("feature file has no header: " + path);

    int columns = 0;
    {
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) ++columns;
    }
    if (columns != dims::code)
        throw data_error("feature file " + path + " has " + std::to_string(columns) +
                         " columns, expected 257");

    std::vector<VecX> rows;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        VecX row(dims::code);
        std::istringstream ss(line);
        std::string field;
        int col = 0;
        while (std::getline(ss, field, ',')) {
            if (col < dims::code) {
                try {
                    row[col] = static_cast<double>(static_cast<float>(std::stod(field)));
                } catch (const std::exception&) {
                    throw data_error("feature file " + path + " line " + std::to_string(line_no) +
                                     ": malformed number");
                }
            }
            ++col;
        }
        if (col != dims::code)
            throw data_error("feature file " + path + " line " + std::to_string(line_no) + " has " +
                             std::to_string(col) + " columns, expected 257");
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace facefit
