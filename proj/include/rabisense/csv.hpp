// csv.hpp — Deterministic CSV output: fixed 12-significant-digit floats,
// rows written in index order, no timestamps in the body.

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "rabisense/core.hpp"

namespace rabisense::csv {

inline std::string cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

using Row = std::vector<std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    std::string body() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const Row& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += r[i];
            }
            out += '\n';
        }
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw std::runtime_error("csv: cannot open " + path);
        f << body();
    }
};

}  // namespace rabisense::csv
