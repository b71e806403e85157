#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gg {

// Deterministic CSV emission: numbers go through one fixed %.10g format so
// identical runs produce byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path, std::ios::binary | std::ios::trunc), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
        out_.flush();
    }

    static std::string format(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return buf;
    }

    void row(const std::vector<double>& vals) {
        if (vals.size() != n_cols_)
            throw std::invalid_argument("row has " + std::to_string(vals.size()) + " values, header has " +
                                        std::to_string(n_cols_));
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out_ << ',';
            out_ << format(vals[i]);
        }
        out_ << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
    std::size_t n_cols_;
};

}  // namespace gg
