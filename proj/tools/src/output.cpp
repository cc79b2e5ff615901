#include "cgolab_cli/output.hpp"

#include "cgolab/common.hpp"

#include <cmath>
#include <cstdio>

namespace cgolab::cli {

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size())
{
    for (const auto& h : header) cell(h);
    end_row();
}

Csv& Csv::cell(const std::string& s)
{
    if (filled_ == columns_) throw Error("csv: too many cells in row");
    if (filled_) text_ += ',';
    if (s.find_first_of(",\"\r\n") != std::string::npos) {
        text_ += '"';
        for (char c : s) {
            if (c == '"') text_ += '"';
            text_ += c;
        }
        text_ += '"';
    } else {
        text_ += s;
    }
    ++filled_;
    return *this;
}

void Csv::end_row()
{
    if (filled_ != columns_) throw Error("csv: row has " + std::to_string(filled_) + " of " + std::to_string(columns_) + " cells");
    text_ += "\r\n";
    filled_ = 0;
}

}  // namespace cgolab::cli
