#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cgolab::cli {

// 17 significant digits; nan and inf spelled out.
std::string num(double v);

// RFC-4180: CRLF line ends, fields quoted when they hold a comma, quote or line break.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);

    Csv& cell(const std::string& s);
    Csv& cell(const char* s) { return cell(std::string(s)); }
    Csv& cell(double v) { return cell(num(v)); }
    Csv& cell(std::int64_t v) { return cell(std::to_string(v)); }
    Csv& cell(std::uint64_t v) { return cell(std::to_string(v)); }
    Csv& cell(int v) { return cell(std::to_string(v)); }
    Csv& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
    void end_row();

    const std::string& str() const { return text_; }

private:
    std::size_t columns_;
    std::size_t filled_ = 0;
    std::string text_;
};

}  // namespace cgolab::cli
