#include "thrlasso/io.hpp"

#include "thrlasso/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace thrlasso {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& header, const std::string& msg) {
    std::string where = "line " + std::to_string(line) + ", column " + std::to_string(column);
    if (!header.empty()) where += " (" + header + ")";
    throw Error(ErrorCode::ParseError, where + ": " + msg);
}

}  // namespace

Dataset parse_csv(std::istream& in, TiePolicy ties) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        header = split(line);
    }
    if (header.empty()) throw Error(ErrorCode::ParseError, "missing header row");
    if (header.size() < 3)
        throw Error(ErrorCode::ParseError, "need at least three columns: y, q and one covariate");
    const std::size_t cols = header.size();

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != cols)
            parse_fail(line_no, cells.size() < cols ? cells.size() + 1 : cols + 1, "",
                       "expected " + std::to_string(cols) + " cells, found " + std::to_string(cells.size()));
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto& cell = cells[c];
            if (cell.empty()) parse_fail(line_no, c + 1, header[c], "empty cell");
            if (cell == "NA" || cell == "NaN" || cell == "nan" || cell == "na")
                parse_fail(line_no, c + 1, header[c], "missing value '" + cell + "'");
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto res = std::from_chars(first, last, row[c]);
            if (res.ec != std::errc() || res.ptr != last)
                parse_fail(line_no, c + 1, header[c], "not a number: '" + cell + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, "no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto M = static_cast<Eigen::Index>(cols - 2);
    Vector y(n), q(n);
    Matrix X(n, M);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        y[i] = r[0];
        q[i] = r[1];
        for (Eigen::Index j = 0; j < M; ++j) X(i, j) = r[static_cast<std::size_t>(j + 2)];
    }
    return Dataset::create(std::move(y), std::move(X), std::move(q),
                           std::vector<std::string>(header.begin() + 2, header.end()), ties);
}

Dataset load_csv(const std::string& path, TiePolicy ties) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    return parse_csv(in, ties);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(std::ostream& out, const Dataset& data) {
    out << "y,q";
    for (const auto& name : data.names()) out << ',' << name;
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y()[i]) << ',' << format_double(data.q()[i]);
        for (Eigen::Index j = 0; j < data.M(); ++j) out << ',' << format_double(data.X()(i, j));
        out << '\n';
    }
}

void write_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
    write_csv(out, data);
}

}  // namespace thrlasso
