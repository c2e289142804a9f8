#include "nnevclus/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nnevclus/errors.hpp"

namespace nnevclus {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

}  // namespace

std::vector<std::string> splitCsvLine(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

CsvTable readCsv(const std::string& path, bool hasHeader) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    CsvTable table;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::string t = trim(line);
        if (t.empty()) continue;
        auto fields = splitCsvLine(t);
        if (lineNo == 1 && hasHeader) {
            table.header = std::move(fields);
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

double parseDouble(const std::string& field, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw IoError("cannot parse number '" + field + "' at " + context);
    }
}

int parseInt(const std::string& field, const std::string& context) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw IoError("cannot parse integer '" + field + "' at " + context);
    }
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> readAttributeCsv(const std::string& path) {
    const CsvTable table = readCsv(path, /*hasHeader=*/true);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const auto d = static_cast<Eigen::Index>(table.header.size());
    if (d == 0) throw IoError(path + ": missing header line");
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != d)
            throw IoError(path + ": row " + std::to_string(i + 2) + " has " +
                          std::to_string(row.size()) + " fields, expected " + std::to_string(d));
        for (Eigen::Index k = 0; k < d; ++k)
            X(i, k) = parseDouble(row[static_cast<std::size_t>(k)],
                                  path + ":" + std::to_string(i + 2));
    }
    return {X, table.header};
}

Eigen::MatrixXd readSquareMatrixCsv(const std::string& path) {
    const CsvTable table = readCsv(path, /*hasHeader=*/false);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    if (n == 0) throw IoError(path + ": empty matrix");
    Eigen::MatrixXd D(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != n)
            throw IoError(path + ": row " + std::to_string(i + 1) + " has " +
                          std::to_string(row.size()) + " fields, expected " + std::to_string(n));
        for (Eigen::Index j = 0; j < n; ++j)
            D(i, j) = parseDouble(row[static_cast<std::size_t>(j)],
                                  path + ":" + std::to_string(i + 1));
    }
    return D;
}

Eigen::MatrixXd readTripletCsv(const std::string& path) {
    const CsvTable table = readCsv(path, /*hasHeader=*/false);
    int n = 0;
    struct Entry {
        int i, j;
        double v;
    };
    std::vector<Entry> entries;
    entries.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = path + ":" + std::to_string(r + 1);
        if (row.size() != 3) throw IoError(ctx + ": expected 3 fields (i, j, delta)");
        const int i = parseInt(row[0], ctx);
        const int j = parseInt(row[1], ctx);
        if (i < 1 || j < 1) throw IoError(ctx + ": indices are 1-based");
        entries.push_back({i - 1, j - 1, parseDouble(row[2], ctx)});
        n = std::max(n, std::max(i, j));
    }
    if (n == 0) throw IoError(path + ": no triplets");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> seen(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), false);
    for (const auto& e : entries) {
        D(e.i, e.j) = e.v;
        D(e.j, e.i) = e.v;
        seen[static_cast<std::size_t>(e.i) * n + e.j] = true;
        seen[static_cast<std::size_t>(e.j) * n + e.i] = true;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && !seen[static_cast<std::size_t>(i) * n + j])
                throw IoError(path + ": pair (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") missing from triplet list");
    return D;
}

std::vector<std::string> readLabelColumn(const std::string& path) {
    const CsvTable table = readCsv(path, /*hasHeader=*/false);
    std::vector<std::string> labels;
    labels.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != 1)
            throw IoError(path + ":" + std::to_string(r + 1) + ": expected one label per line");
        labels.push_back(table.rows[r][0]);
    }
    return labels;
}

std::string formatDouble(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) return buf;
    }
    return buf;
}

void writeTextFile(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << contents;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace nnevclus
