#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nnevclus {

struct CsvTable {
    std::vector<std::string> header;            // empty if the file has none
    std::vector<std::vector<std::string>> rows;
};

// Splits a comma-separated line; fields are trimmed of surrounding blanks.
std::vector<std::string> splitCsvLine(const std::string& line);

CsvTable readCsv(const std::string& path, bool hasHeader);

// Attribute matrix: header line plus one numeric row per object.
// Returns the matrix and the column names.
std::pair<Eigen::MatrixXd, std::vector<std::string>> readAttributeCsv(const std::string& path);

// Square dissimilarity matrix, no header. Must be n rows of n values.
Eigen::MatrixXd readSquareMatrixCsv(const std::string& path);

// Triplet form (i, j, delta) with 1-based indices; fills both (i,j) and
// (j,i). Every off-diagonal entry must be covered.
Eigen::MatrixXd readTripletCsv(const std::string& path);

// Single column of categorical codes, no header.
std::vector<std::string> readLabelColumn(const std::string& path);

// Shortest representation that round-trips a double exactly.
std::string formatDouble(double v);

void writeTextFile(const std::string& path, const std::string& contents);

double parseDouble(const std::string& field, const std::string& context);
int parseInt(const std::string& field, const std::string& context);

}  // namespace nnevclus
