#include "nnevclus/evidential.hpp"

#include <sstream>

#include "nnevclus/csv.hpp"
#include "nnevclus/errors.hpp"

namespace nnevclus {

void EvidentialPartition::validate() const {
    if (!fs) throw ValidationError("evidential partition has no focal structure");
    if (masses.cols() != fs->size())
        throw ValidationError("mass matrix width " + std::to_string(masses.cols()) +
                              " does not match focal structure size " + std::to_string(fs->size()));
    for (Eigen::Index i = 0; i < masses.rows(); ++i)
        validateMass(masses.row(i).transpose(), *fs);
}

int argmaxLowestIndex(const Eigen::VectorXd& values) {
    int best = 0;
    for (Eigen::Index k = 1; k < values.size(); ++k)
        if (values(k) > values(best)) best = static_cast<int>(k);
    return best;
}

std::vector<int> hardPartition(const EvidentialPartition& ep) {
    ep.validate();
    const Eigen::MatrixXd pl = ep.masses * ep.fs->membershipMatrix();  // n x c contours
    std::vector<int> labels(static_cast<std::size_t>(pl.rows()));
    for (Eigen::Index i = 0; i < pl.rows(); ++i)
        labels[static_cast<std::size_t>(i)] = argmaxLowestIndex(pl.row(i).transpose()) + 1;
    return labels;
}

namespace {

// Maximum-mass focal set; ties prefer the smaller set, then the lower index.
int topFocalSet(const Eigen::VectorXd& m, const FocalSetStructure& fs) {
    int best = 0;
    for (int q = 1; q < fs.size(); ++q) {
        if (m(q) > m(best)) {
            best = q;
        } else if (m(q) == m(best) && fs.cardinality(q) < fs.cardinality(best)) {
            best = q;
        }
    }
    return best;
}

}  // namespace

RoughPartition roughPartition(const EvidentialPartition& ep) {
    ep.validate();
    const FocalSetStructure& fs = *ep.fs;
    const int c = fs.frame().clusterCount;
    RoughPartition rp;
    rp.lower.resize(static_cast<std::size_t>(c));
    rp.upper.resize(static_cast<std::size_t>(c));
    for (Eigen::Index i = 0; i < ep.masses.rows(); ++i) {
        const int q = topFocalSet(ep.masses.row(i).transpose(), fs);
        const std::uint32_t bits = fs.subsetBits(q);
        if (bits == 0u) {
            rp.outliers.push_back(static_cast<int>(i));
            continue;
        }
        for (int l = 0; l < c; ++l) {
            if (!(bits & (1u << l))) continue;
            rp.upper[static_cast<std::size_t>(l)].push_back(static_cast<int>(i));
            if (fs.cardinality(q) == 1) rp.lower[static_cast<std::size_t>(l)].push_back(static_cast<int>(i));
        }
    }
    return rp;
}

std::string partitionToCsv(const EvidentialPartition& ep) {
    ep.validate();
    const FocalSetStructure& fs = *ep.fs;
    const std::vector<int> labels = hardPartition(ep);
    const RoughPartition rp = roughPartition(ep);
    std::vector<int> outlierFlag(static_cast<std::size_t>(ep.objectCount()), 0);
    for (int i : rp.outliers) outlierFlag[static_cast<std::size_t>(i)] = 1;

    std::ostringstream out;
    for (int q = 0; q < fs.size(); ++q) out << fs.massLabel(q) << ',';
    out << "label,outlier\n";
    for (Eigen::Index i = 0; i < ep.masses.rows(); ++i) {
        for (Eigen::Index q = 0; q < ep.masses.cols(); ++q)
            out << formatDouble(ep.masses(i, q)) << ',';
        out << labels[static_cast<std::size_t>(i)] << ','
            << outlierFlag[static_cast<std::size_t>(i)] << '\n';
    }
    return out.str();
}

void writePartitionCsv(const std::string& path, const EvidentialPartition& ep) {
    writeTextFile(path, partitionToCsv(ep));
}

namespace {

// Mass labels such as "m_{1,2}" carry commas, so the raw header tokens have
// to be re-joined until their braces balance.
std::vector<std::string> mergeBracedHeader(const std::vector<std::string>& raw) {
    std::vector<std::string> merged;
    std::string pending;
    int depth = 0;
    for (const auto& tok : raw) {
        pending = pending.empty() ? tok : pending + "," + tok;
        for (char ch : tok) {
            if (ch == '{') ++depth;
            if (ch == '}') --depth;
        }
        if (depth == 0) {
            merged.push_back(pending);
            pending.clear();
        }
    }
    if (!pending.empty()) merged.push_back(pending);
    return merged;
}

}  // namespace

PartitionCsvContents readPartitionCsv(const std::string& path) {
    CsvTable table = readCsv(path, /*hasHeader=*/true);
    table.header = mergeBracedHeader(table.header);
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    if (cols < 3 || table.header[static_cast<std::size_t>(cols - 2)] != "label" ||
        table.header[static_cast<std::size_t>(cols - 1)] != "outlier")
        throw IoError(path + ": not a partition CSV (missing label/outlier columns)");
    PartitionCsvContents out;
    out.massHeader.assign(table.header.begin(), table.header.end() - 2);
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    const Eigen::Index f = cols - 2;
    out.masses.resize(n, f);
    out.labels.resize(static_cast<std::size_t>(n));
    out.outlierFlags.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const std::string ctx = path + ":" + std::to_string(i + 2);
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw IoError(ctx + ": wrong field count");
        for (Eigen::Index q = 0; q < f; ++q)
            out.masses(i, q) = parseDouble(row[static_cast<std::size_t>(q)], ctx);
        out.labels[static_cast<std::size_t>(i)] = parseInt(row[static_cast<std::size_t>(f)], ctx);
        out.outlierFlags[static_cast<std::size_t>(i)] =
            parseInt(row[static_cast<std::size_t>(f + 1)], ctx);
    }
    return out;
}

}  // namespace nnevclus
