#include "nnevclus/evaluation.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "nnevclus/csv.hpp"
#include "nnevclus/errors.hpp"

namespace nnevclus {

namespace {

template <typename T>
std::vector<int> factorize(const std::vector<T>& labels) {
    std::map<T, int> codes;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, inserted] = codes.emplace(l, static_cast<int>(codes.size()));
        out.push_back(it->second);
    }
    return out;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

double ariFromCodes(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("label vectors differ in length");
    if (a.empty()) throw ValidationError("cannot compare empty partitions");
    const int ka = *std::max_element(a.begin(), a.end()) + 1;
    const int kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<double> table(static_cast<std::size_t>(ka) * kb, 0.0);
    std::vector<double> rowSum(static_cast<std::size_t>(ka), 0.0);
    std::vector<double> colSum(static_cast<std::size_t>(kb), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[static_cast<std::size_t>(a[i]) * kb + b[i]] += 1.0;
        rowSum[static_cast<std::size_t>(a[i])] += 1.0;
        colSum[static_cast<std::size_t>(b[i])] += 1.0;
    }
    double index = 0.0;
    for (double v : table) index += choose2(v);
    double rowComb = 0.0, colComb = 0.0;
    for (double v : rowSum) rowComb += choose2(v);
    for (double v : colSum) colComb += choose2(v);
    const double total = choose2(static_cast<double>(a.size()));
    const double expected = rowComb * colComb / total;
    const double maximum = (rowComb + colComb) / 2.0;
    if (maximum == expected) return 1.0;  // both partitions trivial the same way
    return (index - expected) / (maximum - expected);
}

}  // namespace

double adjustedRandIndex(const std::vector<int>& labelsA, const std::vector<int>& labelsB) {
    return ariFromCodes(factorize(labelsA), factorize(labelsB));
}

double adjustedRandIndex(const std::vector<std::string>& labelsA,
                         const std::vector<std::string>& labelsB) {
    return ariFromCodes(factorize(labelsA), factorize(labelsB));
}

std::vector<ShepardPoint> shepardData(const EvidentialPartition& ep,
                                      const DissimilarityView& view) {
    ep.validate();
    if (view.objectCount() != ep.objectCount())
        throw ValidationError("partition and dissimilarity view cover different object counts");
    const Eigen::MatrixXd conflictProducts = ep.masses * ep.fs->conflictMatrix();
    std::vector<ShepardPoint> points;
    points.reserve(view.pairCount());
    view.forEachPair([&](int i, int j, double deltaStar) {
        points.push_back({deltaStar, ep.masses.row(i).dot(conflictProducts.row(j))});
    });
    return points;
}

double meanSquaredResidual(const std::vector<ShepardPoint>& points) {
    if (points.empty()) return 0.0;
    double sum = 0.0, carry = 0.0;
    for (const auto& p : points) {
        const double d = p.kappa - p.deltaStar;
        const double y = d * d - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum / static_cast<double>(points.size());
}

std::string EvalReport::toJson() const {
    nlohmann::json j;
    j["ari"] = ari;
    j["final_loss"] = finalLoss;
    j["outlier_count"] = outlierCount;
    j["shepard_pair_count"] = shepardPairs.size();
    return j.dump(2) + "\n";
}

std::string EvalReport::shepardCsv() const {
    std::ostringstream out;
    out << "delta_star,kappa\n";
    for (const auto& p : shepardPairs)
        out << formatDouble(p.deltaStar) << ',' << formatDouble(p.kappa) << '\n';
    return out.str();
}

}  // namespace nnevclus
