#pragma once

#include <string>
#include <vector>

#include "nnevclus/dissimilarity.hpp"
#include "nnevclus/evidential.hpp"

namespace nnevclus {

// Hubert-Arabie adjusted Rand index from the contingency table. Labels are
// arbitrary categorical codes. Returns 1 when both partitions are trivial in
// the same way (denominator zero).
double adjustedRandIndex(const std::vector<int>& labelsA, const std::vector<int>& labelsB);
double adjustedRandIndex(const std::vector<std::string>& labelsA,
                         const std::vector<std::string>& labelsB);

struct ShepardPoint {
    double deltaStar;
    double kappa;
};

// One (transformed dissimilarity, degree of conflict) point per retained
// pair. The mean squared vertical deviation equals the base loss.
std::vector<ShepardPoint> shepardData(const EvidentialPartition& ep,
                                      const DissimilarityView& view);

double meanSquaredResidual(const std::vector<ShepardPoint>& points);

struct EvalReport {
    double ari = 0.0;
    double finalLoss = 0.0;
    int outlierCount = 0;
    std::vector<ShepardPoint> shepardPairs;

    std::string toJson() const;
    std::string shepardCsv() const;
};

}  // namespace nnevclus
