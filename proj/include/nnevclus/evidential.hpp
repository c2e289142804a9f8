#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnevclus/focal_sets.hpp"

namespace nnevclus {

// One mass vector per object, rows of `masses` summing to one.
struct EvidentialPartition {
    std::shared_ptr<const FocalSetStructure> fs;
    Eigen::MatrixXd masses;  // n x f

    int objectCount() const { return static_cast<int>(masses.rows()); }
    void validate() const;
};

// Lower/upper cluster approximations derived from each object's maximum-mass
// focal set. Object indices are 0-based.
struct RoughPartition {
    std::vector<std::vector<int>> lower;  // per cluster: surely-member objects
    std::vector<std::vector<int>> upper;  // per cluster: possibly-member objects
    std::vector<int> outliers;            // objects whose top focal set is empty
};

// Index of the largest value; ties resolved to the lowest index.
int argmaxLowestIndex(const Eigen::VectorXd& values);

// Cluster labels in 1..c by maximum contour plausibility.
std::vector<int> hardPartition(const EvidentialPartition& ep);

// Approximates each mass function by its maximum-mass focal set (ties go to
// the smaller set, then the lower index) and collects the rough structure.
RoughPartition roughPartition(const EvidentialPartition& ep);

// CSV with one mass column per focal set, then the hard label, then the
// outlier flag from the rough summarization.
std::string partitionToCsv(const EvidentialPartition& ep);
void writePartitionCsv(const std::string& path, const EvidentialPartition& ep);

struct PartitionCsvContents {
    std::vector<std::string> massHeader;
    Eigen::MatrixXd masses;
    std::vector<int> labels;
    std::vector<int> outlierFlags;
};

PartitionCsvContents readPartitionCsv(const std::string& path);

}  // namespace nnevclus
