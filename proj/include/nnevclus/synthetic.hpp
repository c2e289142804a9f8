#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace nnevclus {

struct LabeledData {
    Eigen::MatrixXd X;        // n x d
    std::vector<int> labels;  // 1-based component labels
};

// Isotropic Gaussian blobs, one per center row.
LabeledData gaussianBlobs(const Eigen::MatrixXd& centers, int perCluster, double noise,
                          std::uint64_t seed);

// Four heavy-tailed 2-D clusters: Student-t(dof) deviations with the given
// scale around the corners of a square with the given side. 100 points per
// cluster reproduces the usual 400-point layout.
LabeledData fourclassData(int perCluster = 100, int dof = 3, double scale = 0.6,
                          double side = 5.0, std::uint64_t seed = 0);

// Two interleaved half-circles of radius 1 with Gaussian noise; the second
// moon is shifted so the arms interlock.
LabeledData twoMoons(int n, double noise, std::uint64_t seed);

}  // namespace nnevclus
