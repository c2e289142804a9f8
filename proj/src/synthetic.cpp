#include "nnevclus/synthetic.hpp"

#include <cmath>

#include "nnevclus/errors.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

LabeledData gaussianBlobs(const Eigen::MatrixXd& centers, int perCluster, double noise,
                          std::uint64_t seed) {
    if (perCluster < 1) throw ValidationError("need at least one point per cluster");
    Rng rng(seed);
    const int c = static_cast<int>(centers.rows());
    const int d = static_cast<int>(centers.cols());
    LabeledData data;
    data.X.resize(static_cast<Eigen::Index>(c) * perCluster, d);
    data.labels.reserve(static_cast<std::size_t>(c) * perCluster);
    Eigen::Index row = 0;
    for (int k = 0; k < c; ++k) {
        for (int i = 0; i < perCluster; ++i, ++row) {
            for (int a = 0; a < d; ++a) data.X(row, a) = centers(k, a) + noise * rng.normal();
            data.labels.push_back(k + 1);
        }
    }
    return data;
}

LabeledData fourclassData(int perCluster, int dof, double scale, double side,
                          std::uint64_t seed) {
    if (perCluster < 1) throw ValidationError("need at least one point per cluster");
    if (dof < 1) throw ValidationError("degrees of freedom must be positive");
    Rng rng(seed);
    const double h = side / 2.0;
    const double centers[4][2] = {{-h, -h}, {-h, h}, {h, -h}, {h, h}};
    LabeledData data;
    data.X.resize(static_cast<Eigen::Index>(4) * perCluster, 2);
    data.labels.reserve(static_cast<std::size_t>(4) * perCluster);
    Eigen::Index row = 0;
    for (int k = 0; k < 4; ++k) {
        for (int i = 0; i < perCluster; ++i, ++row) {
            data.X(row, 0) = centers[k][0] + scale * rng.studentT(dof);
            data.X(row, 1) = centers[k][1] + scale * rng.studentT(dof);
            data.labels.push_back(k + 1);
        }
    }
    return data;
}

LabeledData twoMoons(int n, double noise, std::uint64_t seed) {
    if (n < 2) throw ValidationError("need at least two points");
    Rng rng(seed);
    LabeledData data;
    data.X.resize(n, 2);
    data.labels.reserve(static_cast<std::size_t>(n));
    const int nUpper = n / 2;
    for (int i = 0; i < n; ++i) {
        const bool upper = i < nUpper;
        const double t = M_PI * rng.uniform();
        double x, y;
        if (upper) {
            x = std::cos(t);
            y = std::sin(t);
        } else {
            x = 1.0 - std::cos(t);
            y = 0.5 - std::sin(t);
        }
        data.X(i, 0) = x + noise * rng.normal();
        data.X(i, 1) = y + noise * rng.normal();
        data.labels.push_back(upper ? 1 : 2);
    }
    return data;
}

}  // namespace nnevclus
