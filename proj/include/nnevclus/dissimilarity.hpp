#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nnevclus {

// Pairwise Euclidean distances between the rows of X.
Eigen::MatrixXd euclideanDistances(const Eigen::MatrixXd& X);

// (D + D^T) / 2.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& D);

// Type-7 empirical quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double level);

struct PhiCalibration {
    double gamma = 0.0;   // phi(delta) = 1 - exp(-gamma * delta^2)
    double delta0 = 0.0;  // dissimilarity mapped to 0.95
    double quantileLevel = 0.9;

    double operator()(double delta) const;
};

// Transformed dissimilarities for the pairs retained by the loss. Dense mode
// keeps the full matrix and iterates i < j; sampled mode keeps per-object
// index lists J(i) with parallel values.
class DissimilarityView {
public:
    enum class Mode { Dense, Sampled };

    DissimilarityView() = default;  // empty dense view; fill via the factories

    static DissimilarityView dense(Eigen::MatrixXd deltaStar);
    static DissimilarityView sampled(std::vector<std::vector<int>> neighbors,
                                     std::vector<std::vector<double>> deltaStar);

    Mode mode() const { return mode_; }
    int objectCount() const { return n_; }
    std::size_t pairCount() const;

    // Averaging weight of one retained pair in the base loss:
    // 2/(n(n-1)) dense, 1/(n p) sampled.
    double pairWeight() const;

    // Dense mode only: transformed dissimilarity of an arbitrary pair.
    double deltaStarAt(int i, int j) const;

    const std::vector<std::vector<int>>& neighborLists() const { return neighbors_; }

    template <typename F>
    void forEachPair(F&& fn) const {
        if (mode_ == Mode::Dense) {
            for (int i = 0; i < n_; ++i)
                for (int j = i + 1; j < n_; ++j) fn(i, j, denseDeltaStar_(i, j));
        } else {
            for (int i = 0; i < n_; ++i) {
                const auto& row = neighbors_[static_cast<std::size_t>(i)];
                const auto& vals = sampledDeltaStar_[static_cast<std::size_t>(i)];
                for (std::size_t k = 0; k < row.size(); ++k) fn(i, row[k], vals[k]);
            }
        }
    }

private:
    Mode mode_ = Mode::Dense;
    int n_ = 0;
    Eigen::MatrixXd denseDeltaStar_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<double>> sampledDeltaStar_;
};

// Calibrates gamma from the quantile of the off-diagonal dissimilarities and
// applies the transform to every pair i < j.
std::pair<DissimilarityView, PhiCalibration> phiTransform(const Eigen::MatrixXd& D,
                                                          double d0quantile);

// Same calibration restricted to the retained pairs; `delta` supplies raw
// dissimilarities on demand so the full matrix is never materialized.
std::pair<DissimilarityView, PhiCalibration> phiTransformSampled(
    int n, const std::vector<std::vector<int>>& neighbors,
    const std::function<double(int, int)>& delta, double d0quantile);

// Per-object index sets J(i): p indices drawn without replacement from the
// other objects. Pure function of (n, p, seed).
std::vector<std::vector<int>> samplePairs(int n, int p, std::uint64_t seed);

struct PairBlock {
    std::vector<std::pair<int, int>> pairs;
};

// Random permutation split into s near-equal groups; one block per group
// holding all its within-group pairs. Pure function of (n, s, seed).
std::vector<PairBlock> minibatchBlocks(int n, int s, std::uint64_t seed);

// Principal-component embedding of dissimilarity rows: each object's row of
// D is treated as an attribute vector.
struct PcaEmbedding {
    Eigen::VectorXd meanRow;     // length n
    Eigen::MatrixXd projection;  // n x p, orthonormal columns
    int requestedComponents = 0;

    int effectiveComponents() const { return static_cast<int>(projection.cols()); }
};

std::pair<PcaEmbedding, Eigen::MatrixXd> pcaEmbed(const Eigen::MatrixXd& D, int p);

Eigen::VectorXd pcaProject(const PcaEmbedding& emb, const Eigen::VectorXd& deltaNew);

}  // namespace nnevclus
