#include "nnevclus/dissimilarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nnevclus/errors.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

Eigen::MatrixXd euclideanDistances(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw ValidationError("need at least two objects for distances");
    if (X.cols() < 1) throw ValidationError("attribute matrix has no columns");
    if (!X.allFinite()) throw ValidationError("attribute matrix contains non-finite values");
    const Eigen::Index n = X.rows();
    Eigen::MatrixXd D(n, n);
    D.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (X.row(i) - X.row(j)).norm();
            D(i, j) = d;
            D(j, i) = d;
        }
    }
    return D;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& D) {
    if (D.rows() != D.cols())
        throw ValidationError("cannot symmetrize a non-square matrix (" + std::to_string(D.rows()) +
                              "x" + std::to_string(D.cols()) + ")");
    return (D + D.transpose()) / 2.0;
}

double quantile(std::vector<double> values, double level) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    if (!(level > 0.0 && level <= 1.0)) throw ValidationError("quantile level must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - std::floor(h);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double PhiCalibration::operator()(double delta) const {
    return 1.0 - std::exp(-gamma * delta * delta);
}

DissimilarityView DissimilarityView::dense(Eigen::MatrixXd deltaStar) {
    if (deltaStar.rows() != deltaStar.cols())
        throw ValidationError("dense dissimilarity view needs a square matrix");
    if (deltaStar.size() > 0 &&
        (deltaStar.minCoeff() < -1e-12 || deltaStar.maxCoeff() > 1.0 + 1e-12))
        throw ValidationError("transformed dissimilarities must lie in [0, 1]");
    DissimilarityView v;
    v.mode_ = Mode::Dense;
    v.n_ = static_cast<int>(deltaStar.rows());
    v.denseDeltaStar_ = std::move(deltaStar);
    return v;
}

DissimilarityView DissimilarityView::sampled(std::vector<std::vector<int>> neighbors,
                                             std::vector<std::vector<double>> deltaStar) {
    if (neighbors.size() != deltaStar.size())
        throw ValidationError("neighbor lists and value lists differ in length");
    DissimilarityView v;
    v.mode_ = Mode::Sampled;
    v.n_ = static_cast<int>(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        if (neighbors[i].size() != deltaStar[i].size())
            throw ValidationError("neighbor list " + std::to_string(i) + " mismatches its values");
        for (int j : neighbors[i])
            if (j < 0 || j >= v.n_ || j == static_cast<int>(i))
                throw ValidationError("invalid neighbor index " + std::to_string(j));
        for (double star : deltaStar[i])
            if (star < -1e-12 || star > 1.0 + 1e-12)
                throw ValidationError("transformed dissimilarities must lie in [0, 1]");
    }
    v.neighbors_ = std::move(neighbors);
    v.sampledDeltaStar_ = std::move(deltaStar);
    return v;
}

std::size_t DissimilarityView::pairCount() const {
    if (mode_ == Mode::Dense)
        return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_ - 1) / 2;
    std::size_t total = 0;
    for (const auto& row : neighbors_) total += row.size();
    return total;
}

double DissimilarityView::pairWeight() const {
    // Dense: 2/(n(n-1)) over the i<j pairs. Sampled: 1/(np) with |J(i)| = p.
    // Both equal one over the retained pair count.
    return 1.0 / static_cast<double>(pairCount());
}

double DissimilarityView::deltaStarAt(int i, int j) const {
    if (mode_ != Mode::Dense)
        throw ValidationError("arbitrary-pair lookup requires a dense view");
    return denseDeltaStar_(i, j);
}

namespace {

PhiCalibration calibrate(std::vector<double> dissimilarities, double d0quantile) {
    if (!(d0quantile > 0.0 && d0quantile <= 1.0))
        throw ValidationError("d0 quantile must lie in (0, 1]");
    PhiCalibration phi;
    phi.quantileLevel = d0quantile;
    phi.delta0 = quantile(std::move(dissimilarities), d0quantile);
    if (phi.delta0 <= 0.0)
        throw ValidationError("degenerate dissimilarities: the calibration quantile is zero");
    phi.gamma = -std::log(0.05) / (phi.delta0 * phi.delta0);
    return phi;
}

}  // namespace

std::pair<DissimilarityView, PhiCalibration> phiTransform(const Eigen::MatrixXd& D,
                                                          double d0quantile) {
    if (D.rows() != D.cols()) throw ValidationError("dissimilarity matrix must be square");
    if (!D.isApprox(D.transpose(), 1e-12))
        throw ValidationError("dissimilarity matrix must be symmetric (symmetrize it first)");
    const Eigen::Index n = D.rows();
    if (n < 2) throw ValidationError("need at least two objects");
    std::vector<double> offDiag;
    offDiag.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (!(D(i, j) >= 0.0))
                throw ValidationError("dissimilarities must be nonnegative");
            offDiag.push_back(D(i, j));
        }
    const PhiCalibration phi = calibrate(std::move(offDiag), d0quantile);
    Eigen::MatrixXd star(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        star(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = phi(D(i, j));
            star(i, j) = v;
            star(j, i) = v;
        }
    }
    return {DissimilarityView::dense(std::move(star)), phi};
}

std::pair<DissimilarityView, PhiCalibration> phiTransformSampled(
    int n, const std::vector<std::vector<int>>& neighbors,
    const std::function<double(int, int)>& delta, double d0quantile) {
    if (static_cast<int>(neighbors.size()) != n)
        throw ValidationError("neighbor lists do not cover all objects");
    std::vector<double> raw;
    for (int i = 0; i < n; ++i)
        for (int j : neighbors[static_cast<std::size_t>(i)]) {
            const double d = delta(i, j);
            if (!(d >= 0.0)) throw ValidationError("dissimilarities must be nonnegative");
            raw.push_back(d);
        }
    const PhiCalibration phi = calibrate(raw, d0quantile);
    std::vector<std::vector<double>> star(neighbors.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        star[i].reserve(neighbors[i].size());
        for (std::size_t c = 0; c < neighbors[i].size(); ++c) star[i].push_back(phi(raw[k++]));
    }
    return {DissimilarityView::sampled(neighbors, std::move(star)), phi};
}

std::vector<std::vector<int>> samplePairs(int n, int p, std::uint64_t seed) {
    if (p < 1 || p > n - 1)
        throw ValidationError("per-object sample size " + std::to_string(p) +
                              " out of range [1, " + std::to_string(n - 1) + "]");
    Rng rng(seed);
    std::vector<std::vector<int>> J(static_cast<std::size_t>(n));
    std::vector<int> others(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        int w = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) others[static_cast<std::size_t>(w++)] = j;
        // Partial Fisher-Yates: the first p entries become the sample.
        for (int k = 0; k < p; ++k) {
            const int pick = k + rng.uniformIndex(n - 1 - k);
            std::swap(others[static_cast<std::size_t>(k)], others[static_cast<std::size_t>(pick)]);
        }
        J[static_cast<std::size_t>(i)].assign(others.begin(), others.begin() + p);
    }
    return J;
}

std::vector<PairBlock> minibatchBlocks(int n, int s, std::uint64_t seed) {
    if (s < 2 || s > n / 2)
        throw ValidationError("block count " + std::to_string(s) + " out of range [2, " +
                              std::to_string(n / 2) + "]");
    Rng rng(seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<PairBlock> blocks(static_cast<std::size_t>(s));
    const int base = n / s;
    const int extra = n % s;  // the first `extra` groups get one more object
    int cursor = 0;
    for (int b = 0; b < s; ++b) {
        const int size = base + (b < extra ? 1 : 0);
        auto& block = blocks[static_cast<std::size_t>(b)];
        block.pairs.reserve(static_cast<std::size_t>(size) * (size - 1) / 2);
        for (int u = 0; u < size; ++u)
            for (int v = u + 1; v < size; ++v)
                block.pairs.emplace_back(order[static_cast<std::size_t>(cursor + u)],
                                         order[static_cast<std::size_t>(cursor + v)]);
        cursor += size;
    }
    return blocks;
}

std::pair<PcaEmbedding, Eigen::MatrixXd> pcaEmbed(const Eigen::MatrixXd& D, int p) {
    if (D.rows() != D.cols()) throw ValidationError("dissimilarity matrix must be square");
    if (!D.isApprox(D.transpose(), 1e-12))
        throw ValidationError("dissimilarity matrix must be symmetric (symmetrize it first)");
    const Eigen::Index n = D.rows();
    if (p < 1 || p > n)
        throw ValidationError("embedding dimension " + std::to_string(p) + " out of range [1, " +
                              std::to_string(n) + "]");
    PcaEmbedding emb;
    emb.requestedComponents = p;
    emb.meanRow = D.colwise().mean();
    const Eigen::MatrixXd centered = D.rowwise() - emb.meanRow.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double tol = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                       (sv.size() > 0 ? sv(0) : 0.0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > tol) ++rank;
    const int keep = std::min(p, rank);
    if (keep == 0) throw ValidationError("dissimilarity rows are constant; nothing to embed");

    emb.projection = svd.matrixV().leftCols(keep);
    // Sign convention: the largest-magnitude loading of each component is
    // positive.
    for (int k = 0; k < keep; ++k) {
        Eigen::Index idx = 0;
        emb.projection.col(k).cwiseAbs().maxCoeff(&idx);
        if (emb.projection(idx, k) < 0.0) emb.projection.col(k) = -emb.projection.col(k);
    }
    Eigen::MatrixXd scores = centered * emb.projection;
    return {std::move(emb), std::move(scores)};
}

Eigen::VectorXd pcaProject(const PcaEmbedding& emb, const Eigen::VectorXd& deltaNew) {
    if (deltaNew.size() != emb.meanRow.size())
        throw ValidationError("dissimilarity vector length " + std::to_string(deltaNew.size()) +
                              " does not match training size " + std::to_string(emb.meanRow.size()));
    return emb.projection.transpose() * (deltaNew - emb.meanRow);
}

}  // namespace nnevclus
