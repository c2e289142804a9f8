#include "nnevclus/network.hpp"

#include <cmath>

#include "nnevclus/errors.hpp"

namespace nnevclus {

void Architecture::validate() const {
    if (inputDim < 1) throw ValidationError("network input dimension must be positive");
    if (focalCount < 2) throw ValidationError("network needs at least two output units");
    if (hiddenSizes.empty()) throw ValidationError("network needs at least one hidden layer");
    for (int h : hiddenSizes)
        if (h < 1) throw ValidationError("hidden layer sizes must be positive");
}

int defaultHiddenSize(int focalCount) {
    return static_cast<int>(std::ceil(1.5 * focalCount));
}

Architecture NetworkParams::architecture() const {
    Architecture arch;
    arch.inputDim = hiddenWeights.empty() ? 0 : static_cast<int>(hiddenWeights.front().cols() - 1);
    for (const auto& w : hiddenWeights) arch.hiddenSizes.push_back(static_cast<int>(w.rows()));
    arch.focalCount = static_cast<int>(outputWeights.rows());
    return arch;
}

void NetworkParams::validate() const {
    architecture().validate();
    Eigen::Index prev = hiddenWeights.front().cols() - 1;
    for (std::size_t l = 0; l < hiddenWeights.size(); ++l) {
        const auto& w = hiddenWeights[l];
        if (w.cols() != prev + 1)
            throw ValidationError("hidden layer " + std::to_string(l) + " expects fan-in " +
                                  std::to_string(w.cols() - 1));
        if (!w.allFinite()) throw ValidationError("hidden layer " + std::to_string(l) + " has non-finite weights");
        prev = w.rows();
    }
    if (outputWeights.cols() != prev + 1)
        throw ValidationError("output layer fan-in mismatch");
    if (!outputWeights.allFinite()) throw ValidationError("output layer has non-finite weights");
    if (!std::isfinite(beta0) || !std::isfinite(beta1))
        throw ValidationError("gate coefficients are non-finite");
}

NetworkParams initParams(const Architecture& arch, Rng& rng) {
    arch.validate();
    NetworkParams params;
    int fanIn = arch.inputDim;
    for (int h : arch.hiddenSizes) {
        const double a = std::sqrt(6.0 / (fanIn + h));
        Eigen::MatrixXd w(h, fanIn + 1);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-a, a);
        params.hiddenWeights.push_back(std::move(w));
        fanIn = h;
    }
    const double a = std::sqrt(6.0 / (fanIn + arch.focalCount));
    params.outputWeights.resize(arch.focalCount, fanIn + 1);
    for (Eigen::Index r = 0; r < params.outputWeights.rows(); ++r)
        for (Eigen::Index c = 0; c < params.outputWeights.cols(); ++c)
            params.outputWeights(r, c) = rng.uniform(-a, a);
    params.beta0 = 0.0;
    params.beta1 = 1.0;
    return params;
}

namespace {

double softplus(double u) {
    if (u > 30.0) return u;
    return std::log1p(std::exp(u));
}

Eigen::VectorXd stableSoftmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

}  // namespace

double gateCoefficient(double beta0, double beta1, double svmScore) {
    const double eta = softplus(beta0 + beta1 * svmScore);
    return eta / (1.0 + eta);
}

ForwardTrace forward(const NetworkParams& params, const Eigen::VectorXd& x,
                     std::optional<double> svmScore, const FocalSetStructure& fs) {
    if (params.hiddenWeights.empty()) throw ValidationError("uninitialized network");
    if (x.size() != params.hiddenWeights.front().cols() - 1)
        throw ValidationError("input width " + std::to_string(x.size()) + " does not match network");
    if (!x.allFinite()) throw ValidationError("non-finite network input");
    if (static_cast<int>(params.outputWeights.rows()) != fs.size())
        throw ValidationError("output width does not match focal structure");

    ForwardTrace t;
    Eigen::VectorXd cur = x;
    for (std::size_t l = 0; l < params.hiddenWeights.size(); ++l) {
        const auto& w = params.hiddenWeights[l];
        Eigen::VectorXd a = w.col(0) + w.rightCols(w.cols() - 1) * cur;
        if (!a.allFinite())
            throw ValidationError("non-finite activation in hidden layer " + std::to_string(l + 1));
        t.hiddenAct.push_back(a);
        t.hiddenOut.push_back(a.cwiseMax(0.0));
        cur = t.hiddenOut.back();
    }
    const auto& w = params.outputWeights;
    t.outputAct = w.col(0) + w.rightCols(w.cols() - 1) * cur;
    if (!t.outputAct.allFinite()) throw ValidationError("non-finite activation in output layer");
    t.mass = stableSoftmax(t.outputAct);

    if (svmScore.has_value()) {
        if (fs.emptyIndex() < 0)
            throw ValidationError("outlier gating requires the empty set among the focal sets");
        if (!std::isfinite(*svmScore)) throw ValidationError("non-finite novelty score in gate");
        t.gated = true;
        t.svmScore = *svmScore;
        t.gateCoef = gateCoefficient(params.beta0, params.beta1, *svmScore);
        t.massStar = t.gateCoef * t.mass;
        t.massStar(fs.emptyIndex()) += 1.0 - t.gateCoef;
    } else {
        t.gateCoef = 1.0;
        t.massStar = t.mass;
    }
    return t;
}

EvidentialPartition predictMasses(const NetworkParams& params,
                                  std::shared_ptr<const FocalSetStructure> fs,
                                  const Eigen::MatrixXd& X,
                                  const std::optional<Eigen::VectorXd>& svmScores) {
    if (svmScores && svmScores->size() != X.rows())
        throw ValidationError("novelty scores do not align with input rows");
    EvidentialPartition ep;
    ep.fs = fs;
    ep.masses.resize(X.rows(), fs->size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto trace = forward(params, X.row(i).transpose(),
                                   svmScores ? std::optional<double>((*svmScores)(i)) : std::nullopt,
                                   *fs);
        ep.masses.row(i) = trace.massStar.transpose();
    }
    return ep;
}

}  // namespace nnevclus
