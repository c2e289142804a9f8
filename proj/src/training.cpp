#include "nnevclus/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "nnevclus/errors.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

namespace {

// Compensated (Kahan) accumulator so pair-order permutations do not move the
// sum beyond ~1e-16 relative.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double softplus(double u) {
    if (u > 30.0) return u;
    return std::log1p(std::exp(u));
}

double bilinear(const Eigen::MatrixXd& rows, int i, int j, const Eigen::MatrixXd& kernel) {
    return (rows.row(i) * kernel * rows.row(j).transpose()).value();
}

}  // namespace

void LossConfig::validate() const {
    if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
    if (xi < 0.0) throw ValidationError("xi must be nonnegative");
    if (nuBlend < 0.0 || nuBlend > 1.0) throw ValidationError("nu blend must lie in [0, 1]");
    switch (mode) {
        case PairMode::Dense:
            break;
        case PairMode::Sampled:
            if (sampledP < 1) throw ValidationError("sampled mode needs p >= 1");
            break;
        case PairMode::Minibatch:
            if (blocks < 1) throw ValidationError("minibatch mode needs at least one block");
            break;
    }
}

void ConstraintSet::validate(int n) const {
    std::unordered_set<long long> seen;
    auto key = [n](int i, int j) {
        const long long a = std::min(i, j), b = std::max(i, j);
        return a * static_cast<long long>(n) + b;
    };
    auto checkPair = [&](const std::pair<int, int>& p, const char* kind) {
        if (p.first == p.second)
            throw ValidationError(std::string(kind) + " constraint links an object to itself");
        if (p.first < 0 || p.second < 0 || p.first >= n || p.second >= n)
            throw ValidationError(std::string(kind) + " constraint references object out of range");
    };
    for (const auto& p : mustLink) {
        checkPair(p, "must-link");
        seen.insert(key(p.first, p.second));
    }
    for (const auto& p : cannotLink) {
        checkPair(p, "cannot-link");
        if (seen.count(key(p.first, p.second)))
            throw ValidationError("pair appears in both must-link and cannot-link lists");
    }
}

void LabelSet::validate(int n, int c) const {
    std::unordered_set<int> seen;
    for (const auto& [idx, label] : entries) {
        if (idx < 0 || idx >= n) throw ValidationError("label references object out of range");
        if (label < 1 || label > c)
            throw ValidationError("class label " + std::to_string(label) + " outside 1.." +
                                  std::to_string(c));
        if (!seen.insert(idx).second)
            throw ValidationError("object " + std::to_string(idx) + " labeled twice");
    }
}

void TrainingInstance::validate() const {
    if (!fs) throw ValidationError("training instance has no focal structure");
    if (X.rows() < 1) throw ValidationError("training instance has no objects");
    if (view.objectCount() != objectCount())
        throw ValidationError("dissimilarity view covers " + std::to_string(view.objectCount()) +
                              " objects, data has " + std::to_string(objectCount()));
    if (svmScores && svmScores->size() != X.rows())
        throw ValidationError("novelty scores do not align with objects");
    if (svmScores && fs->emptyIndex() < 0)
        throw ValidationError("outlier gating requires the empty set among the focal sets");
    constraints.validate(objectCount());
    labels.validate(objectCount(), fs->frame().clusterCount);
}

GradientBundle GradientBundle::zeroLike(const NetworkParams& params) {
    GradientBundle g;
    for (const auto& w : params.hiddenWeights)
        g.hidden.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    g.output = Eigen::MatrixXd::Zero(params.outputWeights.rows(), params.outputWeights.cols());
    return g;
}

double GradientBundle::squaredNorm() const {
    double s = output.squaredNorm() + beta0 * beta0 + beta1 * beta1;
    for (const auto& h : hidden) s += h.squaredNorm();
    return s;
}

namespace {

Eigen::Index flatSize(const NetworkParams& params) {
    Eigen::Index total = 2;  // beta0, beta1
    for (const auto& w : params.hiddenWeights) total += w.size();
    return total + params.outputWeights.size();
}

}  // namespace

Eigen::VectorXd flattenParams(const NetworkParams& params) {
    Eigen::VectorXd flat(flatSize(params));
    Eigen::Index k = 0;
    auto emit = [&](const Eigen::MatrixXd& w) {
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat(k++) = w(r, c);
    };
    for (const auto& h : params.hiddenWeights) emit(h);
    emit(params.outputWeights);
    flat(k++) = params.beta0;
    flat(k++) = params.beta1;
    return flat;
}

Eigen::VectorXd flattenGradient(const GradientBundle& grad) {
    Eigen::Index total = 2;
    for (const auto& h : grad.hidden) total += h.size();
    total += grad.output.size();
    Eigen::VectorXd flat(total);
    Eigen::Index k = 0;
    auto emit = [&](const Eigen::MatrixXd& w) {
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat(k++) = w(r, c);
    };
    for (const auto& h : grad.hidden) emit(h);
    emit(grad.output);
    flat(k++) = grad.beta0;
    flat(k++) = grad.beta1;
    return flat;
}

void unflattenParams(const Eigen::VectorXd& flat, NetworkParams& params) {
    if (flat.size() != flatSize(params)) throw ValidationError("flat parameter size mismatch");
    Eigen::Index k = 0;
    auto absorb = [&](Eigen::MatrixXd& w) {
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat(k++);
    };
    for (auto& h : params.hiddenWeights) absorb(h);
    absorb(params.outputWeights);
    params.beta0 = flat(k++);
    params.beta1 = flat(k++);
}

double pairLoss(const ForwardTrace& traceI, const ForwardTrace& traceJ, double deltaStar,
                const FocalSetStructure& fs) {
    const double kappa = traceI.massStar.dot(fs.conflictMatrix() * traceJ.massStar);
    const double diff = kappa - deltaStar;
    return diff * diff;
}

std::pair<double, double> penaltyMlCl(const Eigen::MatrixXd& massStars,
                                      const ConstraintSet& constraints,
                                      const FocalSetStructure& fs) {
    constraints.validate(static_cast<int>(massStars.rows()));
    const Eigen::MatrixXd& Q = fs.penaltyMatrix();
    KahanSum ml, cl;
    for (const auto& [i, j] : constraints.mustLink) ml.add(bilinear(massStars, i, j, Q));
    for (const auto& [i, j] : constraints.cannotLink) cl.add(2.0 - bilinear(massStars, i, j, Q));
    return {ml.sum, cl.sum};
}

double penaltyLabels(const Eigen::MatrixXd& massStars, const LabelSet& labels,
                     const FocalSetStructure& fs) {
    if (labels.empty()) return 0.0;
    labels.validate(static_cast<int>(massStars.rows()), fs.frame().clusterCount);
    KahanSum sum;
    for (const auto& [idx, label] : labels.entries) {
        const Eigen::VectorXd pl =
            fs.membershipMatrix().transpose() * massStars.row(idx).transpose();
        for (int l = 0; l < fs.frame().clusterCount; ++l) {
            const double gap = pl(l) - ((l + 1 == label) ? 1.0 : 0.0);
            sum.add(gap * gap);
        }
    }
    return sum.sum / static_cast<double>(labels.entries.size());
}

namespace {

struct TraceSet {
    std::vector<ForwardTrace> traces;
    Eigen::MatrixXd massStars;         // n x f
    Eigen::MatrixXd conflictProducts;  // row i = (C m*_i)^T
};

// `needed` restricts the forward sweep to the marked objects; rows of the
// unmarked ones stay zero and must not be read.
TraceSet forwardAll(const NetworkParams& params, const TrainingInstance& instance,
                    const std::vector<char>* needed = nullptr) {
    const int n = instance.objectCount();
    TraceSet ts;
    ts.traces.resize(static_cast<std::size_t>(n));
    ts.massStars = Eigen::MatrixXd::Zero(n, instance.fs->size());
    for (int i = 0; i < n; ++i) {
        if (needed && !(*needed)[static_cast<std::size_t>(i)]) continue;
        std::optional<double> score;
        if (instance.svmScores) score = (*instance.svmScores)(i);
        ts.traces[static_cast<std::size_t>(i)] =
            forward(params, instance.X.row(i).transpose(), score, *instance.fs);
        ts.massStars.row(i) = ts.traces[static_cast<std::size_t>(i)].massStar.transpose();
    }
    ts.conflictProducts = ts.massStars * instance.fs->conflictMatrix();
    return ts;
}

double regularizationTerm(const NetworkParams& params, double lambda) {
    if (lambda == 0.0) return 0.0;
    double term = 0.0;
    for (const auto& w : params.hiddenWeights)
        term += w.squaredNorm() / static_cast<double>(w.size());
    term += params.outputWeights.squaredNorm() / static_cast<double>(params.outputWeights.size());
    return 0.5 * lambda * term;
}

struct CompositeWeights {
    double baseScale = 1.0;        // (1 - nu) when labels are active
    double constraintScale = 0.0;  // (1 - nu) * xi / (2 * #constraints)
    double labelScale = 0.0;       // nu / n_s
    double nuEffective = 0.0;
};

CompositeWeights compositeWeights(const TrainingInstance& instance, const LossConfig& cfg) {
    CompositeWeights w;
    w.nuEffective = instance.labels.empty() ? 0.0 : cfg.nuBlend;
    w.baseScale = 1.0 - w.nuEffective;
    if (!instance.constraints.empty() && cfg.xi > 0.0)
        w.constraintScale =
            w.baseScale * cfg.xi / (2.0 * static_cast<double>(instance.constraints.size()));
    if (!instance.labels.empty() && w.nuEffective > 0.0)
        w.labelScale = w.nuEffective / static_cast<double>(instance.labels.entries.size());
    return w;
}

}  // namespace

LossBreakdown totalLoss(const NetworkParams& params, const TrainingInstance& instance,
                        const LossConfig& cfg) {
    instance.validate();
    cfg.validate();
    const TraceSet ts = forwardAll(params, instance);
    const double weight = instance.view.pairWeight();

    LossBreakdown out;
    KahanSum base;
    instance.view.forEachPair([&](int i, int j, double deltaStar) {
        const double kappa = ts.massStars.row(i).dot(ts.conflictProducts.row(j));
        const double diff = kappa - deltaStar;
        base.add(weight * diff * diff);
    });
    out.base = base.sum;
    out.regularization = regularizationTerm(params, cfg.lambda);

    const CompositeWeights w = compositeWeights(instance, cfg);
    if (!instance.constraints.empty()) {
        const auto [ml, cl] = penaltyMlCl(ts.massStars, instance.constraints, *instance.fs);
        out.mustLinkPenalty = ml;
        out.cannotLinkPenalty = cl;
        if (cfg.xi > 0.0)
            out.constraintTerm =
                cfg.xi / (2.0 * static_cast<double>(instance.constraints.size())) * (ml + cl);
    }
    if (!instance.labels.empty())
        out.labelPenalty = penaltyLabels(ts.massStars, instance.labels, *instance.fs);

    out.total = w.baseScale * (out.base + out.constraintTerm) +
                w.nuEffective * out.labelPenalty + out.regularization;
    return out;
}

namespace {

// Per-object derivative sinks: everything lands on the softmax logits and
// the gate coefficient first, then a single backward pass per object moves
// it onto the weights.
struct ObjectGrads {
    Eigen::MatrixXd dLogits;  // n x f
    Eigen::VectorXd dGate;    // n
};

void addMassStarGradient(const TrainingInstance& instance, const TraceSet& ts, int obj,
                         const Eigen::VectorXd& dMassStar, ObjectGrads& grads) {
    const ForwardTrace& trace = ts.traces[static_cast<std::size_t>(obj)];
    // massStar = gamma * mass + (1 - gamma) * emptyIndicator, so the mass
    // path picks up a factor gamma and the gate path gets mass - indicator.
    const Eigen::VectorXd dMass = trace.gateCoef * dMassStar;
    const double mv = trace.mass.dot(dMass);
    grads.dLogits.row(obj) += (trace.mass.array() * (dMass.array() - mv)).matrix().transpose();
    if (trace.gated)
        grads.dGate(obj) += dMassStar.dot(trace.mass) - dMassStar(instance.fs->emptyIndex());
}

void backpropObject(const NetworkParams& params, const TrainingInstance& instance,
                    const ForwardTrace& trace, int obj, const Eigen::VectorXd& dLogits,
                    double dGate, GradientBundle& g) {
    g.output.col(0) += dLogits;
    const Eigen::VectorXd& zTop = trace.hiddenOut.back();
    g.output.rightCols(zTop.size()).noalias() += dLogits * zTop.transpose();

    Eigen::VectorXd dz = params.outputWeights.rightCols(zTop.size()).transpose() * dLogits;
    for (int l = static_cast<int>(params.hiddenWeights.size()) - 1; l >= 0; --l) {
        const auto& act = trace.hiddenAct[static_cast<std::size_t>(l)];
        const Eigen::VectorXd da =
            (act.array() > 0.0).select(dz, Eigen::VectorXd::Zero(dz.size()));
        auto& gw = g.hidden[static_cast<std::size_t>(l)];
        gw.col(0) += da;
        if (l == 0) {
            gw.rightCols(instance.X.cols()).noalias() += da * instance.X.row(obj);
        } else {
            const Eigen::VectorXd& prev = trace.hiddenOut[static_cast<std::size_t>(l - 1)];
            gw.rightCols(prev.size()).noalias() += da * prev.transpose();
            dz = params.hiddenWeights[static_cast<std::size_t>(l)]
                     .rightCols(prev.size())
                     .transpose() *
                 da;
        }
    }

    if (trace.gated && dGate != 0.0) {
        const double u = params.beta0 + params.beta1 * trace.svmScore;
        const double eta = softplus(u);
        const double dGammaDb0 = sigmoid(u) / ((1.0 + eta) * (1.0 + eta));
        g.beta0 += dGate * dGammaDb0;
        g.beta1 += dGate * dGammaDb0 * trace.svmScore;
    }
}

GradientBundle gradientsImpl(const NetworkParams& params, const TrainingInstance& instance,
                             const LossConfig& cfg,
                             const std::span<const std::pair<int, int>>* explicitPairs,
                             double pairWeight) {
    const int n = instance.objectCount();
    std::vector<char> needed;
    if (explicitPairs) {
        needed.assign(static_cast<std::size_t>(n), 0);
        for (const auto& [i, j] : *explicitPairs) {
            needed[static_cast<std::size_t>(i)] = 1;
            needed[static_cast<std::size_t>(j)] = 1;
        }
        for (const auto& [i, j] : instance.constraints.mustLink)
            needed[static_cast<std::size_t>(i)] = needed[static_cast<std::size_t>(j)] = 1;
        for (const auto& [i, j] : instance.constraints.cannotLink)
            needed[static_cast<std::size_t>(i)] = needed[static_cast<std::size_t>(j)] = 1;
        for (const auto& [idx, label] : instance.labels.entries)
            needed[static_cast<std::size_t>(idx)] = 1;
    }
    const TraceSet ts = forwardAll(params, instance, explicitPairs ? &needed : nullptr);
    const CompositeWeights w = compositeWeights(instance, cfg);

    ObjectGrads grads;
    grads.dLogits = Eigen::MatrixXd::Zero(n, instance.fs->size());
    grads.dGate = Eigen::VectorXd::Zero(n);

    auto addBasePair = [&](int i, int j, double deltaStar) {
        const double kappa = ts.massStars.row(i).dot(ts.conflictProducts.row(j));
        const double common = 2.0 * w.baseScale * pairWeight * (kappa - deltaStar);
        if (common == 0.0) return;
        addMassStarGradient(instance, ts, i, common * ts.conflictProducts.row(j).transpose(),
                            grads);
        addMassStarGradient(instance, ts, j, common * ts.conflictProducts.row(i).transpose(),
                            grads);
    };
    if (explicitPairs == nullptr) {
        instance.view.forEachPair(addBasePair);
    } else {
        for (const auto& [i, j] : *explicitPairs)
            addBasePair(i, j, instance.view.deltaStarAt(i, j));
    }

    // Must-link adds +m*_i^T Q m*_j, cannot-link its negation (the constant
    // in 2 - P has no gradient).
    if (w.constraintScale > 0.0) {
        const Eigen::MatrixXd penaltyProducts = ts.massStars * instance.fs->penaltyMatrix();
        auto addConstraintPair = [&](int i, int j, double sign) {
            addMassStarGradient(instance, ts, i,
                                sign * w.constraintScale * penaltyProducts.row(j).transpose(),
                                grads);
            addMassStarGradient(instance, ts, j,
                                sign * w.constraintScale * penaltyProducts.row(i).transpose(),
                                grads);
        };
        for (const auto& [i, j] : instance.constraints.mustLink) addConstraintPair(i, j, 1.0);
        for (const auto& [i, j] : instance.constraints.cannotLink) addConstraintPair(i, j, -1.0);
    }

    // Labeled-data penalty: squared contour gaps routed through the
    // membership matrix.
    if (w.labelScale > 0.0) {
        const Eigen::MatrixXd& membership = instance.fs->membershipMatrix();
        for (const auto& [idx, label] : instance.labels.entries) {
            Eigen::VectorXd gap = membership.transpose() * ts.massStars.row(idx).transpose();
            gap(label - 1) -= 1.0;
            addMassStarGradient(instance, ts, idx, 2.0 * w.labelScale * (membership * gap),
                                grads);
        }
    }

    GradientBundle g = GradientBundle::zeroLike(params);
    for (int i = 0; i < n; ++i) {
        if (grads.dLogits.row(i).isZero(0.0) && grads.dGate(i) == 0.0) continue;
        backpropObject(params, instance, ts.traces[static_cast<std::size_t>(i)], i,
                       grads.dLogits.row(i).transpose(), grads.dGate(i), g);
    }

    if (cfg.lambda > 0.0) {
        for (std::size_t l = 0; l < params.hiddenWeights.size(); ++l)
            g.hidden[l] += (cfg.lambda / static_cast<double>(params.hiddenWeights[l].size())) *
                           params.hiddenWeights[l];
        g.output +=
            (cfg.lambda / static_cast<double>(params.outputWeights.size())) * params.outputWeights;
    }

    for (std::size_t l = 0; l < g.hidden.size(); ++l)
        if (!g.hidden[l].allFinite())
            throw ValidationError("non-finite gradient in hidden layer " + std::to_string(l + 1));
    if (!g.output.allFinite()) throw ValidationError("non-finite gradient in the output layer");
    if (!std::isfinite(g.beta0) || !std::isfinite(g.beta1))
        throw ValidationError("non-finite gradient in the gate coefficients");
    return g;
}

}  // namespace

GradientBundle gradients(const NetworkParams& params, const TrainingInstance& instance,
                         const LossConfig& cfg, std::span<const std::pair<int, int>> pairs,
                         double pairWeight) {
    return gradientsImpl(params, instance, cfg, &pairs, pairWeight);
}

GradientBundle gradients(const NetworkParams& params, const TrainingInstance& instance,
                         const LossConfig& cfg) {
    instance.validate();
    cfg.validate();
    return gradientsImpl(params, instance, cfg, nullptr, instance.view.pairWeight());
}

GradCheckReport gradCheck(const NetworkParams& params, const TrainingInstance& instance,
                          const LossConfig& cfg, double step,
                          const GradientBundle* analyticOverride) {
    instance.validate();
    cfg.validate();
    const Eigen::VectorXd analytic = flattenGradient(
        analyticOverride ? *analyticOverride : gradients(params, instance, cfg));
    const Eigen::VectorXd flat = flattenParams(params);

    NetworkParams probe = params;
    Eigen::VectorXd numeric(flat.size());
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
        Eigen::VectorXd shifted = flat;
        shifted(k) = flat(k) + step;
        unflattenParams(shifted, probe);
        const double up = totalLoss(probe, instance, cfg).total;
        shifted(k) = flat(k) - step;
        unflattenParams(shifted, probe);
        const double down = totalLoss(probe, instance, cfg).total;
        numeric(k) = (up - down) / (2.0 * step);
    }

    GradCheckReport report;
    Eigen::Index cursor = 0;
    auto scanBlock = [&](const std::string& name, Eigen::Index count) {
        GradCheckBlock block;
        block.name = name;
        for (Eigen::Index k = cursor; k < cursor + count; ++k) {
            const double a = analytic(k);
            const double nval = numeric(k);
            const double rel = std::abs(a - nval) / std::max({1.0, std::abs(a), std::abs(nval)});
            if (rel >= block.maxRelativeError) {
                block.maxRelativeError = rel;
                block.worstIndex = static_cast<int>(k - cursor);
                block.analytic = a;
                block.numeric = nval;
            }
        }
        cursor += count;
        report.maxRelativeError = std::max(report.maxRelativeError, block.maxRelativeError);
        report.blocks.push_back(std::move(block));
    };
    for (std::size_t l = 0; l < params.hiddenWeights.size(); ++l)
        scanBlock("hidden" + std::to_string(l + 1), params.hiddenWeights[l].size());
    scanBlock("output", params.outputWeights.size());
    scanBlock("beta0", 1);
    scanBlock("beta1", 1);
    return report;
}

std::string GradCheckReport::summary() const {
    std::ostringstream out;
    out << "max relative error " << maxRelativeError << "\n";
    for (const auto& b : blocks)
        out << "  " << b.name << ": max rel err " << b.maxRelativeError << " at component "
            << b.worstIndex << " (analytic " << b.analytic << ", numeric " << b.numeric << ")\n";
    return out.str();
}

namespace {

struct RestartOutcome {
    NetworkParams params;
    std::vector<double> history;
    std::vector<EpochRecord> report;
    double finalLoss = std::numeric_limits<double>::infinity();
    bool diverged = false;
};

RestartOutcome runBatchRestart(const TrainingInstance& instance, const LossConfig& cfg,
                               const BatchOptConfig& opt, const Architecture& arch,
                               std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    RestartOutcome out;
    Rng rng(seed);
    NetworkParams params = initParams(arch, rng);

    Eigen::VectorXd theta = flattenParams(params);
    Eigen::VectorXd steps = Eigen::VectorXd::Constant(theta.size(), opt.initialStep);
    Eigen::VectorXd prevSign = Eigen::VectorXd::Zero(theta.size());

    LossBreakdown current = totalLoss(params, instance, cfg);
    double loss = current.total;
    if (!std::isfinite(loss)) {
        out.diverged = true;
        return out;
    }

    int stagnant = 0;
    for (int epoch = 1; epoch <= opt.maxEpochs; ++epoch) {
        const auto t0 = Clock::now();
        GradientBundle g;
        try {
            g = gradientsImpl(params, instance, cfg, nullptr, instance.view.pairWeight());
        } catch (const ValidationError&) {
            out.diverged = true;
            return out;
        }
        const Eigen::VectorXd grad = flattenGradient(g);

        NetworkParams candidate = params;
        const Eigen::VectorXd thetaCand = theta - steps.cwiseProduct(grad);
        unflattenParams(thetaCand, candidate);
        double candLoss = std::numeric_limits<double>::quiet_NaN();
        LossBreakdown candBreakdown;
        if (thetaCand.allFinite()) {
            try {
                candBreakdown = totalLoss(candidate, instance, cfg);
                candLoss = candBreakdown.total;
            } catch (const ValidationError&) {
                candLoss = std::numeric_limits<double>::quiet_NaN();
            }
        }

        double improvement = 0.0;
        if (std::isfinite(candLoss) && candLoss <= loss) {
            improvement = loss - candLoss;
            params = std::move(candidate);
            theta = thetaCand;
            loss = candLoss;
            current = candBreakdown;
            for (Eigen::Index k = 0; k < steps.size(); ++k) {
                const double s = grad(k) > 0.0 ? 1.0 : (grad(k) < 0.0 ? -1.0 : 0.0);
                if (s != 0.0 && prevSign(k) != 0.0)
                    steps(k) = std::clamp(steps(k) * (s == prevSign(k) ? opt.stepUp : opt.stepDown),
                                          opt.minStep, opt.maxStep);
                prevSign(k) = s;
            }
        } else {
            // Rejected step: shrink everything, forget the sign memory.
            steps = (steps * opt.stepDown).cwiseMax(opt.minStep);
            prevSign.setZero();
        }

        const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
        out.history.push_back(loss);
        out.report.push_back({epoch, current, std::sqrt(g.squaredNorm()), wall});

        if (improvement > opt.relTol * std::max(1.0, std::abs(loss)))
            stagnant = 0;
        else if (++stagnant >= 25)
            break;
    }
    out.params = std::move(params);
    out.finalLoss = loss;
    return out;
}

std::vector<std::pair<int, int>> allPairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    return pairs;
}

RestartOutcome runMinibatchRestart(const TrainingInstance& instance, const LossConfig& cfg,
                                   const MinibatchOptConfig& opt, const Architecture& arch,
                                   std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    RestartOutcome out;
    Rng rng(seed);
    NetworkParams params = initParams(arch, rng);
    const int n = instance.objectCount();

    // Early stopping monitors a held-out pair set excluded from the blocks.
    std::unordered_set<long long> heldOut;
    std::vector<std::pair<int, int>> valPairs;
    if (opt.earlyStopping && opt.validationFraction > 0.0) {
        Rng valRng(Rng::deriveSeed(seed, 0x5a17));
        instance.view.forEachPair([&](int i, int j, double) {
            if (valRng.uniform() < opt.validationFraction) {
                heldOut.insert(static_cast<long long>(std::min(i, j)) * n + std::max(i, j));
                valPairs.emplace_back(i, j);
            }
        });
    }
    auto validationLoss = [&](const NetworkParams& p) {
        KahanSum sum;
        const TraceSet ts = forwardAll(p, instance);
        for (const auto& [i, j] : valPairs) {
            const double kappa = ts.massStars.row(i).dot(ts.conflictProducts.row(j));
            const double diff = kappa - instance.view.deltaStarAt(i, j);
            sum.add(diff * diff);
        }
        return sum.sum / static_cast<double>(valPairs.size());
    };

    Eigen::VectorXd theta = flattenParams(params);
    Eigen::VectorXd meanSq = Eigen::VectorXd::Zero(theta.size());

    double bestVal = std::numeric_limits<double>::infinity();
    NetworkParams bestParams = params;
    int sinceBest = 0;

    std::vector<std::pair<int, int>> blockPairs;
    for (int epoch = 1; epoch <= opt.maxEpochs; ++epoch) {
        const auto t0 = Clock::now();
        std::vector<PairBlock> blocks;
        if (opt.blocks <= 1)
            blocks.push_back({allPairs(n)});
        else
            blocks = minibatchBlocks(n, opt.blocks, Rng::deriveSeed(seed, 0x9000 + epoch));

        double gradNormSq = 0.0;
        for (const auto& block : blocks) {
            blockPairs.clear();
            for (const auto& pr : block.pairs) {
                const long long key = static_cast<long long>(std::min(pr.first, pr.second)) * n +
                                      std::max(pr.first, pr.second);
                if (heldOut.empty() || !heldOut.count(key)) blockPairs.push_back(pr);
            }
            if (blockPairs.empty()) continue;
            GradientBundle g;
            try {
                g = gradients(params, instance, cfg, blockPairs,
                              1.0 / static_cast<double>(blockPairs.size()));
            } catch (const ValidationError&) {
                out.diverged = true;
                return out;
            }
            const Eigen::VectorXd grad = flattenGradient(g);
            gradNormSq += grad.squaredNorm();
            meanSq = opt.decay * meanSq + (1.0 - opt.decay) * grad.cwiseAbs2();
            theta -= opt.learningRate *
                     (grad.array() / (meanSq.array().sqrt() + opt.stabilizer)).matrix();
            unflattenParams(theta, params);
        }

        LossBreakdown breakdown;
        try {
            breakdown = totalLoss(params, instance, cfg);
        } catch (const ValidationError&) {
            out.diverged = true;
            return out;
        }
        if (!std::isfinite(breakdown.total)) {
            out.diverged = true;
            return out;
        }
        const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
        out.history.push_back(breakdown.total);
        out.report.push_back({epoch, breakdown, std::sqrt(gradNormSq), wall});

        if (opt.earlyStopping && !valPairs.empty()) {
            const double val = validationLoss(params);
            if (val < bestVal - 1e-12) {
                bestVal = val;
                bestParams = params;
                sinceBest = 0;
            } else if (++sinceBest >= opt.patience) {
                params = bestParams;
                break;
            }
        }
    }
    out.params = std::move(params);
    try {
        out.finalLoss = totalLoss(out.params, instance, cfg).total;
    } catch (const ValidationError&) {
        out.diverged = true;
    }
    return out;
}

template <typename RunRestart>
TrainResult multistart(int restarts, std::uint64_t seed, int threads, RunRestart&& runRestart) {
    if (restarts < 1) throw ValidationError("need at least one restart");
    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(restarts));
    const int workers = std::max(1, std::min(threads, restarts));
    if (workers == 1) {
        for (int r = 0; r < restarts; ++r)
            outcomes[static_cast<std::size_t>(r)] = runRestart(Rng::deriveSeed(seed, r));
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int r = next.fetch_add(1); r < restarts; r = next.fetch_add(1))
                    outcomes[static_cast<std::size_t>(r)] = runRestart(Rng::deriveSeed(seed, r));
            });
        for (auto& t : pool) t.join();
    }

    TrainResult result;
    double bestLoss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        const auto& o = outcomes[static_cast<std::size_t>(r)];
        if (o.diverged) {
            result.divergedRestarts.push_back(r);
            continue;
        }
        if (result.bestRestart < 0 || o.finalLoss < bestLoss) {
            bestLoss = o.finalLoss;
            result.bestRestart = r;
        }
    }
    if (result.bestRestart < 0) throw ValidationError("all training restarts diverged");
    auto& best = outcomes[static_cast<std::size_t>(result.bestRestart)];
    result.params = std::move(best.params);
    result.lossHistory = std::move(best.history);
    result.report = std::move(best.report);
    result.finalLoss = bestLoss;
    return result;
}

Architecture defaultArchitecture(const TrainingInstance& instance) {
    Architecture arch;
    arch.inputDim = static_cast<int>(instance.X.cols());
    arch.focalCount = instance.fs->size();
    arch.hiddenSizes = {defaultHiddenSize(arch.focalCount)};
    return arch;
}

// The dual normalization (sum alpha = 1) keeps novelty scores tiny, which
// starves the beta1 gradient (proportional to the score) relative to beta0's
// and lets training converge to an always-open gate. Training therefore sees
// scores scaled to unit standard deviation; the scale is folded back into
// beta1 afterwards so stored models keep consuming raw scores.
double noveltyScoreScale(const TrainingInstance& instance) {
    if (!instance.svmScores || instance.svmScores->size() < 2) return 1.0;
    const Eigen::VectorXd& s = *instance.svmScores;
    const double sd = std::sqrt((s.array() - s.mean()).square().mean());
    return sd > 1e-12 ? sd : 1.0;
}

TrainingInstance withScaledScores(const TrainingInstance& instance, double scale) {
    TrainingInstance scaled = instance;
    if (scaled.svmScores && scale != 1.0) *scaled.svmScores /= scale;
    return scaled;
}

}  // namespace

TrainResult trainBatch(const TrainingInstance& instance, const LossConfig& cfg,
                       const BatchOptConfig& opt, const Architecture& arch) {
    instance.validate();
    cfg.validate();
    arch.validate();
    if (opt.maxEpochs == 0) {
        TrainResult result;
        Rng rng(Rng::deriveSeed(opt.seed, 0));
        result.params = initParams(arch, rng);
        result.finalLoss = totalLoss(result.params, instance, cfg).total;
        result.bestRestart = 0;
        return result;
    }
    const double scoreScale = noveltyScoreScale(instance);
    const TrainingInstance scaled = withScaledScores(instance, scoreScale);
    TrainResult result =
        multistart(opt.restarts, opt.seed, opt.threads, [&](std::uint64_t restartSeed) {
            return runBatchRestart(scaled, cfg, opt, arch, restartSeed);
        });
    result.params.beta1 /= scoreScale;
    return result;
}

TrainResult trainBatch(const TrainingInstance& instance, const LossConfig& cfg,
                       const BatchOptConfig& opt) {
    instance.validate();
    return trainBatch(instance, cfg, opt, defaultArchitecture(instance));
}

TrainResult trainMinibatch(const TrainingInstance& instance, const LossConfig& cfg,
                           const MinibatchOptConfig& opt, const Architecture& arch) {
    instance.validate();
    cfg.validate();
    arch.validate();
    if (instance.view.mode() != DissimilarityView::Mode::Dense)
        throw ValidationError("minibatch training needs a dense dissimilarity view");
    if (opt.blocks > 1 && opt.blocks > instance.objectCount() / 2)
        throw ValidationError("too many minibatch blocks for " +
                              std::to_string(instance.objectCount()) + " objects");
    if (opt.maxEpochs == 0) {
        TrainResult result;
        Rng rng(Rng::deriveSeed(opt.seed, 0));
        result.params = initParams(arch, rng);
        result.finalLoss = totalLoss(result.params, instance, cfg).total;
        result.bestRestart = 0;
        return result;
    }
    const double scoreScale = noveltyScoreScale(instance);
    const TrainingInstance scaled = withScaledScores(instance, scoreScale);
    TrainResult result =
        multistart(opt.restarts, opt.seed, opt.threads, [&](std::uint64_t restartSeed) {
            return runMinibatchRestart(scaled, cfg, opt, arch, restartSeed);
        });
    result.params.beta1 /= scoreScale;
    return result;
}

TrainResult trainMinibatch(const TrainingInstance& instance, const LossConfig& cfg,
                           const MinibatchOptConfig& opt) {
    instance.validate();
    return trainMinibatch(instance, cfg, opt, defaultArchitecture(instance));
}

}  // namespace nnevclus
