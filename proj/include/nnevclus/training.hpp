#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nnevclus/dissimilarity.hpp"
#include "nnevclus/evidential.hpp"
#include "nnevclus/focal_sets.hpp"
#include "nnevclus/network.hpp"

namespace nnevclus {

enum class PairMode { Dense, Sampled, Minibatch };

// Weights of the composite loss. The pair supply itself lives in the
// DissimilarityView / block sampler.
struct LossConfig {
    double lambda = 0.0;   // l2 coefficient on the layer weights
    double xi = 0.0;       // pairwise-constraint weight
    double nuBlend = 0.0;  // labeled-data blend in [0, 1]
    PairMode mode = PairMode::Dense;
    int sampledP = 0;      // per-object pair sample size (sampled mode)
    int blocks = 0;        // minibatch block count

    void validate() const;
};

struct ConstraintSet {
    std::vector<std::pair<int, int>> mustLink;
    std::vector<std::pair<int, int>> cannotLink;

    bool empty() const { return mustLink.empty() && cannotLink.empty(); }
    std::size_t size() const { return mustLink.size() + cannotLink.size(); }
    void validate(int n) const;
};

struct LabelSet {
    std::vector<std::pair<int, int>> entries;  // (object index, class in 1..c)

    bool empty() const { return entries.empty(); }
    void validate(int n, int c) const;
};

// Everything a loss evaluation needs.
struct TrainingInstance {
    Eigen::MatrixXd X;  // n x d network inputs
    std::shared_ptr<const FocalSetStructure> fs;
    DissimilarityView view;
    std::optional<Eigen::VectorXd> svmScores;  // per-object novelty scores; gate off when absent
    ConstraintSet constraints;
    LabelSet labels;

    int objectCount() const { return static_cast<int>(X.rows()); }
    void validate() const;
};

struct GradientBundle {
    std::vector<Eigen::MatrixXd> hidden;
    Eigen::MatrixXd output;
    double beta0 = 0.0;
    double beta1 = 0.0;

    static GradientBundle zeroLike(const NetworkParams& params);
    double squaredNorm() const;
};

// Flat parameter order: hidden layers row-major, output layer row-major,
// then beta0, beta1. Used by the optimizers and the finite-difference check.
Eigen::VectorXd flattenParams(const NetworkParams& params);
Eigen::VectorXd flattenGradient(const GradientBundle& grad);
void unflattenParams(const Eigen::VectorXd& flat, NetworkParams& params);

struct LossBreakdown {
    double base = 0.0;            // averaged squared conflict error
    double regularization = 0.0;  // l2 term
    double mustLinkPenalty = 0.0; // raw penalty sums before scaling
    double cannotLinkPenalty = 0.0;
    double constraintTerm = 0.0;  // xi-scaled constraint contribution
    double labelPenalty = 0.0;    // raw labeled-data penalty
    double total = 0.0;
};

// Squared difference between the gated conflict of two traces and the
// transformed dissimilarity of their pair.
double pairLoss(const ForwardTrace& traceI, const ForwardTrace& traceJ, double deltaStar,
                const FocalSetStructure& fs);

// Raw penalty sums over the constraint pairs of the given mass rows.
std::pair<double, double> penaltyMlCl(const Eigen::MatrixXd& massStars,
                                      const ConstraintSet& constraints,
                                      const FocalSetStructure& fs);

// Mean squared gap between per-cluster plausibilities and one-hot labels.
double penaltyLabels(const Eigen::MatrixXd& massStars, const LabelSet& labels,
                     const FocalSetStructure& fs);

LossBreakdown totalLoss(const NetworkParams& params, const TrainingInstance& instance,
                        const LossConfig& cfg);

// Analytic gradient of the composite loss over an explicit pair batch.
// `pairWeight` is the averaging factor applied to each base pair term;
// penalty and regularization terms enter at full strength.
GradientBundle gradients(const NetworkParams& params, const TrainingInstance& instance,
                         const LossConfig& cfg, std::span<const std::pair<int, int>> pairs,
                         double pairWeight);

// Gradient over the pairs retained by the instance's view.
GradientBundle gradients(const NetworkParams& params, const TrainingInstance& instance,
                         const LossConfig& cfg);

struct GradCheckBlock {
    std::string name;
    double maxRelativeError = 0.0;
    int worstIndex = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central-difference comparison. Relative error of a component uses the
// denominator max(1, |analytic|, |numeric|).
struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double maxRelativeError = 0.0;

    bool pass(double tolerance) const { return maxRelativeError < tolerance; }
    std::string summary() const;
};

// `analyticOverride` substitutes the analytic side of the comparison; the
// fault-injection path of the CLI uses it to prove the check catches a bad
// gradient.
GradCheckReport gradCheck(const NetworkParams& params, const TrainingInstance& instance,
                          const LossConfig& cfg, double step = 1e-6,
                          const GradientBundle* analyticOverride = nullptr);

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;
    double gradNorm = 0.0;
    double wallSeconds = 0.0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<double> lossHistory;  // loss after each epoch of the winning restart
    std::vector<EpochRecord> report;
    double finalLoss = 0.0;
    int bestRestart = -1;
    std::vector<int> divergedRestarts;
};

// Full-batch descent with per-parameter adaptive steps: a step grows by
// `stepUp` while its gradient keeps its sign, shrinks by `stepDown` on a
// flip, and the whole update is rejected (all steps shrunk) if the loss
// rises. Runs `restarts` independent inits and keeps the lowest loss.
struct BatchOptConfig {
    int maxEpochs = 1000;
    int restarts = 5;
    std::uint64_t seed = 0;
    double initialStep = 1e-2;
    double stepUp = 1.2;
    double stepDown = 0.8;
    double minStep = 1e-12;
    double maxStep = 1e2;
    double relTol = 1e-10;  // stop when the loss improves less than this, relatively, for 25 epochs
    int threads = 1;
};

TrainResult trainBatch(const TrainingInstance& instance, const LossConfig& cfg,
                       const BatchOptConfig& opt);

// Same with an explicit architecture instead of the single default-width
// hidden layer.
TrainResult trainBatch(const TrainingInstance& instance, const LossConfig& cfg,
                       const BatchOptConfig& opt, const Architecture& arch);

// Minibatch RMSprop over within-group pair blocks, re-sampled every epoch.
struct MinibatchOptConfig {
    int blocks = 10;
    double learningRate = 1e-3;
    double decay = 0.9;
    double stabilizer = 1e-8;
    int maxEpochs = 200;
    int restarts = 5;
    std::uint64_t seed = 0;
    bool earlyStopping = false;
    int patience = 10;
    double validationFraction = 0.1;
    int threads = 1;
};

TrainResult trainMinibatch(const TrainingInstance& instance, const LossConfig& cfg,
                           const MinibatchOptConfig& opt);

TrainResult trainMinibatch(const TrainingInstance& instance, const LossConfig& cfg,
                           const MinibatchOptConfig& opt, const Architecture& arch);

}  // namespace nnevclus
