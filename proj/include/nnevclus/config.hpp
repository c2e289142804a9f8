#pragma once

#include <cstdint>
#include <string>

#include "nnevclus/focal_sets.hpp"
#include "nnevclus/training.hpp"

namespace nnevclus {

// A full run description. Parsed from a sectioned key-value file; command
// line flags override single fields afterwards.
struct RunConfig {
    enum class DataMode { Attribute, Relational };
    enum class DissimFormat { Square, Triplet };

    // [data]
    std::string attributesPath;
    std::string dissimilaritiesPath;
    DissimFormat dissimilarityFormat = DissimFormat::Square;
    DataMode mode = DataMode::Attribute;
    std::string constraintsPath;
    std::string labelsPath;

    // [model]
    int clusters = 2;
    FocalScheme scheme = FocalScheme::PairsPlus;
    std::vector<int> hiddenSizes;  // empty = one layer of ceil(1.5 f)

    // [transform]
    double d0Quantile = 0.9;
    PairMode pairMode = PairMode::Dense;
    bool pairModeAuto = true;  // pick dense/sampled/minibatch from n
    int sampledP = 100;
    int blocks = 10;
    int pcaComponents = 5;

    // [penalty]
    double lambda = 0.0;
    double xi = 0.0;
    double nuBlend = 0.0;

    // [svm]
    bool svmEnabled = false;
    double svmNu = 0.2;
    double svmSigma = 0.0;  // 0 = median heuristic

    // [optimizer]
    int maxEpochs = 1000;
    int restarts = 5;
    double initialStep = 1e-2;
    double stepUp = 1.2;
    double stepDown = 0.8;
    double learningRate = 1e-3;
    double rmsDecay = 0.9;
    double rmsStabilizer = 1e-8;
    bool earlyStopping = false;
    int patience = 10;
    int batchThreshold = 1000;  // use batch training up to this many objects

    // [run]
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
    std::string outDir = "out";

    bool operator==(const RunConfig&) const = default;
};

RunConfig parseConfig(const std::string& text, const std::string& context);
RunConfig loadConfigFile(const std::string& path);
std::string serializeConfig(const RunConfig& cfg);

}  // namespace nnevclus
