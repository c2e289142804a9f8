#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nnevclus/evidential.hpp"
#include "nnevclus/focal_sets.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

// Layer sizes of the mass-producing network: input width, one or more ReLU
// hidden layers, and a softmax output over the focal sets.
struct Architecture {
    int inputDim = 0;
    std::vector<int> hiddenSizes;
    int focalCount = 0;

    void validate() const;
    bool operator==(const Architecture&) const = default;
};

// Default hidden width: 1.5 times the number of focal sets, rounded up.
int defaultHiddenSize(int focalCount);

// All trainable parameters. Each weight matrix stores the bias in column 0.
// beta0/beta1 shape the gate that moves mass to the empty set as the
// novelty score drops.
struct NetworkParams {
    std::vector<Eigen::MatrixXd> hiddenWeights;  // layer l: hidden[l] x (1 + fanIn)
    Eigen::MatrixXd outputWeights;               // f x (1 + lastHidden)
    double beta0 = 0.0;
    double beta1 = 1.0;

    Architecture architecture() const;
    void validate() const;
};

// Uniform init in +-sqrt(6/(fanIn+fanOut)) per layer; beta0 = 0, beta1 = 1.
NetworkParams initParams(const Architecture& arch, Rng& rng);

// Everything the forward pass produces, kept for backpropagation.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> hiddenAct;  // pre-ReLU activations per layer
    std::vector<Eigen::VectorXd> hiddenOut;  // ReLU outputs per layer
    Eigen::VectorXd outputAct;               // softmax logits
    Eigen::VectorXd mass;                    // softmax output, sums to one
    bool gated = false;
    double svmScore = 0.0;
    double gateCoef = 1.0;    // gamma in (0,1]; 1 when no score is supplied
    Eigen::VectorXd massStar; // gateCoef * mass + (1-gateCoef) * emptySet
};

// Gate coefficient for a novelty score: softplus(beta0 + beta1*score) mapped
// through eta/(1+eta).
double gateCoefficient(double beta0, double beta1, double svmScore);

ForwardTrace forward(const NetworkParams& params, const Eigen::VectorXd& x,
                     std::optional<double> svmScore, const FocalSetStructure& fs);

// Mass rows for a batch of inputs; scores must align with rows when present.
EvidentialPartition predictMasses(const NetworkParams& params,
                                  std::shared_ptr<const FocalSetStructure> fs,
                                  const Eigen::MatrixXd& X,
                                  const std::optional<Eigen::VectorXd>& svmScores);

}  // namespace nnevclus
