#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace nnevclus {

// Gaussian-kernel nu-one-class SVM. Kernel convention is inverse-width:
// K(x, y) = exp(-sigma * ||x - y||^2).
struct OneClassSvm {
    Eigen::MatrixXd supportVectors;  // k x d
    Eigen::VectorXd alphas;          // k positive dual coefficients, sum <= 1
    double offset = 0.0;             // decision(x) = sum_i alpha_i K(x, x_i) - offset
    double sigma = 1.0;
    double nu = 0.2;

    double decision(const Eigen::VectorXd& x) const;
    Eigen::VectorXd decisionBatch(const Eigen::MatrixXd& X) const;
};

// Dual solve of the nu-one-class SVM by pairwise coordinate (SMO) updates:
// minimize (1/2) a^T K a subject to 0 <= a_i <= 1/(nu n) and sum a_i = 1,
// to a KKT gap of 1e-4. Pair selection is randomized under `seed`.
OneClassSvm fitOneClassSvm(const Eigen::MatrixXd& X, double nu, double sigma,
                           std::uint64_t seed);

// Inverse-width heuristic: 1 / median of the squared pairwise distances.
double medianHeuristicSigma(const Eigen::MatrixXd& X);

}  // namespace nnevclus
