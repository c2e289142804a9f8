#include "nnevclus/one_class_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nnevclus/dissimilarity.hpp"
#include "nnevclus/errors.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

double OneClassSvm::decision(const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < supportVectors.rows(); ++i) {
        const double d2 = (supportVectors.row(i).transpose() - x).squaredNorm();
        sum += alphas(i) * std::exp(-sigma * d2);
    }
    return sum - offset;
}

Eigen::VectorXd OneClassSvm::decisionBatch(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = decision(X.row(i).transpose());
    return out;
}

double medianHeuristicSigma(const Eigen::MatrixXd& X) {
    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(X.rows()) * (X.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = i + 1; j < X.rows(); ++j)
            sq.push_back((X.row(i) - X.row(j)).squaredNorm());
    const double med = quantile(std::move(sq), 0.5);
    if (med <= 0.0) throw ValidationError("median pairwise distance is zero");
    return 1.0 / med;
}

OneClassSvm fitOneClassSvm(const Eigen::MatrixXd& X, double nu, double sigma,
                           std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    if (n < 2) throw ValidationError("one-class SVM needs at least two points");
    if (!(nu > 0.0 && nu < 1.0)) throw ValidationError("nu must lie in (0, 1)");
    if (!(sigma > 0.0)) throw ValidationError("kernel width must be positive");

    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double k = std::exp(-sigma * (X.row(i) - X.row(j)).squaredNorm());
            K(i, j) = k;
            K(j, i) = k;
        }
    }

    const double boxC = 1.0 / (nu * n);
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, 1.0 / n);
    Eigen::VectorXd g = K * alpha;  // dual gradient, kept incrementally

    constexpr double kktTol = 1e-4;
    constexpr double boundSlack = 1e-12;
    const long maxSteps = 4000L * std::max(n, 256);
    Rng rng(seed);

    auto gap = [&](int* outI, int* outJ) {
        // Maximal violating pair: smallest gradient among the raisable
        // coefficients vs. largest among the lowerable ones.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        int iLo = -1, jHi = -1;
        for (int k = 0; k < n; ++k) {
            if (alpha(k) < boxC - boundSlack && g(k) < lo) {
                lo = g(k);
                iLo = k;
            }
            if (alpha(k) > boundSlack && g(k) > hi) {
                hi = g(k);
                jHi = k;
            }
        }
        if (outI) *outI = iLo;
        if (outJ) *outJ = jHi;
        return hi - lo;
    };

    double finalGap = 0.0;
    bool converged = false;
    for (long step = 0; step < maxSteps; ++step) {
        int i = -1, j = -1;
        finalGap = gap(&i, &j);
        if (finalGap <= kktTol) {
            converged = true;
            break;
        }
        // Randomized partner: keep the most violating j, but pick the other
        // end at random among coefficients that still make a descent pair.
        if (step % 2 == 1) {
            int tries = 8;
            while (tries-- > 0) {
                const int cand = rng.uniformIndex(n);
                if (cand != j && alpha(cand) < boxC - boundSlack && g(cand) < g(j) - kktTol / 4) {
                    i = cand;
                    break;
                }
            }
        }
        // Move t mass from j to i along the equality constraint.
        const double curvature = K(i, i) + K(j, j) - 2.0 * K(i, j);
        const double slope = g(j) - g(i);
        double t = curvature > 1e-14 ? slope / curvature : std::numeric_limits<double>::infinity();
        t = std::min(t, boxC - alpha(i));
        t = std::min(t, alpha(j));
        if (t <= 0.0) continue;
        alpha(i) += t;
        alpha(j) -= t;
        g += t * (K.col(i) - K.col(j));
    }
    if (!converged)
        throw ValidationError("one-class SVM did not converge: KKT gap " + std::to_string(finalGap) +
                              " after " + std::to_string(maxSteps) + " steps");

    // Offset from the non-bound coefficients; fall back to the violating-pair
    // midpoint when every coefficient sits at a bound.
    double rho = 0.0;
    int nFree = 0;
    for (int k = 0; k < n; ++k) {
        if (alpha(k) > 1e-8 * boxC && alpha(k) < boxC * (1.0 - 1e-8)) {
            rho += g(k);
            ++nFree;
        }
    }
    if (nFree > 0) {
        rho /= nFree;
    } else {
        int i = -1, j = -1;
        gap(&i, &j);
        rho = (g(i) + g(j)) / 2.0;
    }

    OneClassSvm model;
    model.sigma = sigma;
    model.nu = nu;
    model.offset = rho;
    std::vector<int> sv;
    for (int k = 0; k < n; ++k)
        if (alpha(k) > 1e-12) sv.push_back(k);
    model.supportVectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    model.alphas.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t r = 0; r < sv.size(); ++r) {
        model.supportVectors.row(static_cast<Eigen::Index>(r)) = X.row(sv[r]);
        model.alphas(static_cast<Eigen::Index>(r)) = alpha(sv[r]);
    }
    return model;
}

}  // namespace nnevclus
