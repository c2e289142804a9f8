#include "nnevclus/focal_sets.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "nnevclus/errors.hpp"

namespace nnevclus {

Frame::Frame(int c) : clusterCount(c) {
    if (c < 1) throw ValidationError("frame needs at least one cluster, got " + std::to_string(c));
    if (c > 31) throw ValidationError("cluster count " + std::to_string(c) + " exceeds bit-set capacity");
}

FocalScheme focalSchemeFromString(const std::string& name) {
    if (name == "full") return FocalScheme::Full;
    if (name == "singletons_plus") return FocalScheme::SingletonsPlus;
    if (name == "pairs_plus") return FocalScheme::PairsPlus;
    throw ValidationError("unknown focal scheme '" + name + "'");
}

std::string toString(FocalScheme scheme) {
    switch (scheme) {
        case FocalScheme::Full: return "full";
        case FocalScheme::SingletonsPlus: return "singletons_plus";
        case FocalScheme::PairsPlus: return "pairs_plus";
    }
    return "?";
}

namespace {

// Orders subsets by cardinality, then lexicographically by member list.
// The member-list comparison for equal cardinality reduces to comparing the
// lowest differing cluster, which the reversed-bit trick below captures;
// plain bitmask comparison would order {1,4} before {2,3}.
bool subsetLess(std::uint32_t a, std::uint32_t b) {
    const int ca = std::popcount(a);
    const int cb = std::popcount(b);
    if (ca != cb) return ca < cb;
    while (a != 0 && b != 0) {
        const int la = std::countr_zero(a);
        const int lb = std::countr_zero(b);
        if (la != lb) return la < lb;
        a &= a - 1;
        b &= b - 1;
    }
    return false;
}

}  // namespace

FocalSetStructure::FocalSetStructure(Frame frame, FocalScheme scheme,
                                     std::vector<std::uint32_t> subsets)
    : frame_(frame), scheme_(scheme), subsets_(std::move(subsets)) {
    const int f = size();
    if (f < 2) throw ValidationError("focal structure needs at least two subsets");
    for (int q = 0; q < f; ++q)
        for (int r = q + 1; r < f; ++r)
            if (subsets_[q] == subsets_[r]) throw ValidationError("duplicate focal subset");

    const std::uint32_t frameBits = (frame_.clusterCount >= 31)
                                        ? 0x7FFFFFFFu
                                        : ((1u << frame_.clusterCount) - 1u);
    for (int q = 0; q < f; ++q) {
        if (subsets_[q] == 0u) emptyIndex_ = q;
        if (subsets_[q] == frameBits) frameIndex_ = q;
    }

    conflict_.setZero(f, f);
    empty_.setZero(f, f);
    singleton_.setZero(f, f);
    membership_.setZero(f, frame_.clusterCount);
    for (int q = 0; q < f; ++q) {
        for (int r = 0; r < f; ++r)
            conflict_(q, r) = ((subsets_[q] & subsets_[r]) == 0u) ? 1.0 : 0.0;
        if (std::popcount(subsets_[q]) == 1) singleton_(q, q) = 1.0;
        for (int l = 0; l < frame_.clusterCount; ++l)
            if (subsets_[q] & (1u << l)) membership_(q, l) = 1.0;
    }
    if (emptyIndex_ >= 0) {
        empty_.row(emptyIndex_).setOnes();
        empty_.col(emptyIndex_).setOnes();
    }
    penalty_ = Eigen::MatrixXd::Ones(f, f) + conflict_ - empty_ - singleton_;
}

int FocalSetStructure::cardinality(int index) const {
    return std::popcount(subsets_[static_cast<std::size_t>(index)]);
}

std::string FocalSetStructure::massLabel(int index) const {
    if (index == frameIndex_) return "m_{Omega}";
    std::uint32_t bits = subsets_[static_cast<std::size_t>(index)];
    std::string members;
    for (int l = 0; l < frame_.clusterCount; ++l) {
        if (bits & (1u << l)) {
            if (!members.empty()) members += ',';
            members += std::to_string(l + 1);
        }
    }
    return "m_{" + members + "}";
}

FocalSetStructure buildFocalSets(Frame frame, FocalScheme scheme) {
    const int c = frame.clusterCount;
    if (scheme == FocalScheme::Full && c > 5)
        throw ValidationError("full focal scheme limited to 5 clusters, got " + std::to_string(c));

    const std::uint32_t frameBits = (1u << c) - 1u;
    std::vector<std::uint32_t> subsets;
    auto add = [&subsets](std::uint32_t bits) {
        if (std::find(subsets.begin(), subsets.end(), bits) == subsets.end())
            subsets.push_back(bits);
    };

    switch (scheme) {
        case FocalScheme::Full:
            for (std::uint32_t bits = 0; bits <= frameBits; ++bits) add(bits);
            std::sort(subsets.begin(), subsets.end(), subsetLess);
            break;
        case FocalScheme::SingletonsPlus:
            add(0u);
            for (int l = 0; l < c; ++l) add(1u << l);
            add(frameBits);
            break;
        case FocalScheme::PairsPlus:
            add(0u);
            for (int l = 0; l < c; ++l) add(1u << l);
            for (int l = 0; l < c; ++l)
                for (int k = l + 1; k < c; ++k) add((1u << l) | (1u << k));
            add(frameBits);
            break;
    }
    return FocalSetStructure(frame, scheme, std::move(subsets));
}

void validateMass(const Eigen::VectorXd& m, const FocalSetStructure& fs) {
    if (m.size() != fs.size())
        throw ValidationError("mass vector length " + std::to_string(m.size()) +
                              " does not match focal structure size " + std::to_string(fs.size()));
    double sum = 0.0;
    for (Eigen::Index q = 0; q < m.size(); ++q) {
        if (!(m(q) >= 0.0))
            throw ValidationError("mass component " + std::to_string(q) + " is negative or NaN");
        sum += m(q);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("mass vector sums to " + std::to_string(sum) + ", expected 1");
}

double degreeOfConflict(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                        const FocalSetStructure& fs) {
    validateMass(m1, fs);
    validateMass(m2, fs);
    return m1.dot(fs.conflictMatrix() * m2);
}

SameClusterPlausibility plausibilitySame(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                                         const FocalSetStructure& fs) {
    validateMass(m1, fs);
    validateMass(m2, fs);
    const double same = 1.0 - m1.dot(fs.conflictMatrix() * m2);
    const double different =
        1.0 - m1.dot((fs.emptyMatrix() + fs.singletonMatrix()) * m2);
    return {same, different};
}

Eigen::VectorXd contour(const Eigen::VectorXd& m, const FocalSetStructure& fs) {
    validateMass(m, fs);
    return fs.membershipMatrix().transpose() * m;
}

}  // namespace nnevclus
