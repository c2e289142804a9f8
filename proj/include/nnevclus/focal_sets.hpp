#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nnevclus {

// The frame of discernment: a finite set of c candidate clusters.
struct Frame {
    int clusterCount;
    explicit Frame(int c);
};

// Which subsets of the frame carry mass.
//   Full:           all 2^c subsets (guarded to c <= 5)
//   SingletonsPlus: empty set, singletons, whole frame
//   PairsPlus:      empty set, singletons, pairs, whole frame
enum class FocalScheme { Full, SingletonsPlus, PairsPlus };

FocalScheme focalSchemeFromString(const std::string& name);
std::string toString(FocalScheme scheme);

// The ordered focal subsets plus the set-intersection matrices used by the
// conflict and constraint-penalty bilinear forms.
//
// Subsets are bit-sets over the c clusters, ordered: empty set first, then
// singletons in cluster order, then larger subsets by cardinality and
// lexicographic member list, then the whole frame last. Duplicates that the
// schemes can produce at very small c (e.g. the frame coinciding with the
// only pair when c = 2) are dropped.
class FocalSetStructure {
public:
    FocalSetStructure(Frame frame, FocalScheme scheme, std::vector<std::uint32_t> subsets);

    const Frame& frame() const { return frame_; }
    FocalScheme scheme() const { return scheme_; }
    int size() const { return static_cast<int>(subsets_.size()); }
    std::uint32_t subsetBits(int index) const { return subsets_[static_cast<std::size_t>(index)]; }
    int cardinality(int index) const;

    // Index of the empty set (-1 when absent) and of the whole frame.
    int emptyIndex() const { return emptyIndex_; }
    int frameIndex() const { return frameIndex_; }

    // conflict(q, r) = 1 iff subsets q and r are disjoint. The empty set
    // conflicts with everything, itself included.
    const Eigen::MatrixXd& conflictMatrix() const { return conflict_; }

    // 1 on the empty set's row and column, 0 elsewhere (zero matrix when the
    // empty set is absent).
    const Eigen::MatrixXd& emptyMatrix() const { return empty_; }

    // Diagonal indicator of the singleton subsets.
    const Eigen::MatrixXd& singletonMatrix() const { return singleton_; }

    // Must-link penalty kernel: 1 + conflict - empty - singleton, entrywise.
    const Eigen::MatrixXd& penaltyMatrix() const { return penalty_; }

    // f x c membership indicator: membership(r, l) = 1 iff cluster l belongs
    // to subset r. Contour values are membership^T * mass.
    const Eigen::MatrixXd& membershipMatrix() const { return membership_; }

    // Header label of subset `index`, e.g. "m_{}", "m_{1}", "m_{1,2}",
    // "m_{Omega}".
    std::string massLabel(int index) const;

private:
    Frame frame_;
    FocalScheme scheme_;
    std::vector<std::uint32_t> subsets_;
    int emptyIndex_ = -1;
    int frameIndex_ = -1;
    Eigen::MatrixXd conflict_, empty_, singleton_, penalty_, membership_;
};

FocalSetStructure buildFocalSets(Frame frame, FocalScheme scheme);

// Throws ValidationError unless m has length f, is nonnegative, and sums to
// one within 1e-9.
void validateMass(const Eigen::VectorXd& m, const FocalSetStructure& fs);

// Mass that the conjunctive combination of m1 and m2 puts on the empty set;
// one minus the plausibility that the two objects share a cluster.
double degreeOfConflict(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                        const FocalSetStructure& fs);

struct SameClusterPlausibility {
    double same;       // Pl(the two objects share a cluster)
    double different;  // Pl(the two objects lie in different clusters)
};

SameClusterPlausibility plausibilitySame(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                                         const FocalSetStructure& fs);

// Per-cluster plausibilities pl(omega_l).
Eigen::VectorXd contour(const Eigen::VectorXd& m, const FocalSetStructure& fs);

}  // namespace nnevclus
