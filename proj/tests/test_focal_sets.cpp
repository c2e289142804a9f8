#include <doctest.h>

#include <bit>

#include "nnevclus/errors.hpp"
#include "nnevclus/focal_sets.hpp"
#include "nnevclus/rng.hpp"

using namespace nnevclus;

namespace {

// Masses of the three-object sensor example on a three-cluster frame.
Eigen::VectorXd exampleMass1(const FocalSetStructure& fs) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(fs.size());
    for (int q = 0; q < fs.size(); ++q) {
        if (fs.subsetBits(q) == 0b001u) m(q) = 0.6;   // {w1}
        if (fs.subsetBits(q) == 0b011u) m(q) = 0.3;   // {w1,w2}
        if (fs.subsetBits(q) == 0b111u) m(q) = 0.1;   // frame
    }
    return m;
}

Eigen::VectorXd exampleMass2(const FocalSetStructure& fs) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(fs.size());
    for (int q = 0; q < fs.size(); ++q) {
        if (fs.subsetBits(q) == 0b011u) m(q) = 0.5;
        if (fs.subsetBits(q) == 0b100u) m(q) = 0.2;   // {w3}
        if (fs.subsetBits(q) == 0b111u) m(q) = 0.3;
    }
    return m;
}

Eigen::VectorXd exampleMass3(const FocalSetStructure& fs) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(fs.size());
    for (int q = 0; q < fs.size(); ++q) {
        if (fs.subsetBits(q) == 0b001u) m(q) = 0.1;
        if (fs.subsetBits(q) == 0b010u) m(q) = 0.1;   // {w2}
        if (fs.subsetBits(q) == 0b100u) m(q) = 0.8;
    }
    return m;
}

Eigen::VectorXd randomMass(const FocalSetStructure& fs, Rng& rng) {
    Eigen::VectorXd m(fs.size());
    double sum = 0.0;
    for (int q = 0; q < fs.size(); ++q) {
        m(q) = rng.uniform();
        sum += m(q);
    }
    return m / sum;
}

// Independent conflict oracle: explicit double loop over subset pairs with a
// bit-set intersection test.
double conflictByEnumeration(const Eigen::VectorXd& m1, const Eigen::VectorXd& m2,
                             const FocalSetStructure& fs) {
    double sum = 0.0;
    for (int q = 0; q < fs.size(); ++q)
        for (int r = 0; r < fs.size(); ++r)
            if ((fs.subsetBits(q) & fs.subsetBits(r)) == 0u) sum += m1(q) * m2(r);
    return sum;
}

}  // namespace

TEST_SUITE_BEGIN("focalsets");

TEST_CASE("scheme construction and ordering") {
    SUBCASE("singletons_plus at c=2") {
        const auto fs = buildFocalSets(Frame(2), FocalScheme::SingletonsPlus);
        REQUIRE(fs.size() == 4);
        CHECK(fs.subsetBits(0) == 0b00u);
        CHECK(fs.subsetBits(1) == 0b01u);
        CHECK(fs.subsetBits(2) == 0b10u);
        CHECK(fs.subsetBits(3) == 0b11u);
        CHECK(fs.emptyIndex() == 0);
        CHECK(fs.frameIndex() == 3);
    }
    SUBCASE("pairs_plus counts") {
        CHECK(buildFocalSets(Frame(3), FocalScheme::PairsPlus).size() == 8);
        CHECK(buildFocalSets(Frame(4), FocalScheme::PairsPlus).size() == 12);
    }
    SUBCASE("full scheme") {
        CHECK(buildFocalSets(Frame(3), FocalScheme::Full).size() == 8);
        CHECK(buildFocalSets(Frame(5), FocalScheme::Full).size() == 32);
        CHECK_THROWS_AS(buildFocalSets(Frame(6), FocalScheme::Full), ValidationError);
    }
    SUBCASE("pair ordering is lexicographic by member list") {
        const auto fs = buildFocalSets(Frame(4), FocalScheme::PairsPlus);
        // after empty + 4 singletons: (1,2) (1,3) (1,4) (2,3) (2,4) (3,4)
        CHECK(fs.subsetBits(5) == 0b0011u);
        CHECK(fs.subsetBits(6) == 0b0101u);
        CHECK(fs.subsetBits(7) == 0b1001u);
        CHECK(fs.subsetBits(8) == 0b0110u);
        CHECK(fs.subsetBits(9) == 0b1010u);
        CHECK(fs.subsetBits(10) == 0b1100u);
        CHECK(fs.frameIndex() == 11);
    }
    SUBCASE("tiny frames drop duplicate subsets") {
        // c=2 pairs_plus: the sole pair is the frame itself.
        CHECK(buildFocalSets(Frame(2), FocalScheme::PairsPlus).size() == 4);
        CHECK(buildFocalSets(Frame(1), FocalScheme::SingletonsPlus).size() == 2);
    }
    SUBCASE("invalid frames") {
        CHECK_THROWS_AS(Frame(0), ValidationError);
        CHECK_THROWS_AS(Frame(-2), ValidationError);
    }
}

TEST_CASE("intersection matrices") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::PairsPlus);
    const int f = fs.size();
    const auto& C = fs.conflictMatrix();
    const auto& E = fs.emptyMatrix();
    const auto& S = fs.singletonMatrix();
    const auto& Q = fs.penaltyMatrix();

    CHECK(C(0, 0) == 1.0);  // empty conflicts with itself
    CHECK(C.isApprox(C.transpose()));
    for (int q = 0; q < f; ++q) {
        CHECK(E(0, q) == 1.0);
        CHECK(E(q, 0) == 1.0);
        if (q > 0)
            for (int r = 1; r < f; ++r) CHECK(E(q, r) == 0.0);
        CHECK(S(q, q) == (fs.cardinality(q) == 1 ? 1.0 : 0.0));
    }
    for (int q = 0; q < f; ++q)
        for (int r = 0; r < f; ++r) {
            CHECK(Q(q, r) == 1.0 + C(q, r) - E(q, r) - S(q, r));
            CHECK(Q(q, r) >= -1.0);
            CHECK(Q(q, r) <= 2.0);
        }
}

TEST_CASE("degree of conflict on the worked sensor example") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::Full);
    const auto m1 = exampleMass1(fs);
    const auto m2 = exampleMass2(fs);
    const auto m3 = exampleMass3(fs);
    CHECK(degreeOfConflict(m1, m2, fs) == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(degreeOfConflict(m1, m3, fs) == doctest::Approx(0.78).epsilon(1e-12));
    CHECK(plausibilitySame(m1, m2, fs).same == doctest::Approx(0.82).epsilon(1e-12));
    CHECK(plausibilitySame(m1, m3, fs).same == doctest::Approx(0.22).epsilon(1e-12));
}

TEST_CASE("conflict edge cases") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::SingletonsPlus);
    Eigen::VectorXd vacuous = Eigen::VectorXd::Zero(fs.size());
    vacuous(fs.frameIndex()) = 1.0;
    Eigen::VectorXd empty = Eigen::VectorXd::Zero(fs.size());
    empty(fs.emptyIndex()) = 1.0;
    CHECK(degreeOfConflict(vacuous, vacuous, fs) == 0.0);
    CHECK(degreeOfConflict(empty, vacuous, fs) == 1.0);
    CHECK(degreeOfConflict(empty, empty, fs) == 1.0);

    Rng rng(7);
    const auto any = randomMass(fs, rng);
    CHECK(degreeOfConflict(empty, any, fs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conflict matches enumeration and is symmetric") {
    Rng rng(42);
    for (int c = 2; c <= 4; ++c) {
        for (auto scheme : {FocalScheme::Full, FocalScheme::SingletonsPlus, FocalScheme::PairsPlus}) {
            const auto fs = buildFocalSets(Frame(c), scheme);
            for (int rep = 0; rep < 20; ++rep) {
                const auto m1 = randomMass(fs, rng);
                const auto m2 = randomMass(fs, rng);
                const double kappa = degreeOfConflict(m1, m2, fs);
                CHECK(kappa == doctest::Approx(conflictByEnumeration(m1, m2, fs)).epsilon(1e-12));
                CHECK(kappa == doctest::Approx(degreeOfConflict(m2, m1, fs)).epsilon(1e-14));
                CHECK(kappa >= 0.0);
                CHECK(kappa <= 1.0 + 1e-12);
                // same-cluster plausibility is exactly one minus the conflict
                CHECK(plausibilitySame(m1, m2, fs).same == doctest::Approx(1.0 - kappa).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("same/different plausibilities") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::PairsPlus);
    Eigen::VectorXd empty = Eigen::VectorXd::Zero(fs.size());
    empty(fs.emptyIndex()) = 1.0;
    Eigen::VectorXd vacuous = Eigen::VectorXd::Zero(fs.size());
    vacuous(fs.frameIndex()) = 1.0;
    Eigen::VectorXd single = Eigen::VectorXd::Zero(fs.size());
    single(1) = 1.0;  // {w1}

    auto both = plausibilitySame(empty, empty, fs);
    CHECK(both.same == 0.0);
    CHECK(both.different == 0.0);
    both = plausibilitySame(vacuous, vacuous, fs);
    CHECK(both.same == 1.0);
    CHECK(both.different == 1.0);
    both = plausibilitySame(single, single, fs);
    CHECK(both.same == 1.0);
    CHECK(both.different == 0.0);
}

TEST_CASE("contour function") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::Full);
    Eigen::VectorXd vacuous = Eigen::VectorXd::Zero(fs.size());
    vacuous(fs.frameIndex()) = 1.0;
    CHECK(contour(vacuous, fs).isApprox(Eigen::VectorXd::Ones(3)));

    Eigen::VectorXd empty = Eigen::VectorXd::Zero(fs.size());
    empty(fs.emptyIndex()) = 1.0;
    CHECK(contour(empty, fs).isZero());

    const Eigen::VectorXd pl = contour(exampleMass1(fs), fs);
    CHECK(pl(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pl(1) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(pl(2) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mass validation") {
    const auto fs = buildFocalSets(Frame(2), FocalScheme::SingletonsPlus);
    Eigen::VectorXd wrongLength = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(degreeOfConflict(wrongLength, wrongLength, fs), ValidationError);

    Eigen::VectorXd negative(4);
    negative << 1.2, -0.2, 0.0, 0.0;
    CHECK_THROWS_AS(validateMass(negative, fs), ValidationError);

    Eigen::VectorXd badSum(4);
    badSum << 0.5, 0.2, 0.1, 0.1;
    CHECK_THROWS_AS(validateMass(badSum, fs), ValidationError);

    Eigen::VectorXd ok(4);
    ok << 0.25, 0.25, 0.25, 0.25;
    CHECK_NOTHROW(validateMass(ok, fs));
}

TEST_CASE("mass labels") {
    const auto fs = buildFocalSets(Frame(3), FocalScheme::PairsPlus);
    CHECK(fs.massLabel(0) == "m_{}");
    CHECK(fs.massLabel(1) == "m_{1}");
    CHECK(fs.massLabel(4) == "m_{1,2}");
    CHECK(fs.massLabel(fs.frameIndex()) == "m_{Omega}");
}

TEST_SUITE_END();
