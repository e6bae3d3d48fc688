#include <gtest/gtest.h>

#include <cmath>

#include "fracle/nls/perturbation.hpp"

using namespace fracle;

namespace {

struct Setup {
    ProblemParams q;
    CylinderGrid g;
    KernelTable tb;
    EntireSolution sol;
    PotentialProfile pot;
    WeightedNorms norms;
    PotentialSpec spec;
    SweepTable sweep;
};

const Setup& ref() {
    static const Setup s = [] {
        Setup s;
        s.q = ProblemParams::make(3, 0.5, 3);
        s.g = CylinderGrid::make(20.0, 0.05);
        s.tb = calibrate(s.q, 0, s.g);
        s.sol = solveEntire(s.q, s.tb, sigmoidGuess(s.q, s.g));
        s.pot = buildPotential(s.sol);
        s.norms = WeightedNorms::make(s.q);
        s.spec = PotentialSpec::powerTail(2.0 * s.q.s + 0.5, s.q.s);
        s.sweep = lambdaSweep(s.tb, s.sol, s.pot, s.spec, {0.2, 0.1, 0.05, 0.025}, s.norms);
        return s;
    }();
    return s;
}

} // namespace

TEST(PotentialSpec, Validation) {
    EXPECT_THROW(PotentialSpec::powerTail(1.0, 0.5), DomainError);
    EXPECT_THROW(PotentialSpec::compactBump(0.0, 0.5), DomainError);
    EXPECT_NO_THROW(PotentialSpec::powerTail(1.5, 0.5).validate());
    EXPECT_NO_THROW(PotentialSpec::compactBump(2.0, 0.5).validate());
    EXPECT_NO_THROW(PotentialSpec::zero(0.5).validate());
    const auto bump = PotentialSpec::compactBump(2.0, 0.5);
    EXPECT_EQ(bump(2.0), 0.0);
    EXPECT_NEAR(bump(0.0), 1.0, 1e-15);
    const auto pt = PotentialSpec::powerTail(1.5, 0.5);
    EXPECT_LT(pt.tailSup(1e3), 0.04);
    EXPECT_LT(pt.tailSup(1e5), pt.tailSup(1e3));
}

TEST(ScalePotential, IdentityAtOne) {
    const auto g = CylinderGrid::make(10.0, 0.1);
    const auto spec = PotentialSpec::powerTail(1.5, 0.5);
    const auto W = scalePotential(spec, 1.0, g);
    const auto V = physicalPotential(W, 0.5);
    for (int i = 0; i < g.size(); i += 7) EXPECT_NEAR(V[i], spec(std::exp(-g.node(i))), 1e-14 * (1 + V[i]));
    EXPECT_THROW(scalePotential(spec, 0.0, g), DomainError);
    EXPECT_THROW(scalePotential(spec, 1.5, g), DomainError);
}

TEST(ScalePotential, SupScaling) {
    const auto g = CylinderGrid::make(20.0, 0.05);
    for (double s : {0.5, 0.25}) {
        const auto spec = PotentialSpec::powerTail(2 * s + 0.5, s);
        for (double lam : {0.5, 0.1, 0.02}) {
            const auto V = physicalPotential(scalePotential(spec, lam, g), s);
            const double sup = *std::max_element(V.begin(), V.end());
            EXPECT_NEAR(sup, std::pow(lam, -2 * s), 1e-3 * std::pow(lam, -2 * s));
        }
    }
}

TEST(ScalePotential, Composes) {
    const auto g = CylinderGrid::make(15.0, 0.1);
    const auto spec = PotentialSpec::compactBump(1.5, 0.5);
    const auto a = scalePotential(spec.scaled(0.3), 0.5, g);
    const auto b = scalePotential(spec, 0.15, g);
    EXPECT_LE((a.values - b.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ScalePotential, WeightedLoadVanishes) {
    const auto& s = ref();
    double prev = INFINITY;
    for (double lam : {0.2, 0.1, 0.05, 0.025}) {
        const auto W = scalePotential(s.spec, lam, s.g);
        const double n = s.norms.starStar(GridFunction(s.g, W.values.cwiseProduct(s.sol.v.values)));
        EXPECT_LT(n, prev);
        prev = n;
    }
}

TEST(FixedPoint, ZeroPotential) {
    const auto& s = ref();
    const auto bs = fixedPoint(s.tb, s.sol, s.pot, scalePotential(PotentialSpec::zero(0.5), 0.1, s.g), 0.1, s.norms);
    EXPECT_EQ(bs.psi.values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(bs.starNorm, 0.0);
    EXPECT_EQ(bs.iterations, 0);
    EXPECT_LE(bs.residual, 1e-6);
}

TEST(FixedPoint, SweepDecreases) {
    const auto& s = ref();
    ASSERT_EQ(s.sweep.entries.size(), 4u);
    double prev = INFINITY;
    for (const auto& e : s.sweep.entries) {
        ASSERT_TRUE(e.ok) << e.lambda << ": " << e.error;
        EXPECT_LT(e.state.starNorm, prev) << e.lambda;
        prev = e.state.starNorm;
        EXPECT_LE(e.state.residual, 1e-6) << e.lambda;
        EXPECT_LE(e.state.starNorm, e.state.radius);
    }
    EXPECT_GE(s.sweep.slope, 0.8 * s.norms.sigma);
}

TEST(FixedPoint, Contracts) {
    for (const auto& e : ref().sweep.entries) {
        const auto& u = e.state.updates;
        ASSERT_GE(u.size(), 3u);
        for (std::size_t k = 2; k < u.size(); ++k) EXPECT_LE(u[k], 0.9 * u[k - 1]) << e.lambda << " " << k;
    }
}

TEST(FixedPoint, BoundStateVanishes) {
    const auto& s = ref();
    double prev = INFINITY;
    for (const auto& e : s.sweep.entries) {
        EXPECT_GT((s.sol.v.values + e.state.psi.values).minCoeff(), 0.0);
        EXPECT_LT(e.state.uSup, prev);
        prev = e.state.uSup;
        EXPECT_DOUBLE_EQ(e.state.uScale, std::pow(e.lambda, s.q.tau0()));
    }
}

TEST(FixedPoint, BallTest) {
    const auto& s = ref();
    FixedPointOptions opt;
    opt.radius = defaultRadius(s.q);
    EXPECT_NEAR(*opt.radius, 0.1 * std::sqrt(0.5), 1e-12);
    EXPECT_THROW(fixedPoint(s.tb, s.sol, s.pot, scalePotential(s.spec, 0.1, s.g), 0.1, s.norms, opt), LambdaTooLarge);
    EXPECT_NO_THROW(
        fixedPoint(s.tb, s.sol, s.pot, scalePotential(s.spec, 1e-7, s.g), 1e-7, s.norms, opt));
}

TEST(FixedPoint, RejectsModeOne) {
    const auto& s = ref();
    const auto tb1 = calibrate(s.q, 1, s.g);
    EXPECT_THROW(fixedPoint(tb1, s.sol, s.pot, scalePotential(s.spec, 0.1, s.g), 0.1, s.norms), ContractViolation);
}

TEST(LambdaSweep, RecordsFailures) {
    const auto& s = ref();
    const auto tab = lambdaSweep(s.tb, s.sol, s.pot, s.spec, {0.9, 0.05}, s.norms);
    ASSERT_EQ(tab.entries.size(), 2u);
    EXPECT_FALSE(tab.entries[0].ok);
    EXPECT_NE(tab.entries[0].error.find("smaller lambda"), std::string::npos);
    EXPECT_TRUE(tab.entries[1].ok);
    EXPECT_TRUE(std::isnan(tab.slope));
}

TEST(LambdaSweep, EmptyAndUnordered) {
    const auto& s = ref();
    const auto tab = lambdaSweep(s.tb, s.sol, s.pot, s.spec, {}, s.norms);
    EXPECT_TRUE(tab.entries.empty());
    EXPECT_TRUE(std::isnan(tab.slope));
    EXPECT_THROW(lambdaSweep(s.tb, s.sol, s.pot, s.spec, {0.05, 0.1}, s.norms), DomainError);
}
