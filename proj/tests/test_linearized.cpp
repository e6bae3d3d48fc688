#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "fracle/linearized/linearized.hpp"

using namespace fracle;

namespace {

struct Setup {
    ProblemParams q;
    CylinderGrid g;
    KernelTable tb0, tb1;
    EntireSolution sol;
    PotentialProfile pot;
    KernelResidualReport kr;
};

const Setup& setup(double p, double h) {
    static std::map<std::pair<double, double>, Setup> cache;
    const auto key = std::make_pair(p, h);
    auto it = cache.find(key);
    if (it == cache.end()) {
        Setup s;
        s.q = ProblemParams::make(3, 0.5, p);
        s.g = CylinderGrid::make(20.0, h);
        s.tb0 = calibrate(s.q, 0, s.g);
        s.tb1 = calibrate(s.q, 1, s.g);
        s.sol = solveEntire(s.q, s.tb0, sigmoidGuess(s.q, s.g));
        s.pot = buildPotential(s.sol);
        s.kr = kernelResiduals(s.tb0, s.tb1, s.pot, s.sol);
        it = cache.emplace(key, std::move(s)).first;
    }
    return it->second;
}

const Setup& ref(double h = 0.05) { return setup(3.0, h); }

std::vector<Eigen::VectorXd> testLoads(const Setup& s) {
    return {cylinderLoad(s.q, s.g, [](double r) { return std::exp(-r * r); }),
            cylinderLoad(s.q, s.g, [](double r) { return std::pow(1 + r * r, -1.5); }),
            cylinderLoad(s.q, s.g, [](double r) { return r * r * std::pow(1 + r * r, -2.5); })};
}

} // namespace

TEST(Potential, LimitsAndPositivity) {
    const auto& s = ref();
    const auto c = computeConstants(s.q);
    EXPECT_NEAR(s.pot.V.left->limit, s.q.p * c.beta, 1e-6);
    EXPECT_NEAR(s.pot.fittedDecay / (2 * s.q.s), 1.0, 0.05);
    EXPECT_GT(s.pot.V.values.minCoeff(), 0.0);
    EXPECT_NO_THROW(s.pot.V.checkTails());
}

TEST(Potential, ExponentIdentity) {
    for (double p : {2.2, 3.0, 5.5, 40.0}) {
        const auto q = ProblemParams::make(3, 0.5, p);
        EXPECT_NEAR((q.p - 1) * q.tau0(), 2 * q.s, 1e-15);
    }
}

TEST(WeightedNorms, DefaultsAndValidation) {
    const auto q = ProblemParams::make(3, 0.5, 3.0);
    EXPECT_NEAR(WeightedNorms::make(q).sigma, 0.45 * 0.5, 1e-15);
    EXPECT_THROW(WeightedNorms::make(q, 0.0), DomainError);
    EXPECT_THROW(WeightedNorms::make(q, 0.6), DomainError);
}

TEST(WeightedNorms, NormAxioms) {
    const auto q = ProblemParams::make(3, 0.5, 3.0);
    const auto nm = WeightedNorms::make(q);
    const auto g = CylinderGrid::make(4.0, 0.1);
    std::mt19937 rng(7);
    std::normal_distribution<double> N01;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd a(g.size()), b(g.size());
        std::vector<double> r(g.size()), fa(g.size()), fb(g.size()), fs(g.size());
        for (int i = 0; i < g.size(); ++i) {
            a[i] = N01(rng), b[i] = N01(rng);
            r[i] = std::exp(-g.node(i));
            fa[i] = a[i], fb[i] = b[i], fs[i] = a[i] + b[i];
        }
        const GridFunction A(g, a), B(g, b), S(g, a + b), M(g, -2.5 * a);
        EXPECT_LE(nm.star(S), nm.star(A) + nm.star(B) + 1e-12);
        EXPECT_NEAR(nm.star(M), 2.5 * nm.star(A), 1e-12 * nm.star(A));
        EXPECT_LE(nm.starStarPhysical(r, fs), nm.starStarPhysical(r, fa) + nm.starStarPhysical(r, fb) + 1e-12);
        std::vector<double> fm(fa);
        for (double& x : fm) x *= -2.5;
        EXPECT_NEAR(nm.starPhysical(r, fm), 2.5 * nm.starPhysical(r, fa), 1e-12 * nm.starPhysical(r, fa));
    }
    EXPECT_EQ(nm.star(GridFunction(g, Eigen::VectorXd::Zero(g.size()))), 0.0);
}

TEST(WeightedNorms, CylinderMatchesPhysical) {
    const auto q = ProblemParams::make(3, 0.5, 3.0);
    const auto nm = WeightedNorms::make(q);
    const auto g = CylinderGrid::make(6.0, 0.05);
    Eigen::VectorXd psi(g.size());
    std::vector<double> r(g.size()), phi(g.size());
    for (int i = 0; i < g.size(); ++i) {
        r[i] = std::exp(-g.node(i));
        phi[i] = 1.0 / (1.0 + r[i] * r[i]) + 0.3 * std::sin(3 * r[i]);
        psi[i] = std::pow(r[i], q.tau0()) * phi[i];
    }
    EXPECT_NEAR(nm.star(GridFunction(g, psi)), nm.starPhysical(r, phi), 1e-12);
}

TEST(KernelResiduals, ScalingAndTranslationKernels) {
    const auto& fine = ref(0.05);
    const auto& coarse = ref(0.1);
    EXPECT_LE(fine.kr.z0Residual, 1e-4);
    EXPECT_LE(fine.kr.w1Residual, 1e-4);
    EXPECT_LT(fine.kr.z0Residual, coarse.kr.z0Residual);
    EXPECT_LT(fine.kr.w1Residual, coarse.kr.w1Residual);
    EXPECT_GT(fine.kr.z0Scale, 0.1);
    EXPECT_GT(fine.kr.w1Scale, 0.1);
}

TEST(KernelResiduals, KernelsAreNotResidualsOfArbitraryFunctions) {
    // control: v itself is not in the linearized kernel
    const auto& s = ref();
    const Eigen::VectorXd r = applyLinearized(s.tb0, s.pot, s.sol.v);
    EXPECT_GT(r.cwiseAbs().maxCoeff(), 0.1);
}

TEST(DecayFit, ScalingKernel) {
    const auto& s = ref();
    const auto nm = WeightedNorms::make(s.q);
    const auto d = decayFit(s.q, 0, s.kr.z0, nm);
    // toward the origin z0 -> tau0 w(0), so the cylinder rate is tau0
    EXPECT_NEAR(d.rightRate / s.q.tau0(), 1.0, 0.1);
    // at infinity the r^{-tau0} parts cancel and the oscillatory mode remains
    EXPECT_NEAR(d.physicalExponent / (-0.5 * (s.q.n - 2 * s.q.s)), 1.0, 0.1);
    EXPECT_GT(d.left.freq, 0.0);
}

TEST(DecayFit, TranslationKernelMatchesModeOneRoot) {
    const auto& s = ref();
    const auto nm = WeightedNorms::make(s.q);
    const auto d = decayFit(s.q, 1, s.kr.w1, nm);
    EXPECT_NEAR(d.expectedExponent, -s.q.tau0() - 1.0, 1e-10);
    EXPECT_NEAR(d.physicalExponent / d.expectedExponent, 1.0, 0.1);
    EXPECT_NEAR(d.rightRate / d.expectedRightRate, 1.0, 0.1);
}

TEST(SolveLinearized, ModeZeroLoads) {
    const auto& s = ref();
    const auto nm = WeightedNorms::make(s.q);
    for (const auto& h : testLoads(s)) {
        const auto sol = solveLinearized(s.tb0, s.pot, h, nm);
        EXPECT_LE(sol.residual, 1e-9);
        EXPECT_GT(sol.cEstimate, 0.0);
        EXPECT_NO_THROW(sol.psi.checkTails());
        const auto d = decayFit(s.q, 0, sol.psi, nm);
        EXPECT_NEAR(d.physicalExponent / -1.0, 1.0, 0.1);
        EXPECT_LE(d.interiorWeighted, sol.starNorm);
    }
}

TEST(SolveLinearized, ConstantStableUnderRefinementAndBoundedAcrossLoads) {
    const auto& fine = ref(0.05);
    const auto& coarse = ref(0.1);
    const auto nm = WeightedNorms::make(fine.q);
    const auto lf = testLoads(fine), lc = testLoads(coarse);
    double lo = 1e300, hi = 0;
    for (std::size_t k = 0; k < lf.size(); ++k) {
        const double cf = solveLinearized(fine.tb0, fine.pot, lf[k], nm).cEstimate;
        const double cc = solveLinearized(coarse.tb0, coarse.pot, lc[k], nm).cEstimate;
        EXPECT_NEAR(cf / cc, 1.0, 0.2) << k;
        lo = std::min(lo, cf), hi = std::max(hi, cf);
    }
    EXPECT_LE(hi / lo, 2.0);
}

TEST(SolveLinearized, RoundTripModuloScalingKernel) {
    const auto& s = ref();
    const auto nm = WeightedNorms::make(s.q);
    const auto mt = decayingTails(s.q, 0);
    Eigen::VectorXd b(s.g.size());
    for (int i = 0; i < s.g.size(); ++i) b[i] = std::exp(-std::pow(s.g.node(i), 2));
    const GridFunction bump(s.g, b, Tail{0.0, mt.left, {b[0], 0.0}}, Tail{0.0, mt.right, {b[s.g.last()]}});
    const auto sol = solveLinearized(s.tb0, s.pot, applyLinearized(s.tb0, s.pot, bump), nm);
    const Eigen::VectorXd d = sol.psi.values - b;
    const auto& z = s.kr.z0.values;
    const Eigen::VectorXd rem = d - (d.dot(z) / z.squaredNorm()) * z;
    EXPECT_LE(rem.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SolveLinearized, ModeOneNeedsOrthogonalityBelowThreshold) {
    for (double p : {2.5, 3.0}) {
        const auto& s = setup(p, 0.05);
        ASSERT_LE(p, orthogonalityThreshold(s.q));
        const auto nm = WeightedNorms::make(s.q);
        const Eigen::VectorXd aligned = s.pot.V.values.cwiseProduct(s.kr.w1.values);
        EXPECT_THROW(solveLinearized(s.tb1, s.pot, aligned, nm, &s.kr.w1), SolvabilityError) << p;

        LinearizedOptions opt;
        opt.projectKernel = true;
        const auto pr = solveLinearized(s.tb1, s.pot, aligned, nm, &s.kr.w1, opt);
        EXPECT_GT(std::abs(pr.projected), 1e-3);

        const auto loads = testLoads(s);
        const Eigen::VectorXd w = s.kr.w1.values;
        const double e = s.q.n - 2 * s.q.tau0() - 2 * s.q.s;
        auto ip = [&](const Eigen::VectorXd& a) {
            double acc = 0;
            for (int i = 0; i < s.g.size(); ++i)
                acc += (i == 0 || i == s.g.last() ? 0.5 : 1.0) * std::exp(-e * s.g.node(i)) * a[i] * w[i];
            return acc;
        };
        const Eigen::VectorXd h = loads[0] - (ip(loads[0]) / ip(loads[2])) * loads[2];
        ASSERT_LE(orthogonalityRatio(s.q, h, s.kr.w1), 1e-10);
        const auto sol = solveLinearized(s.tb1, s.pot, h, nm, &s.kr.w1);
        EXPECT_LE(sol.residual, 1e-9);
        EXPECT_LE(std::abs(sol.projected), 1e-5 * h.cwiseAbs().maxCoeff());
    }
}

TEST(SolveLinearized, ModeOneAboveThresholdNeedsNoOrthogonality) {
    const auto& s = setup(4.0, 0.05);
    ASSERT_GT(s.q.p, orthogonalityThreshold(s.q));
    const auto nm = WeightedNorms::make(s.q);
    const Eigen::VectorXd aligned = s.pot.V.values.cwiseProduct(s.kr.w1.values);
    const auto sol = solveLinearized(s.tb1, s.pot, aligned, nm, &s.kr.w1);
    EXPECT_LE(sol.residual, 1e-9);
}

TEST(SolveLinearized, ModeZeroNonDegenerateUnderRefinement) {
    const auto nmf = WeightedNorms::make(ref(0.05).q);
    const auto& f = ref(0.05);
    const auto& c = ref(0.1);
    const double sf = solveLinearized(f.tb0, f.pot, testLoads(f)[0], nmf).smallestSingular;
    const double sc = solveLinearized(c.tb0, c.pot, testLoads(c)[0], nmf).smallestSingular;
    EXPECT_GT(sf, 1e-4);
    EXPECT_GT(sf / sc, 0.5);
}
