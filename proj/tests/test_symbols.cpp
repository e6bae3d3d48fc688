#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "fracle/fl_oracle.hpp"
#include "fracle/indicial.hpp"
#include "fracle/symbol.hpp"

using namespace fracle;

namespace {
const ProblemParams kRef = ProblemParams::make(3, 0.5, 3.0);
}

TEST(LogGamma, SpecialValues) {
    EXPECT_NEAR(logGamma(0.5).logAbs, 0.5723649429247001, 1e-14);
    EXPECT_NEAR(logGamma(1.0).logAbs, 0.0, 1e-15);
    const SignedLog g = logGamma(-0.5);
    EXPECT_NEAR(g.logAbs, std::log(2.0 * std::sqrt(std::numbers::pi)), 1e-14);
    EXPECT_EQ(g.sign, -1);
}

TEST(LogGamma, MatchesBoostOnRealRange) {
    for (double x = 0.1; x <= 50.0; x += 0.37) {
        const double ref = boost::math::tgamma(x);
        EXPECT_NEAR(gammaFn(x) / ref, 1.0, 1e-13) << x;
    }
    for (double x : {-0.3, -1.7, -2.5, -7.1}) EXPECT_NEAR(gammaFn(x) / boost::math::tgamma(x), 1.0, 1e-13) << x;
}

TEST(LogGamma, ComplexModulusIdentity) {
    // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
    for (double y : {0.3, 1.0, 2.5, 7.0}) {
        const auto l = logGamma(std::complex<double>(0.5, y));
        EXPECT_NEAR(2.0 * l.real(), std::log(std::numbers::pi / std::cosh(std::numbers::pi * y)), 1e-12) << y;
    }
    // reflected branch: |Gamma(-1/2 + iy)|^2 = pi / ((1/4 + y^2) cosh(pi y))
    const double y = 0.8;
    const auto l = logGamma(std::complex<double>(-0.5, y));
    EXPECT_NEAR(2.0 * l.real(), std::log(std::numbers::pi / ((0.25 + y * y) * std::cosh(std::numbers::pi * y))), 1e-12);
}

TEST(LogGamma, PoleIsDomainError) {
    EXPECT_THROW(logGamma(0.0), DomainError);
    EXPECT_THROW(logGamma(-3.0), DomainError);
    EXPECT_THROW(logGamma(std::complex<double>(-2.0, 0.0)), DomainError);
}

TEST(Params, RejectsSubcriticalExponent) {
    EXPECT_THROW(ProblemParams::make(3, 0.5, 2.0), DomainError);
    EXPECT_THROW(ProblemParams::make(3, 1.5, 4.0), DomainError);
    EXPECT_THROW(ProblemParams::make(1, 0.5, 4.0), DomainError);
    try {
        ProblemParams::make(3, 0.5, 1.5);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("(n+2s)/(n-2s)"), std::string::npos);
    }
    EXPECT_NEAR(kRef.tau0(), 0.5, 0.0);
}

TEST(Symbol, ReferenceValues) {
    EXPECT_NEAR(symbol(kRef, 0, 0.5), 0.5, 1e-14);
    EXPECT_NEAR(symbol(kRef, 0, 1.0), 2.0 / std::numbers::pi, 1e-14);
    EXPECT_NEAR(symbol(kRef, 0, 1e-12), 0.0, 1e-10);
}

TEST(Symbol, SymmetricAboutCriticalPoint) {
    for (auto q : {kRef, ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(2, 0.3, 5.0)}) {
        const double gap = q.n - 2.0 * q.s;
        for (int i = 1; i < 20; ++i) {
            const double tau = gap * i / 20.0;
            const double a = symbol(q, 0, tau), b = symbol(q, 0, gap - tau);
            EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a)) << q.n << " " << tau;
        }
    }
}

TEST(Symbol, ModeOneTranslationIdentity) {
    for (auto q : {kRef, ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(5, 0.2, 3.0)}) {
        const double beta = symbol(q, 0, q.tau0());
        EXPECT_LE(std::abs(symbol(q, 1, q.tau0() + 1.0) - q.p * beta), 1e-10 * q.p * beta);
    }
}

TEST(Symbol, ZerosMatchRootsAtOrigin) {
    for (int m = 0; m <= 10; ++m) {
        const IndicialReport r = indicialRoots(kRef, computeConstants(kRef), m);
        EXPECT_EQ(symbol(kRef, m, -r.rootsAtZero.b), 0.0) << m;
        EXPECT_EQ(symbol(kRef, m, -r.rootsAtZero.a), 0.0) << m;
    }
}

TEST(Symbol, PoleProximityIsConditioningError) {
    // (n+m-tau)/2 = 0 at tau = 3
    EXPECT_THROW(symbol(kRef, 0, 3.0 + 1e-10), ConditioningError);
    EXPECT_NO_THROW(symbol(kRef, 0, 2.9));
}

TEST(Symbol, AgreesWithQuadratureOracle) {
    struct Sample {
        ProblemParams q;
        int m;
        double tau;
    };
    const Sample samples[] = {{kRef, 0, 0.5},  {kRef, 0, 1.0},  {kRef, 0, 1.7},
                              {kRef, 1, 1.5},  {kRef, 1, 0.8},  {kRef, 2, 1.2},
                              {ProblemParams::make(4, 0.75, 4.0), 1, 1.0},
                              {ProblemParams::make(2, 0.3, 4.0), 2, 0.6}};
    for (const auto& x : samples) {
        const double a = flOracle(x.q, x.m, x.tau), b = symbol(x.q, x.m, x.tau);
        EXPECT_LE(std::abs(a - b), 1e-6 * std::abs(b)) << x.q.n << " m=" << x.m << " tau=" << x.tau;
    }
}

TEST(Oracle, HomogeneityInRadius) {
    EXPECT_NEAR(flOracle(kRef, 0, 0.5, 3.0), 0.5, 1e-9);
    EXPECT_THROW(flOracle(kRef, 0, 2.5), DomainError);
}

TEST(Constants, ReferenceSet) {
    const SpectralConstants c = computeConstants(kRef);
    EXPECT_NEAR(c.beta, 0.5, 1e-12);
    EXPECT_NEAR(c.ds, -1.0, 1e-12);
    EXPECT_NEAR(c.hardy, 2.0 / std::numbers::pi, 1e-10);
    EXPECT_FALSE(c.stable);
    EXPECT_FALSE(c.pJL.has_value());
    EXPECT_NEAR(c.flNorm, 1.0 / (std::numbers::pi * std::numbers::pi), 1e-15);
}

TEST(Constants, HamiltonianConstantNegative) {
    for (double s = 0.05; s < 1.0; s += 0.05) EXPECT_LT(hamiltonianConstant(s), 0.0) << s;
}

TEST(Constants, JosephLundgrenThresholdSeparatesStability) {
    const auto pjl = josephLundgrenExponent(11, 0.5);
    ASSERT_TRUE(pjl.has_value());
    const auto below = computeConstants(ProblemParams::make(11, 0.5, 0.5 * (*pjl + 1.2)));
    const auto above = computeConstants(ProblemParams::make(11, 0.5, *pjl * 1.1));
    EXPECT_FALSE(below.stable);
    EXPECT_TRUE(above.stable);
    const ProblemParams at{11, 0.5, *pjl};
    EXPECT_NEAR(at.p * symbol(at, 0, at.tau0()), above.hardy, 1e-9);
}

TEST(Constants, PureFunction) {
    const auto a = computeConstants(kRef), b = computeConstants(kRef);
    EXPECT_EQ(a.beta, b.beta);
    EXPECT_EQ(a.hardy, b.hardy);
    EXPECT_EQ(a.ds, b.ds);
}

TEST(Indicial, RootsAtOrigin) {
    const auto c = computeConstants(kRef);
    const auto r0 = indicialRoots(kRef, c, 0);
    EXPECT_EQ(r0.rootsAtZero.b, 0.0);
    EXPECT_NEAR(r0.rootsAtZero.a, -2.0, 1e-15);
    const auto r1 = indicialRoots(kRef, c, 1);
    EXPECT_EQ(r1.rootsAtZero.b, 1.0);
    EXPECT_NEAR(r1.rootsAtZero.a, -3.0, 1e-15);
    EXPECT_EQ(r1.eigenvalue, 2.0);
    for (int m = 1; m <= 10; ++m)
        EXPECT_GT(indicialRoots(kRef, c, m).rootsAtZero.b, indicialRoots(kRef, c, m - 1).rootsAtZero.b);
}

TEST(Indicial, ModeOneAtInfinity) {
    for (auto q : {kRef, ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(3, 0.5, 2.5)}) {
        const auto r = indicialRoots(q, computeConstants(q), 1);
        ASSERT_FALSE(r.rootsAtInfinity.complex);
        const double a = -q.tau0() - 1.0, b = -(q.n - 2.0 * q.s) + q.tau0() + 1.0;
        EXPECT_NEAR(std::min(r.rootsAtInfinity.a, r.rootsAtInfinity.b), std::min(a, b), 1e-10);
        EXPECT_NEAR(std::max(r.rootsAtInfinity.a, r.rootsAtInfinity.b), std::max(a, b), 1e-10);
    }
}

TEST(Indicial, UnstableModeZeroIsComplex) {
    const auto c = computeConstants(kRef);
    const auto r = indicialRoots(kRef, c, 0);
    ASSERT_TRUE(r.rootsAtInfinity.complex);
    EXPECT_EQ(r.rootsAtInfinity.a, -1.0);
    // Lambda_0(1 + iy) = y coth(pi y / 2) for (3, 1/2)
    const double y = r.rootsAtInfinity.b;
    EXPECT_NEAR(y / std::tanh(0.5 * std::numbers::pi * y), 1.5, 1e-12);
    const auto v = symbol(kRef, 0, std::complex<double>(1.0, y));
    EXPECT_NEAR(v.imag(), 0.0, 1e-12);
}

TEST(Indicial, StableModeZeroIsReal) {
    const auto q = ProblemParams::make(11, 0.5, 3.0);
    const auto c = computeConstants(q);
    ASSERT_TRUE(c.stable);
    const auto r = indicialRoots(q, c, 0);
    EXPECT_FALSE(r.rootsAtInfinity.complex);
    EXPECT_NEAR(symbol(q, 0, -r.rootsAtInfinity.a), q.p * c.beta, 1e-10);
    EXPECT_NEAR(symbol(q, 0, -r.rootsAtInfinity.b), q.p * c.beta, 1e-10);
    EXPECT_EQ(admissibleLeftRates(q, r).size(), 2u);
}
