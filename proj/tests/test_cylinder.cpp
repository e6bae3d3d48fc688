#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <map>
#include <numbers>

#include "fracle/cylinder/operator.hpp"

using namespace fracle;

namespace {

const ProblemParams kRef = ProblemParams::make(3, 0.5, 3.0);

const KernelTable& refTable(int m, double h = 0.05) {
    static std::map<std::pair<int, double>, KernelTable> cache;
    auto key = std::make_pair(m, h);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, calibrate(kRef, m, CylinderGrid::make(20.0, h))).first;
    return it->second;
}

GridFunction exponential(const CylinderGrid& g, double a) {
    Eigen::VectorXd v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = std::exp(a * g.node(i));
    Tail L{0.0, {TailTerm{a, 0.0, false}}, {std::exp(-a * g.T)}};
    Tail R{0.0, {TailTerm{-a, 0.0, false}}, {std::exp(a * g.T)}};
    return GridFunction(g, v, L, R);
}

// Adaptive reference for the angular integral, split dyadically in the angle.
double referenceEven(const ProblemParams& q, int m, double ell) {
    const double nu = 0.5 * (q.n + 2.0 * q.s);
    const ZonalPolynomial G(q.n, m);
    const double sh2 = std::pow(std::sinh(0.5 * ell), 2);
    auto f = [&](double th) {
        const double u = std::pow(std::sin(0.5 * th), 2);
        return std::pow(std::sin(th), q.n - 2.0) * G(u) * std::pow(2.0 * sh2 + 2.0 * u, -nu);
    };
    double total = 0.0, a = 0.0, b = std::min(ell, std::numbers::pi);
    while (true) {
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-14);
        if (b >= std::numbers::pi) break;
        a = b;
        b = std::min(2.0 * b, std::numbers::pi);
    }
    return total;
}

} // namespace

TEST(CylinderGrid, Validation) {
    EXPECT_NO_THROW(CylinderGrid::make(20.0, 0.05));
    EXPECT_EQ(CylinderGrid::make(20.0, 0.05).size(), 801);
    EXPECT_THROW(CylinderGrid::make(20.0, 0.07), DomainError);
    EXPECT_THROW(CylinderGrid::make(1.0, 0.05), DomainError);
    EXPECT_THROW(CylinderGrid::make(-1.0, 0.05), DomainError);
}

TEST(Kernel, PositiveOnSampledLags) {
    const AngularKernel K(kRef, 0);
    for (double t = -30.0; t <= 30.0; t += 0.173) EXPECT_GT(K(t), 0.0) << t;
    EXPECT_THROW(kernelEval(kRef, 0, 1e-13), DomainError);
}

TEST(Kernel, MatchesAdaptiveQuadrature) {
    for (auto q : {kRef, ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(2, 0.3, 4.0)})
        for (int m : {0, 1, 2}) {
            const AngularKernel K(q, m);
            for (double l : {1e-4, 1e-2, 0.3, 1.0, 2.8, 3.0, 5.0}) {
                const double ref = referenceEven(q, m, l);
                EXPECT_NEAR(K.even(l) / ref, 1.0, 1e-11) << q.n << " m=" << m << " l=" << l;
            }
        }
}

TEST(Kernel, ClosedFormForReferenceSet) {
    // n = 3, s = 1/2: E_0(l) = 2 / sinh^2 l
    const AngularKernel K(kRef, 0);
    for (double l : {1e-3, 0.2, 1.5, 4.0, 9.0}) EXPECT_NEAR(K.even(l) * std::pow(std::sinh(l), 2) / 2.0, 1.0, 1e-12) << l;
}

TEST(Kernel, FarLagLogSlopes) {
    for (int m : {0, 1}) {
        const AngularKernel K(kRef, m);
        const double right = (std::log(K(30.5)) - std::log(K(29.5)));
        const double left = (std::log(K(-29.5)) - std::log(K(-30.5)));
        EXPECT_NEAR(right, -(2.0 * kRef.s + kRef.tau0() + m), 1e-6) << m;
        EXPECT_NEAR(left, kRef.n - kRef.tau0() + m, 1e-6) << m;
    }
}

TEST(Kernel, NearOriginExponent) {
    for (auto q : {kRef, ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(5, 0.2, 3.0)}) {
        const AngularKernel K(q, 0);
        // least squares slope of log K against log t on [1e-4, 1e-2]
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int M = 21;
        for (int i = 0; i < M; ++i) {
            const double t = std::pow(10.0, -4.0 + 2.0 * i / (M - 1));
            const double x = std::log(t), y = std::log(K(t));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        const double slope = (M * sxy - sx * sy) / (M * sxx - sx * sx);
        EXPECT_NEAR(slope / -(1.0 + 2.0 * q.s), 1.0, 0.02) << q.n;
        EXPECT_NEAR(K.even(1e-5) * std::pow(1e-5, 1.0 + 2.0 * q.s) / K.nearStrength(), 1.0, 1e-4);
    }
}

TEST(Kernel, TiltedKernelIsEven) {
    for (int m : {0, 1, 2}) {
        const AngularKernel K(kRef, m);
        const double a = kRef.halfGap() - kRef.tau0();
        for (double t : {0.01, 0.5, 2.0, 7.0, 15.0}) {
            const double p = K(t) * std::exp(-a * t), n = K(-t) * std::exp(a * t);
            EXPECT_LE(std::abs(p - n), 1e-10 * std::abs(p)) << t;
        }
    }
}

TEST(Calibration, ConstantMatchesAnalyticValue) {
    for (int m : {0, 1, 2}) {
        const KernelTable& t = refTable(m);
        EXPECT_NEAR(t.c / t.cAnalytic, 1.0, 1e-4) << m;
        EXPECT_EQ(t.betaM, symbol(kRef, m, kRef.tau0()));
    }
    EXPECT_NEAR(refTable(0).betaM, 0.5, 1e-14);
}

TEST(Calibration, ValidationExponentsWithinTolerance) {
    for (int m : {0, 1, 2}) {
        const KernelTable& t = refTable(m);
        ASSERT_GE(t.validation.size(), 5u);
        for (auto [a, e] : t.validation) EXPECT_LE(e, 1e-5) << "m=" << m << " alpha=" << a;
    }
    EXPECT_NEAR(refTable(0).discreteSymbol(-0.25) / symbol(kRef, 0, 0.25), 1.0, 1e-6);
    EXPECT_NEAR(refTable(1).discreteSymbol(0.0) / symbol(kRef, 1, kRef.tau0()), 1.0, 1e-6);
}

TEST(Calibration, ErrorDecreasesUnderRefinement) {
    for (int m : {0, 1}) {
        const KernelTable& coarse = refTable(m, 0.05);
        const KernelTable& fine = refTable(m, 0.025);
        double ec = 0, ef = 0;
        for (std::size_t k = 0; k < coarse.validation.size(); ++k) {
            ec = std::max(ec, coarse.validation[k].second);
            ef = std::max(ef, fine.validation[k].second);
        }
        EXPECT_LT(ef, ec) << m;
        EXPECT_GE(std::log2(ec / ef), 1.0) << m;
    }
}

TEST(Calibration, OtherParameterSets) {
    for (auto q : {ProblemParams::make(4, 0.75, 4.0), ProblemParams::make(2, 0.3, 4.0), ProblemParams::make(1, 0.25, 5.0)})
        for (int m : {0, 1}) EXPECT_NO_THROW(calibrate(q, m, CylinderGrid::make(20.0, 0.05))) << q.n << " " << m;
}

TEST(Calibration, TooCoarseGridReportsResiduals) {
    try {
        calibrate(ProblemParams::make(4, 0.75, 4.0), 2, CylinderGrid::make(20.0, 0.1));
        FAIL() << "expected a calibration error";
    } catch (const CalibrationError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha="), std::string::npos);
    }
}

TEST(Operator, ConstantGivesBeta) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    for (int m : {0, 1}) {
        const KernelTable& t = refTable(m);
        GridFunction u(g, Eigen::VectorXd::Constant(g.size(), 2.5), Tail{2.5, {}, {}}, Tail{2.5, {}, {}});
        const GridFunction Pu = applyOperator(t, u);
        EXPECT_LE((Pu.values.array() - 2.5 * t.betaM).abs().maxCoeff(), 1e-12) << m;
    }
}

TEST(Operator, SingularSolutionResidual) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    const double L = std::sqrt(0.5);
    GridFunction u(g, Eigen::VectorXd::Constant(g.size(), L), Tail{L, {}, {}}, Tail{L, {}, {}});
    const GridFunction Pu = applyOperator(refTable(0), u);
    EXPECT_LE((Pu.values.array() - std::pow(L, 3.0)).abs().maxCoeff(), 1e-8);
}

TEST(Operator, ExponentialsReproduceSymbol) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    for (int m : {0, 1})
        for (double a : validationExponents(kRef, m)) {
            const GridFunction u = exponential(g, a);
            const GridFunction Pu = applyOperator(refTable(m), u);
            const double sy = symbol(kRef, m, kRef.tau0() + a);
            double worst = 0;
            for (int i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(Pu.values[i] / u.values[i] - sy) / sy);
            EXPECT_LE(worst, 1e-5) << "m=" << m << " alpha=" << a;
            if (m == 0) EXPECT_LE(worst, 1e-6) << a;
        }
}

TEST(Operator, Linearity) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    const GridFunction u = exponential(g, 0.3), w = exponential(g, -0.2);
    const double A = 1.7, B = -0.4;
    // combined function needs both tail shapes
    Tail L{0.0, {u.left->terms[0], w.left->terms[0]}, {A * u.left->amps[0], B * w.left->amps[0]}};
    Tail R{0.0, {u.right->terms[0], w.right->terms[0]}, {A * u.right->amps[0], B * w.right->amps[0]}};
    const GridFunction sum(g, A * u.values + B * w.values, L, R);
    const Eigen::VectorXd lhs = applyOperator(refTable(0), sum).values;
    const Eigen::VectorXd rhs = A * applyOperator(refTable(0), u).values + B * applyOperator(refTable(0), w).values;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST(Operator, TailContracts) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    GridFunction u(g, Eigen::VectorXd::Constant(g.size(), 1.0));
    EXPECT_THROW(applyOperator(refTable(0), u), ContractViolation);
    GridFunction bad(g, Eigen::VectorXd::Constant(g.size(), 1.0), Tail{0.5, {}, {}}, Tail{1.0, {}, {}});
    EXPECT_THROW(applyOperator(refTable(0), bad), ContractViolation);
}

TEST(Operator, IndependentOfThreadCount) {
    const CylinderGrid g = CylinderGrid::make(20.0, 0.05);
    const GridFunction u = exponential(g, 0.4);
    threadCount() = 1;
    const Eigen::VectorXd a = applyOperator(refTable(0), u).values;
    threadCount() = 3;
    const Eigen::VectorXd b = applyOperator(refTable(0), u).values;
    threadCount() = 1;
    EXPECT_TRUE((a.array() == b.array()).all());
}
