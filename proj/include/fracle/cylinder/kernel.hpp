#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "fracle/cylinder/grid.hpp"
#include "fracle/gegenbauer.hpp"
#include "fracle/parallel.hpp"
#include "fracle/quadrature.hpp"
#include "fracle/symbol.hpp"

namespace fracle {

// Mode-m cylinder kernel e^{a l} E_m(l) without its constant factor, where
// E_m(l) = int_0^pi sin^{n-2}(th) G_m(cos th) / (cosh l - cos th)^{(n+2s)/2} dth.
class AngularKernel {
public:
    AngularKernel(const ProblemParams& q, int m, int nodes = 48)
        : n_(q.n), m_(m), nu_(0.5 * (q.n + 2.0 * q.s)), tilt_(q.halfGap() - q.tau0()),
          alpha_(0.5 * (q.n - 3.0)), zonal_(std::max(q.n, 2), m) {
        if (m < 0) throw DomainError("AngularKernel: mode must be >= 0");
        if (n_ == 1 && m > 1) throw DomainError("AngularKernel: n = 1 has modes 0 and 1 only");
        if (n_ >= 2) {
            rule_ = gaussJacobi(nodes, alpha_, alpha_);
            buildMoments();
        }
        const double s = q.s;
        e0_ = n_ == 1 ? std::pow(2.0, nu_)
                      : std::pow(2.0, nu_ - 1.0) * gammaFn(0.5 * (n_ - 1.0)) * gammaFn(0.5 + s) / gammaFn(nu_);
    }

    double tilt() const { return tilt_; }
    // E_m(l) ~ nearStrength |l|^{-1-2s} as l -> 0
    double nearStrength() const { return e0_; }

    double even(double ell) const {
        ell = std::abs(ell);
        const double sh = std::sinh(0.5 * ell);
        const double eps = sh * sh;
        if (n_ == 1) {
            const double a = std::pow(2.0 * eps, -nu_);
            if (m_ == 0) return a + std::pow(2.0 * (1.0 + eps), -nu_);
            return -a * std::expm1(-nu_ * std::log1p(1.0 / eps));
        }
        const double pre = std::pow(2.0, n_ - 2.0 - nu_);
        if (eps > kSeriesFrom) {
            // (u + eps)^{-nu} expanded in u/eps; moments below degree m vanish
            double sum = 0.0, coef = 1.0, inv = 1.0 / eps;
            double pw = 1.0;
            for (int k = 0; k < int(moments_.size()); ++k) {
                if (k >= m_) sum += coef * pw * moments_[k];
                coef *= -(nu_ + k) / (k + 1.0);
                pw *= inv;
            }
            return pre * std::pow(eps, -nu_) * sum;
        }
        return pre * clusteredIntegral(rule_, alpha_, eps, [&](double u, double upe, double) {
                   return zonal_(u) * std::pow(upe, -nu_);
               });
    }

    double operator()(double ell) const { return std::exp(tilt_ * ell) * even(ell); }

private:
    static constexpr double kSeriesFrom = 4.0;

    void buildMoments() {
        const QuadratureRule r = gaussJacobi(64, alpha_, alpha_);
        const int K = 70;
        moments_.assign(K, 0.0);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const double u = 0.5 * (1.0 + r.x[i]);
            double pw = r.w[i] * zonal_(u) * std::pow(0.5, 2.0 * alpha_ + 1.0);
            for (int k = 0; k < K; ++k) {
                moments_[k] += pw;
                pw *= u;
            }
        }
    }

    int n_, m_;
    double nu_, tilt_, alpha_, e0_ = 0;
    ZonalPolynomial zonal_;
    QuadratureRule rule_;
    std::vector<double> moments_;
};

inline double kernelEval(const ProblemParams& q, int m, double ell) {
    if (std::abs(ell) < 1e-12) throw DomainError("kernelEval: lag too close to the singular point 0");
    return AngularKernel(q, m)(ell);
}

struct KernelTable {
    ProblemParams params;
    int mode = 0;
    double h = 0;
    double c = 0;          // calibrated constant
    double cAnalytic = 0;  // C_{n,s} |S^{n-2}| 2^{-(n+2s)/2}
    double betaM = 0;
    double tilt = 0;
    double nearStrength = 0;
    double zeta = 0;       // zeta(2s - 1)
    int kLeft = 0, kRight = 0;
    std::vector<double> values; // kernel at lag k h, k = -kLeft..kRight (k = 0 unused)
    double decayRight = 0, decayLeft = 0;
    double ampRight = 0, ampLeft = 0;
    double calibrationAlpha = 0;
    std::vector<std::pair<double, double>> validation; // (alpha, relative error)

    double kernelAt(int k) const { return values[k + kLeft]; }
    double weight(int k) const { return h * kernelAt(k); } // without c
    // diagonal correction coefficient without c
    double correction() const { return -zeta * nearStrength * std::pow(h, 2.0 - 2.0 * params.s); }

    // sum_{k > kRight} e^{-x k h}
    double rightGeometric(double x) const { return std::exp(-x * (kRight + 1) * h) / -std::expm1(-x * h); }
    double leftGeometric(double x) const { return std::exp(-x * (kLeft + 1) * h) / -std::expm1(-x * h); }

    // Total lattice weight sum_{k != 0} w_k including analytic remainders (without c).
    double totalWeight() const {
        double W = 0.0;
        for (int k = -kLeft; k <= kRight; ++k)
            if (k != 0) W += weight(k);
        return W + h * (ampRight * rightGeometric(decayRight) + ampLeft * leftGeometric(decayLeft));
    }

    // Discrete operator on e^{alpha t}, divided by e^{alpha t}, without c and beta_m.
    double latticeSymbol(double alpha) const {
        double S = 0.0;
        for (int k = -kLeft; k <= kRight; ++k)
            if (k != 0) S += weight(k) * -std::expm1(-alpha * k * h);
        S += h * ampRight * (rightGeometric(decayRight) - rightGeometric(decayRight + alpha));
        S += h * ampLeft * (leftGeometric(decayLeft) - leftGeometric(decayLeft - alpha));
        const double e1 = std::exp(alpha * h), e2 = std::exp(2.0 * alpha * h);
        const double d1 = (-e2 + 8.0 * e1 - 8.0 / e1 + 1.0 / e2) / (12.0 * h);
        const double d2 = (-e2 + 16.0 * e1 - 30.0 + 16.0 / e1 - 1.0 / e2) / (12.0 * h * h);
        return S + correction() * (2.0 * tilt * d1 - d2);
    }

    double discreteSymbol(double alpha) const { return c * latticeSymbol(alpha) + betaM; }
};

struct CalibrationOptions {
    double tolerance = 1e-5;
    double tailPad = 40.0; // kernel tabulated until e^{-tailPad} beyond the window
};

// Exponent interval on which Lambda_m(tau0 + alpha) is finite and positive.
inline std::pair<double, double> symbolExponentRange(const ProblemParams& q, int m) {
    return {-(q.tau0() + m), q.n - 2.0 * q.s + m - q.tau0()};
}

inline std::vector<double> validationExponents(const ProblemParams& q, int m) {
    const auto [lo, hi] = symbolExponentRange(q, m);
    const double w = hi - lo;
    std::vector<double> a = {lo + 0.15 * w, lo + 0.35 * w, lo + 0.65 * w, lo + 0.85 * w};
    a.push_back(m == 0 ? -0.5 * q.tau0() : lo + 0.6 * w);
    return a;
}

inline KernelTable calibrate(const ProblemParams& q, int m, const CylinderGrid& grid,
                             const CalibrationOptions& opt = {}) {
    q.validate();
    const AngularKernel K(q, m);
    KernelTable t;
    t.params = q;
    t.mode = m;
    t.h = grid.h;
    t.tilt = K.tilt();
    t.nearStrength = K.nearStrength();
    t.zeta = std::riemann_zeta(2.0 * q.s - 1.0);
    t.betaM = symbol(q, m, q.tau0());
    t.decayRight = 2.0 * q.s + q.tau0() + m;
    t.decayLeft = q.n - q.tau0() + m;
    t.cAnalytic = fractionalLaplacianNorm(q.n, q.s) * (q.n == 1 ? 1.0 : sphereArea(q.n - 1)) *
                  std::pow(2.0, -0.5 * (q.n + 2.0 * q.s));
    t.kRight = int(std::ceil((2.0 * grid.T + opt.tailPad / t.decayRight) / grid.h));
    t.kLeft = int(std::ceil((2.0 * grid.T + opt.tailPad / t.decayLeft) / grid.h));
    t.values.assign(t.kLeft + t.kRight + 1, 0.0);
    parallelFor(int(t.values.size()), [&](int idx) {
        const int k = idx - t.kLeft;
        if (k != 0) t.values[idx] = K(k * grid.h);
    });
    t.ampRight = t.kernelAt(t.kRight) * std::exp(t.decayRight * t.kRight * grid.h);
    t.ampLeft = t.kernelAt(-t.kLeft) * std::exp(t.decayLeft * t.kLeft * grid.h);

    t.calibrationAlpha = t.tilt;
    const double target = symbol(q, m, q.tau0() + t.calibrationAlpha);
    t.c = (target - t.betaM) / t.latticeSymbol(t.calibrationAlpha);

    double worst = 0.0;
    for (double a : validationExponents(q, m)) {
        const double ref = symbol(q, m, q.tau0() + a);
        const double err = std::abs(t.discreteSymbol(a) - ref) / std::abs(ref);
        t.validation.emplace_back(a, err);
        worst = std::max(worst, err);
    }
    if (!(worst <= opt.tolerance)) {
        std::ostringstream os;
        os << "calibrate: symbol mismatch beyond tolerance " << opt.tolerance << ";";
        for (auto [a, e] : t.validation) os << " alpha=" << a << " err=" << e;
        throw CalibrationError(os.str());
    }
    return t;
}

} // namespace fracle
