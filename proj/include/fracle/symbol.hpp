#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <sstream>

#include "fracle/gamma.hpp"
#include "fracle/params.hpp"

namespace fracle {

inline constexpr double kPoleEps = 1e-8;

// Surface area of the unit sphere S^{k-1} in R^k.
inline double sphereArea(int k) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * k) / gammaFn(0.5 * k);
}

// Constant of the hypersingular integral form of (-Delta)^s in R^n.
inline double fractionalLaplacianNorm(int n, double s) {
    return s * std::pow(4.0, s) * gammaFn(0.5 * n + s) /
           (std::pow(std::numbers::pi, 0.5 * n) * gammaFn(1.0 - s));
}

namespace detail {

inline void checkPole(double a, double eps, const char* what) {
    if (a <= eps) {
        const double k = std::round(a);
        if (k <= 0.0 && std::abs(a - k) < eps) {
            std::ostringstream os;
            os << "symbol: Gamma argument " << what << " = " << a << " within " << eps
               << " of a pole";
            throw ConditioningError(os.str());
        }
    }
}

} // namespace detail

// Lambda_m(tau): (-Delta)^s (r^{-tau} E_m) = Lambda_m(tau) r^{-tau-2s} E_m.
inline double symbol(const ProblemParams& q, int m, double tau, double poleEps = kPoleEps) {
    const double n = q.n, s = q.s;
    const double a = 0.5 * (n + m - tau), b = 0.5 * (tau + m + 2.0 * s);
    const double c = 0.5 * (tau + m), d = 0.5 * (n + m - tau - 2.0 * s);
    detail::checkPole(a, poleEps, "(n+m-tau)/2");
    detail::checkPole(b, poleEps, "(tau+m+2s)/2");
    const SignedLog la = logGamma(a), lb = logGamma(b);
    return la.sign * lb.sign * std::pow(4.0, s) * std::exp(la.logAbs + lb.logAbs) * rgamma(c) *
           rgamma(d);
}

inline std::complex<double> symbol(const ProblemParams& q, int m, std::complex<double> tau,
                                   double poleEps = kPoleEps) {
    if (tau.imag() == 0.0) return symbol(q, m, tau.real(), poleEps);
    const double n = q.n + m, s = q.s, k = m;
    const std::complex<double> a = 0.5 * (n - tau), b = 0.5 * (tau + k + 2.0 * s);
    const std::complex<double> c = 0.5 * (tau + k), d = 0.5 * (n - tau - 2.0 * s);
    return std::pow(4.0, s) * std::exp(logGamma(a) + logGamma(b)) * rgamma(c) * rgamma(d);
}

struct SpectralConstants {
    double beta = 0;
    double ds = 0;
    double hardy = 0;
    double flNorm = 0;
    bool stable = false;
    std::optional<double> pJL;
};

// d_s = 2^{2s-1} Gamma(s) / (s Gamma(-s))
inline double hamiltonianConstant(double s) {
    return std::pow(2.0, 2.0 * s - 1.0) * gammaFn(s) / (s * gammaFn(-s));
}

inline std::optional<double> josephLundgrenExponent(int n, double s) {
    const double pc = (n + 2.0 * s) / (n - 2.0 * s);
    const ProblemParams base{n, s, 3.0};
    const double hardy = symbol(base, 0, base.halfGap());
    auto g = [&](double p) { return p * symbol(ProblemParams{n, s, p}, 0, 2.0 * s / (p - 1.0)) - hardy; };
    double lo = pc * (1.0 + 1e-8), hi = 1e3;
    double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return lo;
    if (glo * ghi > 0.0) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm > 0.0) == (glo > 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline SpectralConstants computeConstants(const ProblemParams& q) {
    q.validate();
    SpectralConstants c;
    c.beta = symbol(q, 0, q.tau0());
    c.hardy = symbol(q, 0, q.halfGap());
    c.ds = hamiltonianConstant(q.s);
    c.flNorm = fractionalLaplacianNorm(q.n, q.s);
    c.stable = q.p * c.beta <= c.hardy;
    c.pJL = josephLundgrenExponent(q.n, q.s);
    return c;
}

} // namespace fracle
