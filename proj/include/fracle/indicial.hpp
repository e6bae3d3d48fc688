#pragma once

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include "fracle/symbol.hpp"

namespace fracle {

// Two real exponents (a <= b) or a conjugate pair a +- i b.
struct RootPair {
    bool complex = false;
    double a = 0;
    double b = 0;
};

struct IndicialReport {
    int mode = 0;
    double eigenvalue = 0;
    RootPair rootsAtZero;     // {-(n+m-2s), m}
    RootPair rootsAtInfinity; // roots gamma of Lambda_m(-gamma) = p beta
    int level = 0;
};

namespace detail {

template <class F> double bisect(F f, double lo, double hi, const char* what) {
    double flo = f(lo), fhi = f(hi);
    if (!(flo * fhi <= 0.0)) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": no sign change on bracket [" << lo << ", " << hi << "], values " << flo
           << ", " << fhi;
        throw NumericalError(os.str());
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

inline IndicialReport indicialRoots(const ProblemParams& q, const SpectralConstants& c, int m) {
    if (m < 0) throw DomainError("indicialRoots: mode must be >= 0");
    IndicialReport r;
    r.mode = m;
    r.eigenvalue = double(m) * (m + q.n - 2);
    r.rootsAtZero = {false, -(q.n + m - 2.0 * q.s), double(m)};

    const double target = q.p * c.beta;
    const double centre = q.halfGap();
    const double zero = q.n + m - 2.0 * q.s;
    auto f = [&](double tau) { return symbol(q, m, tau) - target; };
    if (f(centre) >= 0.0) {
        const double hi = detail::bisect(f, centre, zero, "indicialRoots (real)");
        const double lo = 2.0 * centre - hi;
        r.rootsAtInfinity = {false, -hi, -lo};
        return r;
    }
    // Lambda_m is real on the critical line; solve in the imaginary offset.
    auto g = [&](double y) { return symbol(q, m, std::complex<double>(centre, y)).real() - target; };
    double ylo = 0.0, yhi = 1.0;
    for (int k = 0; g(yhi) < 0.0; ++k) {
        if (k > 60) throw NumericalError("indicialRoots (complex): bracket expansion failed");
        ylo = yhi;
        yhi *= 2.0;
    }
    const double y = detail::bisect(g, ylo, yhi, "indicialRoots (complex)");
    r.rootsAtInfinity = {true, -centre, y};
    return r;
}

// Decaying behaviours as t -> -infinity of the linearized mode-m problem in the
// gauge chi = r^{tau0} phi: e^{rate t} (cos, sin)(freq t), rate > 0.
struct TailRate {
    double rate;
    double freq;
};

inline std::vector<TailRate> admissibleLeftRates(const ProblemParams& q, const IndicialReport& r) {
    std::vector<TailRate> out;
    const double tau0 = q.tau0();
    const RootPair& g = r.rootsAtInfinity;
    if (g.complex) {
        out.push_back({-tau0 - g.a, g.b});
        return out;
    }
    for (double gamma : {g.b, g.a}) {
        const double rate = -tau0 - gamma;
        if (rate > 1e-9) out.push_back({rate, 0.0});
    }
    return out;
}

} // namespace fracle
