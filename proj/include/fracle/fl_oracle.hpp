#pragma once

// Brute-force evaluation of (-Delta)^s (r^{-tau} E_m) by hypersingular quadrature.
// Independent of the Gamma-ratio symbol; meant for tests.

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracle/gegenbauer.hpp"
#include "fracle/symbol.hpp"

namespace fracle {

namespace detail {

// Integral over theta in (0, pi) of g(theta), split dyadically from `scale`.
template <class G> double dyadicAngular(G&& g, double scale) {
    using boost::math::quadrature::gauss;
    double total = 0.0, a = 0.0, b = std::min(std::max(scale, 1e-300), std::numbers::pi);
    while (true) {
        total += gauss<double, 30>::integrate(g, a, b);
        if (b >= std::numbers::pi) break;
        a = b;
        b = std::min(2.0 * b, std::numbers::pi);
    }
    return total;
}

} // namespace detail

inline double flOracle(const ProblemParams& q, int m, double tau, double x = 1.0) {
    if (!(tau > 0.0 && tau < q.n - 2.0 * q.s)) throw DomainError("flOracle: need 0 < tau < n-2s");
    if (!(x > 0.0)) throw DomainError("flOracle: need x > 0");
    const int n = q.n;
    const double s = q.s;
    const double nu = 0.5 * (n + 2.0 * s);
    const double C = fractionalLaplacianNorm(n, s);

    // Mass near rho = 1 is O(eps^{1-2s}); below this cut it is dropped.
    const double epsCut = 1e-40;

    auto integrand = [&](double rho, double eps) -> double {
        if (eps < epsCut || rho < 1e-250) return 0.0;
        double dw;
        if (rho < 0.5) {
            dw = std::pow(rho, n - 1.0) + std::pow(rho, 2.0 * s - 1.0) - std::pow(rho, n - 1.0 - tau) -
                 std::pow(rho, 2.0 * s - 1.0 + tau);
        } else {
            // cancellation-free near rho = 1
            const double L = std::log1p(-eps);
            dw = -std::exp((n - 1.0) * L) * std::expm1(-tau * L) -
                 std::exp((2.0 * s - 1.0) * L) * std::expm1(tau * L);
        }
        const double wt = std::pow(rho, n - 1.0 - tau) + std::pow(rho, 2.0 * s - 1.0 + tau);
        double K0, D;
        if (n == 1) {
            K0 = std::pow(eps, -2.0 * nu) + std::pow(1.0 + rho, -2.0 * nu);
            D = (m % 2 == 1) ? 2.0 * std::pow(1.0 + rho, -2.0 * nu) : 0.0;
        } else {
            const ZonalPolynomial G(n, m);
            const double e2 = eps * eps;
            auto base = [&](double th) {
                const double sh = std::sin(0.5 * th);
                const double u = sh * sh;
                return std::make_pair(u, std::pow(std::sin(th), n - 2.0) * std::pow(e2 + 4.0 * rho * u, -nu));
            };
            const double scale = eps / std::sqrt(std::max(rho, 1e-300));
            K0 = detail::dyadicAngular([&](double th) { return base(th).second; }, scale);
            D = m == 0 ? 0.0 : detail::dyadicAngular([&](double th) {
                auto [u, k] = base(th);
                return G.complement(u) * k;
            }, scale);
        }
        return K0 * dw + D * wt;
    };

    boost::math::quadrature::tanh_sinh<double> ts;
    double err = 0.0, l1 = 0.0;
    const double I = ts.integrate(
        [&](double rho, double rc) {
            const double eps = rc > 0.0 ? rc : 1.0 - rho;
            return integrand(rho, eps);
        },
        0.0, 1.0, 1e-11, &err, &l1);
    if (!(err <= 1e-8 * std::max(1.0, l1))) {
        std::ostringstream os;
        os << "flOracle: quadrature tolerance not met (error estimate " << err << ")";
        throw NumericalError(os.str());
    }
    const double area = n == 1 ? 1.0 : sphereArea(n - 1);
    // The integral is written at |x| = 1; by homogeneity it equals the value
    // at radius x divided by x^{-tau-2s}.
    return C * area * I;
}

// (-Delta)^s (1 - |x|^2)_+^s at x = 0, from the hypersingular integral.
inline double torsionOracle(int n, double s) {
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double rho, double rhoc) {
        if (rho < 1e-100) return s * std::pow(rho, 1.0 - 2.0 * s);
        const double gap = rho < 0.5 ? -rho * rho : std::log(rhoc * (1.0 + rho));
        const double e = rho < 0.5 ? s * std::log1p(gap) : s * gap;
        return -std::expm1(e) * std::pow(rho, -1.0 - 2.0 * s);
    };
    const double I = ts.integrate(f, 0.0, 1.0) + 1.0 / (2.0 * s);
    return fractionalLaplacianNorm(n, s) * sphereArea(n) * I;
}

} // namespace fracle
