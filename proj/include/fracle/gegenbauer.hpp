#pragma once

#include <vector>

namespace fracle {

// Degree-m Gegenbauer polynomial of index (n-2)/2, normalized to 1 at argument 1,
// as a polynomial in u = (1 - x)/2: 2F1(-m, m+n-2; (n-1)/2; u). Requires n >= 2.
struct ZonalPolynomial {
    std::vector<double> coef; // coef[k] multiplies u^k

    ZonalPolynomial(int n, int m) {
        coef.assign(m + 1, 0.0);
        coef[0] = 1.0;
        const double b = m + n - 2.0, c = 0.5 * (n - 1.0);
        for (int k = 0; k < m; ++k) coef[k + 1] = coef[k] * (k - m) * (b + k) / ((c + k) * (k + 1.0));
    }

    double operator()(double u) const {
        double v = 0.0;
        for (std::size_t k = coef.size(); k-- > 0;) v = v * u + coef[k];
        return v;
    }

    // 1 - G(u), without cancellation for small u.
    double complement(double u) const {
        double v = 0.0;
        for (std::size_t k = coef.size(); k-- > 1;) v = v * u + coef[k];
        return -v * u;
    }
};

} // namespace fracle
