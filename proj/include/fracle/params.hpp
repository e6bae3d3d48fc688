#pragma once

#include <cmath>
#include <sstream>

#include "fracle/errors.hpp"

namespace fracle {

// The triple (n, s, p) of (-Delta)^s w = w^p in R^n.
struct ProblemParams {
    int n = 3;
    double s = 0.5;
    double p = 3.0;

    static ProblemParams make(int n, double s, double p) {
        ProblemParams q{n, s, p};
        q.validate();
        return q;
    }

    void validate() const {
        auto fail = [](const std::string& m) { throw DomainError(m); };
        if (n < 1) fail("dimension n must be >= 1");
        if (!(s > 0.0 && s < 1.0)) fail("order s must lie in (0, 1)");
        if (!(n > 2.0 * s)) fail("need n > 2s");
        if (!std::isfinite(p) || !(p > criticalExponent())) {
            std::ostringstream os;
            os.precision(17);
            os << "exponent p = " << p << " must exceed the critical exponent (n+2s)/(n-2s) = "
               << criticalExponent();
            fail(os.str());
        }
    }

    double criticalExponent() const { return (n + 2.0 * s) / (n - 2.0 * s); }
    double tau0() const { return 2.0 * s / (p - 1.0); }
    // (n-2s)/2, centre of symmetry of the symbol
    double halfGap() const { return 0.5 * (n - 2.0 * s); }
    // (n+2s-1)/(n-2s-1); infinite when n - 2s <= 1
    double modeOneThreshold() const {
        const double d = n - 2.0 * s - 1.0;
        return d > 0.0 ? (n + 2.0 * s - 1.0) / d : INFINITY;
    }
};

} // namespace fracle
