#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fracle/gamma.hpp"

namespace fracle {

struct QuadratureRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Jacobi rule for weight (1-x)^a (1+x)^b on [-1, 1] (Golub-Welsch).
inline QuadratureRule gaussJacobi(int N, double a, double b) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    for (int k = 0; k < N; ++k) {
        const double ab = 2.0 * k + a + b;
        J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (ab * (ab + 2.0));
        if (k + 1 < N) {
            const double j = k + 1;
            const double c = 2.0 * j + a + b;
            double b2;
            if (j == 1)
                b2 = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b) * (2.0 + a + b) * (3.0 + a + b));
            else
                b2 = 4.0 * j * (j + a) * (j + b) * (j + a + b) / (c * c * (c + 1.0) * (c - 1.0));
            J(k, k + 1) = J(k + 1, k) = std::sqrt(b2);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::pow(2.0, a + b + 1.0) * gammaFn(a + 1.0) * gammaFn(b + 1.0) / gammaFn(a + b + 2.0);
    QuadratureRule r;
    r.x.resize(N);
    r.w.resize(N);
    for (int i = 0; i < N; ++i) {
        r.x[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v * v;
    }
    return r;
}

inline QuadratureRule gaussLegendre(int N) { return gaussJacobi(N, 0.0, 0.0); }

// Integral over u in [0,1] of [u(1-u)]^alpha f(u, u+eps, 1-u) where f may be
// nearly singular at u = -eps. Uses u = eps (e^y - 1) and a Gauss-Jacobi rule in y.
// `rule` must be gaussJacobi(N, alpha, alpha).
template <class F>
double clusteredIntegral(const QuadratureRule& rule, double alpha, double eps, F&& f) {
    const double Y = std::log1p(1.0 / eps);
    const double half = 0.5 * Y;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double y = half * (1.0 + rule.x[i]);
        const double ym = half * (1.0 - rule.x[i]);
        const double em = std::expm1(y);
        const double u = eps * em;
        const double upe = eps * (1.0 + em);
        const double omu = -(1.0 + eps) * std::expm1(-ym);
        double smooth = upe;
        if (alpha != 0.0) smooth *= std::pow((u / y) * (omu / ym), alpha);
        sum += rule.w[i] * smooth * f(u, upe, omu);
    }
    return sum * std::pow(half, 2.0 * alpha + 1.0);
}

} // namespace fracle
