#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "fracle/parallel.hpp"
#include "fracle/quadrature.hpp"
#include "fracle/symbol.hpp"

namespace fracle {

// F(q) = int_0^q t^{s-1} (1+t)^{-n/2} dt = B_x(s, n/2 - s), x = q/(1+q),
// by the hypergeometric series on whichever side of x = 1/2 converges fastest.
class IncompleteBetaF {
public:
    IncompleteBetaF(double s, double n) : a_(s), b_(0.5 * n - s) {
        complete_ = gammaFn(a_) * gammaFn(b_) / gammaFn(a_ + b_);
        lo_.resize(kTerms);
        hi_.resize(kTerms);
        double pa = 1.0, pb = 1.0;
        for (int k = 0; k < kTerms; ++k) {
            lo_[k] = pa / (a_ + k);
            hi_[k] = pb / (b_ + k);
            pa *= (k + 1.0 - b_) / (k + 1.0);
            pb *= (k + 1.0 - a_) / (k + 1.0);
        }
    }

    double complete() const { return complete_; }

    // F(Q/z) from Q >= 0 and z > 0, without forming Q/z.
    double operator()(double Q, double z) const {
        const double den = Q + z;
        const double x = Q / den, y = z / den;
        if (x <= 0.5) return std::pow(x, a_) * horner(lo_, x);
        return complete_ - std::pow(y, b_) * horner(hi_, y);
    }

    double ofRatio(double q) const { return std::isinf(q) ? complete_ : (*this)(q, 1.0); }

private:
    static constexpr int kTerms = 60;
    static double horner(const std::vector<double>& c, double x) {
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
        return v;
    }
    double a_, b_, complete_ = 0;
    std::vector<double> lo_, hi_;
};

// Radial nodes: r = 0, a geometric block from rMin to rSplit, then a mesh graded toward r = 1.
struct BallGrid {
    std::vector<double> r;

    int size() const { return int(r.size()); }
    int last() const { return int(r.size()) - 1; }

    static BallGrid make(int N = 400, double grading = 2.0, double rMin = 1e-10, double rSplit = 0.05,
                         double geometricFraction = 0.55) {
        if (N < 8) throw DomainError("BallGrid: need at least 8 intervals");
        if (!(grading >= 1.0)) throw DomainError("BallGrid: grading exponent must be >= 1");
        if (!(rMin > 0.0 && rMin < rSplit && rSplit < 1.0)) throw DomainError("BallGrid: need 0 < rMin < rSplit < 1");
        const int Kg = std::max(1, int(std::round(geometricFraction * N)) - 1);
        const int Kr = N - 1 - Kg;
        if (Kr < 2) throw DomainError("BallGrid: too few graded intervals");
        BallGrid g;
        g.r.push_back(0.0);
        for (int k = 0; k < Kg; ++k) g.r.push_back(rMin * std::pow(rSplit / rMin, double(k) / Kg));
        for (int j = 0; j <= Kr; ++j) g.r.push_back(1.0 - (1.0 - rSplit) * std::pow(1.0 - double(j) / Kr, grading));
        g.r.back() = 1.0;
        return g;
    }
};

// Angularly reduced ball Green kernel without its constant:
// g(r, rho) = rho^{n-1} int_{S^{n-1}} |x - rho w|^{2s-n} F(r0) dw, |x| = r.
class RadialGreenKernel {
public:
    RadialGreenKernel(int n, double s) : n_(n), s_(s), F_(s, n), alpha_(0.5 * (n - 3.0)) {
        if (n_ >= 2) {
            near_ = gaussJacobi(48, alpha_, alpha_);
            mid_ = gaussJacobi(32, alpha_, alpha_);
            far_ = gaussJacobi(16, alpha_, alpha_);
            area_ = sphereArea(n_ - 1) * std::pow(2.0, n_ - 2.0);
        }
        full_ = n_ >= 2 ? sphereArea(n_) : 2.0;
    }

    const IncompleteBetaF& F() const { return F_; }

    double operator()(double r, double rho) const {
        const double Q = (1.0 - r * r) * (1.0 - rho * rho);
        if (Q <= 0.0) return 0.0;
        const double e = 0.5 * (2.0 * s_ - n_);
        if (n_ == 1) {
            const double d1 = (r - rho) * (r - rho), d2 = (r + rho) * (r + rho);
            return std::pow(d1, e) * F_(Q, d1) + std::pow(d2, e) * F_(Q, d2);
        }
        if (rho == 0.0) return 0.0;
        if (r == 0.0) {
            const double z = rho * rho;
            return full_ * std::pow(rho, n_ - 1.0) * std::pow(z, e) * F_(Q, z);
        }
        const double s4 = 4.0 * r * rho;
        const double eps = (r - rho) * (r - rho) / s4;
        const QuadratureRule& rule = eps > 1.0 ? far_ : (eps > 1e-2 ? mid_ : near_);
        const double I = clusteredIntegral(rule, alpha_, eps, [&](double, double upe, double) {
            const double z = s4 * upe;
            return std::pow(z, e) * F_(Q, z);
        });
        return area_ * std::pow(rho, n_ - 1.0) * I;
    }

private:
    int n_;
    double s_;
    IncompleteBetaF F_;
    double alpha_, area_ = 1.0, full_ = 2.0;
    QuadratureRule near_, mid_, far_;
};

// Gamma(n/2) / (4^s Gamma(1+s) Gamma(n/2+s)): value at 0 of the torsion function of the unit ball.
inline double torsionConstant(int n, double s) {
    return gammaFn(0.5 * n) / (std::pow(4.0, s) * gammaFn(1.0 + s) * gammaFn(0.5 * n + s));
}

// Green constant of the unit ball as given in the literature; used only as a cross-check.
inline double literatureGreenConstant(int n, double s) {
    return gammaFn(0.5 * n) / (std::pow(4.0, s) * std::pow(std::numbers::pi, 0.5 * n) * std::pow(gammaFn(s), 2));
}

struct RadialGreenOperator {
    int n = 3;
    double s = 0.5;
    BallGrid grid;
    Eigen::MatrixXd G;        // (G f)_k = sum_l G(k,l) f_l, constant included
    double constant = 0;      // calibrated C_{n,s}
    double torsionError = 0;  // relative error of G 1 against gamma (1-r^2)^s at r = 0
    double torsionMaxError = 0;

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return G * f; }
};

namespace detail {

// int_a^b g(rho) phi(rho) drho for the two hat pieces on [a, b]; graded toward singular ends.
template <class Fn>
void integrateElement(Fn&& g, double a, double b, bool singA, bool singB, int q, const QuadratureRule& rule,
                      double& toA, double& toB) {
    const double L = b - a;
    auto acc = [&](double rho, double w) {
        const double v = g(rho) * w;
        toA += v * (b - rho) / L;
        toB += v * (rho - a) / L;
    };
    if (singA && singB) {
        const double m = 0.5 * (a + b);
        // split; hat weights still refer to [a, b]
        for (int side = 0; side < 2; ++side) {
            const double lo = side == 0 ? a : m, hi = side == 0 ? m : b;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double x = 0.5 * (1.0 + rule.x[i]);
                const double xq = std::pow(x, q);
                const double rho = side == 0 ? lo + (hi - lo) * xq : hi - (hi - lo) * xq;
                acc(rho, 0.5 * rule.w[i] * (hi - lo) * q * xq / x);
            }
        }
        return;
    }
    if (singA || singB) {
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double x = 0.5 * (1.0 + rule.x[i]);
            const double xq = std::pow(x, q);
            const double rho = singA ? a + L * xq : b - L * xq;
            acc(rho, 0.5 * rule.w[i] * L * q * xq / x);
        }
        return;
    }
    for (std::size_t i = 0; i < rule.x.size(); ++i) acc(a + 0.5 * L * (1.0 + rule.x[i]), 0.5 * rule.w[i] * L);
}

} // namespace detail

// Product integration of the radial Green kernel against hat functions on the grid,
// with the constant fixed by a least-squares fit of G 1 to the torsion function.
inline RadialGreenOperator buildGreen(const ProblemParams& q, const BallGrid& grid) {
    const int n = q.n;
    const double s = q.s;
    const RadialGreenKernel kern(n, s);
    const int M = grid.size();
    const auto& r = grid.r;
    RadialGreenOperator op;
    op.n = n;
    op.s = s;
    op.grid = grid;
    op.G = Eigen::MatrixXd::Zero(M, M);
    const QuadratureRule g16 = gaussLegendre(16), g8 = gaussLegendre(8), g4 = gaussLegendre(4);
    const int qGrade = std::max(2, int(std::ceil(2.0 / s)));

    parallelFor(M, [&](int k) {
        const double rk = r[k];
        if (k == M - 1) return; // the kernel vanishes on the boundary
        auto g = [&](double rho) { return kern(rk, rho); };
        for (int j = 0; j + 1 < M; ++j) {
            const double a = r[j], b = r[j + 1], L = b - a;
            const bool singA = (j == k) || (j == 0 && k == 0);
            const bool singB = (j + 1 == k) || (j + 1 == M - 1);
            double dist = 0.0;
            if (rk < a) dist = a - rk;
            else if (rk > b) dist = rk - b;
            const QuadratureRule& rule = (singA || singB || dist < L) ? g16 : (dist < 4.0 * L ? g8 : g4);
            double ta = 0.0, tb = 0.0;
            detail::integrateElement(g, a, b, singA, singB, qGrade, rule, ta, tb);
            op.G(k, j) += ta;
            op.G(k, j + 1) += tb;
        }
    });
    for (int k = 0; k < M; ++k)
        for (int l = 0; l < M; ++l)
            if (!(op.G(k, l) >= 0.0) || !std::isfinite(op.G(k, l))) {
                std::ostringstream os;
                os << "buildGreen: invalid weight at (r=" << r[k] << ", rho=" << r[l] << "): " << op.G(k, l);
                throw NumericalError(os.str());
            }

    const double gamma = torsionConstant(n, s);
    const Eigen::VectorXd g1 = op.G * Eigen::VectorXd::Ones(M);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < M; ++k) {
        const double target = gamma * std::pow(1.0 - r[k] * r[k], s);
        num += g1[k] * target;
        den += g1[k] * g1[k];
    }
    op.constant = num / den;
    op.G *= op.constant;
    for (int k = 0; k + 1 < M; ++k) {
        const double target = gamma * std::pow(1.0 - r[k] * r[k], s);
        const double err = std::abs(op.constant * g1[k] - target) / target;
        op.torsionMaxError = std::max(op.torsionMaxError, err);
        if (k == 0) op.torsionError = err;
    }
    return op;
}

} // namespace fracle
