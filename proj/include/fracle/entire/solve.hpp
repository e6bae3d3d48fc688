#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "fracle/cylinder/operator.hpp"
#include "fracle/indicial.hpp"

namespace fracle {

struct EntireSolution {
    ProblemParams params;
    GridFunction v;
    double residualNorm = 0;
    double fittedLimit = 0;
    double fittedDecay = 0;
    int iterations = 0;
    std::vector<double> residualHistory;
};

struct EntireOptions {
    double tolerance = 1e-8;
    int maxIterations = 60;
    int maxHalvings = 30;
    double limitSlack = 0.25; // admissible relative distance of the initial left limit from the singular value
};

// Tail basis for t -> -infinity from the mode-0 indicial roots.
inline std::vector<TailTerm> entireLeftTerms(const ProblemParams& q) {
    const auto c = computeConstants(q);
    std::vector<TailTerm> terms;
    for (const auto& r : admissibleLeftRates(q, indicialRoots(q, c, 0))) {
        terms.push_back({r.rate, r.freq, false});
        if (r.freq != 0.0) terms.push_back({r.rate, r.freq, true});
    }
    if (terms.empty()) throw DomainError("entireLeftTerms: no decaying mode-0 behaviour at infinity");
    return terms;
}

// beta^{1/(p-1)} with flat tails; solves the equation but has no smooth origin.
inline GridFunction singularProfile(const ProblemParams& q, const CylinderGrid& g) {
    const double L = std::pow(computeConstants(q).beta, 1.0 / (q.p - 1.0));
    return GridFunction(g, Eigen::VectorXd::Constant(g.size(), L), Tail{L, {}, {}}, Tail{L, {}, {}});
}

// Sigmoid beta^{1/(p-1)} / (1 + e^{tau0 (t - t0)}) with value L/2 at t0.
inline GridFunction sigmoidGuess(const ProblemParams& q, const CylinderGrid& g) {
    const double L = std::pow(computeConstants(q).beta, 1.0 / (q.p - 1.0)), tau0 = q.tau0();
    // w(0) = 1 fixes t0 through the right tail L e^{-tau0 (t - t0)}
    const double t0 = std::log(1.0 / L) / tau0;
    Eigen::VectorXd v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = L / (1.0 + std::exp(tau0 * (g.node(i) - t0)));
    Tail Lt{L, {TailTerm{tau0, 0.0, false}}, {v[0] - L}};
    Tail Rt{0.0, {TailTerm{tau0, 0.0, false}}, {v[g.last()]}};
    return GridFunction(g, v, Lt, Rt);
}

namespace detail {

struct EntireLayout {
    int N = 0;                 // last node index; v_N is pinned by the normalization
    std::vector<TailTerm> left;
    int dependent = 0;         // left term fixed by continuity at t = -T
    std::vector<int> free;     // remaining left terms, unknowns after v_0..v_{N-1}
    double tau0 = 0;
};

inline GridFunction assemble(const EntireLayout& lay, const CylinderGrid& g, double L, double A,
                             const Eigen::VectorXd& x) {
    Eigen::VectorXd v(g.size());
    v.head(lay.N) = x.head(lay.N);
    v[lay.N] = A;
    std::vector<double> amps(lay.left.size(), 0.0);
    double rest = v[0] - L;
    for (std::size_t k = 0; k < lay.free.size(); ++k) {
        amps[lay.free[k]] = x[lay.N + int(k)];
        rest -= amps[lay.free[k]] * lay.left[lay.free[k]](0.0);
    }
    amps[lay.dependent] = rest;
    return GridFunction(g, v, Tail{L, lay.left, amps}, Tail{0.0, {TailTerm{lay.tau0, 0.0, false}}, {A}});
}

} // namespace detail

namespace detail {
inline void fillFits(EntireSolution& sol);
}

// Damped Newton for P v = v^p on the cylinder with the left limit pinned to
// beta^{1/(p-1)} and the right tail A e^{-tau0 (t - T)}, A = e^{-tau0 T}.
inline EntireSolution solveEntire(const ProblemParams& q, const KernelTable& tb, const GridFunction& init,
                                  const EntireOptions& opt = {}) {
    if (tb.mode != 0) throw ContractViolation("solveEntire: mode-0 kernel table required");
    const CylinderGrid& g = init.grid;
    const double tau0 = q.tau0(), p = q.p;
    const double L = std::pow(computeConstants(q).beta, 1.0 / (p - 1.0));
    if (!init.left || !init.right) throw PreconditionError("solveEntire: initial guess needs tail models");
    if (std::abs(init.left->limit - L) > opt.limitSlack * L)
        throw PreconditionError("solveEntire: initial left limit is far from beta^{1/(p-1)}");
    const auto& rt = *init.right;
    if (rt.limit != 0.0 || rt.terms.size() != 1 || std::abs(rt.terms[0].rate - tau0) > 1e-12 || rt.terms[0].freq != 0.0)
        throw PreconditionError("solveEntire: initial right tail must be a pure e^{-tau0 t} decay");
    if (!(init.values.minCoeff() > 0.0)) throw PreconditionError("solveEntire: initial guess must be positive");

    detail::EntireLayout lay;
    lay.N = g.last();
    lay.left = entireLeftTerms(q);
    lay.tau0 = tau0;
    for (int k = 1; k < int(lay.left.size()); ++k) lay.free.push_back(k);
    const double A = std::exp(-tau0 * g.T);
    const DiscreteOperator P = assembleOperator(tb, g, lay.left, {TailTerm{tau0, 0.0, false}});
    const int N = lay.N, nf = int(lay.free.size());

    Eigen::VectorXd x(N + nf);
    x.head(N) = init.values.head(N) * (A / init.values[N]);
    x.tail(nf).setZero();

    auto residual = [&](const Eigen::VectorXd& y) {
        const GridFunction u = detail::assemble(lay, g, L, A, y);
        Eigen::VectorXd r = P.apply(u);
        r.array() -= u.values.array().pow(p);
        return r;
    };

    EntireSolution sol;
    sol.params = q;
    Eigen::VectorXd r = residual(x);
    double rn = r.cwiseAbs().maxCoeff();
    sol.residualHistory.push_back(rn);
    const int colL = P.leftTermCol(lay.dependent);
    for (int it = 0; it < opt.maxIterations && rn > opt.tolerance; ++it) {
        Eigen::MatrixXd J(N + 1, N + nf);
        J.leftCols(N) = P.nodes.leftCols(N);
        for (int j = 0; j < N; ++j) J(j, j) -= p * std::pow(x[j], p - 1.0);
        J.col(0) += P.tails.col(colL);
        for (int k = 0; k < nf; ++k)
            J.col(N + k) = P.tails.col(P.leftTermCol(lay.free[k])) - lay.left[lay.free[k]](0.0) * P.tails.col(colL);
        const Eigen::VectorXd dx = J.colPivHouseholderQr().solve(-r);
        double step = 1.0;
        bool accepted = false;
        for (int hlv = 0; hlv <= opt.maxHalvings; ++hlv, step *= 0.5) {
            const Eigen::VectorXd y = x + step * dx;
            if (!(y.head(N).minCoeff() > 0.0)) continue;
            const Eigen::VectorXd ry = residual(y);
            const double ryn = ry.cwiseAbs().maxCoeff();
            if (std::isfinite(ryn) && ryn < (1.0 - 1e-4 * step) * rn) {
                x = y;
                r = ry;
                rn = ryn;
                accepted = true;
                break;
            }
        }
        sol.iterations = it + 1;
        sol.residualHistory.push_back(rn);
        if (!accepted) break;
    }
    if (!(rn <= opt.tolerance)) {
        std::ostringstream os;
        os << "solveEntire: Newton failed; residual history:";
        for (double h : sol.residualHistory) os << ' ' << h;
        throw NumericalError(os.str());
    }
    sol.v = detail::assemble(lay, g, L, A, x);
    sol.residualNorm = rn;
    detail::fillFits(sol);
    return sol;
}

struct ExponentFit {
    bool ok = false;
    double sigma = 0;     // growth rate in t of v - limit as t -> -infinity
    double freq = 0;      // oscillation frequency, 0 when monotone
    double limit = 0;
    double rms = 0;
};

// Prony fit v_k = c + sum_j a_j z_j^k on the samples t in [t0, t1] with the given stride, `order` modes.
// Without the constant the samples are fitted by the modes alone.
// Reports the mode dominating as t -> -infinity among those with non-negligible amplitude.
inline ExponentFit pronyFit(const GridFunction& v, double t0, double t1, int stride = 4, int order = 2,
                             bool withConstant = true) {
    ExponentFit f;
    const auto& g = v.grid;
    std::vector<double> y;
    for (int i = 0; i < g.size(); i += stride)
        if (g.node(i) >= t0 - 1e-12 && g.node(i) <= t1 + 1e-12) y.push_back(v.values[i]);
    const int K = int(y.size());
    if (K < 4 * order + 4) return f;
    const double dt = stride * g.h;
    // differences remove the constant; fit d_{k+order} = sum_j c_j d_{k+j}
    std::vector<double> d(y);
    if (withConstant) {
        d.pop_back();
        for (int k = 0; k + 1 < K; ++k) d[k] = y[k + 1] - y[k];
    }
    const int rows = int(d.size()) - order;
    Eigen::MatrixXd M(rows, order);
    Eigen::VectorXd b(rows);
    for (int k = 0; k < rows; ++k) {
        for (int j = 0; j < order; ++j) M(k, j) = d[k + j];
        b[k] = d[k + order];
    }
    const Eigen::VectorXd c = M.colPivHouseholderQr().solve(b);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(order, order);
    for (int j = 0; j + 1 < order; ++j) C(j + 1, j) = 1.0;
    C.col(order - 1) = c;
    const Eigen::VectorXcd z = Eigen::EigenSolver<Eigen::MatrixXd>(C, false).eigenvalues();
    // amplitudes: real basis (1, Re z^k, Im z^k per root)
    Eigen::MatrixXd B(K, 1 + 2 * order);
    Eigen::VectorXd Y(K);
    for (int k = 0; k < K; ++k) {
        B(k, 0) = 1.0;
        for (int j = 0; j < order; ++j) {
            if (z[j].imag() < 0.0) { // the conjugate partner carries the pair
                B(k, 1 + 2 * j) = B(k, 2 + 2 * j) = 0.0;
                continue;
            }
            const std::complex<double> e = std::pow(std::complex<double>(z[j]), k);
            B(k, 1 + 2 * j) = e.real();
            B(k, 2 + 2 * j) = e.imag();
        }
        Y[k] = y[k];
    }
    if (!withConstant) B.col(0).setZero();
    const Eigen::VectorXd a = B.colPivHouseholderQr().solve(Y);
    f.limit = withConstant ? a[0] : 0.0;
    f.rms = std::sqrt((B * a - Y).squaredNorm() / K);
    // contribution of each mode at the start of the window
    double big = 0.0;
    std::vector<double> amp(order);
    for (int j = 0; j < order; ++j) big = std::max(big, amp[j] = std::hypot(a[1 + 2 * j], a[2 + 2 * j]));
    int best = -1;
    for (int j = 0; j < order; ++j) {
        if (z[j].imag() < 0.0 || amp[j] < 1e-3 * big || !(std::abs(z[j]) > 0.0)) continue;
        if (best < 0 || std::abs(z[j]) < std::abs(z[best]) * (1 - 1e-9)) best = j;
    }
    if (best < 0) return f;
    const std::complex<double> lz = std::log(std::complex<double>(z[best])) / dt;
    f.sigma = lz.real();
    f.freq = std::abs(lz.imag());
    if (f.freq < 1e-9) f.freq = 0.0;
    f.ok = std::isfinite(f.sigma) && std::isfinite(f.limit);
    return f;
}

namespace detail {

// Limit from the Prony fit on [-T, -T/2]; decay from a least-squares slope of log v on [T/2, T].
inline void fillFits(EntireSolution& sol) {
    const auto& g = sol.v.grid;
    const ExponentFit f = pronyFit(sol.v, -g.T, -0.5 * g.T);
    sol.fittedLimit = f.ok ? f.limit : std::numeric_limits<double>::quiet_NaN();
    double st = 0, sy = 0, stt = 0, sty = 0;
    int k = 0;
    for (int i = 0; i < g.size(); ++i) {
        const double t = g.node(i);
        if (t < 0.5 * g.T) continue;
        const double y = std::log(sol.v.values[i]);
        st += t, sy += y, stt += t * t, sty += t * y, ++k;
    }
    sol.fittedDecay = -(k * sty - st * sy) / (k * stt - st * st);
}

} // namespace detail

struct AsymptoticsReport {
    ExponentFit fit;
    double expectedLimit = 0;
    double physicalRealPart = 0;  // -tau0 - sigma: exponent of w - w1 in r
    double expectedRealPart = 0;  // real part of the mode-0 root at infinity (dominant one)
    double expectedFreq = 0;
    bool oscillatory = false;
    bool expectedOscillatory = false;
    double windowStart = 0, windowEnd = 0;
};

inline AsymptoticsReport verifyAsymptotics(const EntireSolution& sol, const SpectralConstants& c) {
    const ProblemParams& q = sol.params;
    AsymptoticsReport rep;
    const auto& g = sol.v.grid;
    const double T = g.T;
    // [-T, -T/2] unless v - limit sinks below roundoff there; then a window of length T/4 from where it emerges
    const double L = sol.v.left->limit, floor = 1e-11 * L;
    int first = 0;
    while (first < g.last() && std::abs(sol.v.values[first] - L) < floor) ++first;
    double t0 = -T, t1 = -0.5 * T;
    if (g.node(first) > -0.5 * T - 12 * 4 * g.h) {
        t0 = g.node(first);
        t1 = t0 + 0.25 * T;
    } else {
        t0 = std::max(t0, g.node(first));
    }
    rep.fit = pronyFit(sol.v, t0, t1);
    rep.windowStart = t0;
    rep.windowEnd = t1;
    rep.expectedLimit = std::pow(c.beta, 1.0 / (q.p - 1.0));
    const auto ind = indicialRoots(q, c, 0);
    rep.expectedOscillatory = ind.rootsAtInfinity.complex;
    if (ind.rootsAtInfinity.complex) {
        rep.expectedRealPart = ind.rootsAtInfinity.a;
        rep.expectedFreq = std::abs(ind.rootsAtInfinity.b);
    } else {
        // the slower admissible decay dominates
        const auto rates = admissibleLeftRates(q, ind);
        double slow = rates.front().rate;
        for (const auto& r : rates) slow = std::min(slow, r.rate);
        rep.expectedRealPart = -q.tau0() - slow;
    }
    rep.physicalRealPart = -q.tau0() - rep.fit.sigma;
    rep.oscillatory = rep.fit.ok && rep.fit.freq * (t1 - t0) > 0.5 * std::numbers::pi;
    return rep;
}

// H1 = (1/d_s)(-(beta/2) v^2 + v^{p+1}/(p+1)) at the nodes; the tail limits are H1 at the limits of v.
inline GridFunction hamiltonianBoundary(const EntireSolution& sol, const SpectralConstants& c) {
    const double p = sol.params.p;
    auto H = [&](double v) { return (-0.5 * c.beta * v * v + std::pow(v, p + 1.0) / (p + 1.0)) / c.ds; };
    Eigen::VectorXd h(sol.v.values.size());
    for (int i = 0; i < h.size(); ++i) h[i] = H(sol.v.values[i]);
    const auto& lt = *sol.v.left;
    const double hl = H(lt.limit);
    const double rate = lt.terms.empty() ? 1.0 : lt.terms.front().rate;
    Tail L{hl, {TailTerm{rate, 0.0, false}}, {h[0] - hl}};
    Tail R{0.0, {TailTerm{2.0 * sol.params.tau0(), 0.0, false}}, {h[h.size() - 1]}};
    return GridFunction(sol.v.grid, h, L, R);
}

// sup |a - b| r^{-tau0} over |t| <= window, relative to sup a r^{-tau0}
inline double overlapDifference(const GridFunction& a, const GridFunction& b, double tau0, double window = 5.0) {
    double d = 0.0, m = 0.0;
    for (int i = 0; i < a.grid.size(); ++i) {
        const double t = a.grid.node(i);
        if (t < -window || t > window) continue;
        const double e = std::exp(tau0 * t);
        d = std::max(d, std::abs(a.values[i] - b(t)) * e);
        m = std::max(m, a.values[i] * e);
    }
    return d / m;
}

struct RadialProfile {
    std::vector<double> r, w;
    double scale = 1; // mu in w -> mu^{tau0} w(mu r)
};

// w(r) = r^{-tau0} v(-log r) at r = e^{-t}, t on the grid nodes, rescaled so that w(0) = 1.
inline RadialProfile toPhysical(const EntireSolution& sol) {
    const auto& g = sol.v.grid;
    const double tau0 = sol.params.tau0();
    const double w0 = std::exp(tau0 * g.T) * sol.v.values[g.last()];
    RadialProfile out;
    out.scale = std::pow(w0, -1.0 / tau0);
    const double shift = std::log(out.scale);
    for (int i = g.last(); i >= 0; --i) {
        const double t = g.node(i);
        const double r = std::exp(-t - shift);
        // w~(r) = mu^{tau0} w(mu r) = r^{-tau0} v(-log(mu r))
        out.r.push_back(r);
        out.w.push_back(std::pow(r, -tau0) * sol.v(t));
    }
    return out;
}

} // namespace fracle
