#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracle/linearized/linearized.hpp"

namespace fracle {

// Radial potential V(r) = scale^{-2s} base(r / scale).
struct PotentialSpec {
    enum class Family { PowerTail, CompactBump, Zero };
    Family family = Family::PowerTail;
    double mu = 1.5;    // powerTail exponent
    double radius = 1;  // compactBump support
    double s = 0.5;
    double scale = 1;

    static PotentialSpec powerTail(double mu, double s) {
        if (!(mu > 2.0 * s)) throw DomainError("powerTail: need mu > 2s");
        return PotentialSpec{Family::PowerTail, mu, 1.0, s, 1.0};
    }
    static PotentialSpec compactBump(double radius, double s) {
        if (!(radius > 0.0)) throw DomainError("compactBump: radius must be positive");
        return PotentialSpec{Family::CompactBump, 1.5, radius, s, 1.0};
    }
    static PotentialSpec zero(double s) { return PotentialSpec{Family::Zero, 1.5, 1.0, s, 1.0}; }

    std::string name() const {
        switch (family) {
        case Family::PowerTail: return "powerTail";
        case Family::CompactBump: return "compactBump";
        default: return "zero";
        }
    }

    double base(double r) const {
        switch (family) {
        case Family::PowerTail: return std::pow(1.0 + r * r, -0.5 * mu);
        case Family::CompactBump: {
            const double x = r / radius;
            return x < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
        }
        default: return 0.0;
        }
    }

    double operator()(double r) const { return std::pow(scale, -2.0 * s) * base(r / scale); }

    // r^{2s} V(r), overflow-safe in r
    double weighted(double r) const {
        const double x = r / scale;
        if (family == Family::PowerTail) {
            if (x > 1e100) return std::pow(x, 2.0 * s - mu);
            return std::pow(x, 2.0 * s) * std::pow(1.0 + x * x, -0.5 * mu);
        }
        return std::pow(x, 2.0 * s) * base(x);
    }

    PotentialSpec scaled(double lambda) const {
        PotentialSpec out = *this;
        out.scale *= lambda;
        return out;
    }

    // a(r) = sup_{rho >= r} rho^{2s} V(rho) on a log grid up to 1e6
    double tailSup(double r) const {
        double a = 0.0;
        for (double x = std::log(r); x <= std::log(1e6) + 1e-12; x += 0.01) a = std::max(a, weighted(std::exp(x)));
        return a;
    }

    void validate() const {
        for (double x = std::log(1e-8); x <= std::log(1e6); x += 0.01) {
            const double v = (*this)(std::exp(x));
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("PotentialSpec: V must be non-negative and finite");
        }
        const double far = tailSup(1e6);
        if (far > 0.0 && !(far < tailSup(1e3)))
            throw DomainError("PotentialSpec: r^{2s} V(r) does not decay at infinity");
    }
};

// r^{2s} V_lambda(r) on the cylinder grid, V_lambda(r) = lambda^{-2s} V(r / lambda).
inline GridFunction scalePotential(const PotentialSpec& spec, double lambda, const CylinderGrid& g) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("scalePotential: lambda must lie in (0, 1]");
    const PotentialSpec sp = spec.scaled(lambda);
    Eigen::VectorXd W(g.size());
    for (int i = 0; i < g.size(); ++i) W[i] = sp.weighted(std::exp(-g.node(i)));
    double rateL = 1.0, rateR = 2.0 * spec.s;
    if (spec.family == PotentialSpec::Family::PowerTail) rateL = spec.mu - 2.0 * spec.s;
    Tail L{0.0, {TailTerm{rateL, 0.0, false}}, {W[0]}};
    Tail R{0.0, {TailTerm{rateR, 0.0, false}}, {W[g.last()]}};
    return GridFunction(g, W, L, R);
}

// physical samples of V_lambda at the grid radii r = e^{-t}
inline std::vector<double> physicalPotential(const GridFunction& W, double s) {
    std::vector<double> out(W.values.size());
    for (int i = 0; i < W.grid.size(); ++i) out[i] = W.values[i] * std::exp(2.0 * s * W.grid.node(i));
    return out;
}

struct FixedPointOptions {
    double tolerance = 1e-9; // relative update in the star norm
    int maxIterations = 400;
    std::vector<double> damping{1.0, 0.7, 0.5, 0.35, 0.25}; // tried in order until the iteration contracts
    double maxRatio = 0.9; // largest accepted ratio of successive updates after the second iterate
    std::optional<double> radius;                 // ball test in the star norm; unset means no ball test
};

// 0.1 min(1, beta^{1/(p-1)})
inline double defaultRadius(const ProblemParams& q) {
    return 0.1 * std::min(1.0, std::pow(computeConstants(q).beta, 1.0 / (q.p - 1.0)));
}

struct BoundState {
    double lambda = 0;
    GridFunction psi;            // phi in the cylinder gauge
    double starNorm = 0;
    double uSup = 0;             // sup u_lambda = lambda^{tau0} sup (w + phi)
    double uScale = 0;           // u(y) = uScale (w + phi)(lambda y), uScale = lambda^{tau0}
    double radius = 0;           // enforced ball radius, or the largest iterate norm when none is enforced
    double damping = 1;
    double residual = 0;         // sup |P(v+psi) + W(v+psi) - (v+psi)^p| / sup (v+psi)^p
    int iterations = 0;
    std::vector<double> updates; // star norm of successive updates
};

struct LambdaTooLarge : NumericalError {
    using NumericalError::NumericalError;
};

namespace detail {

inline std::vector<double> combineAmps(const Tail& next, const Tail& prev, double theta) {
    std::vector<double> out(next.amps.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = theta * next.amps[k] + (1.0 - theta) * (k < prev.amps.size() ? prev.amps[k] : 0.0);
    return out;
}

inline GridFunction addProfiles(const GridFunction& v, const GridFunction& psi) {
    auto merge = [](const Tail& a, const Tail& b) {
        Tail out = a;
        out.limit += b.limit;
        for (std::size_t k = 0; k < b.terms.size(); ++k) {
            std::size_t j = 0;
            const auto& f = b.terms[k];
            while (j < out.terms.size() &&
                   !(out.terms[j].rate == f.rate && out.terms[j].freq == f.freq && out.terms[j].sine == f.sine))
                ++j;
            if (j == out.terms.size()) {
                out.terms.push_back(f);
                out.amps.push_back(b.amps[k]);
            } else {
                out.amps[j] += b.amps[k];
            }
        }
        return out;
    };
    return GridFunction(v.grid, v.values + psi.values, merge(*v.left, *psi.left), merge(*v.right, *psi.right));
}

} // namespace detail

// phi = T_lambda(N(phi) - V_lambda w) on mode 0, with T_lambda the minimum-norm inverse of
// (-Delta)^s + V_lambda - p w^{p-1}.
inline BoundState fixedPoint(const KernelTable& tb, const EntireSolution& sol, const PotentialProfile& pot,
                             const GridFunction& W, double lambda, const WeightedNorms& norms,
                             const FixedPointOptions& opt = {}) {
    const ProblemParams& q = sol.params;
    if (tb.mode != 0) throw ContractViolation("fixedPoint: mode-0 kernel table required");
    const auto& g = sol.v.grid;
    const double p = q.p, tau0 = q.tau0();
    BoundState bs;
    bs.lambda = lambda;
    bs.uScale = std::pow(lambda, tau0);

    PotentialProfile shifted = pot;
    shifted.V.values = pot.V.values - W.values;
    const LinearizedSystem sys(tb, shifted, norms);

    const Eigen::VectorXd& v = sol.v.values;
    const Eigen::VectorXd Wv = W.values.cwiseProduct(v);
    auto nonlinear = [&](const Eigen::VectorXd& psi) {
        Eigen::VectorXd out(psi.size());
        for (int i = 0; i < psi.size(); ++i) {
            const double u = v[i] + psi[i];
            if (!(u >= 0.0)) throw LambdaTooLarge("fixedPoint: w + phi lost positivity");
            out[i] = std::pow(u, p) - std::pow(v[i], p) - p * std::pow(v[i], p - 1.0) * psi[i];
        }
        return out;
    };

    struct Stall {};
    Eigen::VectorXd psi;
    LinearizedSolution cur;
    bool converged = false;
    std::string lastFailure = "no convergence within the iteration budget";
    for (double theta : opt.damping) {
        psi = Eigen::VectorXd::Zero(g.size());
        cur = LinearizedSolution{};
        cur.psi = GridFunction(g, psi, Tail{0.0, sys.tails().left, std::vector<double>(sys.tails().left.size(), 0.0)},
                               Tail{0.0, sys.tails().right, {0.0}});
        bs.updates.clear();
        bs.iterations = 0;
        bs.damping = theta;
        double largest = 0.0;
        converged = Wv.cwiseAbs().maxCoeff() == 0.0;
        try {
            for (int it = 0; it < opt.maxIterations && !converged; ++it) {
                LinearizedSolution next = sys.solve(nonlinear(psi) - Wv);
                if (theta != 1.0) {
                    next.psi.values = theta * next.psi.values + (1.0 - theta) * psi;
                    const Tail& nl = *next.psi.left;
                    const Tail& nr = *next.psi.right;
                    next.psi = GridFunction(g, next.psi.values,
                                            Tail{0.0, nl.terms, detail::combineAmps(nl, *cur.psi.left, theta)},
                                            Tail{0.0, nr.terms, detail::combineAmps(nr, *cur.psi.right, theta)});
                    next.starNorm = norms.star(next.psi);
                }
                if (opt.radius && next.starNorm > *opt.radius) {
                    std::ostringstream os;
                    os.precision(6);
                    os << "fixedPoint: iterate left the contraction ball (||phi||_* = " << next.starNorm
                       << " > rho = " << *opt.radius << ") at lambda = " << lambda << "; use a smaller lambda";
                    throw LambdaTooLarge(os.str());
                }
                largest = std::max(largest, next.starNorm);
                const double upd = norms.star(GridFunction(g, next.psi.values - psi));
                if (!std::isfinite(upd)) throw Stall{};
                if (it >= 2 && upd > opt.maxRatio * bs.updates.back()) throw Stall{};
                bs.updates.push_back(upd);
                psi = next.psi.values;
                cur = next;
                bs.iterations = it + 1;
                if (upd <= opt.tolerance * std::max(next.starNorm, 1e-300)) converged = true;
            }
        } catch (const Stall&) {
            lastFailure = "iteration stopped contracting";
            converged = false;
            continue;
        } catch (const LambdaTooLarge& e) {
            if (std::string(e.what()).find("positivity") == std::string::npos) throw;
            lastFailure = "w + phi lost positivity";
            converged = false;
            continue;
        }
        bs.radius = opt.radius ? *opt.radius : largest;
        if (converged) break;
    }
    if (!converged) {
        std::ostringstream os;
        os.precision(6);
        os << "fixedPoint: " << lastFailure << " at lambda = " << lambda << "; use a smaller lambda";
        throw LambdaTooLarge(os.str());
    }

    bs.psi = cur.psi;
    bs.starNorm = norms.star(bs.psi);
    const GridFunction u = detail::addProfiles(sol.v, bs.psi);
    Eigen::VectorXd res = applyOperator(tb, u).values + W.values.cwiseProduct(u.values);
    const Eigen::VectorXd up = u.values.array().pow(p).matrix();
    res -= up;
    bs.residual = res.cwiseAbs().maxCoeff() / up.cwiseAbs().maxCoeff();
    double sup = 0.0;
    for (int i = 0; i < g.size(); ++i) sup = std::max(sup, std::exp(tau0 * g.node(i)) * u.values[i]);
    bs.uSup = bs.uScale * sup;
    return bs;
}

struct SweepEntry {
    double lambda = 0;
    bool ok = false;
    std::string error;
    BoundState state;
};

struct SweepTable {
    std::vector<SweepEntry> entries;
    double slope = std::numeric_limits<double>::quiet_NaN(); // d log ||phi||_* / d log lambda
};

inline SweepTable lambdaSweep(const KernelTable& tb, const EntireSolution& sol, const PotentialProfile& pot,
                              const PotentialSpec& spec, const std::vector<double>& lambdas, const WeightedNorms& norms,
                              const FixedPointOptions& opt = {}) {
    for (std::size_t k = 1; k < lambdas.size(); ++k)
        if (!(lambdas[k] < lambdas[k - 1])) throw DomainError("lambdaSweep: lambdas must be decreasing");
    spec.validate();
    SweepTable tab;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (double lam : lambdas) {
        SweepEntry e;
        e.lambda = lam;
        try {
            e.state = fixedPoint(tb, sol, pot, scalePotential(spec, lam, sol.v.grid), lam, norms, opt);
            e.ok = true;
            if (e.state.starNorm > 0.0) {
                const double x = std::log(lam), y = std::log(e.state.starNorm);
                sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
            }
        } catch (const Error& ex) {
            e.error = ex.what();
        }
        tab.entries.push_back(std::move(e));
    }
    if (n >= 2) tab.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return tab;
}

} // namespace fracle
