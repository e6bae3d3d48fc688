#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fracle/entire/solve.hpp"

namespace fracle {

// V = p v^{p-1} = r^{2s} p w^{p-1} on the cylinder.
struct PotentialProfile {
    ProblemParams params;
    GridFunction V;
    double fittedDecay = 0; // slope of -log V on [T/2, T]
};

inline PotentialProfile buildPotential(const EntireSolution& sol) {
    const ProblemParams& q = sol.params;
    const auto& v = sol.v;
    const double p = q.p;
    PotentialProfile out;
    out.params = q;
    Eigen::VectorXd V = (p * v.values.array().pow(p - 1.0)).matrix();
    const double Lv = v.left->limit, Lp = p * std::pow(Lv, p - 1.0);
    Tail left{Lp, v.left->terms, v.left->amps};
    const double dv = v.values[0] - Lv;
    const double k = dv != 0.0 ? (V[0] - Lp) / dv : 0.0;
    for (double& a : left.amps) a *= k;
    if (dv == 0.0) left.limit = V[0];
    Tail right{0.0, {TailTerm{2.0 * q.s, 0.0, false}}, {V[V.size() - 1]}};
    out.V = GridFunction(v.grid, V, left, right);
    const auto& g = v.grid;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (int i = 0; i < g.size(); ++i) {
        const double t = g.node(i);
        if (t < 0.5 * g.T) continue;
        const double y = std::log(V[i]);
        st += t, sy += y, stt += t * t, sty += t * y, ++n;
    }
    out.fittedDecay = -(n * sty - st * sy) / (n * stt - st * st);
    return out;
}

// Norms of the solvability frame. In the cylinder gauge psi = r^{tau0} phi (and
// h~ = r^{tau0+2s} h) both reduce to sup_{t<=0}|f| + sup_{t>=0} e^{(tau0-sigma)t}|f|.
struct WeightedNorms {
    double sigma = 0;
    double tau0 = 0;
    double s = 0;

    static WeightedNorms make(const ProblemParams& q, std::optional<double> sigma = {}) {
        WeightedNorms w;
        w.tau0 = q.tau0();
        w.s = q.s;
        const double hi = std::min(w.tau0, q.n - 2.0 * q.s);
        w.sigma = sigma ? *sigma : 0.45 * hi;
        if (!(w.sigma > 0.0 && w.sigma < hi)) throw DomainError("WeightedNorms: sigma must lie in (0, min(tau0, n-2s))");
        return w;
    }

    double weight(double t) const { return t > 0.0 ? std::exp((tau0 - sigma) * t) : 1.0; }

    double cylinder(const GridFunction& f) const {
        double inner = 0.0, outer = 0.0;
        for (int i = 0; i < f.grid.size(); ++i) {
            const double t = f.grid.node(i), a = std::abs(f.values[i]);
            if (t >= 0.0) inner = std::max(inner, weight(t) * a);
            if (t <= 0.0) outer = std::max(outer, a);
        }
        if (f.left) outer = std::max(outer, std::abs(f.left->limit));
        return inner + outer;
    }
    double star(const GridFunction& psi) const { return cylinder(psi); }
    double starStar(const GridFunction& htilde) const { return cylinder(htilde); }

    // physical-space forms on radial samples
    double starPhysical(const std::vector<double>& r, const std::vector<double>& f) const {
        return physical(r, f, sigma, tau0);
    }
    double starStarPhysical(const std::vector<double>& r, const std::vector<double>& f) const {
        return physical(r, f, sigma + 2.0 * s, tau0 + 2.0 * s);
    }

private:
    static double physical(const std::vector<double>& r, const std::vector<double>& f, double a, double b) {
        double inner = 0.0, outer = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r[i] <= 1.0) inner = std::max(inner, std::pow(r[i], a) * std::abs(f[i]));
            if (r[i] >= 1.0) outer = std::max(outer, std::pow(r[i], b) * std::abs(f[i]));
        }
        return inner + outer;
    }
};

// d/dt on the grid by 5-point differences of j -> f(j); j may leave 0..N.
template <class F> Eigen::VectorXd gridDerivative(const CylinderGrid& g, F&& f) {
    Eigen::VectorXd d(g.size());
    for (int i = 0; i < d.size(); ++i) d[i] = (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * g.h);
    return d;
}

inline Eigen::VectorXd gridDerivative(const GridFunction& u) {
    return gridDerivative(u.grid, [&](int j) { return u.atIndex(j); });
}

namespace detail {

// amplitudes of d/dx of sum a_k e^{-r x}(cos|sin)(w x) in the same basis
inline std::vector<double> tailDerivativeAmps(const Tail& t) {
    std::vector<double> out(t.amps.size(), 0.0);
    for (std::size_t k = 0; k < t.terms.size(); ++k) out[k] = -t.terms[k].rate * t.amps[k];
    for (std::size_t k = 0; k < t.terms.size(); ++k) {
        const auto& f = t.terms[k];
        if (f.freq == 0.0 || f.sine) continue;
        std::size_t j = 0;
        while (j < t.terms.size() && !(t.terms[j].sine && t.terms[j].rate == f.rate && t.terms[j].freq == f.freq)) ++j;
        if (j == t.terms.size()) throw ContractViolation("tailDerivativeAmps: oscillatory term without its partner");
        out[k] += f.freq * t.amps[j];
        out[j] -= f.freq * t.amps[k];
    }
    return out;
}

inline Tail continuous(Tail t, double boundaryValue) {
    double at0 = t.limit;
    int dep = -1;
    for (std::size_t k = 0; k < t.terms.size(); ++k) {
        at0 += t.amps[k] * t.terms[k](0.0);
        if (dep < 0 && t.terms[k](0.0) != 0.0) dep = int(k);
    }
    if (dep >= 0) t.amps[dep] += boundaryValue - at0;
    return t;
}

} // namespace detail

// Scaling kernel z0 = r w' + tau0 w in the cylinder gauge: -v'(t).
inline GridFunction scalingKernel(const EntireSolution& sol) {
    const auto& v = sol.v;
    Eigen::VectorXd z = -gridDerivative(v);
    // left: x = -T - t so -d/dt = d/dx
    Tail L{0.0, v.left->terms, detail::tailDerivativeAmps(*v.left)};
    // right: x = t - T so -d/dt = -d/dx
    Tail R{0.0, v.right->terms, detail::tailDerivativeAmps(*v.right)};
    for (double& a : R.amps) a = -a;
    return GridFunction(v.grid, z, detail::continuous(L, z[0]), detail::continuous(R, z[z.size() - 1]));
}

// Translation kernel w'(r) in the mode-1 gauge r^{tau0} w' = -e^t (tau0 v + v').
inline GridFunction translationKernel(const EntireSolution& sol) {
    const auto& v = sol.v;
    const auto& g = v.grid;
    const double tau0 = sol.params.tau0();
    // differentiate u = e^{tau0 t} v = w(e^{-t}), which is flat toward the origin
    const Eigen::VectorXd du = gridDerivative(g, [&](int j) { return std::exp(tau0 * (-g.T + j * g.h)) * v.atIndex(j); });
    Eigen::VectorXd z(g.size());
    for (int i = 0; i < g.size(); ++i) z[i] = -std::exp((1.0 - tau0) * g.node(i)) * du[i];
    // left: e^t = e^{-T} e^{-x}, v' = -dv/dx
    const auto& lt = *v.left;
    const auto da = detail::tailDerivativeAmps(lt);
    Tail L{0.0, {TailTerm{1.0, 0.0, false}}, {-std::exp(-g.T) * tau0 * lt.limit}};
    for (std::size_t k = 0; k < lt.terms.size(); ++k) {
        TailTerm f = lt.terms[k];
        f.rate += 1.0;
        L.terms.push_back(f);
        L.amps.push_back(-std::exp(-g.T) * (tau0 * lt.amps[k] - da[k]));
    }
    Tail R{0.0, {TailTerm{tau0 + 1.0, 0.0, false}}, {0.0}};
    return GridFunction(g, z, detail::continuous(L, z[0]), detail::continuous(R, z[z.size() - 1]));
}

// (P_m - V) u at the nodes.
inline Eigen::VectorXd applyLinearized(const KernelTable& tb, const PotentialProfile& pot, const GridFunction& u) {
    const auto Pu = applyOperator(tb, u);
    return Pu.values - pot.V.values.cwiseProduct(u.values);
}

struct KernelResidualReport {
    GridFunction z0, w1;
    double z0Residual = 0, w1Residual = 0; // sup of the discrete residual
    double z0Scale = 0, w1Scale = 0;       // sup of the kernel itself
};

inline KernelResidualReport kernelResiduals(const KernelTable& mode0, const KernelTable& mode1,
                                            const PotentialProfile& pot, const EntireSolution& sol) {
    if (mode0.mode != 0 || mode1.mode != 1) throw ContractViolation("kernelResiduals: tables for modes 0 and 1 required");
    KernelResidualReport rep;
    rep.z0 = scalingKernel(sol);
    rep.w1 = translationKernel(sol);
    rep.z0Residual = applyLinearized(mode0, pot, rep.z0).cwiseAbs().maxCoeff();
    rep.w1Residual = applyLinearized(mode1, pot, rep.w1).cwiseAbs().maxCoeff();
    rep.z0Scale = rep.z0.values.cwiseAbs().maxCoeff();
    rep.w1Scale = rep.w1.values.cwiseAbs().maxCoeff();
    return rep;
}

// Tail models of decaying solutions of the mode-m problem.
struct ModeTails {
    std::vector<TailTerm> left, right;
};

inline ModeTails decayingTails(const ProblemParams& q, int m) {
    ModeTails mt;
    const auto c = computeConstants(q);
    for (const auto& r : admissibleLeftRates(q, indicialRoots(q, c, m))) {
        mt.left.push_back({r.rate, r.freq, false});
        if (r.freq != 0.0) mt.left.push_back({r.rate, r.freq, true});
    }
    if (mt.left.empty()) throw DomainError("decayingTails: no decaying behaviour at infinity for this mode");
    mt.right.push_back({q.tau0() + m, 0.0, false});
    return mt;
}

// (n+2s-1)/(n-2s-1): below it mode 1 needs orthogonality to w'.
inline double orthogonalityThreshold(const ProblemParams& q) {
    const double d = q.n - 2.0 * q.s - 1.0;
    return d > 0.0 ? (q.n + 2.0 * q.s - 1.0) / d : std::numeric_limits<double>::infinity();
}

// Trapezoid form of int h w' dx in the cylinder gauge; returns the Cauchy-Schwarz ratio.
inline double orthogonalityRatio(const ProblemParams& q, const Eigen::VectorXd& htilde, const GridFunction& w1) {
    const auto& g = w1.grid;
    const double e = q.n - 2.0 * q.tau0() - 2.0 * q.s;
    double hw = 0, hh = 0, ww = 0;
    for (int i = 0; i < g.size(); ++i) {
        const double c = (i == 0 || i == g.last() ? 0.5 : 1.0) * std::exp(-e * g.node(i));
        hw += c * htilde[i] * w1.values[i];
        hh += c * htilde[i] * htilde[i];
        ww += c * w1.values[i] * w1.values[i];
    }
    return (hh > 0 && ww > 0) ? std::abs(hw) / std::sqrt(hh * ww) : 0.0;
}

struct LinearizedOptions {
    bool projectKernel = false;       // mode 1: remove the discrete translation component from the load
    double orthogonalityTol = 1e-4;   // Cauchy-Schwarz ratio above which the load is not orthogonal to w'
    double conditionFloor = 1e-12;
};

struct LinearizedSolution {
    int mode = 0;
    GridFunction psi;            // cylinder gauge, psi = r^{tau0} phi
    double starNorm = 0;
    double starStarNorm = 0;
    double cEstimate = 0;        // starNorm / starStarNorm
    double residual = 0;         // sup |L psi - h~| / sup |h~|
    double smallestSingular = 0; // of the weighted discrete system
    double projected = 0;        // removed load component (mode 1 with projection)
};

// Discrete (P_m - V) on functions with decaying tails at both ends, factored once.
// Unknowns: psi_0..psi_N and the left amplitudes beyond the one fixed by continuity.
class LinearizedSystem {
public:
    LinearizedSystem(const KernelTable& tb, const PotentialProfile& pot, const WeightedNorms& norms)
        : q_(pot.params), mode_(tb.mode), grid_(pot.V.grid), norms_(norms), tails_(decayingTails(q_, mode_)) {
        const int N = grid_.last();
        const DiscreteOperator P = assembleOperator(tb, grid_, tails_.left, tails_.right);
        nf_ = int(tails_.left.size()) - 1;
        const int cols = N + 1 + nf_;
        J_.resize(N + 1, cols);
        J_.leftCols(N + 1) = P.nodes;
        J_.leftCols(N + 1).diagonal() -= pot.V.values;
        J_.col(0) += P.tails.col(P.leftTermCol(0));
        J_.col(N) += P.tails.col(P.rightTermCol(0));
        for (int k = 0; k < nf_; ++k)
            J_.col(N + 1 + k) = P.tails.col(P.leftTermCol(k + 1)) - tails_.left[k + 1](0.0) * P.tails.col(P.leftTermCol(0));
        D_.resize(cols);
        for (int i = 0; i <= N; ++i) D_[i] = norms_.weight(grid_.node(i));
        for (int k = 0; k < nf_; ++k) D_[N + 1 + k] = 1.0;
        svd_.compute(J_ * D_.cwiseInverse().asDiagonal(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        // without a spare decaying tail the mode-1 system inherits the translation kernel;
        // this is the case p <= (n+2s-1)/(n-2s-1)
        needsOrthogonality_ = mode_ == 1 && nf_ == 0;
        rank_ = int(svd_.singularValues().size()) - (needsOrthogonality_ ? 1 : 0);
    }

    int mode() const { return mode_; }
    bool needsOrthogonality() const { return needsOrthogonality_; }
    double smallestSingular() const { return svd_.singularValues()[rank_ - 1]; }
    double largestSingular() const { return svd_.singularValues()[0]; }
    const ModeTails& tails() const { return tails_; }

    LinearizedSolution solve(const Eigen::VectorXd& htilde, const GridFunction* translation = nullptr,
                             const LinearizedOptions& opt = {}) const {
        const int N = grid_.last();
        if (htilde.size() != grid_.size()) throw ContractViolation("solveLinearized: load size does not match the grid");
        LinearizedSolution out;
        out.mode = mode_;
        Eigen::VectorXd b = htilde;
        if (needsOrthogonality_ && !opt.projectKernel) {
            if (!translation)
                throw ContractViolation("solveLinearized: mode 1 below the threshold needs the translation kernel");
            const double ratio = orthogonalityRatio(q_, htilde, *translation);
            if (ratio > opt.orthogonalityTol) {
                std::ostringstream os;
                os << "solveLinearized: mode-1 load is not orthogonal to w' (ratio " << ratio
                   << "); for p <= (n+2s-1)/(n-2s-1) solvability requires int h dw/dx_i = 0";
                throw SolvabilityError(os.str());
            }
        }
        if (needsOrthogonality_) {
            const Eigen::VectorXd u = svd_.matrixU().col(rank_);
            out.projected = u.dot(b);
            b -= out.projected * u;
        }
        const auto& sv = svd_.singularValues();
        out.smallestSingular = sv[rank_ - 1];
        if (!(sv[rank_ - 1] > opt.conditionFloor * sv[0])) {
            std::ostringstream os;
            os << "solveLinearized: discrete mode-" << mode_ << " system is singular (sigma_min / sigma_max = "
               << sv[rank_ - 1] / sv[0] << ")";
            if (mode_ == 1) {
                os << "; the translation kernel was not projected out";
                throw SolvabilityError(os.str());
            }
            throw ConditioningError(os.str());
        }
        const Eigen::VectorXd Ub = svd_.matrixU().leftCols(rank_).transpose() * b;
        const Eigen::VectorXd y = svd_.matrixV().leftCols(rank_) * Ub.cwiseQuotient(sv.head(rank_));
        const Eigen::VectorXd x = y.cwiseQuotient(D_);

        const int nl = nf_ + 1;
        Eigen::VectorXd psi = x.head(N + 1);
        std::vector<double> amps(nl, 0.0);
        double rest = psi[0];
        for (int k = 0; k < nf_; ++k) {
            amps[k + 1] = x[N + 1 + k];
            rest -= amps[k + 1] * tails_.left[k + 1](0.0);
        }
        amps[0] = rest;
        out.psi = GridFunction(grid_, psi, Tail{0.0, tails_.left, amps}, Tail{0.0, tails_.right, {psi[N]}});
        out.residual = (J_ * x - b).cwiseAbs().maxCoeff() / std::max(htilde.cwiseAbs().maxCoeff(), 1e-300);
        out.starNorm = norms_.star(out.psi);
        out.starStarNorm = norms_.starStar(GridFunction(grid_, htilde));
        out.cEstimate = out.starNorm / out.starStarNorm;
        return out;
    }

private:
    ProblemParams q_;
    int mode_;
    CylinderGrid grid_;
    WeightedNorms norms_;
    ModeTails tails_;
    int nf_ = 0;
    Eigen::MatrixXd J_;
    Eigen::VectorXd D_;
    Eigen::BDCSVD<Eigen::MatrixXd> svd_;
    bool needsOrthogonality_ = false;
    int rank_ = 0;
};

// Minimum weighted-norm solution of (P_m - V) psi = h~ with decaying tails at both ends.
inline LinearizedSolution solveLinearized(const KernelTable& tb, const PotentialProfile& pot, const Eigen::VectorXd& htilde,
                                          const WeightedNorms& norms, const GridFunction* translation = nullptr,
                                          const LinearizedOptions& opt = {}) {
    return LinearizedSystem(tb, pot, norms).solve(htilde, translation, opt);
}

// Load h~ = r^{tau0+2s} h(r) on the grid.
template <class F> Eigen::VectorXd cylinderLoad(const ProblemParams& q, const CylinderGrid& g, F&& h) {
    Eigen::VectorXd out(g.size());
    for (int i = 0; i < g.size(); ++i) {
        const double r = std::exp(-g.node(i));
        out[i] = std::pow(r, q.tau0() + 2.0 * q.s) * h(r);
    }
    return out;
}

struct DecayReport {
    double rightRate = 0;         // fitted decay of |psi| on [T/4, T/2]
    double expectedRightRate = 0; // tau0 + m
    ExponentFit left;             // fit of psi as t -> -infinity
    double physicalExponent = 0;  // -tau0 - left.sigma: exponent of phi in r at infinity
    double expectedExponent = 0;  // slowest admissible decay from the indicial roots
    double interiorWeighted = 0;  // sup_{t >= 0} e^{(tau0 - sigma) t} |psi|
};

inline DecayReport decayFit(const ProblemParams& q, int m, const GridFunction& psi, const WeightedNorms& norms) {
    DecayReport rep;
    const auto& g = psi.grid;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (int i = 0; i < g.size(); ++i) {
        const double t = g.node(i);
        if (t >= 0.0) rep.interiorWeighted = std::max(rep.interiorWeighted, norms.weight(t) * std::abs(psi.values[i]));
        if (t < 0.25 * g.T || t > 0.5 * g.T || psi.values[i] == 0.0) continue;
        const double y = std::log(std::abs(psi.values[i]));
        st += t, sy += y, stt += t * t, sty += t * y, ++n;
    }
    rep.rightRate = n > 2 ? -(n * sty - st * sy) / (n * stt - st * st) : 0.0;
    rep.expectedRightRate = q.tau0() + m;

    double scale = psi.values.cwiseAbs().maxCoeff(), floor = 1e-11 * scale;
    int first = 0;
    while (first < g.last() && std::abs(psi.values[first]) < floor) ++first;
    double t0 = std::max(-g.T, g.node(first)), t1 = -0.5 * g.T;
    if (t1 - t0 < 12 * 4 * g.h) t1 = t0 + 0.25 * g.T;
    // a third mode only when it explains the data markedly better
    rep.left = pronyFit(psi, t0, t1, 4, 2, false);
    const ExponentFit three = pronyFit(psi, t0, t1, 4, 3, false);
    if (three.ok && (!rep.left.ok || three.rms < 1e-2 * rep.left.rms)) rep.left = three;
    rep.physicalExponent = -q.tau0() - rep.left.sigma;
    const auto c = computeConstants(q);
    double slow = std::numeric_limits<double>::infinity();
    for (const auto& r : admissibleLeftRates(q, indicialRoots(q, c, m))) slow = std::min(slow, r.rate);
    rep.expectedExponent = -q.tau0() - slow;
    return rep;
}

} // namespace fracle
