#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <math.h>

#include <boost/math/interpolators/pchip.hpp>

#include "fracle/ball/green.hpp"
#include "fracle/cylinder/grid.hpp"

namespace fracle {

struct BranchState {
    double lambda = 0;
    Eigen::VectorXd w;
    double supNorm = 0;
    double arcLength = 0;
    double dLambda = 0; // lambda component of the unit tangent
    double residual = 0;
};

struct FoldInfo {
    int index = 0;          // state after the sign change of d lambda / ds
    double lambdaStar = 0;  // vertex of the quadratic fit
    double supNorm = 0;
    bool maximum = true;
};

struct BranchResult {
    std::vector<BranchState> states;
    std::vector<FoldInfo> folds;
};

struct PicardOptions {
    double tolerance = 1e-10;
    int maxIterations = 10000;
    double ceiling = 1e8;
};

struct PicardReport {
    int iterations = 0;
    bool monotone = true;
};

inline double branchResidual(const RadialGreenOperator& op, double p, double lambda, const Eigen::VectorXd& w) {
    const Eigen::VectorXd f = (1.0 + w.array()).pow(p).matrix();
    return (w - lambda * op.G * f).cwiseAbs().maxCoeff();
}

// Picard iteration w <- lambda G (1+w)^p from w = 0.
inline BranchState minimalBranch(const RadialGreenOperator& op, double p, double lambda, const PicardOptions& opt = {},
                                 PicardReport* report = nullptr) {
    if (!(lambda >= 0.0)) throw DomainError("minimalBranch: lambda must be non-negative");
    const int M = op.grid.size();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(M);
    PicardReport rep;
    for (int it = 0; it < opt.maxIterations; ++it) {
        const Eigen::VectorXd next = lambda * op.G * (1.0 + w.array()).pow(p).matrix();
        if ((next.array() < w.array() - 1e-14 * (1.0 + w.array().abs())).any()) rep.monotone = false;
        const double upd = (next - w).cwiseAbs().maxCoeff();
        const double sc = next.cwiseAbs().maxCoeff();
        w = next;
        rep.iterations = it + 1;
        if (!(sc <= opt.ceiling)) {
            std::ostringstream os;
            os << "minimalBranch: iterates exceed " << opt.ceiling << " at lambda = " << lambda
               << "; lambda lies beyond the minimal branch";
            throw NumericalError(os.str());
        }
        if (upd <= opt.tolerance * std::max(sc, 1e-300) || sc == 0.0) break;
        if (it + 1 == opt.maxIterations) {
            std::ostringstream os;
            os << "minimalBranch: no convergence in " << opt.maxIterations << " iterations at lambda = " << lambda;
            throw NumericalError(os.str());
        }
    }
    if (report) *report = rep;
    BranchState st;
    st.lambda = lambda;
    st.w = w;
    st.supNorm = w[0];
    st.residual = branchResidual(op, p, lambda, w);
    return st;
}

struct ContinuationOptions {
    double initialStep = 0.05;
    double minStep = 1e-9;
    double growth = 1.4;
    double tolerance = 1e-9; // sup-norm residual
    int maxNewton = 8;
    int maxSteps = 20000;
    double maxRelativeStep = 0.3; // cap on ds relative to 1 + supNorm
};

namespace detail {

struct Bordered {
    Eigen::MatrixXd A;
    Eigen::VectorXd Jl;
};

inline Bordered branchJacobian(const RadialGreenOperator& op, double p, double lambda, const Eigen::VectorXd& w) {
    const int M = int(w.size());
    Bordered b;
    const Eigen::ArrayXd base = 1.0 + w.array();
    const Eigen::VectorXd dp = (p * base.pow(p - 1.0)).matrix();
    b.A = Eigen::MatrixXd::Identity(M, M);
    b.A.noalias() -= lambda * op.G * dp.asDiagonal();
    b.Jl = -(op.G * base.pow(p).matrix());
    return b;
}

// Solves [A Jl; tw' tl] x = rhs.
inline Eigen::VectorXd borderedSolve(const Bordered& J, const Eigen::VectorXd& tw, double tl, const Eigen::VectorXd& rhs) {
    const int M = int(J.A.rows());
    Eigen::MatrixXd K(M + 1, M + 1);
    K.topLeftCorner(M, M) = J.A;
    K.topRightCorner(M, 1) = J.Jl;
    K.bottomLeftCorner(1, M) = tw.transpose();
    K(M, M) = tl;
    return K.partialPivLu().solve(rhs);
}

inline double vertex(double s0, double l0, double s1, double l1, double s2, double l2, double fallback) {
    // quadratic through three points; value at the stationary point
    const double d01 = (l1 - l0) / (s1 - s0), d12 = (l2 - l1) / (s2 - s1);
    const double a = (d12 - d01) / (s2 - s0);
    if (!(std::abs(a) > 0.0)) return fallback;
    const double b = d01 - a * (s0 + s1);
    const double sv = -b / (2.0 * a);
    if (sv < std::min(s0, s2) || sv > std::max(s0, s2)) return fallback;
    return l0 + (sv - s0) * (b + a * (sv + s0));
}

} // namespace detail

// Pseudo-arclength continuation of w - lambda G (1+w)^p = 0 until supNorm >= target.
inline BranchResult continueBranch(const RadialGreenOperator& op, double p, const BranchState& start, double target,
                                   const ContinuationOptions& opt = {}) {
    const int M = int(start.w.size());
    const double inv = 1.0 / M; // w enters the arclength as an rms
    BranchResult res;
    BranchState cur = start;
    cur.residual = branchResidual(op, p, cur.lambda, cur.w);

    Eigen::VectorXd tw = Eigen::VectorXd::Zero(M);
    double tl = 1.0;
    auto newTangent = [&](const BranchState& st, const Eigen::VectorXd& pw, double pl) {
        const auto J = detail::branchJacobian(op, p, st.lambda, st.w);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M + 1);
        rhs[M] = 1.0;
        Eigen::VectorXd z = detail::borderedSolve(J, pw * inv, pl, rhs);
        const double nrm = std::sqrt(z.head(M).squaredNorm() * inv + z[M] * z[M]);
        z /= nrm;
        tw = z.head(M);
        tl = z[M];
    };
    newTangent(cur, tw, tl);
    cur.dLambda = tl;
    res.states.push_back(cur);

    double ds = opt.initialStep;
    for (int step = 0; step < opt.maxSteps && cur.supNorm < target; ++step) {
        bool ok = false;
        BranchState nxt;
        int its = 0;
        while (!ok) {
            ds = std::min(ds, opt.maxRelativeStep * (1.0 + cur.supNorm));
            if (ds < opt.minStep) {
                std::ostringstream os;
                os.precision(12);
                os << "continueBranch: Newton failed at minimum step; last good state lambda = " << cur.lambda
                   << ", supNorm = " << cur.supNorm;
                throw ContinuationError(os.str());
            }
            Eigen::VectorXd w = cur.w + ds * tw;
            double lam = cur.lambda + ds * tl;
            ok = false;
            for (its = 1; its <= opt.maxNewton; ++its) {
                const auto J = detail::branchJacobian(op, p, lam, w);
                Eigen::VectorXd rhs(M + 1);
                rhs.head(M) = -(w + lam * J.Jl);
                rhs[M] = -((w - cur.w).dot(tw) * inv + (lam - cur.lambda) * tl - ds);
                const Eigen::VectorXd d = detail::borderedSolve(J, tw * inv, tl, rhs);
                w += d.head(M);
                lam += d[M];
                if (!w.allFinite() || (1.0 + w.array() <= 0.0).any() || !(lam > 0.0)) break;
                const double r = branchResidual(op, p, lam, w);
                if (r <= opt.tolerance) {
                    ok = true;
                    nxt.w = w;
                    nxt.lambda = lam;
                    nxt.residual = r;
                    break;
                }
            }
            if (!ok) ds *= 0.5;
        }
        nxt.supNorm = nxt.w[0];
        nxt.arcLength = cur.arcLength + ds;
        newTangent(nxt, tw, tl);
        nxt.dLambda = tl;
        res.states.push_back(nxt);
        cur = nxt;
        if (its <= 3) ds *= opt.growth;
    }
    if (cur.supNorm < target) throw ContinuationError("continueBranch: step budget exhausted before reaching the target");

    const auto& S = res.states;
    for (int i = 1; i < int(S.size()); ++i) {
        if ((S[i - 1].dLambda > 0.0) == (S[i].dLambda > 0.0)) continue;
        const int j = (i + 1 < int(S.size())) ? i + 1 : i - 2;
        FoldInfo f;
        f.index = i;
        f.maximum = S[i - 1].dLambda > 0.0;
        const double fb = f.maximum ? std::max(S[i - 1].lambda, S[i].lambda) : std::min(S[i - 1].lambda, S[i].lambda);
        f.lambdaStar = j >= 0 ? detail::vertex(S[i - 1].arcLength, S[i - 1].lambda, S[i].arcLength, S[i].lambda,
                                               S[j].arcLength, S[j].lambda, fb)
                              : fb;
        if (j < i) f.lambdaStar = fb;
        f.supNorm = 0.5 * (S[i - 1].supNorm + S[i].supNorm);
        res.folds.push_back(f);
    }
    return res;
}

struct BlowUpProfile {
    GridFunction v;              // cylinder representation, value e^{-tau0 t} near t = +T
    double m = 0;                // sup-norm of the ball solution
    double lambda = 0;
    double scale = 0;            // R = (lambda m^{p-1})^{1/(2s)}, so that W(0) = 1
    double paperScale = 0;       // m^{(p-1)/(2s)}
    double paperValueAtZero = 0; // lambda^{1/(p-1)}: W(0) under the unnormalized rescaling
    std::vector<double> r, W;    // physical profile W(r) = w(r / R) / m at ball nodes
};

// W(y) = w(y/R)/m solves (-Delta)^s W = (1/m + W)^p on |y| < R with W(0) = 1.
inline BlowUpProfile blowUpRescale(const ProblemParams& q, const BallGrid& ball, const BranchState& st,
                                   const CylinderGrid& cyl, double rhoCut = 0.05) {
    if (!(st.supNorm >= 100.0)) throw PreconditionError("blowUpRescale: sup-norm must be at least 1e2");
    BlowUpProfile out;
    const double m = st.supNorm, tau0 = q.tau0();
    out.m = m;
    out.lambda = st.lambda;
    out.scale = std::pow(st.lambda * std::pow(m, q.p - 1.0), 1.0 / (2.0 * q.s));
    out.paperScale = std::pow(m, (q.p - 1.0) / (2.0 * q.s));
    out.paperValueAtZero = std::pow(st.lambda, 1.0 / (q.p - 1.0));
    for (int k = 0; k < ball.size(); ++k) {
        out.r.push_back(ball.r[k] * out.scale);
        out.W.push_back(st.w[k] / m);
    }
    std::vector<double> x, y;
    for (int k = 1; k < ball.size(); ++k) {
        x.push_back(std::log(ball.r[k]));
        y.push_back(st.w[k] / m);
    }
    auto interp = boost::math::interpolators::pchip<std::vector<double>>(std::move(x), std::move(y));
    const double rho1 = ball.r[1];
    auto Wof = [&](double rho) {
        if (rho <= rho1) return (st.w[0] + (st.w[1] - st.w[0]) * rho / rho1) / m;
        return interp(std::log(rho));
    };
    Eigen::VectorXd v(cyl.size());
    const double tCut = -std::log(rhoCut * out.scale);
    int iCut = 0;
    while (iCut < cyl.last() && cyl.node(iCut) < tCut) ++iCut;
    for (int i = 0; i < cyl.size(); ++i) {
        const double t = std::max(cyl.node(i), cyl.node(iCut));
        v[i] = std::exp(-tau0 * t) * Wof(std::exp(-t) / out.scale);
    }
    Tail L{v[0], {}, {}};
    Tail R{0.0, {TailTerm{tau0, 0.0, false}}, {v[cyl.last()]}};
    out.v = GridFunction(cyl, v, L, R);
    return out;
}

} // namespace fracle
