#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "fracle/cylinder/kernel.hpp"

namespace fracle {

// Dense affine form of the discrete operator on [node values; tail coefficients].
// Tail coefficient layout: left limit, left amplitudes, right limit, right amplitudes.
struct DiscreteOperator {
    CylinderGrid grid;
    std::vector<TailTerm> leftTerms, rightTerms;
    Eigen::MatrixXd nodes; // (N+1) x (N+1)
    Eigen::MatrixXd tails; // (N+1) x (2 + #left + #right)

    int leftLimitCol() const { return 0; }
    int leftTermCol(int k) const { return 1 + k; }
    int rightLimitCol() const { return 1 + int(leftTerms.size()); }
    int rightTermCol(int k) const { return 2 + int(leftTerms.size()) + k; }

    Eigen::VectorXd tailCoefficients(const GridFunction& u) const {
        if (!u.left || !u.right) throw ContractViolation("applyOperator: tail model missing");
        if (u.left->terms.size() != leftTerms.size() || u.right->terms.size() != rightTerms.size())
            throw ContractViolation("applyOperator: tail shape does not match the assembled operator");
        Eigen::VectorXd th(tails.cols());
        th[leftLimitCol()] = u.left->limit;
        for (std::size_t k = 0; k < leftTerms.size(); ++k) th[leftTermCol(int(k))] = u.left->amps[k];
        th[rightLimitCol()] = u.right->limit;
        for (std::size_t k = 0; k < rightTerms.size(); ++k) th[rightTermCol(int(k))] = u.right->amps[k];
        return th;
    }

    Eigen::VectorXd apply(const GridFunction& u) const { return nodes * u.values + tails * tailCoefficients(u); }
};

namespace detail {

// sum_{k > K} e^{-kappa k h} f(x_k), x_k = (k - i) h, f = e^{-r x} (cos|sin)(w x)
inline double tailRemainder(double kappa, double h, int K, int i, const TailTerm* f) {
    if (!f) return std::exp(-kappa * (K + 1) * h) / -std::expm1(-kappa * h);
    const std::complex<double> lam(-f->rate, f->freq);
    const std::complex<double> zlog = (-kappa + lam) * h;
    const std::complex<double> v = std::exp(-lam * double(i) * h + double(K + 1) * zlog) / (1.0 - std::exp(zlog));
    return f->sine ? v.imag() : v.real();
}

} // namespace detail

inline DiscreteOperator assembleOperator(const KernelTable& tb, const CylinderGrid& grid,
                                         const std::vector<TailTerm>& leftTerms,
                                         const std::vector<TailTerm>& rightTerms) {
    if (std::abs(grid.h - tb.h) > 1e-14 * tb.h) throw ContractViolation("assembleOperator: grid spacing differs from the table");
    const int N = grid.last();
    if (tb.kRight < N || tb.kLeft < N) throw ContractViolation("assembleOperator: kernel table shorter than the window");
    DiscreteOperator op;
    op.grid = grid;
    op.leftTerms = leftTerms;
    op.rightTerms = rightTerms;
    const int nl = int(leftTerms.size()), nr = int(rightTerms.size());
    op.nodes = Eigen::MatrixXd::Zero(N + 1, N + 1);
    op.tails = Eigen::MatrixXd::Zero(N + 1, 2 + nl + nr);
    const double h = grid.h, c = tb.c;
    const double diag = c * tb.totalWeight() + tb.betaM;
    const double gam = c * tb.correction();
    // 5-point stencils for 2a u' - u''
    const double d1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    const double d2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

    parallelFor(N + 1, [&](int i) {
        auto addVirtual = [&](int j, double coef) {
            if (j < 0) {
                const double x = -j * h;
                op.tails(i, op.leftLimitCol()) += coef;
                for (int q = 0; q < nl; ++q) op.tails(i, op.leftTermCol(q)) += coef * leftTerms[q](x);
            } else {
                const double x = (j - N) * h;
                op.tails(i, op.rightLimitCol()) += coef;
                for (int q = 0; q < nr; ++q) op.tails(i, op.rightTermCol(q)) += coef * rightTerms[q](x);
            }
        };
        for (int j = 0; j <= N; ++j)
            if (j != i) op.nodes(i, j) = -c * tb.weight(i - j);
        op.nodes(i, i) = diag;
        // virtual nodes on the left: lag k = i - j > i
        for (int j = -1; i - j <= tb.kRight; --j) addVirtual(j, -c * tb.weight(i - j));
        // virtual nodes on the right: lag k = i - j < 0
        for (int j = N + 1; j - i <= tb.kLeft; ++j) addVirtual(j, -c * tb.weight(i - j));
        // beyond the table: K(l) ~ amp e^{-decay |l|}
        {
            const double f = -c * h * tb.ampRight;
            op.tails(i, op.leftLimitCol()) += f * detail::tailRemainder(tb.decayRight, h, tb.kRight, 0, nullptr);
            for (int q = 0; q < nl; ++q)
                op.tails(i, op.leftTermCol(q)) += f * detail::tailRemainder(tb.decayRight, h, tb.kRight, i, &leftTerms[q]);
            const double g = -c * h * tb.ampLeft;
            op.tails(i, op.rightLimitCol()) += g * detail::tailRemainder(tb.decayLeft, h, tb.kLeft, 0, nullptr);
            for (int q = 0; q < nr; ++q)
                op.tails(i, op.rightTermCol(q)) +=
                    g * detail::tailRemainder(tb.decayLeft, h, tb.kLeft, N - i, &rightTerms[q]);
        }
        for (int d = -2; d <= 2; ++d) {
            const double coef = gam * (2.0 * tb.tilt * d1[d + 2] / h - d2[d + 2] / (h * h));
            const int j = i + d;
            if (j < 0 || j > N)
                addVirtual(j, coef);
            else
                op.nodes(i, j) += coef;
        }
    });
    return op;
}

inline DiscreteOperator assembleOperator(const KernelTable& tb, const GridFunction& shape) {
    if (!shape.left || !shape.right) throw ContractViolation("assembleOperator: tail model missing");
    return assembleOperator(tb, shape.grid, shape.left->terms, shape.right->terms);
}

// P u at the grid nodes.
inline GridFunction applyOperator(const KernelTable& tb, const GridFunction& u) {
    u.checkTails();
    const DiscreteOperator op = assembleOperator(tb, u);
    return GridFunction(u.grid, op.apply(u));
}

} // namespace fracle
