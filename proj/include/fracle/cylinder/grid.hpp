#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "fracle/errors.hpp"

namespace fracle {

// Uniform grid t_i = -T + i h, i = 0..N, in t = -log r.
struct CylinderGrid {
    double T = 20.0;
    double h = 0.05;
    int intervals = 800;

    static CylinderGrid make(double T, double h) {
        if (!(T > 0.0) || !(h > 0.0)) throw DomainError("CylinderGrid: T and h must be positive");
        const double q = 2.0 * T / h;
        const double k = std::round(q);
        if (std::abs(q - k) > 1e-9 * q) throw DomainError("CylinderGrid: 2T/h must be an integer");
        if (k + 1 < 64) throw DomainError("CylinderGrid: at least 64 nodes required");
        return CylinderGrid{T, h, int(k)};
    }

    int size() const { return intervals + 1; }
    double node(int i) const { return -T + i * h; }
    int last() const { return intervals; }
};

// Outward basis function e^{-rate x} cos(freq x) (or sin), x = distance beyond the end node.
struct TailTerm {
    double rate = 0;
    double freq = 0;
    bool sine = false;

    double operator()(double x) const {
        const double e = std::exp(-rate * x);
        if (freq == 0.0) return sine ? 0.0 : e;
        return e * (sine ? std::sin(freq * x) : std::cos(freq * x));
    }
    double derivative(double x) const {
        const double e = std::exp(-rate * x);
        if (freq == 0.0) return sine ? 0.0 : -rate * e;
        const double c = std::cos(freq * x), s = std::sin(freq * x);
        return sine ? e * (-rate * s + freq * c) : e * (-rate * c - freq * s);
    }
};

struct Tail {
    double limit = 0;
    std::vector<TailTerm> terms;
    std::vector<double> amps;

    double operator()(double x) const {
        double v = limit;
        for (std::size_t k = 0; k < terms.size(); ++k) v += amps[k] * terms[k](x);
        return v;
    }
    // d/dx, x pointing outward
    double derivative(double x) const {
        double v = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k) v += amps[k] * terms[k].derivative(x);
        return v;
    }
    bool decaying() const {
        for (const auto& t : terms)
            if (!(t.rate > 0.0)) return false;
        return true;
    }
};

struct GridFunction {
    CylinderGrid grid;
    Eigen::VectorXd values;
    std::optional<Tail> left;  // t < -T, x = -T - t
    std::optional<Tail> right; // t > T, x = t - T

    GridFunction() = default;
    GridFunction(const CylinderGrid& g, Eigen::VectorXd v, std::optional<Tail> l = {}, std::optional<Tail> r = {})
        : grid(g), values(std::move(v)), left(std::move(l)), right(std::move(r)) {
        if (values.size() != grid.size()) throw ContractViolation("GridFunction: value count does not match grid");
    }

    // Value at virtual index j (may lie outside 0..N).
    double atIndex(int j) const {
        if (j < 0) {
            if (!left) throw ContractViolation("GridFunction: missing left tail");
            return (*left)(-j * grid.h);
        }
        if (j > grid.last()) {
            if (!right) throw ContractViolation("GridFunction: missing right tail");
            return (*right)((j - grid.last()) * grid.h);
        }
        return values[j];
    }

    // Piecewise cubic (Lagrange) inside, tails outside.
    double operator()(double t) const {
        const double T = grid.T;
        if (t < -T) {
            if (!left) throw ContractViolation("GridFunction: missing left tail");
            return (*left)(-T - t);
        }
        if (t > T) {
            if (!right) throw ContractViolation("GridFunction: missing right tail");
            return (*right)(t - T);
        }
        const double q = (t + T) / grid.h;
        int i = std::clamp(int(std::floor(q)), 0, grid.last() - 1);
        const int i0 = std::clamp(i - 1, 0, grid.last() - 3);
        double v = 0.0;
        for (int a = 0; a < 4; ++a) {
            double L = 1.0;
            for (int b = 0; b < 4; ++b)
                if (b != a) L *= (q - (i0 + b)) / double(a - b);
            v += L * values[i0 + a];
        }
        return v;
    }

    void checkTails(double tol = 1e-8) const {
        if (!left || !right) throw ContractViolation("GridFunction: tail model missing");
        const double sc = std::max(1.0, values.cwiseAbs().maxCoeff());
        const double dl = std::abs((*left)(0.0) - values[0]);
        const double dr = std::abs((*right)(0.0) - values[grid.last()]);
        if (dl > tol * sc || dr > tol * sc) {
            std::ostringstream os;
            os << "GridFunction: tail models discontinuous at the boundary (" << dl << ", " << dr << ")";
            throw ContractViolation(os.str());
        }
    }
};

} // namespace fracle
