#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fracle/errors.hpp"

namespace fracle {

// log|Gamma(x)| together with the sign of Gamma(x).
struct SignedLog {
    double logAbs;
    int sign;
};

namespace detail {

// Lanczos g = 7, nine terms.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// Reflection threshold: arguments with real part below this are reflected.
inline constexpr double kReflectBelow = 0.5;

inline bool isNonPositiveInteger(double x) { return x <= 0.0 && x == std::floor(x); }

template <class T> T lanczosLog(T z) {
    // log Gamma(z) for Re z >= 0.5
    z -= 1.0;
    T a = kLanczos[0];
    for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (z + double(i));
    T t = z + kLanczosG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

inline void throwPole(double x) {
    throw DomainError("logGamma: pole at z = " + std::to_string(x));
}

} // namespace detail

inline SignedLog logGamma(double x) {
    if (detail::isNonPositiveInteger(x)) detail::throwPole(x);
    if (x >= detail::kReflectBelow) return {detail::lanczosLog(x), 1};
    // Gamma(x) Gamma(1-x) = pi / sin(pi x)
    const double sp = std::sin(std::numbers::pi * x);
    const SignedLog r = logGamma(1.0 - x);
    return {std::log(std::numbers::pi / std::abs(sp)) - r.logAbs, (sp < 0 ? -1 : 1) * r.sign};
}

inline std::complex<double> logGamma(std::complex<double> z) {
    if (z.imag() == 0.0 && detail::isNonPositiveInteger(z.real())) detail::throwPole(z.real());
    if (z.real() >= detail::kReflectBelow) return detail::lanczosLog(z);
    const std::complex<double> pi = std::numbers::pi;
    return std::log(pi / std::sin(pi * z)) - logGamma(1.0 - z);
}

inline double gammaFn(double x) {
    const SignedLog l = logGamma(x);
    return l.sign * std::exp(l.logAbs);
}

// 1/Gamma(x); entire, zero at the poles of Gamma.
inline double rgamma(double x) {
    if (detail::isNonPositiveInteger(x)) return 0.0;
    if (x >= detail::kReflectBelow) return std::exp(-detail::lanczosLog(x));
    return std::sin(std::numbers::pi * x) / std::numbers::pi * gammaFn(1.0 - x);
}

inline std::complex<double> rgamma(std::complex<double> z) {
    if (z.imag() == 0.0) return rgamma(z.real());
    if (z.real() >= detail::kReflectBelow) return std::exp(-detail::lanczosLog(z));
    const std::complex<double> pi = std::numbers::pi;
    return std::sin(pi * z) / pi * std::exp(detail::lanczosLog(1.0 - z));
}

} // namespace fracle
