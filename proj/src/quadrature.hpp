#pragma once

#include <array>
#include <cstddef>

namespace jdconvex::detail {

// 5-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 5> kGaussNodes{
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGaussWeights{
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891};

/// Composite Gauss-Legendre integral of f over [a, b].
template <class F>
double integrate(F&& f, double a, double b, std::size_t panels) {
    if (b <= a) return 0.0;
    double h = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
        double mid = a + (static_cast<double>(p) + 0.5) * h;
        for (std::size_t k = 0; k < kGaussNodes.size(); ++k)
            sum += kGaussWeights[k] * f(mid + 0.5 * h * kGaussNodes[k]);
    }
    return 0.5 * h * sum;
}

}  // namespace jdconvex::detail
