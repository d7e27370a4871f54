#pragma once

// Test-only reference implementations. Nothing here shares code with the
// library paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

/// Median by full sort.
inline double sorted_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Gaussian elimination without pivoting tricks beyond row swaps on exact zeros.
inline std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        while (pivot < 3 && m[pivot][col] == 0.0) ++pivot;
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

/// Weighted quadratic LS through raw (unnormalized) normal equations.
inline std::array<double, 3> normal_equations_quadratic(const std::vector<double>& x, const std::vector<double>& y,
                                                        const std::vector<double>& w) {
    std::array<std::array<double, 4>, 3> m{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p[3] = {1.0, x[i], x[i] * x[i]};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += w[i] * p[r] * p[c];
            m[r][3] += w[i] * p[r] * y[i];
        }
    }
    return solve3(m);
}

inline double weighted_loss(const std::array<double, 3>& a, const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = a[0] + a[1] * x[i] + a[2] * x[i] * x[i] - y[i];
        s += w[i] * r * r;
    }
    return s;
}

/// Parabola through (t[k], v[k]), k = 0..2, as a0 + a1 x + a2 x^2.
inline std::array<double, 3> lagrange_coefficients(const std::array<double, 3>& t, const std::array<double, 3>& v) {
    std::array<double, 3> a{};
    for (int k = 0; k < 3; ++k) {
        const double p = t[(k + 1) % 3], q = t[(k + 2) % 3];
        const double d = v[k] / ((t[k] - p) * (t[k] - q));
        a[0] += d * p * q;
        a[1] -= d * (p + q);
        a[2] += d;
    }
    return a;
}

/// Brute-force weighted LS parabola. The search runs over the curve's values at
/// the three nodes `t` (well conditioned when the nodes span the data): an
/// exhaustive coarse grid on [lo, hi]^3, then lattice hill-climbing at
/// successively finer spacings down to `final_step`. Returns the node values.
inline std::array<double, 3> grid_search_quadratic(const std::vector<double>& x, const std::vector<double>& y,
                                                   const std::vector<double>& w, const std::array<double, 3>& t,
                                                   double lo, double hi, double coarse_step, double final_step) {
    auto loss = [&](const std::array<double, 3>& v) { return weighted_loss(lagrange_coefficients(t, v), x, y, w); };
    std::array<double, 3> best{};
    double best_loss = std::numeric_limits<double>::infinity();
    const int n0 = static_cast<int>(std::lround((hi - lo) / coarse_step));
    for (int i = 0; i <= n0; ++i)
        for (int j = 0; j <= n0; ++j)
            for (int k = 0; k <= n0; ++k) {
                const std::array<double, 3> v{lo + i * coarse_step, lo + j * coarse_step, lo + k * coarse_step};
                const double l = loss(v);
                if (l < best_loss) {
                    best_loss = l;
                    best = v;
                }
            }
    double step = coarse_step;
    constexpr int kHalfWidth = 6;
    for (;;) {
        step = std::max(step / 4.0, final_step);
        for (int sweep = 0; sweep < 1000; ++sweep) {
            const std::array<double, 3> centre = best;
            for (int i = -kHalfWidth; i <= kHalfWidth; ++i)
                for (int j = -kHalfWidth; j <= kHalfWidth; ++j)
                    for (int k = -kHalfWidth; k <= kHalfWidth; ++k) {
                        const std::array<double, 3> v{centre[0] + i * step, centre[1] + j * step, centre[2] + k * step};
                        const double l = loss(v);
                        if (l < best_loss) {
                            best_loss = l;
                            best = v;
                        }
                    }
            if (best == centre) break;
        }
        if (step <= final_step) break;
    }
    return best;
}

/// Grid search for alpha e^{beta c} with weights; returns (alpha, beta).
inline std::array<double, 2> grid_search_exponential(const std::vector<double>& x, const std::vector<double>& y,
                                                     const std::vector<double>& w, double alpha_lo, double alpha_hi,
                                                     double beta_lo, double beta_hi, int nodes) {
    std::array<double, 2> best{};
    double best_loss = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= nodes; ++i)
        for (int j = 0; j <= nodes; ++j) {
            const double a = alpha_lo + (alpha_hi - alpha_lo) * i / nodes;
            const double b = beta_lo + (beta_hi - beta_lo) * j / nodes;
            double l = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double r = a * std::exp(b * x[k]) - y[k];
                l += w[k] * r * r;
            }
            if (l < best_loss) {
                best_loss = l;
                best = {a, b};
            }
        }
    return best;
}

/// Monte Carlo estimate of sqrt(E[(Z_j - median Z)^2]) for n iid standard normals.
inline double median_deflation_mc(int n, int panels, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    double sum = 0.0;
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int p = 0; p < panels; ++p) {
        for (auto& v : z) v = normal(gen);
        const double m = sorted_median(z);
        for (double v : z) sum += (v - m) * (v - m);
    }
    return std::sqrt(sum / (static_cast<double>(panels) * n));
}

}  // namespace oracle
