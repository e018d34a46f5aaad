#include "sdsh/linear_program.hpp"

#include <stdexcept>

namespace sdsh {

namespace {
constexpr double kEps = 1e-12;
}

LpResult solve_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b, int max_pivots) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    if (b.size() != m) throw std::invalid_argument("solve_lp: b does not match A");
    for (std::size_t i = 0; i < m; ++i) {
        if (A[i].size() != n) throw std::invalid_argument("solve_lp: ragged constraint matrix");
        if (b[i] < 0.0) throw std::invalid_argument("solve_lp: b must be non-negative");
    }

    // Tableau rows: [A | I | b]; objective row holds reduced costs -c.
    const std::size_t width = n + m + 1;
    std::vector<std::vector<double>> T(m + 1, std::vector<double>(width, 0.0));
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][width - 1] = b[i];
        basis[i] = n + i;
    }
    for (std::size_t j = 0; j < n; ++j) T[m][j] = -c[j];

    LpResult result;
    while (true) {
        std::size_t enter = width;
        for (std::size_t j = 0; j + 1 < width; ++j) {
            if (T[m][j] < -kEps) {
                enter = j;
                break;
            }
        }
        if (enter == width) {
            result.status = LpStatus::kOptimal;
            break;
        }
        if (result.pivots >= max_pivots) {
            result.status = LpStatus::kIterationLimit;
            break;
        }
        std::size_t leave = m;
        double best = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (T[i][enter] > kEps) {
                const double ratio = T[i][width - 1] / T[i][enter];
                if (leave == m || ratio < best - kEps || (ratio <= best + kEps && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
        }
        if (leave == m) {
            result.status = LpStatus::kUnbounded;
            break;
        }
        const double pivot = T[leave][enter];
        for (double& v : T[leave]) v /= pivot;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double factor = T[i][enter];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) T[i][j] -= factor * T[leave][j];
        }
        basis[leave] = enter;
        ++result.pivots;
    }

    result.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n) result.x[basis[i]] = T[i][width - 1];
    }
    for (std::size_t j = 0; j < n; ++j) result.value += c[j] * result.x[j];
    return result;
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::kOptimal: return "optimal";
        case LpStatus::kUnbounded: return "unbounded";
        case LpStatus::kIterationLimit: return "iteration_limit";
    }
    return "unknown";
}

}  // namespace sdsh
