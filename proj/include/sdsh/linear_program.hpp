#pragma once

#include <string>
#include <vector>

namespace sdsh {

enum class LpStatus { kOptimal, kUnbounded, kIterationLimit };

struct LpResult {
    LpStatus status = LpStatus::kIterationLimit;
    std::vector<double> x;
    double value = 0.0;
    int pivots = 0;
};

/// maximize c.x subject to A x <= b, x >= 0, with b >= 0 so the origin is feasible.
/// Dense tableau simplex with Bland's rule; meant for the handful of variables the
/// stability checks need. Throws std::invalid_argument on shape errors or negative b.
LpResult solve_lp(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b, int max_pivots = 10000);

std::string to_string(LpStatus status);

}  // namespace sdsh
