#include "sdsh/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sdsh {

namespace {

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

void project(std::vector<double>& x, const BoxBounds& b) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], b.lower[i], b.upper[i]);
}

double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g, const BoxBounds& b) {
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double moved = std::clamp(x[i] - g[i], b.lower[i], b.upper[i]);
        norm = std::max(norm, std::abs(x[i] - moved));
    }
    return norm;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0, const BoxBounds& bounds,
                           const LbfgsOptions& options) {
    const std::size_t n = x0.size();
    if (bounds.lower.size() != n || bounds.upper.size() != n) {
        throw std::invalid_argument("bounds do not match the parameter vector");
    }
    LbfgsResult result;
    std::vector<double> x = std::move(x0);
    project(x, bounds);
    std::vector<double> g(n), g_new(n), x_new(n), d(n), q(n);
    double f = objective(x, g);
    if (!std::isfinite(f)) {
        result.x = x;
        result.value = f;
        result.reason = "objective is not finite at the initial point";
        return result;
    }
    result.trace.push_back(f);
    std::deque<Pair> memory;
    std::vector<char> free(n);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        result.projected_gradient_norm = projected_gradient_norm(x, g, bounds);
        if (result.projected_gradient_norm < options.gradient_tolerance) {
            result.converged = true;
            result.reason = "projected gradient below tolerance";
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const bool at_lower = x[i] <= bounds.lower[i] && g[i] > 0.0;
            const bool at_upper = x[i] >= bounds.upper[i] && g[i] < 0.0;
            free[i] = !(at_lower || at_upper);
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            // Two-loop recursion restricted to the free variables.
            for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
            std::vector<double> alpha(memory.size());
            for (std::size_t k = memory.size(); k-- > 0;) {
                double sq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) sq += memory[k].s[i] * q[i];
                }
                alpha[k] = memory[k].rho * sq;
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) q[i] -= alpha[k] * memory[k].y[i];
                }
            }
            double scale = 1.0;
            if (!memory.empty()) {
                const auto& last = memory.back();
                scale = dot(last.s, last.y) / dot(last.y, last.y);
            } else {
                double gmax = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) gmax = std::max(gmax, std::abs(g[i]));
                }
                scale = gmax > 1.0 ? 1.0 / gmax : 1.0;
            }
            for (std::size_t i = 0; i < n; ++i) q[i] *= scale;
            for (std::size_t k = 0; k < memory.size(); ++k) {
                double yq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) yq += memory[k].y[i] * q[i];
                }
                const double beta = memory[k].rho * yq;
                for (std::size_t i = 0; i < n; ++i) {
                    if (free[i]) q[i] += memory[k].s[i] * (alpha[k] - beta);
                }
            }
            for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -q[i] : 0.0;
            if (dot(d, g) >= 0.0) {
                memory.clear();
                continue;
            }

            double step = 1.0;
            for (int ls = 0; ls < options.max_line_search; ++ls) {
                for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
                project(x_new, bounds);
                double decrease = 0.0;
                for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
                const double f_new = objective(x_new, g_new);
                if (std::isfinite(f_new) && f_new <= f + options.armijo * decrease) {
                    std::vector<double> s(n), y(n);
                    for (std::size_t i = 0; i < n; ++i) {
                        s[i] = x_new[i] - x[i];
                        y[i] = g_new[i] - g[i];
                    }
                    const double sy = dot(s, y);
                    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
                        memory.push_back({std::move(s), std::move(y), 1.0 / sy});
                        if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
                    }
                    x.swap(x_new);
                    g.swap(g_new);
                    f = f_new;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) memory.clear();
        }

        if (!accepted) {
            result.reason = "line search failed to make progress";
            result.converged = result.projected_gradient_norm < std::sqrt(options.gradient_tolerance);
            break;
        }
        result.trace.push_back(f);
        result.iterations = iter;

        const auto count = static_cast<int>(result.trace.size());
        if (count > options.relative_window) {
            const double earlier = result.trace[static_cast<std::size_t>(count - 1 - options.relative_window)];
            if ((earlier - f) / std::max(std::abs(f), 1.0) < options.relative_tolerance) {
                result.converged = true;
                result.reason = "relative improvement below tolerance";
                break;
            }
        }
        if (iter == options.max_iterations) result.reason = "iteration cap reached";
    }
    result.projected_gradient_norm = projected_gradient_norm(x, g, bounds);
    if (!result.converged && result.projected_gradient_norm < options.gradient_tolerance) {
        result.converged = true;
        result.reason = "projected gradient below tolerance";
    }
    result.x = std::move(x);
    result.value = f;
    return result;
}

}  // namespace sdsh
