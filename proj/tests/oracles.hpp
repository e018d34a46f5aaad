#pragma once

// Independent reference computations for the tests. Nothing here uses the excitation
// recursion or the closed-form integrals of the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sdsh/event_model.hpp"
#include "sdsh/rng.hpp"

namespace oracle {

using sdsh::EventType;
using sdsh::ModelSpec;
using sdsh::SpreadPath;

/// z[e'][l](t) as the direct sum over events strictly before t.
inline std::vector<double> z_direct(const ModelSpec& spec, const SpreadPath& path, double t) {
    const std::size_t L = spec.decays();
    std::vector<double> z(static_cast<std::size_t>(spec.dimension()) * L, 0.0);
    for (const auto& ev : path.events) {
        if (!(ev.seconds() < t)) break;
        const int src = EventType{ev.size}.index(spec.K);
        for (std::size_t l = 0; l < L; ++l) {
            const double b = spec.kernels.betas[l];
            z[static_cast<std::size_t>(src) * L + l] += b * std::exp(-b * (t - ev.seconds()));
        }
    }
    return z;
}

/// Spread just before t.
inline int spread_before(const SpreadPath& path, double t) {
    int s = path.s0;
    for (const auto& ev : path.events) {
        if (!(ev.seconds() < t)) break;
        s += ev.size;
    }
    return s;
}

/// lambda^e(t) from the kernel definition: f^e(S_{t-}) (mu^e + sum_{t_i < t} phi^{e,e_i}(t - t_i)).
inline double intensity_direct(const ModelSpec& spec, const SpreadPath& path, int type, double t) {
    double bracket = spec.mus[static_cast<std::size_t>(type)];
    int s = path.s0;
    for (const auto& ev : path.events) {
        if (!(ev.seconds() < t)) break;
        bracket += spec.kernels.phi(type, EventType{ev.size}.index(spec.K), t - ev.seconds());
        s += ev.size;
    }
    return spec.statefns(type, s) * bracket;
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb, double m,
                      double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::fabs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature of a smooth integrand.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson(f, a, fa, b, fb, m, fm, whole, tol, 60);
}

/// Lambda^e(T) by quadrature on each inter-event interval (the integrand is smooth inside).
inline double compensator_quadrature(const ModelSpec& spec, const SpreadPath& path, int type, double T) {
    std::vector<double> knots = {0.0};
    for (const auto& ev : path.events) {
        if (ev.seconds() < T) knots.push_back(ev.seconds());
    }
    knots.push_back(T);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        // Evaluate inside the open interval so the spread and the event set are fixed.
        const int s = spread_before(path, 0.5 * (a + b));
        const double f = spec.statefns(type, s);
        if (f == 0.0) continue;
        auto g = [&](double t) {
            double bracket = spec.mus[static_cast<std::size_t>(type)];
            for (const auto& ev : path.events) {
                if (ev.seconds() > a) break;
                bracket += spec.kernels.phi(type, EventType{ev.size}.index(spec.K), t - ev.seconds());
            }
            return f * bracket;
        };
        total += integrate(g, a, b, 1e-12 * std::max(g(a) * (b - a), 1e-300));
    }
    return total;
}

inline double log_likelihood_quadrature(const ModelSpec& spec, const SpreadPath& path) {
    double ll = 0.0;
    for (const auto& ev : path.events) {
        ll += std::log(intensity_direct(spec, path, EventType{ev.size}.index(spec.K), ev.seconds()));
    }
    for (int e = 0; e < spec.dimension(); ++e) ll -= compensator_quadrature(spec, path, e, path.horizon_seconds());
    return ll;
}

/// One-sample Kolmogorov-Smirnov statistic against Exp(1) and its asymptotic p-value.
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

inline KsResult ks_exponential(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 1.0 - std::exp(-x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    // Kolmogorov distribution with the small-sample correction of Stephens.
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        p += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

/// A valid normalized spec with random, moderately sized parameters.
inline ModelSpec random_spec(sdsh::Philox& rng, int K, std::vector<double> betas, int sbar, double kernel_mass = 0.5) {
    ModelSpec spec = sdsh::make_spec(K, std::move(betas), sbar);
    const int dim = spec.dimension();
    const std::size_t L = spec.decays();
    for (int e = 0; e < dim; ++e) {
        spec.mus[static_cast<std::size_t>(e)] = 0.2 + rng.uniform();
        for (int src = 0; src < dim; ++src) {
            for (std::size_t l = 0; l < L; ++l) {
                spec.kernels.alpha(e, src, l) = kernel_mass * rng.uniform() / (static_cast<double>(dim * L));
            }
        }
        const int first = sdsh::first_admissible_spread(e, K);
        for (int s = first + 1; s <= sbar; ++s) spec.statefns.at(e, s) = 0.3 + 1.5 * rng.uniform();
    }
    spec.validate_normalized();
    return spec;
}

/// Derivative of g at x0: central differences at h and h/2 combined by Richardson
/// extrapolation, so the step can stay large enough to keep round-off small.
inline double derivative(const std::function<double(double)>& g, double x0, double h) {
    const double d1 = (g(x0 + h) - g(x0 - h)) / (2.0 * h);
    const double d2 = (g(x0 + 0.5 * h) - g(x0 - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

}  // namespace oracle
