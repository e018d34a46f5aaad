#include "sdsh/acdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sdsh/rng.hpp"

namespace sdsh {

void AcdpParams::validate() const {
    if (!(c > 0.0) || !(alpha > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("ACDP parameters c, alpha, gamma must be > 0");
    }
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("ACDP parameter beta must lie in (0, 1)");
    if (truncation < 0) throw std::invalid_argument("ACDP truncation must be >= 0");
}

double double_poisson_log_kernel(int n, double lambda, double gamma) {
    double v = 0.5 * std::log(gamma) - gamma * lambda;
    if (n > 0) {
        const double x = n;
        v += x * (std::log(x) - 1.0) - std::lgamma(x + 1.0) + gamma * x * (1.0 + std::log(lambda / x));
    }
    return v;
}

namespace {

constexpr double kLogTail = -36.8413614879047;  // log(1e-16)

/// Log-normalizer of the Double-Poisson kernel and the normalized moments needed for its
/// derivatives: E[n] and E[n (1 + log(lambda / n))].
struct Normalizer {
    double log_z = 0.0;
    double mean_n = 0.0;
    double mean_g = 0.0;
};

template <class Visit>
void for_each_term(double lambda, double gamma, Visit&& visit) {
    double top = -std::numeric_limits<double>::infinity();
    const int cap = static_cast<int>(std::min(1e6, 50.0 * lambda + 1000.0));
    for (int n = 0; n <= cap; ++n) {
        const double l = double_poisson_log_kernel(n, lambda, gamma);
        top = std::max(top, l);
        if (!visit(n, l)) return;
        if (n > lambda && l < top + kLogTail) return;
    }
}

Normalizer normalizer(double lambda, double gamma) {
    // First pass for the maximum (the mode sits near lambda), second for the sums.
    double top = -std::numeric_limits<double>::infinity();
    for_each_term(lambda, gamma, [&](int, double l) {
        top = std::max(top, l);
        return true;
    });
    double z = 0.0, zn = 0.0, zg = 0.0;
    for_each_term(lambda, gamma, [&](int n, double l) {
        const double w = std::exp(l - top);
        z += w;
        if (n > 0) {
            zn += w * n;
            zg += w * n * (1.0 + std::log(lambda / n));
        }
        return true;
    });
    return {top + std::log(z), zn / z, zg / z};
}

struct LambdaTerms {
    double value = 0.0;
    double d_c = 0.0;
    double d_alpha = 0.0;
    double d_beta = 0.0;
};

LambdaTerms lambda_terms(double c, double alpha, double beta, int truncation, std::span<const int> shifted,
                         std::size_t k) {
    LambdaTerms t;
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(truncation), k - 1);
    double power = 1.0;       // beta^i
    double power_prev = 0.0;  // i * beta^(i-1)
    for (std::size_t i = 0; i <= m; ++i) {
        const double x = shifted[k - 1 - i];
        const double inner = c + alpha * x;
        t.value += power * inner;
        t.d_c += power;
        t.d_alpha += power * x;
        t.d_beta += power_prev * inner;
        power_prev = static_cast<double>(i + 1) * power;
        power *= beta;
    }
    return t;
}

std::vector<int> shift_series(std::span<const int> spreads) {
    std::vector<int> out(spreads.size());
    for (std::size_t i = 0; i < spreads.size(); ++i) {
        if (spreads[i] < 1) throw std::invalid_argument("ACDP series values must be >= 1");
        out[i] = spreads[i] - 1;
    }
    return out;
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

double double_poisson_log_normalizer(double lambda, double gamma) { return normalizer(lambda, gamma).log_z; }

double acdp_lambda(const AcdpParams& params, std::span<const int> shifted, std::size_t k) {
    if (k == 0 || k > shifted.size()) throw std::invalid_argument("acdp_lambda: k out of range");
    return lambda_terms(params.c, params.alpha, params.beta, params.truncation, shifted, k).value;
}

double acdp_log_likelihood(const AcdpParams& params, std::span<const int> shifted, AcdpLikelihood mode,
                           std::size_t start) {
    start = std::max<std::size_t>(start, 1);
    double total = 0.0;
    for (std::size_t k = start; k < shifted.size(); ++k) {
        const double lambda = acdp_lambda(params, shifted, k);
        total += double_poisson_log_kernel(shifted[k], lambda, params.gamma);
        if (mode == AcdpLikelihood::kNormalized) total -= normalizer(lambda, params.gamma).log_z;
    }
    return total;
}

AcdpFit acdp_fit(std::span<const int> spreads, const AcdpFitOptions& options, const AcdpParams* init) {
    if (options.truncation < 0) throw std::invalid_argument("acdp_fit: truncation must be >= 0");
    if (spreads.size() <= static_cast<std::size_t>(options.truncation)) {
        throw std::invalid_argument("acdp_fit: series length " + std::to_string(spreads.size()) +
                                    " must exceed the truncation " + std::to_string(options.truncation));
    }
    const std::vector<int> shifted = shift_series(spreads);
    const std::size_t start = std::max<std::size_t>(options.start, 1);
    if (start >= shifted.size()) throw std::invalid_argument("acdp_fit: start index beyond the series");
    const double terms = static_cast<double>(shifted.size() - start);
    const bool normalized = options.mode == AcdpLikelihood::kNormalized;

    // u = (log c, log alpha, logit beta, log gamma)
    const Objective objective = [&](std::span<const double> u, std::span<double> grad) {
        const double c = std::exp(u[0]), alpha = std::exp(u[1]), beta = logistic(u[2]), gamma = std::exp(u[3]);
        double ll = 0.0, gc = 0.0, ga = 0.0, gb = 0.0, gg = 0.0;
        for (std::size_t k = start; k < shifted.size(); ++k) {
            const LambdaTerms t = lambda_terms(c, alpha, beta, options.truncation, shifted, k);
            const double lambda = t.value;
            const int n = shifted[k];
            ll += double_poisson_log_kernel(n, lambda, gamma);
            double d_lambda = -gamma + gamma * n / lambda;
            double d_gamma = 0.5 / gamma - lambda + (n > 0 ? n * (1.0 + std::log(lambda / n)) : 0.0);
            if (normalized) {
                const Normalizer z = normalizer(lambda, gamma);
                ll -= z.log_z;
                d_lambda -= -gamma + gamma * z.mean_n / lambda;
                d_gamma -= 0.5 / gamma - lambda + z.mean_g;
            }
            gc += d_lambda * t.d_c;
            ga += d_lambda * t.d_alpha;
            gb += d_lambda * t.d_beta;
            gg += d_gamma;
        }
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        grad[0] = -gc * c / terms;
        grad[1] = -ga * alpha / terms;
        grad[2] = -gb * beta * (1.0 - beta) / terms;
        grad[3] = -gg * gamma / terms;
        return -ll / terms;
    };

    BoxBounds bounds;
    bounds.lower = {std::log(1e-6), std::log(1e-6), -12.0, std::log(1e-3)};
    bounds.upper = {std::log(1e3), std::log(1e2), 12.0, std::log(1e3)};

    AcdpParams start_params;
    if (init != nullptr) {
        start_params = *init;
    } else {
        double mean = 0.0;
        for (int v : shifted) mean += v;
        mean /= static_cast<double>(shifted.size());
        start_params.alpha = 0.2;
        start_params.beta = 0.5;
        start_params.c = std::max(0.3 * mean, 1e-3);
        start_params.gamma = 1.0;
    }
    start_params.truncation = options.truncation;

    Philox rng(0x5eedacd9ULL);
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        AcdpParams p = start_params;
        if (attempt > 0) {
            p.c *= std::exp(rng.uniform() * 2.0 - 1.0);
            p.alpha *= std::exp(rng.uniform() * 2.0 - 1.0);
            p.beta = std::clamp(p.beta + (rng.uniform() - 0.5) * 0.5, 0.05, 0.95);
            p.gamma *= std::exp(rng.uniform() * 2.0 - 1.0);
        }
        std::vector<double> u = {std::log(std::max(p.c, 1e-6)), std::log(std::max(p.alpha, 1e-6)),
                                 std::log(p.beta / (1.0 - p.beta)), std::log(std::max(p.gamma, 1e-3))};
        std::vector<double> g(4);
        if (!std::isfinite(objective(u, g))) continue;
        const LbfgsResult r = minimize_lbfgs(objective, u, bounds, options.optimizer);
        if (!std::isfinite(r.value)) continue;
        AcdpFit fit;
        fit.params.c = std::exp(r.x[0]);
        fit.params.alpha = std::exp(r.x[1]);
        fit.params.beta = logistic(r.x[2]);
        fit.params.gamma = std::exp(r.x[3]);
        fit.params.truncation = options.truncation;
        fit.loglik = -r.value * terms;
        fit.converged = r.converged;
        fit.iterations = r.iterations;
        fit.reason = r.reason;
        return fit;
    }
    throw std::runtime_error("acdp_fit: no starting point with a finite likelihood");
}

double acdp_predict(const AcdpParams& params, std::span<const int> spreads) {
    if (spreads.empty()) throw std::invalid_argument("acdp_predict: empty history");
    const std::vector<int> shifted = shift_series(spreads);
    return 1.0 + acdp_lambda(params, shifted, shifted.size());
}

int sample_double_poisson(double lambda, double gamma, double uniform) {
    const double log_z = normalizer(lambda, gamma).log_z;
    double cumulative = 0.0;
    int last = 0;
    int result = -1;
    for_each_term(lambda, gamma, [&](int n, double l) {
        cumulative += std::exp(l - log_z);
        last = n;
        if (cumulative >= uniform) {
            result = n;
            return false;
        }
        return true;
    });
    return result >= 0 ? result : last;
}

std::vector<int> acdp_simulate(const AcdpParams& params, std::size_t n, std::uint64_t seed, std::size_t burn_in) {
    params.validate();
    Philox rng(seed, 0);
    const double persistence = params.alpha + params.beta;
    double lambda = persistence < 1.0 ? params.c / (1.0 - persistence) : params.c / (1.0 - params.beta);
    int previous = static_cast<int>(std::lround(lambda));
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t k = 0; k < burn_in + n; ++k) {
        lambda = params.c + params.alpha * previous + params.beta * lambda;
        previous = sample_double_poisson(lambda, params.gamma, rng.uniform());
        if (k >= burn_in) out.push_back(previous + 1);
    }
    return out;
}

}  // namespace sdsh
