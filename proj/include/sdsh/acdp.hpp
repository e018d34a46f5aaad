#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sdsh/optimizer.hpp"

namespace sdsh {

/// Autoregressive conditional Double-Poisson model on S' = S - 1:
///   lambda_k = sum_{i=0}^{N} beta^i (c + alpha S'_{k-1-i}),  S'_k | past ~ DP(lambda_k, gamma).
struct AcdpParams {
    double c = 0.5;
    double alpha = 0.3;
    double beta = 0.4;
    double gamma = 1.0;
    int truncation = 60;

    /// Throws std::invalid_argument unless c, alpha, gamma > 0, 0 < beta < 1, truncation >= 0.
    void validate() const;
};

/// kPrinted: Double-Poisson log-density without its normalizing constant.
/// kNormalized: the same density normalized numerically over n = 0, 1, 2, ...
enum class AcdpLikelihood { kPrinted, kNormalized };

/// Unnormalized log pmf of DP(lambda, gamma) at n, with 0 log 0 = 0.
double double_poisson_log_kernel(int n, double lambda, double gamma);
/// log of sum_n exp(double_poisson_log_kernel(n, lambda, gamma)), truncated once terms fall
/// below 1e-16 of the largest one.
double double_poisson_log_normalizer(double lambda, double gamma);

/// Truncated-recursion intensity for step k from S'_0..S'_{k-1} (uses at most N + 1 lags;
/// fewer when k <= N). Requires k >= 1.
double acdp_lambda(const AcdpParams& params, std::span<const int> shifted, std::size_t k);

/// Sum over k = start..n-1 of the per-step log-likelihood of the shifted series.
double acdp_log_likelihood(const AcdpParams& params, std::span<const int> shifted,
                           AcdpLikelihood mode = AcdpLikelihood::kNormalized, std::size_t start = 1);

struct AcdpFitOptions {
    int truncation = 60;
    AcdpLikelihood mode = AcdpLikelihood::kNormalized;
    std::size_t start = 1;
    int retries = 5;
    LbfgsOptions optimizer{};
};

struct AcdpFit {
    AcdpParams params;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string reason;
};

/// Maximum likelihood in (log c, log alpha, logit beta, log gamma), with box limits keeping
/// degenerate series (e.g. a constant spread) finite. `spreads` are raw values S_k >= 1.
/// Throws std::invalid_argument when the series has at most `truncation` points or values < 1,
/// std::runtime_error when no start with a finite likelihood is found.
AcdpFit acdp_fit(std::span<const int> spreads, const AcdpFitOptions& options = {},
                 const AcdpParams* init = nullptr);

/// One-step prediction 1 + lambda_next from raw spread history (length >= 1).
double acdp_predict(const AcdpParams& params, std::span<const int> spreads);

/// Draw from the numerically normalized DP(lambda, gamma).
int sample_double_poisson(double lambda, double gamma, double uniform);

/// Raw spread series S_k = 1 + S'_k of length n, using the untruncated recursion and a
/// burn-in of `burn_in` discarded steps.
std::vector<int> acdp_simulate(const AcdpParams& params, std::size_t n, std::uint64_t seed,
                               std::size_t burn_in = 500);

}  // namespace sdsh
