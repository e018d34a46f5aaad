#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "sdsh/errors.hpp"
#include "sdsh/likelihood.hpp"
#include "sdsh/simulator.hpp"

using namespace sdsh;

namespace {

Dataset one_day(SpreadPath p) {
    Dataset d;
    d.days.push_back(std::move(p));
    d.day_ids.push_back(0);
    return d;
}

SpreadPath path_of(int s0, double horizon, std::vector<std::pair<double, int>> events) {
    SpreadPath p;
    p.s0 = s0;
    p.horizon = to_nanos(horizon);
    for (auto [t, size] : events) p.events.push_back({to_nanos(t), size});
    return p;
}

/// Small random path from a random spec: at most `max_events` events.
std::pair<ModelSpec, SpreadPath> small_instance(std::uint64_t seed, std::size_t max_events = 200) {
    Philox rng(seed);
    const int K = 1 + static_cast<int>(rng() % 2);
    std::vector<double> betas = {0.5 + rng.uniform(), 5.0 + 20.0 * rng.uniform()};
    if (rng.uniform() < 0.5) betas.push_back(200.0);
    const ModelSpec spec = oracle::random_spec(rng, K, betas, K + 1 + static_cast<int>(rng() % 3));
    SpreadPath path = simulate(spec, 60.0, 1 + static_cast<int>(rng() % 3), seed);
    if (path.events.size() > max_events) {
        path.events.resize(max_events);
        path.horizon = path.events.back().time + to_nanos(0.25);
    }
    return {spec, path};
}

/// Visits every free coordinate of the model: mu, alpha and the non-fixed f entries.
void for_each_coordinate(ModelSpec& spec, const std::function<void(double&, std::string)>& visit) {
    for (std::size_t e = 0; e < spec.mus.size(); ++e) visit(spec.mus[e], "mu" + std::to_string(e));
    for (std::size_t i = 0; i < spec.kernels.alphas.size(); ++i) visit(spec.kernels.alphas[i], "alpha" + std::to_string(i));
    for (int e = 0; e < spec.dimension(); ++e) {
        const int first = first_admissible_spread(e, spec.K);
        for (int s = first + 1; s <= spec.statefns.sbar; ++s) {
            visit(spec.statefns.at(e, s), "f" + std::to_string(e) + "," + std::to_string(s));
        }
    }
}

}  // namespace

TEST(LogLikelihood, EmptyPathIsMinusMuT) {
    ModelSpec spec = make_spec(1, {1.0}, 2);
    spec.mus = {0.3, 0.5};
    spec.statefns.values = {{1.0, 1.0}, {1.0, 1.0}};  // structural zero would hide mu^-
    spec.statefns.values[1][0] = 0.0;
    const SpreadPath p = path_of(2, 10.0, {});
    EXPECT_NEAR(log_likelihood(spec, p), -10.0 * (0.3 + 0.5), 1e-12);
}

TEST(LogLikelihood, SingleEventHandIntegration) {
    const double c = 0.6, mup = 0.4, mum = 0.7, t1 = 2.5, T = 9.0;
    ModelSpec spec = make_spec(1, {1.0}, 2);
    spec.mus = {mup, mum};
    spec.statefns.values = {{1.0, c}, {0.0, 1.0}};
    const SpreadPath p = path_of(1, T, {{t1, +1}});
    const double expected = std::log(mup) - mup * t1 - (c * mup + mum) * (T - t1);
    EXPECT_NEAR(log_likelihood(spec, p), expected, 1e-12);
}

TEST(LogLikelihood, MatchesQuadratureOnRandomPaths) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto [spec, path] = small_instance(seed);
        const double closed = log_likelihood(spec, path);
        const double quad = oracle::log_likelihood_quadrature(spec, path);
        EXPECT_NEAR(closed, quad, 1e-8 * std::fabs(quad)) << "seed " << seed << " events " << path.events.size();
    }
}

TEST(LogLikelihood, ZeroStateFunctionAtEventIsMinusInfinity) {
    ModelSpec spec = make_spec(1, {1.0}, 3);
    spec.mus = {0.5, 0.5};
    spec.statefns.values = {{1.0, 0.0, 0.0}, {0.0, 1.0, 1.0}};
    const SpreadPath p = path_of(1, 10.0, {{1.0, +1}, {2.0, +1}});
    LikelihoodDiagnostics diag;
    const double ll = log_likelihood(spec, one_day(p), &diag);
    EXPECT_TRUE(std::isinf(ll) && ll < 0);
    EXPECT_EQ(diag.zero_intensity_events, 1u);
}

TEST(LogLikelihood, AdditiveOverDays) {
    const auto [spec, a] = small_instance(3);
    SpreadPath b = simulate(spec, 40.0, 2, 1234);
    Dataset both;
    both.days = {a, b};
    both.day_ids = {0, 1};
    EXPECT_NEAR(log_likelihood(spec, both), log_likelihood(spec, a) + log_likelihood(spec, b), 1e-9);
}

TEST(LogLikelihood, IdentifiabilityRescaling) {
    for (std::uint64_t seed = 40; seed < 50; ++seed) {
        const auto [spec, path] = small_instance(seed);
        Philox rng(seed);
        ModelSpec scaled = spec;
        for (int e = 0; e < spec.dimension(); ++e) {
            const double c = 0.2 + 4.0 * rng.uniform();
            for (auto& v : scaled.statefns.values[static_cast<std::size_t>(e)]) v *= c;
            scaled.mus[static_cast<std::size_t>(e)] /= c;
            for (int src = 0; src < spec.dimension(); ++src) {
                for (std::size_t l = 0; l < spec.decays(); ++l) scaled.kernels.alpha(e, src, l) /= c;
            }
        }
        EXPECT_NEAR(log_likelihood(scaled, path), log_likelihood(spec, path), 1e-10);
    }
}

TEST(Compensator, PoissonIsLinear) {
    ModelSpec spec = make_spec(1, {1.0}, 3);
    spec.mus = {0.3, 0.4};
    spec.statefns.values = {{1.0, 1.0, 1.0}, {0.0, 1.0, 1.0}};
    const SpreadPath p = path_of(2, 10.0, {{1.0, +1}, {3.0, -1}, {4.0, +1}});
    const CompensatorTrace c = compensator(spec, p);
    ASSERT_EQ(c.times.size(), 4u);
    for (std::size_t i = 0; i < c.times.size(); ++i) EXPECT_NEAR(c.values[0][i], 0.3 * c.times[i], 1e-14);
    EXPECT_NEAR(c.values[1].back(), 0.4 * 10.0, 1e-14);
}

TEST(Compensator, MatchesQuadratureAndLikelihood) {
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        const auto [spec, path] = small_instance(seed);
        const CompensatorTrace c = compensator(spec, path);
        double total = 0.0;
        for (int e = 0; e < spec.dimension(); ++e) {
            const double quad = oracle::compensator_quadrature(spec, path, e, path.horizon_seconds());
            const double closed = c.values[static_cast<std::size_t>(e)].back();
            EXPECT_NEAR(closed, quad, 1e-8 * std::fabs(quad) + 1e-300);
            for (std::size_t i = 1; i < c.times.size(); ++i) {
                EXPECT_GE(c.values[static_cast<std::size_t>(e)][i], c.values[static_cast<std::size_t>(e)][i - 1]);
            }
            total += closed;
        }
        double log_terms = 0.0;
        for (const auto& ev : path.events) {
            log_terms += std::log(oracle::intensity_direct(spec, path, EventType{ev.size}.index(spec.K), ev.seconds()));
        }
        EXPECT_NEAR(log_terms - total, log_likelihood(spec, path), 1e-8 * std::fabs(total));
    }
}

TEST(Gradient, PoissonScore) {
    ModelSpec spec = make_spec(1, {1.0}, 2);
    spec.mus = {0.3, 0.3};
    spec.statefns.values = {{1.0, 1.0}, {0.0, 1.0}};
    const SpreadPath p = simulate(spec, 2000.0, 3, 4);
    std::size_t n_up = 0;
    for (const auto& ev : p.events) n_up += ev.size > 0;
    const LikelihoodGradient g = gradient(spec, one_day(p));
    EXPECT_NEAR(g.mu[0], static_cast<double>(n_up) / 0.3 - 2000.0, 1e-8 * static_cast<double>(n_up) / 0.3);
}

TEST(Gradient, MatchesCentralDifferences) {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        auto [spec, path] = small_instance(seed);
        const Dataset data = one_day(path);
        const LikelihoodGradient g = gradient(spec, data);
        std::vector<double> analytic;
        analytic.insert(analytic.end(), g.mu.begin(), g.mu.end());
        analytic.insert(analytic.end(), g.alpha.begin(), g.alpha.end());
        for (int e = 0; e < spec.dimension(); ++e) {
            const int first = first_admissible_spread(e, spec.K);
            for (int s = first + 1; s <= spec.statefns.sbar; ++s) {
                analytic.push_back(g.f[static_cast<std::size_t>(e)][static_cast<std::size_t>(s - 1)]);
            }
        }
        std::size_t k = 0;
        ModelSpec work = spec;
        for_each_coordinate(work, [&](double& x, const std::string& name) {
            const double x0 = x;
            const double fd = oracle::derivative(
                [&](double v) {
                    x = v;
                    return log_likelihood(work, data);
                },
                x0, 1e-3 * std::max(std::fabs(x0), 1e-2));
            x = x0;
            EXPECT_NEAR(analytic[k], fd, 1e-6 * std::max(std::fabs(fd), 1.0)) << "seed " << seed << " " << name;
            ++k;
        });
        EXPECT_EQ(k, analytic.size());
    }
}

TEST(Gradient, SmallAtTruthComparedToPerturbed) {
    const ModelSpec spec = demo_spec();
    Dataset data;
    for (int d = 0; d < 20; ++d) {
        data.days.push_back(simulate(spec, 2000.0, 1, 500 + static_cast<std::uint64_t>(d)));
        data.day_ids.push_back(d);
    }
    auto norm = [](const LikelihoodGradient& g) {
        double s = 0.0;
        for (double v : g.mu) s += v * v;
        for (double v : g.alpha) s += v * v;
        return std::sqrt(s);
    };
    ModelSpec off = spec;
    off.mus = {0.45, 0.15};
    off.kernels.alpha(0, 1, 0) = 0.5;
    EXPECT_LT(norm(gradient(spec, data)), 0.2 * norm(gradient(off, data)));
}

TEST(FreeParameters, MatchesReferenceCounts) {
    EXPECT_EQ(free_parameter_count(2, 6, 5), 113u);
    EXPECT_EQ(free_parameter_count(2, 6, 8), 125u);
    EXPECT_EQ(free_parameter_count(1, 6, 2), 27u);
}

TEST(FreeParameters, FitOptimizesExactlyTheFormulaCount) {
    Philox rng(8);
    const ModelSpec spec = oracle::random_spec(rng, 2, {1.0, 10.0}, 4, 0.3);
    const SpreadPath p = simulate(spec, 300.0, 2, 8);
    FitConfig cfg;
    cfg.K = 2;
    cfg.betas = {1.0, 10.0};
    cfg.sbar = 4;
    cfg.optimizer.max_iterations = 3;
    const FitReport r = fit(one_day(p), cfg);
    EXPECT_EQ(r.free_parameters, free_parameter_count(2, 2, 4));
}

TEST(Fit, PoissonDataRecoversRates) {
    ModelSpec truth = make_spec(1, {1.0, 10.0}, 3);
    truth.mus = {0.4, 0.5};
    Dataset data;
    for (int d = 0; d < 10; ++d) {
        data.days.push_back(simulate(truth, 2000.0, 2, 900 + static_cast<std::uint64_t>(d)));
        data.day_ids.push_back(d);
    }
    // Closed-form oracle: with kernels at zero, mu^e f^e(s) = N^e(s) / T(s).
    FitConfig cfg;
    cfg.K = 1;
    cfg.betas = {1.0, 10.0};
    cfg.sbar = 3;
    const FitReport r = fit(data, cfg);
    EXPECT_TRUE(r.converged) << r.reason;
    const LikelihoodData stats(data, 1, cfg.betas, 3);
    const double mu_up = stats.count(0, 1) / stats.time_at(1);
    const double mu_down = stats.count(1, 2) / stats.time_at(2);
    EXPECT_NEAR(r.spec.mus[0], 0.4, 3.0 * 0.4 / std::sqrt(stats.count(0, 1)));
    EXPECT_NEAR(r.spec.mus[1], 0.5, 3.0 * 0.5 / std::sqrt(stats.count(1, 2)));
    EXPECT_NEAR(r.spec.mus[0], mu_up, 0.05 * mu_up);
    EXPECT_NEAR(r.spec.mus[1], mu_down, 0.05 * mu_down);
    double mass = 0.0;
    for (double a : r.spec.kernels.alphas) mass += a;
    EXPECT_LT(mass, 0.05);
    EXPECT_TRUE(r.spec.is_normalized(1e-12));
}

TEST(Fit, TraceIsMonotone) {
    Dataset data;
    for (int d = 0; d < 5; ++d) {
        data.days.push_back(simulate(demo_spec(), 1000.0, 1, 70 + static_cast<std::uint64_t>(d)));
        data.day_ids.push_back(d);
    }
    FitConfig cfg;
    cfg.K = 1;
    cfg.betas = {1.0};
    cfg.sbar = 3;
    const FitReport r = fit(data, cfg);
    ASSERT_GE(r.trace.size(), 2u);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_GE(r.trace[i], r.trace[i - 1] - 1e-9 * std::fabs(r.trace[i]));
    EXPECT_NEAR(r.loglik, log_likelihood(r.spec, data), 1e-8 * std::fabs(r.loglik));
    EXPECT_NEAR(r.spec.mus[0], 0.3, 0.1);
    EXPECT_NEAR(r.spec.kernels.alpha(0, 1, 0), 0.2, 0.1);
}

TEST(Fit, SignedModeRuns) {
    Dataset data;
    data.days.push_back(simulate(demo_spec(), 3000.0, 1, 5));
    data.day_ids.push_back(0);
    FitConfig cfg;
    cfg.K = 1;
    cfg.betas = {1.0};
    cfg.sbar = 3;
    cfg.alpha_mode = AlphaMode::kSigned;
    const FitReport r = fit(data, cfg);
    EXPECT_TRUE(std::isfinite(r.loglik));
    EXPECT_EQ(r.spec.alpha_mode, AlphaMode::kSigned);
}

TEST(Fit, InvalidConfigurations) {
    Dataset data = one_day(simulate(demo_spec(), 100.0, 1, 1));
    FitConfig cfg;
    cfg.K = 1;
    cfg.betas = {10.0, 1.0};
    cfg.sbar = 3;
    EXPECT_THROW(fit(data, cfg), ConfigurationError);
    cfg.betas = {1.0};
    cfg.sbar = 1;
    EXPECT_THROW(fit(data, cfg), ConfigurationError);
    cfg.sbar = 3;
    EXPECT_THROW(fit(Dataset{}, cfg), ConfigurationError);
}
