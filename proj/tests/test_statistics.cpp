#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "sdsh/data_io.hpp"
#include "sdsh/rng.hpp"
#include "sdsh/simulator.hpp"
#include "sdsh/statistics.hpp"

using namespace sdsh;

namespace {

SpreadPath path_of(int s0, double horizon, std::vector<std::pair<double, int>> events) {
    SpreadPath p;
    p.s0 = s0;
    p.horizon = to_nanos(horizon);
    for (auto [t, size] : events) p.events.push_back({to_nanos(t), size});
    return p;
}

Dataset days_of(std::vector<SpreadPath> days) {
    Dataset d;
    for (std::size_t i = 0; i < days.size(); ++i) d.day_ids.push_back(static_cast<std::int64_t>(i));
    d.days = std::move(days);
    return d;
}

}  // namespace

TEST(Calendar, NoEvents) {
    const Histogram h = calendar_distribution(path_of(2, 10.0, {}));
    ASSERT_EQ(h.support.size(), 1u);
    EXPECT_EQ(h.support[0], 2);
    EXPECT_DOUBLE_EQ(h.probabilities[0], 1.0);
}

TEST(Calendar, HandIntegration) {
    const Histogram h = calendar_distribution(path_of(1, 10.0, {{4.0, +1}}));
    EXPECT_NEAR(h.at(1), 0.4, 1e-15);
    EXPECT_NEAR(h.at(2), 0.6, 1e-15);
}

TEST(Calendar, AveragesDailyDistributions) {
    const Dataset d = days_of({path_of(1, 10.0, {{4.0, +1}}), path_of(1, 100.0, {})});
    const Histogram uniform = calendar_distribution(d);
    EXPECT_NEAR(uniform.at(1), 0.5 * (0.4 + 1.0), 1e-15);
    EXPECT_NEAR(uniform.at(2), 0.5 * 0.6, 1e-15);
    const Histogram pooled = calendar_distribution(d, DayWeighting::kPooled);
    EXPECT_NEAR(pooled.at(2), 6.0 / 110.0, 1e-15);
}

TEST(Calendar, SkipsZeroLengthDays) {
    const Dataset d = days_of({path_of(1, 0.0, {}), path_of(3, 5.0, {})});
    const Histogram h = calendar_distribution(d);
    EXPECT_DOUBLE_EQ(h.at(3), 1.0);
}

TEST(Event, Counting) {
    EXPECT_DOUBLE_EQ(event_distribution(path_of(1, 5.0, {{1.0, +1}})).at(1), 1.0);
    const Histogram h = event_distribution(path_of(1, 10.0, {{1.0, +1}, {2.0, +1}, {3.0, -1}, {4.0, +1}}));
    // Pre-event spreads 1, 2, 3, 2.
    EXPECT_DOUBLE_EQ(h.at(1), 0.25);
    EXPECT_DOUBLE_EQ(h.at(2), 0.5);
    EXPECT_DOUBLE_EQ(h.at(3), 0.25);
}

TEST(Distributions, SumToOne) {
    Dataset d;
    for (int i = 0; i < 4; ++i) {
        d.days.push_back(simulate(demo_spec(), 500.0, 1, 40 + static_cast<std::uint64_t>(i)));
        d.day_ids.push_back(i);
    }
    EXPECT_NEAR(calendar_distribution(d).total(), 1.0, 1e-12);
    EXPECT_NEAR(event_distribution(d).total(), 1.0, 1e-12);
    EXPECT_NEAR(jump_size_distribution(d).total(), 1.0, 1e-12);
    EXPECT_NEAR(calendar_distribution(d, DayWeighting::kPooled).total(), 1.0, 1e-12);
    EXPECT_NEAR(event_distribution(d, DayWeighting::kPooled).total(), 1.0, 1e-12);
}

TEST(Jumps, SupportAndRecommendK) {
    const SpreadPath p = simulate(demo_spec(), 2000.0, 1, 3);
    const Histogram h = jump_size_distribution(p);
    for (int v : h.support) EXPECT_TRUE(v == 1 || v == -1);
    EXPECT_NEAR(h.at(1), h.at(-1), 0.05);

    Histogram j;
    j.support = {-3, -2, -1, 1, 2, 3};
    j.probabilities = {0.004, 0.05, 0.45, 0.44, 0.05, 0.006};
    EXPECT_EQ(recommend_K(j, 0.01), 3);
    EXPECT_EQ(recommend_K(j, 0.02), 2);
    EXPECT_EQ(recommend_K(j, 0.2), 1);
}

TEST(InterEvent, UnconditionalAndConditional) {
    EXPECT_EQ(inter_event_times(path_of(1, 5.0, {{1.0, +1}, {3.0, +1}, {4.0, -1}})), (std::vector<double>{2.0, 1.0}));
    const SpreadPath p = path_of(1, 5.0, {{1.0, +2}, {3.0, -1}});
    const auto c = inter_event_times(p, std::make_pair(3, 2));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0], 2.0);
    EXPECT_TRUE(inter_event_times(p, std::make_pair(7, 8)).empty());
}

TEST(InterEvent, ConditionalSubsetsPartition) {
    const SpreadPath p = simulate(demo_spec(), 1000.0, 1, 21);
    const auto all = inter_event_times(p);
    std::size_t total = 0;
    for (int a = 1; a <= 10; ++a) {
        for (int b = 1; b <= 10; ++b) total += inter_event_times(p, std::make_pair(a, b)).size();
    }
    EXPECT_EQ(total, all.size());
}

TEST(Quantiles, TypeSeven) {
    const std::vector<double> x = {1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(x, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(x, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(x, 1.0 / 3.0), 2.0);
}

TEST(QqPoints, DiagonalScaleAndExponential) {
    Philox rng(1);
    std::vector<double> a(1000), b;
    for (double& v : a) v = rng.exponential(1.0);
    const QqPoints same = qq_points(a, a, 21);
    for (std::size_t i = 0; i < same.a.size(); ++i) EXPECT_DOUBLE_EQ(same.a[i], same.b[i]);
    for (double v : a) b.push_back(2.0 * v);
    const QqPoints scaled = qq_points(a, b, 21);
    for (std::size_t i = 0; i < scaled.a.size(); ++i) EXPECT_NEAR(scaled.b[i], 2.0 * scaled.a[i], 1e-12);

    std::vector<double> x(10000), y(10000);
    for (double& v : x) v = rng.exponential(1.0);
    for (double& v : y) v = rng.exponential(1.0);
    const QqPoints q = qq_points(x, y, 101);
    for (std::size_t i = 0; i < q.a.size(); ++i) {
        if (q.probabilities[i] >= 0.1 && q.probabilities[i] <= 0.9) EXPECT_LT(std::fabs(q.a[i] - q.b[i]), 0.1);
    }
    EXPECT_THROW(qq_points({}, y, 5), std::invalid_argument);
}

TEST(Autocorrelation, ConstantSpreadIsNaN) {
    AutocorrelationOptions o;
    o.slot_length = 100.0;
    const CorrelationCurve c = spread_autocorrelation(days_of({path_of(2, 100.0, {})}), o);
    for (double v : c.values) EXPECT_TRUE(std::isnan(v));
    EXPECT_FALSE(c.diagnostic.empty());
}

TEST(Autocorrelation, SquareWave) {
    // Spread alternates 1, 2 every second: period 2 s.
    std::vector<std::pair<double, int>> ev;
    for (int i = 1; i < 1000; ++i) ev.push_back({static_cast<double>(i), i % 2 == 1 ? +1 : -1});
    AutocorrelationOptions o;
    o.slot_length = 1000.0;
    o.lags = {0.0, 1.0, 2.0};
    const CorrelationCurve c = spread_autocorrelation(days_of({path_of(1, 1000.0, ev)}), o);
    ASSERT_EQ(c.values.size(), 3u);
    EXPECT_NEAR(c.values[0], 1.0, 1e-12);
    EXPECT_NEAR(c.values[1], -1.0, 0.01);
    EXPECT_NEAR(c.values[2], 1.0, 0.01);
}

TEST(Autocorrelation, GridCoarserThanLagRejected) {
    AutocorrelationOptions o;
    o.grid = 1.0;
    o.lags = {0.5};
    EXPECT_THROW(spread_autocorrelation(days_of({path_of(2, 100.0, {})}), o), std::invalid_argument);
}

TEST(Acv, ConstantSpreadIsZero) {
    AcvOptions o;
    o.delta = 0.5;
    o.taus = {1.0, 2.0, 5.0};
    const AcvCurve c = acv(days_of({path_of(2, 100.0, {})}), o);
    for (double v : c.values) EXPECT_EQ(v, 0.0);
}

TEST(Acv, TauTooSmallRejected) {
    AcvOptions o;
    o.delta = 1.0;
    o.taus = {1.5};
    EXPECT_THROW(acv(days_of({path_of(2, 100.0, {})}), o), std::invalid_argument);
}

TEST(Acv, IndependentIncrementsUnbiased) {
    // Compound Poisson signal: increments on disjoint windows are independent, so ACV = 0.
    AcvOptions o;
    o.delta = 1.0;
    o.taus = {2.0, 5.0};
    const int reps = 200;
    std::vector<double> est(reps);
    for (int r = 0; r < reps; ++r) {
        Philox rng(300, static_cast<std::uint64_t>(r));
        std::vector<std::pair<double, int>> ev;
        double t = 0.0;
        int s = 50;
        for (;;) {
            t += rng.exponential(2.0);
            if (t >= 200.0) break;
            const int jump = rng.uniform() < 0.5 ? -1 : 1;
            if (s + jump < 1) continue;
            s += jump;
            ev.push_back({t, jump});
        }
        est[static_cast<std::size_t>(r)] = acv(days_of({path_of(50, 200.0, ev)}), o).values[0];
    }
    const double mean = std::accumulate(est.begin(), est.end(), 0.0) / reps;
    double var = 0.0;
    for (double v : est) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / (reps - 1) / reps);
    EXPECT_LT(std::fabs(mean), 3.0 * se + 1e-12);
}

TEST(Acv, MatchesDenseGridOracle) {
    // Spread sampled on both grids directly; increments and covariance from the definition.
    const SpreadPath p = generate_synthetic(demo_spec(), 1, 300.0, 4).days[0];
    auto spread_at = [&](double t) {
        int s = p.s0;
        for (const auto& ev : p.events) {
            if (ev.time > to_nanos(t)) break;
            s += ev.size;
        }
        return s;
    };
    AcvOptions o;
    o.delta = 0.25;
    o.taus = {0.5, 0.6, 1.75, 10.0};
    o.slot_length = 100.0;
    const AcvCurve c = acv(days_of({p}), o);
    for (std::size_t k = 0; k < o.taus.size(); ++k) {
        const double tau = o.taus[k];
        double total = 0.0;
        for (int slot = 0; slot < 3; ++slot) {
            const double a = 100.0 * slot;
            std::vector<double> d, e;
            for (int j = 0; a + j * o.delta + tau + o.delta <= a + 100.0 + 1e-9; ++j) {
                const double t = a + j * o.delta;
                d.push_back(spread_at(t + o.delta) - spread_at(t));
                e.push_back(spread_at(t + tau + o.delta) - spread_at(t + tau));
            }
            const double m = static_cast<double>(d.size());
            double sd = 0.0, se = 0.0, sde = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) {
                sd += d[j];
                se += e[j];
                sde += d[j] * e[j];
            }
            total += (sde / m - sd * se / (m * m)) / (o.delta * o.delta);
        }
        EXPECT_NEAR(c.values[k], total / 3.0, 1e-9 * std::max(1.0, std::fabs(total))) << tau;
    }
}

TEST(Influence, SingleSourceConcentrates) {
    ModelSpec spec = make_spec(1, {1.0, 10.0}, 3);
    spec.mus = {0.5, 0.5};
    spec.kernels.alpha(0, 1, 0) = 0.3;
    spec.kernels.alpha(1, 1, 1) = 0.2;
    const Dataset d = days_of({simulate(spec, 2000.0, 1, 4)});
    const InfluenceTable t = kernel_influence(spec, d);
    ASSERT_FALSE(t.rows.empty());
    for (const auto& row : t.rows) {
        if (row.events == 0) {
            EXPECT_TRUE(std::isnan(row.raw[0]));
            continue;
        }
        if (std::isnan(row.normalized[1])) continue;  // no prior -1 event yet
        EXPECT_DOUBLE_EQ(row.normalized[1], 1.0);
        EXPECT_DOUBLE_EQ(row.normalized[0], 0.0);
    }
}

TEST(Influence, RowMaxIsOne) {
    const Dataset d = days_of({simulate(demo_spec(), 3000.0, 1, 8)});
    const InfluenceTable t = kernel_influence(demo_spec(), d);
    for (const auto& row : t.rows) {
        if (row.events == 0 || std::isnan(row.normalized[0])) continue;
        double mx = 0.0;
        for (double v : row.normalized) mx = std::max(mx, v);
        EXPECT_DOUBLE_EQ(mx, 1.0);
    }
}

TEST(Influence, SymmetricSpecGivesSymmetricMap) {
    ModelSpec spec = make_spec(1, {1.0}, 3);
    spec.mus = {0.5, 0.5};
    spec.kernels.alpha(0, 0, 0) = 0.2;
    spec.kernels.alpha(0, 1, 0) = 0.2;
    spec.kernels.alpha(1, 0, 0) = 0.2;
    spec.kernels.alpha(1, 1, 0) = 0.2;
    spec.statefns.values = {{1.0, 1.0, 1.0}, {0.0, 1.0, 1.0}};
    // Far from spread 1 both intensities coincide, so each event's sign is a fair coin
    // independent of the past and the +/- excitation at + events agree in expectation.
    Dataset d;
    for (int i = 0; i < 5; ++i) {
        d.days.push_back(simulate(spec, 2000.0, 300, 600 + static_cast<std::uint64_t>(i)));
        d.day_ids.push_back(i);
    }
    const InfluenceTable t = kernel_influence(spec, d);
    std::size_t events = 0;
    double plus = 0.0, minus = 0.0;
    for (const auto& row : t.rows) {
        if (row.type != 0 || row.events == 0) continue;
        events += row.events;
        plus += row.raw[0] * static_cast<double>(row.events);
        minus += row.raw[1] * static_cast<double>(row.events);
    }
    ASSERT_GT(events, 5000u);
    EXPECT_NEAR(plus, minus, 0.05 * std::max(plus, minus));
}

TEST(KernelCurve, Values) {
    ModelSpec one = make_spec(1, {1.0}, 2);
    one.kernels.alpha(0, 0, 0) = 1.0;
    const std::vector<double> zero = {0.0};
    EXPECT_DOUBLE_EQ(kernel_curve(one, 0, 0, zero)[0], 1.0);

    ModelSpec two = make_spec(1, {20.0, 200.0}, 4);
    two.kernels.alpha(0, 0, 0) = 2.0;
    two.kernels.alpha(0, 0, 1) = 4.0;
    EXPECT_DOUBLE_EQ(kernel_curve(two, 0, 0, zero)[0], 840.0);

    const auto grid = log_grid(1e-4, 10.0, 121);
    EXPECT_DOUBLE_EQ(grid.front(), 1e-4);
    EXPECT_DOUBLE_EQ(grid.back(), 10.0);
    EXPECT_NEAR(grid[24], 1e-3, 1e-15);
}
