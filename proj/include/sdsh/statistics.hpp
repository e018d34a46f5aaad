#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdsh/event_model.hpp"
#include "sdsh/likelihood.hpp"

namespace sdsh {

/// Probability mass over integer support values, support sorted ascending.
struct Histogram {
    std::vector<int> support;
    std::vector<double> probabilities;

    [[nodiscard]] double at(int value) const;
    [[nodiscard]] double total() const;
    [[nodiscard]] double mean() const;
};

/// kUniform averages daily pmfs; kPooled weights days by horizon (calendar) or event count (event).
enum class DayWeighting { kUniform, kPooled };

/// Fraction of calendar time spent at each spread, per day, averaged over days.
/// Zero-length days are skipped with a warning.
Histogram calendar_distribution(const SpreadPath& path);
Histogram calendar_distribution(const Dataset& data, DayWeighting weighting = DayWeighting::kUniform);

/// Distribution of the spread just before each event, per day, averaged over days.
/// Days without events are skipped with a warning.
Histogram event_distribution(const SpreadPath& path);
Histogram event_distribution(const Dataset& data, DayWeighting weighting = DayWeighting::kUniform);

/// Pooled distribution of signed jump sizes.
Histogram jump_size_distribution(const SpreadPath& path);
Histogram jump_size_distribution(const Dataset& data);

/// Smallest k such that jumps with |size| > k have total mass below `threshold`.
int recommend_K(const Histogram& jumps, double threshold = 0.01);

/// Inter-event durations. With a condition (s1, s2), keeps t_{i+1} - t_i only when the spread
/// right after event i is s1 and right after event i+1 is s2.
std::vector<double> inter_event_times(const SpreadPath& path,
                                      std::optional<std::pair<int, int>> condition = std::nullopt);
std::vector<double> inter_event_times(const Dataset& data,
                                      std::optional<std::pair<int, int>> condition = std::nullopt);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

struct QqPoints {
    std::vector<double> probabilities;
    std::vector<double> a;
    std::vector<double> b;
};

/// Matched quantiles at p = i / (n - 1), i = 0..n-1 (p = 0.5 when n = 1).
QqPoints qq_points(std::vector<double> samples_a, std::vector<double> samples_b, std::size_t n_quantiles);

struct AutocorrelationOptions {
    double max_lag = 10.0;
    double slot_length = 7200.0;
    double grid = 0.1;
    /// Explicit lags; when empty, lags are 0, grid, 2 grid, ..., max_lag.
    std::vector<double> lags;
};

struct CorrelationCurve {
    std::vector<double> lags;
    std::vector<double> values;
    std::size_t slots = 0;      // slots with non-zero variance that entered the average
    std::string diagnostic;     // set when the curve is undefined
};

/// Spread sampled exactly on a regular grid inside consecutive slots of each day; per-slot
/// autocorrelation averaged over slots. Lags longer than the slot are dropped.
/// Throws std::invalid_argument when the grid is coarser than the smallest positive lag.
CorrelationCurve spread_autocorrelation(const Dataset& data, const AutocorrelationOptions& options);

struct AcvOptions {
    double delta = 0.1;
    std::vector<double> taus;
    /// tau >= min_ratio * delta is enforced; must be > 1.
    double min_ratio = 2.0;
    /// Slot length in seconds; 0 uses whole days.
    double slot_length = 0.0;
};

struct AcvCurve {
    double delta = 0.0;
    std::vector<double> taus;
    std::vector<double> values;
    std::vector<std::size_t> counts;
};

/// ACV(delta, tau) = Cov(S_{t+delta} - S_t, S_{t+tau+delta} - S_{t+tau}) / delta^2, from
/// exact increments on a stride-delta grid within each slot, averaged over slots.
/// Throws std::invalid_argument when tau < min_ratio * delta.
AcvCurve acv(const Dataset& data, const AcvOptions& options);

/// Average per-source excitation at events of type e with pre-event spread s, normalized by
/// the largest source in the bucket.
struct InfluenceRow {
    int spread = 0;
    int type = 0;
    std::size_t events = 0;
    std::vector<double> raw;         // [source]; NaN when the bucket is empty
    std::vector<double> normalized;  // [source]; NaN when empty or all raw values are zero
};

struct InfluenceTable {
    int K = 0;
    std::vector<InfluenceRow> rows;  // ordered by spread, then type

    [[nodiscard]] const InfluenceRow* find(int spread, int type) const;
};

InfluenceTable kernel_influence(const ModelSpec& spec, const Dataset& data);

/// phi^{target,source}(t) at each grid time.
std::vector<double> kernel_curve(const ModelSpec& spec, int target, int source, std::span<const double> times);

/// n points spaced logarithmically on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace sdsh
