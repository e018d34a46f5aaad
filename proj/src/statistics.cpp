#include "sdsh/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "sdsh/logging.hpp"
#include "sdsh/parallel.hpp"

namespace sdsh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Histogram from_map(const std::map<int, double>& mass) {
    Histogram h;
    double total = 0.0;
    for (const auto& [k, v] : mass) total += v;
    for (const auto& [k, v] : mass) {
        h.support.push_back(k);
        h.probabilities.push_back(total > 0.0 ? v / total : 0.0);
    }
    return h;
}

/// Unnormalized per-spread occupancy time (seconds) of one day.
std::map<int, double> occupancy(const SpreadPath& path) {
    std::map<int, double> time;
    int spread = path.s0;
    Nanos previous = 0;
    for (const auto& ev : path.events) {
        time[spread] += to_seconds(ev.time - previous);
        spread += ev.size;
        previous = ev.time;
    }
    time[spread] += to_seconds(path.horizon - previous);
    return time;
}

std::map<int, double> pre_event_counts(const SpreadPath& path) {
    std::map<int, double> counts;
    int spread = path.s0;
    for (const auto& ev : path.events) {
        counts[spread] += 1.0;
        spread += ev.size;
    }
    return counts;
}

/// Spread at times start + j * step, j = 0..n-1 (right-continuous).
std::vector<int> sample_grid(const SpreadPath& path, double start, double step, std::size_t n) {
    std::vector<int> out(n);
    int spread = path.s0;
    std::size_t next = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const Nanos t = to_nanos(start + static_cast<double>(j) * step);
        while (next < path.events.size() && path.events[next].time <= t) spread += path.events[next++].size;
        out[j] = spread;
    }
    return out;
}

/// Non-zero increments S(g_{j+1}) - S(g_j) on the grid g_j = start + j step, j < n - 1, as
/// (j, increment) pairs in increasing j. Same grid rounding as sample_grid.
std::vector<std::pair<std::size_t, int>> grid_increments(const SpreadPath& path, double start, double step,
                                                         std::size_t n) {
    std::vector<std::pair<std::size_t, int>> out;
    if (n < 2) return out;
    auto grid = [&](std::size_t j) { return to_nanos(start + static_cast<double>(j) * step); };
    const Nanos first = grid(0), last = grid(n - 1);
    for (const auto& ev : path.events) {
        if (ev.time <= first) continue;
        if (ev.time > last) break;
        // Cell j holds events in (g_j, g_{j+1}].
        auto j = static_cast<std::size_t>(std::max(0.0, std::floor((to_seconds(ev.time) - start) / step)));
        j = std::min(j, n - 2);
        while (j > 0 && grid(j) >= ev.time) --j;
        while (j + 2 < n && grid(j + 1) < ev.time) ++j;
        if (!out.empty() && out.back().first == j) {
            out.back().second += ev.size;
        } else {
            out.emplace_back(j, ev.size);
        }
    }
    std::erase_if(out, [](const auto& c) { return c.second == 0; });
    return out;
}

/// [start, end) windows of length `slot` covering each day; whole days when slot <= 0.
std::vector<std::pair<std::size_t, double>> slots_of(const Dataset& data, double slot) {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t d = 0; d < data.days.size(); ++d) {
        const double horizon = data.days[d].horizon_seconds();
        if (slot <= 0.0) {
            out.emplace_back(d, 0.0);
            continue;
        }
        const auto n = static_cast<std::size_t>(std::floor(horizon / slot + 1e-9));
        for (std::size_t i = 0; i < n; ++i) out.emplace_back(d, static_cast<double>(i) * slot);
    }
    return out;
}

}  // namespace

double Histogram::at(int value) const {
    const auto it = std::lower_bound(support.begin(), support.end(), value);
    if (it == support.end() || *it != value) return 0.0;
    return probabilities[static_cast<std::size_t>(it - support.begin())];
}

double Histogram::total() const {
    double t = 0.0;
    for (double p : probabilities) t += p;
    return t;
}

double Histogram::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * probabilities[i];
    return m;
}

Histogram calendar_distribution(const SpreadPath& path) {
    if (path.horizon <= 0) throw std::invalid_argument("calendar_distribution: zero-length horizon");
    return from_map(occupancy(path));
}

Histogram calendar_distribution(const Dataset& data, DayWeighting weighting) {
    std::map<int, double> mass;
    std::size_t used = 0;
    for (std::size_t d = 0; d < data.days.size(); ++d) {
        const SpreadPath& day = data.days[d];
        if (day.horizon <= 0) {
            log_warning("calendar_distribution: skipping zero-length day " + std::to_string(d));
            continue;
        }
        const double horizon = day.horizon_seconds();
        for (const auto& [s, t] : occupancy(day)) mass[s] += weighting == DayWeighting::kUniform ? t / horizon : t;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("calendar_distribution: no day with positive horizon");
    return from_map(mass);
}

Histogram event_distribution(const SpreadPath& path) {
    if (path.events.empty()) throw std::invalid_argument("event_distribution: path has no events");
    return from_map(pre_event_counts(path));
}

Histogram event_distribution(const Dataset& data, DayWeighting weighting) {
    std::map<int, double> mass;
    std::size_t used = 0;
    for (std::size_t d = 0; d < data.days.size(); ++d) {
        const SpreadPath& day = data.days[d];
        if (day.events.empty()) {
            log_warning("event_distribution: skipping day " + std::to_string(d) + " without events");
            continue;
        }
        const double n = static_cast<double>(day.events.size());
        for (const auto& [s, c] : pre_event_counts(day)) mass[s] += weighting == DayWeighting::kUniform ? c / n : c;
        ++used;
    }
    if (used == 0) throw std::invalid_argument("event_distribution: no day with events");
    return from_map(mass);
}

Histogram jump_size_distribution(const SpreadPath& path) {
    std::map<int, double> counts;
    for (const auto& ev : path.events) counts[ev.size] += 1.0;
    return from_map(counts);
}

Histogram jump_size_distribution(const Dataset& data) {
    std::map<int, double> counts;
    for (const auto& day : data.days) {
        for (const auto& ev : day.events) counts[ev.size] += 1.0;
    }
    return from_map(counts);
}

int recommend_K(const Histogram& jumps, double threshold) {
    int largest = 0;
    for (int v : jumps.support) largest = std::max(largest, std::abs(v));
    for (int k = 1; k <= largest; ++k) {
        double tail = 0.0;
        for (std::size_t i = 0; i < jumps.support.size(); ++i) {
            if (std::abs(jumps.support[i]) > k) tail += jumps.probabilities[i];
        }
        if (tail < threshold) return k;
    }
    return std::max(largest, 1);
}

std::vector<double> inter_event_times(const SpreadPath& path, std::optional<std::pair<int, int>> condition) {
    if (condition && (condition->first < 1 || condition->second < 1)) {
        throw std::invalid_argument("inter_event_times: condition spreads must be >= 1");
    }
    std::vector<double> out;
    int spread = path.s0;
    for (std::size_t i = 0; i < path.events.size(); ++i) {
        const int after = spread + path.events[i].size;
        if (i + 1 < path.events.size()) {
            const int next_after = after + path.events[i + 1].size;
            if (!condition || (after == condition->first && next_after == condition->second)) {
                out.push_back(to_seconds(path.events[i + 1].time - path.events[i].time));
            }
        }
        spread = after;
    }
    return out;
}

std::vector<double> inter_event_times(const Dataset& data, std::optional<std::pair<int, int>> condition) {
    std::vector<double> out;
    for (const auto& day : data.days) {
        const auto part = inter_event_times(day, condition);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

QqPoints qq_points(std::vector<double> samples_a, std::vector<double> samples_b, std::size_t n_quantiles) {
    if (samples_a.empty() || samples_b.empty()) throw std::invalid_argument("qq_points: empty sample");
    if (n_quantiles == 0) throw std::invalid_argument("qq_points: n_quantiles must be >= 1");
    std::sort(samples_a.begin(), samples_a.end());
    std::sort(samples_b.begin(), samples_b.end());
    QqPoints out;
    for (std::size_t i = 0; i < n_quantiles; ++i) {
        const double p = n_quantiles == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n_quantiles - 1);
        out.probabilities.push_back(p);
        out.a.push_back(quantile_sorted(samples_a, p));
        out.b.push_back(quantile_sorted(samples_b, p));
    }
    return out;
}

CorrelationCurve spread_autocorrelation(const Dataset& data, const AutocorrelationOptions& options) {
    if (!(options.grid > 0.0)) throw std::invalid_argument("spread_autocorrelation: grid must be > 0");
    if (!(options.slot_length > 0.0)) throw std::invalid_argument("spread_autocorrelation: slot_length must be > 0");
    std::vector<double> lags = options.lags;
    if (lags.empty()) {
        const auto n = static_cast<std::size_t>(std::floor(options.max_lag / options.grid + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) lags.push_back(static_cast<double>(i) * options.grid);
    }
    double min_positive = std::numeric_limits<double>::infinity();
    for (double lag : lags) {
        if (lag < 0.0) throw std::invalid_argument("spread_autocorrelation: negative lag");
        if (lag > 0.0) min_positive = std::min(min_positive, lag);
    }
    if (options.grid > min_positive * (1.0 + 1e-9)) {
        throw std::invalid_argument("spread_autocorrelation: grid is coarser than the smallest lag");
    }

    CorrelationCurve curve;
    std::vector<std::size_t> steps;
    for (double lag : lags) {
        if (lag >= options.slot_length) continue;
        curve.lags.push_back(lag);
        steps.push_back(static_cast<std::size_t>(std::llround(lag / options.grid)));
    }

    const auto slots = slots_of(data, options.slot_length);
    const auto n = static_cast<std::size_t>(std::floor(options.slot_length / options.grid + 1e-9));
    std::vector<std::vector<double>> per_slot(slots.size());
    parallel_for(slots.size(), [&](std::size_t i) {
        const auto [day, start] = slots[i];
        const std::vector<int> x = sample_grid(data.days[day], start, options.grid, n);
        double mean = 0.0;
        for (int v : x) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (int v : x) var += (v - mean) * (v - mean);
        if (var <= 0.0) return;
        auto& out = per_slot[i];
        out.resize(steps.size());
        for (std::size_t k = 0; k < steps.size(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j + steps[k] < n; ++j) acc += (x[j] - mean) * (x[j + steps[k]] - mean);
            out[k] = acc / var;
        }
    });

    curve.values.assign(curve.lags.size(), 0.0);
    for (const auto& slot : per_slot) {
        if (slot.empty()) continue;
        ++curve.slots;
        for (std::size_t k = 0; k < slot.size(); ++k) curve.values[k] += slot[k];
    }
    if (curve.slots == 0) {
        std::fill(curve.values.begin(), curve.values.end(), kNaN);
        curve.diagnostic = slots.empty() ? "no complete slot in the data" : "spread is constant in every slot (zero variance)";
        log_warning("spread_autocorrelation: " + curve.diagnostic);
        return curve;
    }
    for (double& v : curve.values) v /= static_cast<double>(curve.slots);
    return curve;
}

AcvCurve acv(const Dataset& data, const AcvOptions& options) {
    const double delta = options.delta;
    if (!(delta > 0.0)) throw std::invalid_argument("acv: delta must be > 0");
    if (!(options.min_ratio > 1.0)) throw std::invalid_argument("acv: min_ratio must be > 1");
    for (std::size_t i = 0; i < options.taus.size(); ++i) {
        if (options.taus[i] < options.min_ratio * delta * (1.0 - 1e-12)) {
            throw std::invalid_argument("acv: tau = " + std::to_string(options.taus[i]) + " is below " +
                                        std::to_string(options.min_ratio) + " * delta");
        }
        if (i > 0 && !(options.taus[i] > options.taus[i - 1])) {
            throw std::invalid_argument("acv: taus must be strictly increasing");
        }
    }

    AcvCurve curve;
    curve.delta = delta;
    curve.taus = options.taus;
    curve.values.assign(options.taus.size(), 0.0);
    curve.counts.assign(options.taus.size(), 0);

    const auto slots = slots_of(data, options.slot_length);
    struct SlotResult {
        std::vector<double> cov;
        std::vector<std::size_t> count;
    };
    std::vector<SlotResult> per_slot(slots.size());
    parallel_for(slots.size(), [&](std::size_t i) {
        const auto [day, start] = slots[i];
        const SpreadPath& path = data.days[day];
        const double length = options.slot_length > 0.0 ? options.slot_length : path.horizon_seconds();
        SlotResult& out = per_slot[i];
        out.cov.assign(options.taus.size(), kNaN);
        out.count.assign(options.taus.size(), 0);
        const auto points = static_cast<std::size_t>(std::floor(length / delta + 1e-9)) + 1;
        if (points < 2) return;
        const auto x = grid_increments(path, start, delta, points);
        for (std::size_t k = 0; k < options.taus.size(); ++k) {
            const double tau = options.taus[k];
            const auto shift = static_cast<std::size_t>(std::floor(tau / delta + 1e-9));
            const double offset = tau - static_cast<double>(shift) * delta;
            // Pairs j = 0..m-1 need t_j + tau + delta <= slot end.
            if (points < shift + 2) continue;
            std::size_t m = points - 1 - shift;
            if (offset > 1e-12) {
                if (m == 0) continue;
                m -= 1;
            }
            if (m < 2) continue;
            std::vector<std::pair<std::size_t, int>> y;
            const auto* shifted = &x;
            if (offset > 1e-12) {
                y = grid_increments(path, start + offset, delta, points);
                shifted = &y;
            }
            // Only cells with a non-zero increment contribute to the sums.
            double sd = 0.0, se = 0.0, sde = 0.0;
            for (const auto& [j, v] : x) {
                if (j < m) sd += v;
            }
            for (const auto& [j, v] : *shifted) {
                if (j >= shift && j < shift + m) se += v;
            }
            auto it = shifted->begin();
            for (const auto& [j, v] : x) {
                if (j >= m) break;
                while (it != shifted->end() && it->first < j + shift) ++it;
                if (it != shifted->end() && it->first == j + shift) sde += static_cast<double>(v) * it->second;
            }
            const double mm = static_cast<double>(m);
            out.cov[k] = (sde / mm - (sd / mm) * (se / mm)) / (delta * delta);
            out.count[k] = m;
        }
    });

    std::vector<std::size_t> used(options.taus.size(), 0);
    for (const auto& slot : per_slot) {
        for (std::size_t k = 0; k < slot.cov.size(); ++k) {
            if (slot.count[k] == 0) continue;
            curve.values[k] += slot.cov[k];
            curve.counts[k] += slot.count[k];
            ++used[k];
        }
    }
    for (std::size_t k = 0; k < curve.values.size(); ++k) {
        curve.values[k] = used[k] > 0 ? curve.values[k] / static_cast<double>(used[k]) : kNaN;
    }
    return curve;
}

const InfluenceRow* InfluenceTable::find(int spread, int type) const {
    for (const auto& row : rows) {
        if (row.spread == spread && row.type == type) return &row;
    }
    return nullptr;
}

InfluenceTable kernel_influence(const ModelSpec& spec, const Dataset& data) {
    spec.validate();
    const int K = spec.K;
    const int dim = spec.dimension();
    const std::size_t L = spec.decays();
    if (data.max_jump() > K) throw std::invalid_argument("kernel_influence: data has jumps larger than spec K");

    // Sums keyed by (spread, type).
    std::map<std::pair<int, int>, std::pair<std::size_t, std::vector<double>>> buckets;
    int max_spread = 1;
    for (const auto& day : data.days) {
        ExcitationState state = ExcitationState::cold(spec, day.s0);
        max_spread = std::max(max_spread, day.s0);
        for (const auto& ev : day.events) {
            advance_in_place(spec.kernels.betas, state, ev.seconds() - state.time);
            const int type = EventType{ev.size}.index(K);
            auto& [count, sums] = buckets[{state.spread, type}];
            if (sums.empty()) sums.assign(static_cast<std::size_t>(dim), 0.0);
            ++count;
            for (int src = 0; src < dim; ++src) {
                double v = 0.0;
                for (std::size_t l = 0; l < L; ++l) {
                    v += spec.kernels.alpha(type, src, l) * state.z[static_cast<std::size_t>(src) * L + l];
                }
                sums[static_cast<std::size_t>(src)] += v;
            }
            apply_jump_in_place(spec, state, type);
            max_spread = std::max(max_spread, state.spread);
        }
    }

    InfluenceTable table;
    table.K = K;
    for (int s = 1; s <= max_spread; ++s) {
        for (int e = 0; e < dim; ++e) {
            InfluenceRow row;
            row.spread = s;
            row.type = e;
            row.raw.assign(static_cast<std::size_t>(dim), kNaN);
            row.normalized.assign(static_cast<std::size_t>(dim), kNaN);
            const auto it = buckets.find({s, e});
            if (it != buckets.end()) {
                row.events = it->second.first;
                double top = 0.0;
                for (int src = 0; src < dim; ++src) {
                    const double mean = it->second.second[static_cast<std::size_t>(src)] / static_cast<double>(row.events);
                    row.raw[static_cast<std::size_t>(src)] = mean;
                    top = std::max(top, mean);
                }
                if (top > 0.0) {
                    for (int src = 0; src < dim; ++src) {
                        row.normalized[static_cast<std::size_t>(src)] = row.raw[static_cast<std::size_t>(src)] / top;
                    }
                }
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::vector<double> kernel_curve(const ModelSpec& spec, int target, int source, std::span<const double> times) {
    std::vector<double> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(spec.kernels.phi(target, source, t));
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> out(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace sdsh
