#include "sdsh/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sdsh/errors.hpp"
#include "sdsh/logging.hpp"
#include "sdsh/parallel.hpp"
#include "sdsh/rng.hpp"

namespace sdsh {

void ForecastRequest::validate() const {
    if (!(window > 0.0)) throw std::invalid_argument("forecast window must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("forecast horizon must be > 0");
    if (n_paths < 1) throw std::invalid_argument("forecast n_paths must be >= 1");
    if (!(t0 >= 0.0)) throw std::invalid_argument("forecast t0 must be >= 0");
}

int spread_at(const SpreadPath& path, double t) { return path.spread_at(to_nanos(t)); }

DecayingBaseline window_baseline(const ModelSpec& spec, const SpreadPath& history, double t0, double window,
                                 std::size_t* window_events) {
    const int dim = spec.dimension();
    const std::size_t L = spec.decays();
    const Nanos end = to_nanos(t0);
    const Nanos begin = to_nanos(t0 - window);
    auto by_time = [](const JumpEvent& ev, Nanos t) { return ev.time <= t; };
    const auto first = std::lower_bound(history.events.begin(), history.events.end(), begin, by_time);
    const auto last = std::lower_bound(first, history.events.end(), end, by_time);

    std::vector<double> z(static_cast<std::size_t>(dim) * L, 0.0);
    for (auto it = first; it != last; ++it) {
        const int src = EventType{it->size}.index(spec.K);
        const double age = to_seconds(end - it->time);
        for (std::size_t l = 0; l < L; ++l) {
            const double beta = spec.kernels.betas[l];
            z[static_cast<std::size_t>(src) * L + l] += beta * std::exp(-beta * age);
        }
    }
    if (window_events != nullptr) *window_events = static_cast<std::size_t>(last - first);

    DecayingBaseline baseline;
    baseline.constant = spec.mus;
    baseline.rates = spec.kernels.betas;
    baseline.amplitude.assign(static_cast<std::size_t>(dim) * L, 0.0);
    for (int e = 0; e < dim; ++e) {
        for (int src = 0; src < dim; ++src) {
            for (std::size_t l = 0; l < L; ++l) {
                baseline.amplitude[static_cast<std::size_t>(e) * L + l] +=
                    spec.kernels.alpha(e, src, l) * z[static_cast<std::size_t>(src) * L + l];
            }
        }
    }
    return baseline;
}

ForecastResult sdsh_forecast(const ModelSpec& spec, const SpreadPath& history, const ForecastRequest& request,
                             const SimulationOptions& options) {
    request.validate();
    ForecastResult result;
    result.spread_at_t0 = spread_at(history, request.t0);
    std::size_t in_window = 0;
    std::optional<DecayingBaseline> baseline = window_baseline(spec, history, request.t0, request.window, &in_window);
    if (in_window == 0) {
        result.cold_start = true;
        baseline.reset();
        if (request.warn_on_cold_start) log_warning("sdsh_forecast: no events in the window, using the constant baseline");
    }
    const ExcitationState start = ExcitationState::cold(spec, result.spread_at_t0);
    result.samples.assign(static_cast<std::size_t>(request.n_paths), 0);
    parallel_for(result.samples.size(), [&](std::size_t i) {
        Philox rng(request.seed, i);
        result.samples[i] = simulate_final_spread(spec, start, baseline, request.horizon, rng, options);
    });
    double sum = 0.0;
    for (int s : result.samples) sum += s;
    result.mean = sum / static_cast<double>(result.samples.size());
    return result;
}

double last_predict(const SpreadPath& history, double t0) { return spread_at(history, t0); }

double LastPredictor::predict(const SpreadPath& day, double t0, double, std::uint64_t) {
    return last_predict(day, t0);
}

void AcdpPredictor::begin_day(const SpreadPath&, double) {
    params_.reset();
    last_fit_ = 0.0;
}

double AcdpPredictor::predict(const SpreadPath& day, double t0, double delta, std::uint64_t) {
    const auto steps = static_cast<std::size_t>(std::floor(std::min(options_.calibration_window, t0) / delta + 1e-9));
    std::vector<int> series(steps + 1);
    for (std::size_t j = 0; j <= steps; ++j) {
        series[steps - j] = spread_at(day, t0 - static_cast<double>(j) * delta);
    }
    if (!params_ || t0 - last_fit_ >= options_.refit_every - 1e-9) {
        const AcdpParams* warm = params_ ? &*params_ : nullptr;
        const AcdpFit fit = acdp_fit(series, options_.fit, warm);
        params_ = fit.params;
        last_fit_ = t0;
        ++fits_;
    }
    return acdp_predict(*params_, series);
}

double SdshPredictor::predict(const SpreadPath& day, double t0, double delta, std::uint64_t point_id) {
    ForecastRequest request;
    request.t0 = t0;
    request.window = window_;
    request.horizon = delta;
    request.n_paths = n_paths_;
    request.seed = mix_seed(seed_, point_id);
    request.warn_on_cold_start = false;
    const ForecastResult r = sdsh_forecast(spec_, day, request);
    if (r.cold_start) ++cold_starts_;
    return r.mean;
}

EvaluationTable evaluate(const std::vector<Predictor*>& predictors, const Dataset& test, const EvaluationConfig& config) {
    if (config.deltas.empty()) throw ConfigurationError("evaluate.deltas: must be non-empty");
    for (double d : config.deltas) {
        if (!(d > 0.0)) throw ConfigurationError("evaluate.deltas: values must be > 0");
    }
    if (!(config.end > config.start) || config.start < 0.0) throw ConfigurationError("evaluate: need 0 <= start < end");
    const std::set<std::int64_t> train(config.train_day_ids.begin(), config.train_day_ids.end());
    for (std::int64_t id : test.day_ids) {
        if (train.count(id) != 0) {
            throw ConfigurationError("evaluate: test day " + std::to_string(id) + " also appears in the training set");
        }
    }

    EvaluationTable table;
    table.deltas = config.deltas;
    const std::size_t P = predictors.size(), D = config.deltas.size();
    for (const Predictor* p : predictors) table.predictors.push_back(p->name());
    table.mse.assign(P, std::vector<double>(D, 0.0));
    table.points.assign(P, std::vector<std::size_t>(D, 0));
    table.failures.assign(P, std::vector<std::size_t>(D, 0));

    for (std::size_t di = 0; di < D; ++di) {
        const double delta = config.deltas[di];
        for (std::size_t d = 0; d < test.days.size(); ++d) {
            const SpreadPath& day = test.days[d];
            const double end = std::min(config.end, day.horizon_seconds());
            for (Predictor* p : predictors) p->begin_day(day, delta);
            for (std::size_t j = 0;; ++j) {
                const double t0 = config.start + static_cast<double>(j) * delta;
                if (t0 + delta > end + 1e-9) break;
                const double realized = spread_at(day, t0 + delta);
                const std::uint64_t point_id = (static_cast<std::uint64_t>(d) << 40) |
                                               (static_cast<std::uint64_t>(di) << 32) | static_cast<std::uint64_t>(j);
                for (std::size_t pi = 0; pi < P; ++pi) {
                    try {
                        const double prediction = predictors[pi]->predict(day, t0, delta, point_id);
                        if (!std::isfinite(prediction)) throw std::runtime_error("non-finite prediction");
                        table.mse[pi][di] += (prediction - realized) * (prediction - realized);
                        ++table.points[pi][di];
                    } catch (const std::exception&) {
                        ++table.failures[pi][di];
                    }
                }
            }
        }
        for (std::size_t pi = 0; pi < P; ++pi) {
            const auto n = table.points[pi][di];
            table.mse[pi][di] = n > 0 ? table.mse[pi][di] / static_cast<double>(n) : std::nan("");
        }
    }
    return table;
}

namespace {
std::string delta_label(double d) {
    std::ostringstream out;
    out << d << "s";
    return out.str();
}
}  // namespace

std::string EvaluationTable::to_csv() const {
    std::ostringstream out;
    out << "predictor";
    for (double d : deltas) out << ',' << delta_label(d);
    for (double d : deltas) out << ",points_" << delta_label(d);
    for (double d : deltas) out << ",failures_" << delta_label(d);
    out << '\n' << std::setprecision(10);
    for (std::size_t p = 0; p < predictors.size(); ++p) {
        out << predictors[p];
        for (double v : mse[p]) out << ',' << v;
        for (auto v : points[p]) out << ',' << v;
        for (auto v : failures[p]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

std::string EvaluationTable::format() const {
    std::ostringstream out;
    out << std::left << std::setw(10) << "MSE";
    for (double d : deltas) out << std::right << std::setw(10) << delta_label(d);
    out << '\n' << std::fixed << std::setprecision(3);
    for (std::size_t p = 0; p < predictors.size(); ++p) {
        out << std::left << std::setw(10) << predictors[p];
        for (double v : mse[p]) out << std::right << std::setw(10) << v;
        out << '\n';
    }
    return out.str();
}

}  // namespace sdsh
