#include "sdsh/likelihood.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sdsh/errors.hpp"
#include "sdsh/parallel.hpp"

namespace sdsh {

std::size_t Dataset::event_count() const {
    std::size_t n = 0;
    for (const auto& day : days) n += day.events.size();
    return n;
}

double Dataset::total_horizon() const {
    double total = 0.0;
    for (const auto& day : days) total += day.horizon_seconds();
    return total;
}

int Dataset::max_jump() const {
    int k = 0;
    for (const auto& day : days) {
        for (const auto& ev : day.events) k = std::max(k, std::abs(ev.size));
    }
    return k;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// integral over [0, dt] of exp(-beta u) du
double decay_integral(double beta, double dt) { return -std::expm1(-beta * dt) / beta; }

struct DayStats {
    std::vector<int> type;
    std::vector<int> spread;
    std::vector<double> z;
    std::vector<double> counts;
    std::vector<double> time_at;
    std::vector<double> z_integral;
};

}  // namespace

LikelihoodData::LikelihoodData(const Dataset& data, int max_jump, std::span<const double> betas, int sbar)
    : K_(max_jump), dim_(type_count(max_jump)), L_(betas.size()), sbar_(sbar), betas_(betas.begin(), betas.end()) {
    if (K_ < 1 || L_ == 0 || sbar_ < 1) throw std::invalid_argument("invalid likelihood dimensions");
    const std::size_t width = static_cast<std::size_t>(dim_) * L_;
    const auto sb = static_cast<std::size_t>(sbar_);

    std::vector<DayStats> per_day(data.days.size());
    parallel_for(data.days.size(), [&](std::size_t d) {
        const SpreadPath& day = data.days[d];
        day.validate();
        DayStats& out = per_day[d];
        out.counts.assign(static_cast<std::size_t>(dim_) * sb, 0.0);
        out.time_at.assign(sb, 0.0);
        out.z_integral.assign(sb * width, 0.0);
        out.type.reserve(day.events.size());
        out.spread.reserve(day.events.size());
        out.z.reserve(day.events.size() * width);

        std::vector<double> z(width, 0.0);
        int spread = day.s0;
        double previous = 0.0;
        auto accumulate = [&](double until) {
            const double dt = until - previous;
            const auto s = static_cast<std::size_t>(std::min(spread, sbar_) - 1);
            out.time_at[s] += dt;
            for (std::size_t l = 0; l < L_; ++l) {
                const double integral = decay_integral(betas_[l], dt);
                const double decay = std::exp(-betas_[l] * dt);
                for (int src = 0; src < dim_; ++src) {
                    const std::size_t i = static_cast<std::size_t>(src) * L_ + l;
                    out.z_integral[s * width + i] += z[i] * integral;
                    z[i] *= decay;
                }
            }
            previous = until;
        };
        for (const auto& ev : day.events) {
            if (std::abs(ev.size) > K_) {
                throw std::invalid_argument("data contains jump " + std::to_string(ev.size) +
                                            " larger than K = " + std::to_string(K_));
            }
            accumulate(ev.seconds());
            const int type = EventType{ev.size}.index(K_);
            const int capped = std::min(spread, sbar_);
            out.type.push_back(type);
            out.spread.push_back(capped);
            out.z.insert(out.z.end(), z.begin(), z.end());
            out.counts[static_cast<std::size_t>(type) * sb + static_cast<std::size_t>(capped - 1)] += 1.0;
            spread += ev.size;
            for (std::size_t l = 0; l < L_; ++l) z[static_cast<std::size_t>(type) * L_ + l] += betas_[l];
        }
        accumulate(day.horizon_seconds());
    });

    counts_.assign(static_cast<std::size_t>(dim_) * sb, 0.0);
    time_at_.assign(sb, 0.0);
    z_integral_.assign(sb * width, 0.0);
    for (const auto& day : per_day) {
        event_type_.insert(event_type_.end(), day.type.begin(), day.type.end());
        event_spread_.insert(event_spread_.end(), day.spread.begin(), day.spread.end());
        event_z_.insert(event_z_.end(), day.z.begin(), day.z.end());
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += day.counts[i];
        for (std::size_t i = 0; i < time_at_.size(); ++i) time_at_[i] += day.time_at[i];
        for (std::size_t i = 0; i < z_integral_.size(); ++i) z_integral_[i] += day.z_integral[i];
    }
    for (double t : time_at_) total_time_ += t;
}

double LikelihoodData::count(int type, int spread) const {
    return counts_[static_cast<std::size_t>(type) * static_cast<std::size_t>(sbar_) +
                   static_cast<std::size_t>(std::min(spread, sbar_) - 1)];
}

double LikelihoodData::time_at(int spread) const {
    return time_at_[static_cast<std::size_t>(std::min(spread, sbar_) - 1)];
}

void LikelihoodData::check(const ModelSpec& spec) const {
    if (spec.K != K_ || spec.statefns.sbar != sbar_ || spec.kernels.betas != betas_) {
        throw std::invalid_argument("spec dimensions (K, sbar, betas) do not match the likelihood data");
    }
}

double LikelihoodData::evaluate(const ModelSpec& spec, LikelihoodGradient* gradient,
                                LikelihoodDiagnostics* diagnostics) const {
    check(spec);
    const std::size_t width = static_cast<std::size_t>(dim_) * L_;
    const auto sb = static_cast<std::size_t>(sbar_);
    const bool signed_alpha = spec.alpha_mode == AlphaMode::kSigned;
    LikelihoodDiagnostics diag;

    if (gradient != nullptr) {
        gradient->mu.assign(static_cast<std::size_t>(dim_), 0.0);
        gradient->alpha.assign(spec.kernels.alphas.size(), 0.0);
        gradient->f.assign(static_cast<std::size_t>(dim_), std::vector<double>(sb, 0.0));
    }

    double event_term = 0.0;
    for (std::size_t k = 0; k < event_type_.size(); ++k) {
        const int e = event_type_[k];
        const double* z = event_z_.data() + k * width;
        const double* alpha = spec.kernels.alphas.data() + spec.kernels.offset(e, 0, 0);
        double bracket = spec.mus[static_cast<std::size_t>(e)];
        for (std::size_t i = 0; i < width; ++i) bracket += alpha[i] * z[i];
        const double f = spec.statefns(e, event_spread_[k]);
        if (f <= 0.0) {
            ++diag.zero_intensity_events;
            continue;
        }
        if (bracket < kBracketFloor) {
            if (!signed_alpha) {
                ++diag.zero_intensity_events;
                continue;
            }
            ++diag.clamped_events;
            event_term += std::log(kBracketFloor) + std::log(f);
            continue;
        }
        event_term += std::log(bracket) + std::log(f);
        if (gradient != nullptr) {
            const double inv = 1.0 / bracket;
            gradient->mu[static_cast<std::size_t>(e)] += inv;
            double* g = gradient->alpha.data() + spec.kernels.offset(e, 0, 0);
            for (std::size_t i = 0; i < width; ++i) g[i] += z[i] * inv;
        }
    }

    double compensator_term = 0.0;
    for (int e = 0; e < dim_; ++e) {
        const double mu = spec.mus[static_cast<std::size_t>(e)];
        const double* alpha = spec.kernels.alphas.data() + spec.kernels.offset(e, 0, 0);
        const int first = first_admissible_spread(e, K_);
        for (int s = first; s <= sbar_; ++s) {
            const auto si = static_cast<std::size_t>(s - 1);
            const double* zint = z_integral_.data() + si * width;
            double bucket = mu * time_at_[si];
            for (std::size_t i = 0; i < width; ++i) bucket += alpha[i] * zint[i];
            const double f = spec.statefns.values[static_cast<std::size_t>(e)][si];
            compensator_term += f * bucket;
            if (gradient != nullptr) {
                const double n = counts_[static_cast<std::size_t>(e) * sb + si];
                gradient->f[static_cast<std::size_t>(e)][si] = (n > 0.0 ? n / f : 0.0) - bucket;
                gradient->mu[static_cast<std::size_t>(e)] -= f * time_at_[si];
                double* g = gradient->alpha.data() + spec.kernels.offset(e, 0, 0);
                for (std::size_t i = 0; i < width; ++i) g[i] -= f * zint[i];
            }
        }
    }

    if (diagnostics != nullptr) *diagnostics = diag;
    if (diag.zero_intensity_events > 0) return kNegInf;
    return event_term - compensator_term;
}

double log_likelihood(const ModelSpec& spec, const Dataset& data, LikelihoodDiagnostics* diagnostics) {
    spec.validate();
    if (data.max_jump() > spec.K) throw std::invalid_argument("data contains jumps larger than spec K");
    LikelihoodData stats(data, spec.K, spec.kernels.betas, spec.statefns.sbar);
    return stats.evaluate(spec, nullptr, diagnostics);
}

double log_likelihood(const ModelSpec& spec, const SpreadPath& path) {
    Dataset data;
    data.days.push_back(path);
    return log_likelihood(spec, data);
}

LikelihoodGradient gradient(const ModelSpec& spec, const Dataset& data) {
    spec.validate();
    if (data.max_jump() > spec.K) throw std::invalid_argument("data contains jumps larger than spec K");
    LikelihoodData stats(data, spec.K, spec.kernels.betas, spec.statefns.sbar);
    LikelihoodGradient grad;
    stats.evaluate(spec, &grad);
    return grad;
}

CompensatorTrace compensator(const ModelSpec& spec, const SpreadPath& path) {
    spec.validate();
    path.validate(spec.K);
    const int dim = spec.dimension();
    const std::size_t L = spec.decays();
    CompensatorTrace trace;
    trace.values.assign(static_cast<std::size_t>(dim), {});
    std::vector<double> running(static_cast<std::size_t>(dim), 0.0);
    ExcitationState state = ExcitationState::cold(spec, path.s0);

    auto integrate_to = [&](double until) {
        const double dt = until - state.time;
        for (int e = 0; e < dim; ++e) {
            const double f = spec.statefns(e, state.spread);
            if (f == 0.0) continue;
            double bracket = spec.mus[static_cast<std::size_t>(e)] * dt;
            for (int src = 0; src < dim; ++src) {
                for (std::size_t l = 0; l < L; ++l) {
                    bracket += spec.kernels.alpha(e, src, l) * state.z[static_cast<std::size_t>(src) * L + l] *
                               decay_integral(spec.kernels.betas[l], dt);
                }
            }
            running[static_cast<std::size_t>(e)] += f * bracket;
        }
        advance_in_place(spec.kernels.betas, state, dt);
    };
    auto record = [&](double t) {
        trace.times.push_back(t);
        for (int e = 0; e < dim; ++e) trace.values[static_cast<std::size_t>(e)].push_back(running[static_cast<std::size_t>(e)]);
    };
    for (const auto& ev : path.events) {
        integrate_to(ev.seconds());
        record(ev.seconds());
        apply_jump_in_place(spec, state, EventType{ev.size}.index(spec.K));
    }
    integrate_to(path.horizon_seconds());
    record(path.horizon_seconds());
    return trace;
}

std::size_t free_parameter_count(int max_jump, int decays, int sbar) {
    if (max_jump < 1 || decays < 1 || sbar <= max_jump) {
        throw std::invalid_argument("free_parameter_count requires K >= 1, L >= 1, K < sbar");
    }
    const long K = max_jump, L = decays, S = sbar;
    return static_cast<std::size_t>(2 * K + 4 * L * K * K + 2 * K * S - (K * K + K) / 2 - 2 * K);
}

void FitConfig::validate() const {
    if (K < 1) throw ConfigurationError("fit.K: must be >= 1");
    if (betas.empty()) throw ConfigurationError("fit.betas: must be non-empty");
    for (std::size_t l = 0; l < betas.size(); ++l) {
        if (!(betas[l] > 0.0)) throw ConfigurationError("fit.betas[" + std::to_string(l) + "]: must be > 0");
        if (l > 0 && !(betas[l] > betas[l - 1])) {
            throw ConfigurationError("fit.betas[" + std::to_string(l) + "]: must be strictly increasing");
        }
    }
    if (sbar <= K) throw ConfigurationError("fit.sbar: must be > K");
    if (!(mu_floor > 0.0)) throw ConfigurationError("fit.mu_floor: must be > 0");
    if (optimizer.max_iterations < 1) throw ConfigurationError("fit.max_iterations: must be >= 1");
}

namespace {

/// Mapping between the free-parameter vector and a ModelSpec.
struct FreeLayout {
    int dim;
    std::size_t alpha_count;
    std::vector<std::pair<int, int>> f_entries;  // (type, spread)

    FreeLayout(const ModelSpec& spec) : dim(spec.dimension()), alpha_count(spec.kernels.alphas.size()) {
        for (int e = 0; e < dim; ++e) {
            for (int s = first_admissible_spread(e, spec.K) + 1; s <= spec.statefns.sbar; ++s) {
                f_entries.emplace_back(e, s);
            }
        }
    }

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(dim) + alpha_count + f_entries.size();
    }

    void pack(const ModelSpec& spec, std::span<double> x) const {
        std::size_t i = 0;
        for (double mu : spec.mus) x[i++] = mu;
        for (double a : spec.kernels.alphas) x[i++] = a;
        for (auto [e, s] : f_entries) x[i++] = spec.statefns(e, s);
    }

    void unpack(std::span<const double> x, ModelSpec& spec) const {
        std::size_t i = 0;
        for (double& mu : spec.mus) mu = x[i++];
        for (double& a : spec.kernels.alphas) a = x[i++];
        for (auto [e, s] : f_entries) spec.statefns.at(e, s) = x[i++];
    }

    void pack_gradient(const LikelihoodGradient& g, std::span<double> out) const {
        std::size_t i = 0;
        for (double v : g.mu) out[i++] = v;
        for (double v : g.alpha) out[i++] = v;
        for (auto [e, s] : f_entries) out[i++] = g.f[static_cast<std::size_t>(e)][static_cast<std::size_t>(s - 1)];
    }
};

}  // namespace

ModelSpec initial_spec(const LikelihoodData& stats, const FitConfig& config) {
    ModelSpec spec = make_spec(config.K, config.betas, config.sbar);
    spec.alpha_mode = config.alpha_mode;
    const int dim = spec.dimension();
    const double total = std::max(stats.total_time(), 1e-12);
    for (int e = 0; e < dim; ++e) {
        double n = 0.0;
        for (int s = 1; s <= config.sbar; ++s) n += stats.count(e, s);
        spec.mus[static_cast<std::size_t>(e)] = std::max(n / total, config.mu_floor);

        // Relative empirical rates per spread, normalized at the first admissible spread.
        const int first = first_admissible_spread(e, config.K);
        std::vector<double> rate(static_cast<std::size_t>(config.sbar) + 1, -1.0);
        for (int s = first; s <= config.sbar; ++s) {
            if (stats.time_at(s) > 0.0) rate[static_cast<std::size_t>(s)] = stats.count(e, s) / stats.time_at(s);
        }
        const double reference = rate[static_cast<std::size_t>(first)];
        for (int s = first + 1; s <= config.sbar; ++s) {
            const double r = rate[static_cast<std::size_t>(s)];
            spec.statefns.at(e, s) = (reference > 0.0 && r >= 0.0) ? r / reference : 1.0;
        }
    }
    std::fill(spec.kernels.alphas.begin(), spec.kernels.alphas.end(), config.alpha_init);
    return spec;
}

FitReport fit(const Dataset& data, const FitConfig& config, const std::optional<ModelSpec>& init) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    if (data.days.empty() || data.event_count() == 0) throw ConfigurationError("fit: dataset has no events");
    if (data.max_jump() > config.K) {
        throw ConfigurationError("fit: data contains jumps larger than K = " + std::to_string(config.K));
    }
    const LikelihoodData stats(data, config.K, config.betas, config.sbar);

    ModelSpec spec;
    if (init) {
        spec = *init;
        spec.alpha_mode = config.alpha_mode;
        spec.validate();
        if (spec.K != config.K || spec.statefns.sbar != config.sbar || spec.kernels.betas != config.betas) {
            throw ConfigurationError("fit: init spec does not match the fit configuration");
        }
        normalize(spec);
    } else {
        spec = initial_spec(stats, config);
    }

    const FreeLayout layout(spec);
    const std::size_t n = layout.size();
    const double scale = 1.0 / static_cast<double>(stats.events());

    BoxBounds bounds = BoxBounds::unbounded(n);
    for (std::size_t i = 0; i < static_cast<std::size_t>(layout.dim); ++i) bounds.lower[i] = config.mu_floor;
    for (std::size_t i = 0; i < layout.alpha_count; ++i) {
        if (config.alpha_mode == AlphaMode::kNonNegative) bounds.lower[static_cast<std::size_t>(layout.dim) + i] = 0.0;
    }
    for (std::size_t i = static_cast<std::size_t>(layout.dim) + layout.alpha_count; i < n; ++i) bounds.lower[i] = 0.0;

    std::vector<double> x0(n);
    layout.pack(spec, x0);
    ModelSpec work = spec;
    LikelihoodGradient grad;
    const Objective objective = [&](std::span<const double> x, std::span<double> g) {
        layout.unpack(x, work);
        const double ll = stats.evaluate(work, &grad);
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        layout.pack_gradient(grad, g);
        for (double& v : g) v *= -scale;
        return -ll * scale;
    };

    {
        std::vector<double> g0(n);
        if (!std::isfinite(objective(x0, g0))) {
            throw std::runtime_error("fit: log-likelihood is not finite at the initial point");
        }
    }

    const LbfgsResult result = minimize_lbfgs(objective, x0, bounds, config.optimizer);

    FitReport report;
    report.config = config;
    layout.unpack(result.x, spec);
    normalize(spec);
    report.spec = spec;
    LikelihoodDiagnostics diag;
    report.loglik = stats.evaluate(spec, nullptr, &diag);
    report.clamp_count = diag.clamped_events;
    report.trace.reserve(result.trace.size());
    for (double v : result.trace) report.trace.push_back(-v / scale);
    report.converged = result.converged;
    report.iterations = result.iterations;
    report.reason = result.reason;
    report.free_parameters = n;
    report.events = stats.events();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace sdsh
