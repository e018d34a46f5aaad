#include "sdsh/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdsh/errors.hpp"

namespace sdsh {

double DecayingBaseline::at(int type_index, double t) const {
    const std::size_t e = static_cast<std::size_t>(type_index);
    double value = constant[e];
    for (std::size_t j = 0; j < rates.size(); ++j) {
        value += amplitude[e * rates.size() + j] * std::exp(-rates[j] * t);
    }
    return value;
}

double DecayingBaseline::bound_from(int type_index, double t) const {
    const std::size_t e = static_cast<std::size_t>(type_index);
    double value = constant[e];
    for (std::size_t j = 0; j < rates.size(); ++j) {
        value += std::max(0.0, amplitude[e * rates.size() + j]) * std::exp(-rates[j] * t);
    }
    return value;
}

namespace {

void check_baseline(const ModelSpec& spec, const DecayingBaseline& baseline) {
    const auto dim = static_cast<std::size_t>(spec.dimension());
    if (baseline.constant.size() != dim || baseline.amplitude.size() != dim * baseline.rates.size()) {
        throw std::invalid_argument("baseline dimensions do not match spec");
    }
    for (double r : baseline.rates) {
        if (!(r > 0.0)) throw std::invalid_argument("baseline decay rates must be > 0");
    }
    for (double c : baseline.constant) {
        if (!(c >= 0.0)) throw std::invalid_argument("baseline constants must be >= 0");
    }
}

/// Core thinning loop; `on_event(time_seconds, type_index)` is called for each accepted event.
template <class OnEvent>
ExcitationState run_thinning(const ModelSpec& spec, ExcitationState state,
                             const std::optional<DecayingBaseline>& baseline, double horizon,
                             Philox& rng, const SimulationOptions& options, OnEvent&& on_event) {
    spec.validate_normalized();
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be > 0");
    if (state.spread < 1) throw std::invalid_argument("initial spread must be >= 1");
    if (state.z.size() != static_cast<std::size_t>(spec.dimension()) * spec.decays()) {
        throw std::invalid_argument("excitation state does not match spec dimensions");
    }
    if (baseline) check_baseline(spec, *baseline);

    const int dim = spec.dimension();
    const std::size_t L = spec.decays();
    const bool signed_alpha = spec.alpha_mode == AlphaMode::kSigned;
    std::vector<double> rates(static_cast<std::size_t>(dim));
    std::uint64_t candidates = 0;
    double t = 0.0;

    auto kernel_part = [&](int e, bool positive_only) {
        double sum = 0.0;
        const double* alpha = spec.kernels.alphas.data() + spec.kernels.offset(e, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(dim) * L; ++i) {
            const double a = positive_only ? std::max(0.0, alpha[i]) : alpha[i];
            sum += a * state.z[i];
        }
        return sum;
    };

    while (true) {
        double bound = 0.0;
        for (int e = 0; e < dim; ++e) {
            const double f = spec.statefns(e, state.spread);
            if (f == 0.0) continue;
            const double mu = baseline ? baseline->bound_from(e, t) : spec.mus[static_cast<std::size_t>(e)];
            bound += f * (mu + kernel_part(e, signed_alpha));
        }
        if (!(bound > 0.0)) break;

        const double next = t + rng.exponential(bound);
        if (next > horizon) break;
        if (++candidates > options.max_candidates) {
            throw SimulationError("explosive configuration: thinning exceeded " +
                                  std::to_string(options.max_candidates) + " candidates at t = " +
                                  std::to_string(next));
        }
        advance_in_place(spec.kernels.betas, state, next - t);
        t = next;

        double total = 0.0;
        for (int e = 0; e < dim; ++e) {
            const double f = spec.statefns(e, state.spread);
            double rate = 0.0;
            if (f != 0.0) {
                const double mu = baseline ? baseline->at(e, t) : spec.mus[static_cast<std::size_t>(e)];
                rate = f * std::max(0.0, mu + kernel_part(e, false));
            }
            rates[static_cast<std::size_t>(e)] = rate;
            total += rate;
        }
        const double u = rng.uniform() * bound;
        if (u >= total) continue;

        double cumulative = 0.0;
        int chosen = dim - 1;
        for (int e = 0; e < dim; ++e) {
            cumulative += rates[static_cast<std::size_t>(e)];
            if (u < cumulative) {
                chosen = e;
                break;
            }
        }
        while (rates[static_cast<std::size_t>(chosen)] == 0.0) --chosen;  // guard against rounding at the top
        apply_jump_in_place(spec, state, chosen);
        on_event(t, chosen);
    }
    return state;
}

}  // namespace

SpreadPath simulate_from_state(const ModelSpec& spec, const ExcitationState& state,
                               const std::optional<DecayingBaseline>& baseline, double horizon,
                               Philox& rng, const SimulationOptions& options) {
    SpreadPath path;
    path.s0 = state.spread;
    path.horizon = to_nanos(horizon);
    run_thinning(spec, state, baseline, horizon, rng, options, [&](double t, int type) {
        Nanos stamp = std::min(to_nanos(t), path.horizon);
        if (!path.events.empty() && stamp <= path.events.back().time) stamp = path.events.back().time + 1;
        path.events.push_back({stamp, EventType::from_index(type, spec.K).size});
    });
    return path;
}

int simulate_final_spread(const ModelSpec& spec, const ExcitationState& state,
                          const std::optional<DecayingBaseline>& baseline, double horizon,
                          Philox& rng, const SimulationOptions& options) {
    return run_thinning(spec, state, baseline, horizon, rng, options, [](double, int) {}).spread;
}

SpreadPath simulate(const ModelSpec& spec, double horizon, int s0, std::uint64_t seed,
                    const SimulationOptions& options) {
    if (s0 < 1) throw std::invalid_argument("s0 must be >= 1");
    Philox rng(seed, 0);
    return simulate_from_state(spec, ExcitationState::cold(spec, s0), std::nullopt, horizon, rng, options);
}

namespace {

ModelSpec two_sided_k1(double mu_plus, double mu_minus, double beta) {
    ModelSpec spec = make_spec(1, {beta}, 2);
    spec.mus = {mu_plus, mu_minus};
    return spec;
}

}  // namespace

ModelSpec preset_zheng(const ZhengParams& p) {
    ModelSpec spec = two_sided_k1(p.mu_plus, p.mu_minus, p.beta);
    spec.kernels.alpha(0, 0, 0) = p.alpha_pp;
    spec.kernels.alpha(0, 1, 0) = p.alpha_pm;
    spec.kernels.alpha(1, 0, 0) = p.alpha_mp;
    spec.kernels.alpha(1, 1, 0) = p.alpha_mm;
    spec.validate_normalized();
    return spec;
}

ModelSpec preset_fosset(const FossetParams& p) {
    ModelSpec spec = two_sided_k1(p.mu_plus, p.mu_minus, p.beta);
    spec.kernels.alpha(0, 0, 0) = p.alpha;
    spec.validate_normalized();
    return spec;
}

double fosset_critical_alpha(const FossetParams& p) { return 1.0 - p.mu_plus / p.mu_minus; }

namespace {

double param(const nlohmann::json& params, const std::string& preset_name, const char* key) {
    auto it = params.find(key);
    if (it == params.end() || !it->is_number()) {
        throw ConfigurationError("preset " + preset_name + ": missing numeric parameter '" + key + "'");
    }
    return it->get<double>();
}

}  // namespace

ModelSpec preset(const std::string& name, const nlohmann::json& params) {
    if (name == "demo") return demo_spec();
    if (name == "recovery") return recovery_spec();
    if (!params.is_object()) throw ConfigurationError("preset " + name + ": parameters must be an object");
    if (name == "zheng") {
        ZhengParams p;
        p.mu_plus = param(params, name, "mu_plus");
        p.mu_minus = param(params, name, "mu_minus");
        p.alpha_pp = param(params, name, "alpha_pp");
        p.alpha_pm = param(params, name, "alpha_pm");
        p.alpha_mp = param(params, name, "alpha_mp");
        p.alpha_mm = param(params, name, "alpha_mm");
        p.beta = param(params, name, "beta");
        return preset_zheng(p);
    }
    if (name == "fosset") {
        FossetParams p;
        p.mu_plus = param(params, name, "mu_plus");
        p.mu_minus = param(params, name, "mu_minus");
        p.alpha = param(params, name, "alpha");
        p.beta = param(params, name, "beta");
        return preset_fosset(p);
    }
    throw ConfigurationError("unknown preset '" + name + "' (expected zheng, fosset, demo, recovery)");
}

ModelSpec demo_spec() {
    ModelSpec spec = make_spec(1, {1.0}, 3);
    spec.mus = {0.3, 0.3};
    spec.kernels.alpha(0, 0, 0) = 0.1;
    spec.kernels.alpha(1, 1, 0) = 0.1;
    spec.kernels.alpha(0, 1, 0) = 0.2;
    spec.kernels.alpha(1, 0, 0) = 0.2;
    spec.statefns.values = {{1.0, 0.7, 0.3}, {0.0, 1.0, 5.0}};
    spec.validate_normalized();
    return spec;
}

ModelSpec recovery_spec() {
    // Kernel matrices are quoted as phi(t) = A1 exp(-20 t) + A2 exp(-200 t), rows = target,
    // columns = source, so alpha_l = A_l / beta_l.
    constexpr double kA1[2][2] = {{2.0, 6.0}, {10.0, 0.0}};
    constexpr double kA2[2][2] = {{4.0, 20.0}, {20.0, 4.0}};
    ModelSpec spec = make_spec(1, {20.0, 200.0}, 4);
    spec.mus = {0.3, 0.2};
    for (int e = 0; e < 2; ++e) {
        for (int src = 0; src < 2; ++src) {
            spec.kernels.alpha(e, src, 0) = kA1[e][src] / 20.0;
            spec.kernels.alpha(e, src, 1) = kA2[e][src] / 200.0;
        }
    }
    spec.statefns.values = {{1.0, 0.8, 0.5, 0.2}, {0.0, 1.0, 2.0, 3.0}};
    spec.validate_normalized();
    return spec;
}

}  // namespace sdsh
