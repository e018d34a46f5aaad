#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdsh/event_model.hpp"
#include "sdsh/rng.hpp"

namespace sdsh {

struct SimulationOptions {
    /// Thinning candidates allowed per call before the run is declared explosive.
    std::uint64_t max_candidates = 100'000'000;
};

/// Exogenous baseline mu(t) = constant[e] + sum_j amplitude[e][j] * exp(-rates[j] * t), with
/// t measured from the start of the simulation. Non-increasing when amplitudes are >= 0.
struct DecayingBaseline {
    std::vector<double> constant;   // [type]
    std::vector<double> rates;      // [j]
    std::vector<double> amplitude;  // [type][j]

    [[nodiscard]] double at(int type_index, double t) const;
    /// Upper bound of at(type, u) for u >= t.
    [[nodiscard]] double bound_from(int type_index, double t) const;
};

/// Ogata thinning from a cold start (z = 0) at spread s0, on [0, horizon] seconds.
/// Uses Philox(seed, 0). Throws ConfigurationError for a spec breaking its invariants and
/// SimulationError when the candidate budget is exhausted.
SpreadPath simulate(const ModelSpec& spec, double horizon, int s0, std::uint64_t seed,
                    const SimulationOptions& options = {});

/// Thinning from an arbitrary excitation state; event times are relative to the start.
/// When `baseline` is given it replaces mu^e inside the intensity bracket.
SpreadPath simulate_from_state(const ModelSpec& spec, const ExcitationState& state,
                               const std::optional<DecayingBaseline>& baseline, double horizon,
                               Philox& rng, const SimulationOptions& options = {});

/// Same as simulate_from_state but only returns the final spread (no event storage).
int simulate_final_spread(const ModelSpec& spec, const ExcitationState& state,
                          const std::optional<DecayingBaseline>& baseline, double horizon,
                          Philox& rng, const SimulationOptions& options = {});

struct ZhengParams {
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    double alpha_pp = 0.0;  // target +, source +
    double alpha_pm = 0.0;  // target +, source -
    double alpha_mp = 0.0;  // target -, source +
    double alpha_mm = 0.0;  // target -, source -
    double beta = 1.0;
};

struct FossetParams {
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    double alpha = 0.0;
    double beta = 1.0;
};

/// Two-dimensional constrained Hawkes model with full 2x2 exponential kernel.
ModelSpec preset_zheng(const ZhengParams& params);
/// Self-exciting upward jumps, constant downward rate on spreads >= 2.
ModelSpec preset_fosset(const FossetParams& params);
/// alpha_c = 1 - mu^+ / mu^-; below it the spread is stationary.
double fosset_critical_alpha(const FossetParams& params);

/// Build a preset from a JSON parameter object. `name` is "zheng" or "fosset".
/// Throws ConfigurationError on unknown names or missing parameters.
ModelSpec preset(const std::string& name, const nlohmann::json& params);

/// K = 1, L = 1, beta = 1 demonstration configuration (20 s illustration path).
ModelSpec demo_spec();
/// K = 1, two exponentials (20/s, 200/s), non-trivial f; used for parameter recovery.
ModelSpec recovery_spec();

}  // namespace sdsh
