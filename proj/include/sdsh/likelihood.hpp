#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdsh/event_model.hpp"
#include "sdsh/optimizer.hpp"

namespace sdsh {

/// Independent daily realizations. day_ids parallel `days`.
struct Dataset {
    std::vector<SpreadPath> days;
    std::vector<std::int64_t> day_ids;
    std::string asset;
    /// Clock bounds (seconds) the days were clipped to, when loaded with a slot.
    std::optional<std::pair<double, double>> slot;
    /// Free-form provenance carried through the sidecar (spec hash, seed, ...).
    nlohmann::json metadata = nlohmann::json::object();

    [[nodiscard]] std::size_t event_count() const;
    [[nodiscard]] double total_horizon() const;
    [[nodiscard]] int max_jump() const;
};

struct LikelihoodGradient {
    std::vector<double> mu;                  // [type]
    std::vector<double> alpha;               // same layout as KernelParams::alphas
    std::vector<std::vector<double>> f;      // [type][s - 1]; zero on structural zeros
};

struct LikelihoodDiagnostics {
    std::size_t zero_intensity_events = 0;  // events where f^e(S_{t-}) = 0 or the bracket is <= 0
    std::size_t clamped_events = 0;         // signed-alpha mode: bracket clamped at the floor
};

/// Parameter-independent sufficient statistics of a dataset for a fixed decay grid and
/// saturation spread. Evaluating the log-likelihood and its gradient only needs one pass over
/// the per-event excitation vectors; compensator integrals are stored per spread bucket.
class LikelihoodData {
public:
    LikelihoodData(const Dataset& data, int max_jump, std::span<const double> betas, int sbar);

    /// Exact log-likelihood; -infinity when an event occurs where its intensity vanishes.
    double evaluate(const ModelSpec& spec, LikelihoodGradient* gradient = nullptr,
                    LikelihoodDiagnostics* diagnostics = nullptr) const;

    [[nodiscard]] int max_jump() const noexcept { return K_; }
    [[nodiscard]] int sbar() const noexcept { return sbar_; }
    [[nodiscard]] std::size_t decays() const noexcept { return L_; }
    [[nodiscard]] std::size_t events() const noexcept { return event_type_.size(); }
    [[nodiscard]] double total_time() const noexcept { return total_time_; }
    /// Number of type-e events at (capped) pre-event spread s.
    [[nodiscard]] double count(int type, int spread) const;
    /// Time spent at (capped) spread s.
    [[nodiscard]] double time_at(int spread) const;

    /// Floor applied to the bracket in signed-alpha mode.
    static constexpr double kBracketFloor = 1e-10;

private:
    void check(const ModelSpec& spec) const;

    int K_;
    int dim_;
    std::size_t L_;
    int sbar_;
    std::vector<double> betas_;
    std::vector<int> event_type_;
    std::vector<int> event_spread_;  // capped at sbar
    std::vector<double> event_z_;    // [event][source][l], state just before the event
    std::vector<double> counts_;     // [type][s - 1]
    std::vector<double> time_at_;    // [s - 1]
    std::vector<double> z_integral_; // [s - 1][source][l], integral of z while at spread s
    double total_time_ = 0.0;
};

double log_likelihood(const ModelSpec& spec, const Dataset& data,
                      LikelihoodDiagnostics* diagnostics = nullptr);
double log_likelihood(const ModelSpec& spec, const SpreadPath& path);
LikelihoodGradient gradient(const ModelSpec& spec, const Dataset& data);

/// Lambda^e(t) = integral of lambda^e over [0, t], at every event time and at the horizon.
struct CompensatorTrace {
    std::vector<double> times;               // event times, then the horizon
    std::vector<std::vector<double>> values; // [type][time index]
};
CompensatorTrace compensator(const ModelSpec& spec, const SpreadPath& path);

/// 2K + 4LK^2 + 2K sbar - (K^2 + K)/2 - 2K (requires K < sbar).
std::size_t free_parameter_count(int max_jump, int decays, int sbar);

struct FitConfig {
    int K = 1;
    std::vector<double> betas;
    int sbar = 2;
    AlphaMode alpha_mode = AlphaMode::kNonNegative;
    double mu_floor = 1e-10;
    double alpha_init = 0.01;
    LbfgsOptions optimizer{};

    /// Throws ConfigurationError.
    void validate() const;
};

struct FitReport {
    ModelSpec spec;
    FitConfig config;
    double loglik = 0.0;
    std::vector<double> trace;  // log-likelihood per accepted iterate
    bool converged = false;
    int iterations = 0;
    std::string reason;
    std::size_t clamp_count = 0;
    std::size_t free_parameters = 0;
    std::size_t events = 0;
    double wall_seconds = 0.0;
};

/// Initial point used by fit() when no init is supplied.
ModelSpec initial_spec(const LikelihoodData& stats, const FitConfig& config);

/// Maximum-likelihood fit by projected quasi-Newton ascent. mu >= mu_floor, alpha >= 0
/// (non-negative mode), f >= 0; structural zeros and the normalized f entries are held fixed.
/// Throws ConfigurationError for an invalid config or empty data, std::runtime_error when the
/// likelihood is not finite at the initial point.
FitReport fit(const Dataset& data, const FitConfig& config, const std::optional<ModelSpec>& init = std::nullopt);

}  // namespace sdsh
