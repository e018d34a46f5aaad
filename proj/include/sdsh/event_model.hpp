#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sdsh {

/// Timestamps are integer nanoseconds; all model arithmetic is in seconds.
using Nanos = std::int64_t;

constexpr double to_seconds(Nanos t) noexcept { return static_cast<double>(t) * 1e-9; }
Nanos to_nanos(double seconds);

/// Number of event types for maximum jump size K.
constexpr int type_count(int max_jump) noexcept { return 2 * max_jump; }

/// A signed spread jump in ticks. Types are indexed in the order
/// [+1, +2, ..., +K, -1, -2, ..., -K]; every per-type table uses this order.
struct EventType {
    int size = 1;

    /// Throws std::invalid_argument unless 0 < |size| <= max_jump.
    static EventType checked(int size, int max_jump);
    static EventType from_index(int index, int max_jump);

    [[nodiscard]] int index(int max_jump) const noexcept {
        return size > 0 ? size - 1 : max_jump - size - 1;
    }

    friend bool operator==(EventType, EventType) = default;
};

struct JumpEvent {
    Nanos time = 0;
    int size = 0;

    [[nodiscard]] double seconds() const noexcept { return to_seconds(time); }
    friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

/// One realization: initial spread plus strictly increasing signed jumps on [0, horizon].
struct SpreadPath {
    int s0 = 1;
    Nanos horizon = 0;
    std::vector<JumpEvent> events;

    [[nodiscard]] double horizon_seconds() const noexcept { return to_seconds(horizon); }

    /// Throws InvariantViolation on ties, out-of-range times, zero or oversized jumps
    /// (when max_jump > 0), or a running spread below one tick.
    void validate(int max_jump = 0) const;

    /// Right-continuous spread value at time t (jumps at t are included).
    [[nodiscard]] int spread_at(Nanos t) const;
    [[nodiscard]] int final_spread() const;

    friend bool operator==(const SpreadPath&, const SpreadPath&) = default;
};

/// Sum-of-exponentials kernels sharing one decay grid:
/// phi^{e,e'}(t) = sum_l alpha[e][e'][l] * beta_l * exp(-beta_l t).
struct KernelParams {
    int dimension = 0;
    std::vector<double> betas;
    std::vector<double> alphas;  // [target][source][l], row-major

    KernelParams() = default;
    KernelParams(int dimension, std::vector<double> betas);

    [[nodiscard]] std::size_t decays() const noexcept { return betas.size(); }

    [[nodiscard]] std::size_t offset(int target, int source, std::size_t l) const noexcept {
        return (static_cast<std::size_t>(target) * dimension + source) * betas.size() + l;
    }
    double& alpha(int target, int source, std::size_t l) { return alphas[offset(target, source, l)]; }
    [[nodiscard]] double alpha(int target, int source, std::size_t l) const {
        return alphas[offset(target, source, l)];
    }

    [[nodiscard]] double phi(int target, int source, double t) const;
    [[nodiscard]] double l1_norm(int target, int source) const;
};

/// Spread modulation f^e(s), dense for s = 1..sbar with a constant tail beyond sbar.
struct StateFunctions {
    int sbar = 0;
    std::vector<std::vector<double>> values;  // [type][s - 1]

    [[nodiscard]] double operator()(int type, int spread) const {
        const int s = spread < sbar ? spread : sbar;
        return values[static_cast<std::size_t>(type)][static_cast<std::size_t>(s - 1)];
    }
    double& at(int type, int spread) {
        return values[static_cast<std::size_t>(type)][static_cast<std::size_t>(spread - 1)];
    }
    [[nodiscard]] double sup(int type) const;
};

enum class AlphaMode { kNonNegative, kSigned };

/// Spread index of the first entry of f^e that may be non-zero (1 for upward types,
/// k + 1 for a downward jump of size k).
int first_admissible_spread(int type_index, int max_jump);

struct ModelSpec {
    int K = 1;
    std::vector<double> mus;
    KernelParams kernels;
    StateFunctions statefns;
    AlphaMode alpha_mode = AlphaMode::kNonNegative;

    [[nodiscard]] int dimension() const noexcept { return type_count(K); }
    [[nodiscard]] std::size_t decays() const noexcept { return kernels.decays(); }

    /// Dimensions, signs, decay ordering and (unless disabled) structural zeros.
    /// Throws ConfigurationError.
    void validate(bool structural_zeros = true) const;
    /// validate() plus the first-non-zero-equals-one convention on f.
    void validate_normalized(double tolerance = 1e-12) const;
    [[nodiscard]] bool is_normalized(double tolerance = 1e-12) const;
};

/// Spec with zero baselines and kernels, f = 1 on admissible spreads and 0 elsewhere.
ModelSpec make_spec(int max_jump, std::vector<double> betas, int sbar);

/// Rescale each f^e so its first admissible non-zero entry is 1, compensating mu^e and
/// alpha[e][.][.]. Intensities are unchanged.
void normalize(ModelSpec& spec);

/// Markov state of the excitation: z[e'][l] = beta_l * sum_{t_i < t, e_i = e'} exp(-beta_l (t - t_i)).
struct ExcitationState {
    int spread = 1;
    double time = 0.0;
    std::vector<double> z;  // [source][l]

    static ExcitationState cold(const ModelSpec& spec, int spread, double time = 0.0);
};

/// Exact flow between events. Throws std::invalid_argument on dt < 0.
ExcitationState advance(const ModelSpec& spec, const ExcitationState& state, double dt);
void advance_in_place(std::span<const double> betas, ExcitationState& state, double dt);

/// Throws InvariantViolation if the jump would take the spread below one tick.
ExcitationState apply_jump(const ModelSpec& spec, const ExcitationState& state, EventType etype);
void apply_jump_in_place(const ModelSpec& spec, ExcitationState& state, int type_index);

/// Bracket term mu^e + sum alpha z (unclamped, before the f factor).
double excitation(const ModelSpec& spec, std::span<const double> z, int type_index);

double intensity(const ModelSpec& spec, const ExcitationState& state, EventType etype);
double intensity_at(const ModelSpec& spec, const ExcitationState& state, int type_index);
double total_intensity(const ModelSpec& spec, const ExcitationState& state);

/// Upper bound on total intensity until the next event: equals total_intensity when all
/// alphas are non-negative, otherwise drops negative kernel contributions.
double intensity_bound(const ModelSpec& spec, const ExcitationState& state);

}  // namespace sdsh
