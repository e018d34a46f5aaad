#include "sdsh/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sdsh/errors.hpp"

namespace sdsh {

Nanos to_nanos(double seconds) {
    if (!std::isfinite(seconds)) throw std::invalid_argument("non-finite time");
    return static_cast<Nanos>(std::llround(seconds * 1e9));
}

EventType EventType::checked(int size, int max_jump) {
    if (size == 0 || std::abs(size) > max_jump) {
        throw std::invalid_argument("jump size " + std::to_string(size) + " outside {-" +
                                    std::to_string(max_jump) + "..+" + std::to_string(max_jump) +
                                    "} \\ {0}");
    }
    return EventType{size};
}

EventType EventType::from_index(int index, int max_jump) {
    if (index < 0 || index >= type_count(max_jump)) {
        throw std::invalid_argument("event type index out of range");
    }
    return EventType{index < max_jump ? index + 1 : -(index - max_jump + 1)};
}

void SpreadPath::validate(int max_jump) const {
    if (s0 < 1) throw InvariantViolation("initial spread must be >= 1");
    if (horizon < 0) throw InvariantViolation("negative horizon");
    long spread = s0;
    Nanos previous = -1;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ev = events[i];
        if (ev.time < 0 || ev.time > horizon) {
            throw InvariantViolation("event " + std::to_string(i) + " outside [0, horizon]");
        }
        if (ev.time <= previous) {
            throw InvariantViolation("event times not strictly increasing at event " +
                                     std::to_string(i));
        }
        if (ev.size == 0) throw InvariantViolation("zero jump at event " + std::to_string(i));
        if (max_jump > 0 && std::abs(ev.size) > max_jump) {
            throw InvariantViolation("jump of size " + std::to_string(ev.size) +
                                     " exceeds K at event " + std::to_string(i));
        }
        spread += ev.size;
        if (spread < 1) {
            throw InvariantViolation("spread drops below 1 tick at event " + std::to_string(i));
        }
        previous = ev.time;
    }
}

int SpreadPath::spread_at(Nanos t) const {
    auto end = std::upper_bound(events.begin(), events.end(), t,
                                [](Nanos value, const JumpEvent& ev) { return value < ev.time; });
    int spread = s0;
    for (auto it = events.begin(); it != end; ++it) spread += it->size;
    return spread;
}

int SpreadPath::final_spread() const {
    int spread = s0;
    for (const auto& ev : events) spread += ev.size;
    return spread;
}

KernelParams::KernelParams(int dim, std::vector<double> decay_rates)
    : dimension(dim),
      betas(std::move(decay_rates)),
      alphas(static_cast<std::size_t>(dim) * dim * betas.size(), 0.0) {}

double KernelParams::phi(int target, int source, double t) const {
    if (t < 0.0) return 0.0;
    double value = 0.0;
    for (std::size_t l = 0; l < betas.size(); ++l) {
        value += alpha(target, source, l) * betas[l] * std::exp(-betas[l] * t);
    }
    return value;
}

double KernelParams::l1_norm(int target, int source) const {
    double norm = 0.0;
    for (std::size_t l = 0; l < betas.size(); ++l) norm += alpha(target, source, l);
    return norm;
}

double StateFunctions::sup(int type) const {
    const auto& row = values[static_cast<std::size_t>(type)];
    return row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
}

int first_admissible_spread(int type_index, int max_jump) {
    return type_index < max_jump ? 1 : type_index - max_jump + 2;
}

void ModelSpec::validate(bool structural_zeros) const {
    if (K < 1) throw ConfigurationError("K must be >= 1");
    const int dim = dimension();
    if (static_cast<int>(mus.size()) != dim) {
        throw ConfigurationError("mus must have 2K = " + std::to_string(dim) + " entries");
    }
    for (double mu : mus) {
        if (!std::isfinite(mu) || mu < 0.0) throw ConfigurationError("mus must be finite and >= 0");
    }
    if (kernels.dimension != dim) throw ConfigurationError("kernel dimension differs from 2K");
    if (kernels.betas.empty()) throw ConfigurationError("betas must be non-empty");
    for (std::size_t l = 0; l < kernels.betas.size(); ++l) {
        if (!(kernels.betas[l] > 0.0) || !std::isfinite(kernels.betas[l])) {
            throw ConfigurationError("betas must be finite and > 0");
        }
        if (l > 0 && !(kernels.betas[l] > kernels.betas[l - 1])) {
            throw ConfigurationError("betas must be strictly increasing");
        }
    }
    if (kernels.alphas.size() != static_cast<std::size_t>(dim) * dim * kernels.betas.size()) {
        throw ConfigurationError("alphas must have shape [2K][2K][L]");
    }
    for (double a : kernels.alphas) {
        if (!std::isfinite(a)) throw ConfigurationError("alphas must be finite");
        if (alpha_mode == AlphaMode::kNonNegative && a < 0.0) {
            throw ConfigurationError("negative alpha requires signed alpha mode");
        }
    }
    if (statefns.sbar < K + 1) throw ConfigurationError("sbar must be >= K + 1");
    if (static_cast<int>(statefns.values.size()) != dim) {
        throw ConfigurationError("f must have one row per event type");
    }
    for (int e = 0; e < dim; ++e) {
        const auto& row = statefns.values[static_cast<std::size_t>(e)];
        if (static_cast<int>(row.size()) != statefns.sbar) {
            throw ConfigurationError("each f row must have sbar entries");
        }
        const int first = first_admissible_spread(e, K);
        for (int s = 1; s <= statefns.sbar; ++s) {
            const double v = row[static_cast<std::size_t>(s - 1)];
            if (!std::isfinite(v) || v < 0.0) throw ConfigurationError("f must be finite and >= 0");
            if (structural_zeros && s < first && v != 0.0) {
                throw ConfigurationError("f for jump " + std::to_string(EventType::from_index(e, K).size) +
                                         " must vanish at spread " + std::to_string(s));
            }
        }
    }
}

bool ModelSpec::is_normalized(double tolerance) const {
    for (const auto& row : statefns.values) {
        auto it = std::find_if(row.begin(), row.end(), [](double v) { return v > 0.0; });
        if (it != row.end() && std::abs(*it - 1.0) > tolerance) return false;
    }
    return true;
}

void ModelSpec::validate_normalized(double tolerance) const {
    validate();
    if (!is_normalized(tolerance)) {
        throw ConfigurationError("first non-zero value of each f^e must equal 1");
    }
}

ModelSpec make_spec(int max_jump, std::vector<double> betas, int sbar) {
    ModelSpec spec;
    spec.K = max_jump;
    const int dim = type_count(max_jump);
    spec.mus.assign(static_cast<std::size_t>(dim), 0.0);
    spec.kernels = KernelParams(dim, std::move(betas));
    spec.statefns.sbar = sbar;
    spec.statefns.values.assign(static_cast<std::size_t>(dim),
                                std::vector<double>(static_cast<std::size_t>(sbar), 0.0));
    for (int e = 0; e < dim; ++e) {
        for (int s = first_admissible_spread(e, max_jump); s <= sbar; ++s) spec.statefns.at(e, s) = 1.0;
    }
    return spec;
}

void normalize(ModelSpec& spec) {
    const int dim = spec.dimension();
    for (int e = 0; e < dim; ++e) {
        auto& row = spec.statefns.values[static_cast<std::size_t>(e)];
        auto it = std::find_if(row.begin(), row.end(), [](double v) { return v > 0.0; });
        if (it == row.end()) continue;
        const double scale = *it;
        for (double& v : row) v /= scale;
        spec.mus[static_cast<std::size_t>(e)] *= scale;
        for (int src = 0; src < dim; ++src) {
            for (std::size_t l = 0; l < spec.decays(); ++l) spec.kernels.alpha(e, src, l) *= scale;
        }
    }
}

ExcitationState ExcitationState::cold(const ModelSpec& spec, int spread, double time) {
    if (spread < 1) throw InvariantViolation("spread must be >= 1");
    ExcitationState state;
    state.spread = spread;
    state.time = time;
    state.z.assign(static_cast<std::size_t>(spec.dimension()) * spec.decays(), 0.0);
    return state;
}

void advance_in_place(std::span<const double> betas, ExcitationState& state, double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("advance: dt must be >= 0");
    if (dt == 0.0) return;
    const std::size_t L = betas.size();
    const std::size_t sources = state.z.size() / L;
    for (std::size_t l = 0; l < L; ++l) {
        const double decay = std::exp(-betas[l] * dt);
        for (std::size_t src = 0; src < sources; ++src) state.z[src * L + l] *= decay;
    }
    state.time += dt;
}

ExcitationState advance(const ModelSpec& spec, const ExcitationState& state, double dt) {
    ExcitationState next = state;
    advance_in_place(spec.kernels.betas, next, dt);
    return next;
}

void apply_jump_in_place(const ModelSpec& spec, ExcitationState& state, int type_index) {
    const int size = EventType::from_index(type_index, spec.K).size;
    if (state.spread + size < 1) {
        throw InvariantViolation("jump " + std::to_string(size) + " from spread " +
                                 std::to_string(state.spread) + " would go below 1 tick");
    }
    state.spread += size;
    const std::size_t L = spec.decays();
    for (std::size_t l = 0; l < L; ++l) {
        state.z[static_cast<std::size_t>(type_index) * L + l] += spec.kernels.betas[l];
    }
}

ExcitationState apply_jump(const ModelSpec& spec, const ExcitationState& state, EventType etype) {
    ExcitationState next = state;
    apply_jump_in_place(spec, next, EventType::checked(etype.size, spec.K).index(spec.K));
    return next;
}

double excitation(const ModelSpec& spec, std::span<const double> z, int type_index) {
    const std::size_t L = spec.decays();
    const int dim = spec.dimension();
    const double* alpha = spec.kernels.alphas.data() + spec.kernels.offset(type_index, 0, 0);
    double value = spec.mus[static_cast<std::size_t>(type_index)];
    for (std::size_t i = 0; i < static_cast<std::size_t>(dim) * L; ++i) value += alpha[i] * z[i];
    return value;
}

namespace {
void check_dimensions(const ModelSpec& spec, const ExcitationState& state) {
    if (state.z.size() != static_cast<std::size_t>(spec.dimension()) * spec.decays()) {
        throw std::invalid_argument("excitation state does not match spec dimensions");
    }
    if (state.spread < 1) throw std::invalid_argument("state spread must be >= 1");
}
}  // namespace

double intensity_at(const ModelSpec& spec, const ExcitationState& state, int type_index) {
    const double f = spec.statefns(type_index, state.spread);
    if (f == 0.0) return 0.0;
    return f * std::max(0.0, excitation(spec, state.z, type_index));
}

double intensity(const ModelSpec& spec, const ExcitationState& state, EventType etype) {
    check_dimensions(spec, state);
    return intensity_at(spec, state, EventType::checked(etype.size, spec.K).index(spec.K));
}

double total_intensity(const ModelSpec& spec, const ExcitationState& state) {
    check_dimensions(spec, state);
    double total = 0.0;
    for (int e = 0; e < spec.dimension(); ++e) total += intensity_at(spec, state, e);
    return total;
}

double intensity_bound(const ModelSpec& spec, const ExcitationState& state) {
    check_dimensions(spec, state);
    if (spec.alpha_mode == AlphaMode::kNonNegative) return total_intensity(spec, state);
    const std::size_t L = spec.decays();
    const int dim = spec.dimension();
    double total = 0.0;
    for (int e = 0; e < dim; ++e) {
        const double f = spec.statefns(e, state.spread);
        if (f == 0.0) continue;
        double bracket = spec.mus[static_cast<std::size_t>(e)];
        for (int src = 0; src < dim; ++src) {
            for (std::size_t l = 0; l < L; ++l) {
                bracket += std::max(0.0, spec.kernels.alpha(e, src, l)) *
                           state.z[static_cast<std::size_t>(src) * L + l];
            }
        }
        total += f * bracket;
    }
    return total;
}

}  // namespace sdsh
