#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdsh/acdp.hpp"
#include "sdsh/likelihood.hpp"
#include "sdsh/simulator.hpp"

namespace sdsh {

struct ForecastRequest {
    double t0 = 0.0;
    double window = 60.0;
    double horizon = 1.0;
    int n_paths = 100;
    std::uint64_t seed = 0;
    /// Log a warning when the window holds no events.
    bool warn_on_cold_start = true;

    /// Throws std::invalid_argument unless window > 0, horizon > 0, n_paths >= 1, t0 >= 0.
    void validate() const;
};

struct ForecastResult {
    double mean = 0.0;
    std::vector<int> samples;
    int spread_at_t0 = 0;
    bool cold_start = false;
};

/// Spread at t0 (right-continuous) reconstructed from a path.
int spread_at(const SpreadPath& path, double t);

/// Baseline mu(t0 + u) = mu^e + sum over window events of phi^{e, e_i}(t0 + u - t_i), as
/// decaying exponentials in u. Window = events with t0 - window < t_i <= t0.
DecayingBaseline window_baseline(const ModelSpec& spec, const SpreadPath& history, double t0, double window,
                                 std::size_t* window_events = nullptr);

/// Monte-Carlo mean of S_{t0+horizon}: each path starts at S_{t0} with no endogenous
/// excitation and the window baseline above. Path i draws from Philox(request.seed, i).
ForecastResult sdsh_forecast(const ModelSpec& spec, const SpreadPath& history, const ForecastRequest& request,
                             const SimulationOptions& options = {});

double last_predict(const SpreadPath& history, double t0);

/// Interface used by the evaluation harness. Calls arrive in increasing t0 within a day
/// and begin_day() precedes each day.
class Predictor {
public:
    virtual ~Predictor() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual void begin_day(const SpreadPath& /*day*/, double /*delta*/) {}
    /// Prediction of S_{t0+delta}. May throw; the harness counts and skips such samples.
    virtual double predict(const SpreadPath& day, double t0, double delta, std::uint64_t point_id) = 0;
};

class LastPredictor final : public Predictor {
public:
    [[nodiscard]] std::string name() const override { return "Last"; }
    double predict(const SpreadPath& day, double t0, double delta, std::uint64_t point_id) override;
};

struct AcdpPredictorOptions {
    double calibration_window = 3600.0;
    double refit_every = 600.0;
    AcdpFitOptions fit{};
};

/// Refit on the trailing calibration window (spread sampled every delta) whenever refit_every
/// seconds have passed since the previous fit; predicts 1 + lambda one step ahead.
class AcdpPredictor final : public Predictor {
public:
    explicit AcdpPredictor(AcdpPredictorOptions options = {}) : options_(std::move(options)) {}
    [[nodiscard]] std::string name() const override { return "ACDP"; }
    void begin_day(const SpreadPath& day, double delta) override;
    double predict(const SpreadPath& day, double t0, double delta, std::uint64_t point_id) override;

    [[nodiscard]] std::size_t fits() const noexcept { return fits_; }

private:
    AcdpPredictorOptions options_;
    std::optional<AcdpParams> params_;
    double last_fit_ = 0.0;
    std::size_t fits_ = 0;
};

class SdshPredictor final : public Predictor {
public:
    SdshPredictor(ModelSpec spec, double window, int n_paths, std::uint64_t seed)
        : spec_(std::move(spec)), window_(window), n_paths_(n_paths), seed_(seed) {}
    [[nodiscard]] std::string name() const override { return "SDSH"; }
    double predict(const SpreadPath& day, double t0, double delta, std::uint64_t point_id) override;

    [[nodiscard]] std::size_t cold_starts() const noexcept { return cold_starts_; }

private:
    ModelSpec spec_;
    double window_;
    int n_paths_;
    std::uint64_t seed_;
    std::size_t cold_starts_ = 0;
};

struct EvaluationConfig {
    std::vector<double> deltas = {3.0, 6.0, 12.0, 30.0};
    /// Evaluation times t0 = start + j delta with t0 + delta <= end (seconds from day start).
    double start = 3600.0;
    double end = 7200.0;
    /// Day ids used for training; overlap with the test set is an error.
    std::vector<std::int64_t> train_day_ids;
};

struct EvaluationTable {
    std::vector<double> deltas;
    std::vector<std::string> predictors;
    std::vector<std::vector<double>> mse;               // [predictor][delta]
    std::vector<std::vector<std::size_t>> points;       // [predictor][delta], successful samples
    std::vector<std::vector<std::size_t>> failures;     // [predictor][delta]

    [[nodiscard]] std::string to_csv() const;
    [[nodiscard]] std::string format() const;
};

/// Throws ConfigurationError when test days overlap training days or the config is invalid.
EvaluationTable evaluate(const std::vector<Predictor*>& predictors, const Dataset& test,
                         const EvaluationConfig& config);

}  // namespace sdsh
