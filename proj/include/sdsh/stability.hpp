#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdsh/event_model.hpp"
#include "sdsh/model_io.hpp"

namespace sdsh {

/// kTailViolated: the inequality holds on the tabulated spreads 1..sbar but cannot hold
/// for the constant tail beyond sbar (the growth condition on f^- needs unbounded f).
enum class ConditionStatus { kPass, kFail, kTailViolated };

std::string to_string(ConditionStatus status);

struct ConditionResult {
    std::string label;
    ConditionStatus status = ConditionStatus::kFail;
    std::string detail;
    std::map<std::string, double> witnesses;
};

struct StabilityReport {
    std::vector<ConditionResult> conditions;
    /// Lyapunov weights when a feasible set was found; labels parallel the values.
    std::optional<std::vector<double>> eta;
    std::vector<std::string> eta_labels;
    /// True when kernels with L > 1 were collapsed to their L1 norms.
    bool heuristic = false;
    /// kFail if any condition fails, else kTailViolated if any is tail-violated, else kPass.
    ConditionStatus overall = ConditionStatus::kFail;

    [[nodiscard]] const ConditionResult* find(const std::string& label) const;
};

/// Conditions A1-A3 for K = 1, L = 1. Throws std::invalid_argument otherwise.
StabilityReport check_k1(const ModelSpec& spec);

/// Explicit weights for the K = 1 drift conditions, from a 2x2 table
/// alpha[target][source] with index 0 = +, 1 = -.
struct EtaConstruction {
    bool feasible = false;
    std::string violated;             // precondition or inequality that failed
    std::array<double, 5> eta{};      // eta_11, eta_12, eta_21, eta_22, eta
    std::array<double, 3> slack{};    // right side minus left side of H1, H2, H3
    double delta = 0.0;
};

EtaConstruction construct_eta(const std::array<std::array<double, 2>, 2>& alpha);

/// Conditions for K <= 2: structural zeros and growth of the downward f, plus a margin LP
/// searching for positive weights satisfying the four inequality families. Upward families
/// are scaled by sup f^{+k}. L > 1 collapses kernels to L1 norms and sets `heuristic`.
/// Throws std::invalid_argument for K > 2.
StabilityReport check_general(const ModelSpec& spec);

Json report_to_json(const StabilityReport& report);
std::string format_report(const StabilityReport& report);

}  // namespace sdsh
