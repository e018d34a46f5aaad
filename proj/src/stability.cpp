#include "sdsh/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sdsh/linear_program.hpp"

namespace sdsh {

std::string to_string(ConditionStatus status) {
    switch (status) {
        case ConditionStatus::kPass: return "pass";
        case ConditionStatus::kFail: return "fail";
        case ConditionStatus::kTailViolated: return "tail-violated (constant-tail model)";
    }
    return "unknown";
}

const ConditionResult* StabilityReport::find(const std::string& label) const {
    for (const auto& c : conditions) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

namespace {

constexpr double kEtaLower = 1e-6;
constexpr double kEtaUpper = 1e6;
constexpr double kMarginCap = 1.0;
constexpr double kMarginTolerance = 1e-9;

void finish(StabilityReport& report) {
    bool tail = false;
    for (const auto& c : report.conditions) {
        if (c.status == ConditionStatus::kFail) {
            report.overall = ConditionStatus::kFail;
            return;
        }
        tail = tail || c.status == ConditionStatus::kTailViolated;
    }
    report.overall = tail ? ConditionStatus::kTailViolated : ConditionStatus::kPass;
}

std::string type_label(int index, int K) {
    const int size = EventType::from_index(index, K).size;
    return (size > 0 ? "+" : "") + std::to_string(size);
}

/// Growth of the downward state functions over spreads from..sbar:
/// gamma = min_s max_k f^{-k}(s) / s.
ConditionResult growth_condition(const ModelSpec& spec, const std::string& label, int from) {
    ConditionResult c;
    c.label = label;
    const int K = spec.K;
    double gamma = std::numeric_limits<double>::infinity();
    int argmin = from;
    for (int s = from; s <= spec.statefns.sbar; ++s) {
        double best = 0.0;
        for (int k = 1; k <= K; ++k) best = std::max(best, spec.statefns(EventType{-k}.index(K), s));
        const double ratio = best / s;
        if (ratio < gamma) {
            gamma = ratio;
            argmin = s;
        }
    }
    c.witnesses["gamma"] = gamma;
    c.witnesses["argmin_spread"] = argmin;
    c.witnesses["sbar"] = spec.statefns.sbar;
    if (gamma > 0.0) {
        c.status = ConditionStatus::kTailViolated;
        c.detail = "holds on spreads " + std::to_string(from) + ".." + std::to_string(spec.statefns.sbar) +
                   " with gamma = " + std::to_string(gamma) + "; constant tail beyond sbar cannot grow linearly";
    } else {
        c.status = ConditionStatus::kFail;
        c.detail = "downward state function vanishes at spread " + std::to_string(argmin);
    }
    return c;
}

/// Kernel mass from source to target: alpha for L = 1, the L1 norm otherwise.
double kernel_mass(const ModelSpec& spec, int target, int source) {
    return spec.kernels.l1_norm(target, source);
}

}  // namespace

StabilityReport check_k1(const ModelSpec& spec) {
    spec.validate(false);  // structural zeros are reported, not rejected
    if (spec.K != 1 || spec.decays() != 1) {
        throw std::invalid_argument("check_k1 requires K = 1 and L = 1; use check_general");
    }
    StabilityReport report;
    const int up = 0;
    const int down = 1;

    ConditionResult a1;
    a1.label = "A1";
    a1.witnesses["f_minus_1"] = spec.statefns(down, 1);
    a1.status = spec.statefns(down, 1) == 0.0 ? ConditionStatus::kPass : ConditionStatus::kFail;
    a1.detail = "f^-(1) = " + std::to_string(spec.statefns(down, 1));
    report.conditions.push_back(a1);

    report.conditions.push_back(growth_condition(spec, "A2", 2));

    ConditionResult a3;
    a3.label = "A3";
    const double sup_up = spec.statefns.sup(up);
    const double mass = spec.kernels.alpha(up, up, 0) + spec.kernels.alpha(up, down, 0);
    const double value = sup_up * mass;
    a3.witnesses["sup_f_plus"] = sup_up;
    a3.witnesses["alpha_pp_plus_alpha_pm"] = mass;
    a3.witnesses["value"] = value;
    a3.status = value < 1.0 ? ConditionStatus::kPass : ConditionStatus::kFail;
    a3.detail = "sup f^+ * (alpha^{+,+} + alpha^{+,-}) = " + std::to_string(value) + (value < 1.0 ? " < 1" : " >= 1");
    report.conditions.push_back(a3);

    if (spec.kernels.alpha(up, down, 0) > 0.0 && spec.kernels.alpha(down, up, 0) > 0.0 &&
        spec.kernels.alpha(down, down, 0) > 0.0) {
        std::array<std::array<double, 2>, 2> alpha{};
        for (int t = 0; t < 2; ++t) {
            for (int s = 0; s < 2; ++s) alpha[t][s] = spec.kernels.alpha(t, s, 0);
        }
        const EtaConstruction eta = construct_eta(alpha);
        if (eta.feasible) {
            report.eta = std::vector<double>(eta.eta.begin(), eta.eta.end());
            report.eta_labels = {"eta_11", "eta_12", "eta_21", "eta_22", "eta"};
        }
    }
    finish(report);
    return report;
}

EtaConstruction construct_eta(const std::array<std::array<double, 2>, 2>& alpha) {
    EtaConstruction out;
    const double a11 = alpha[0][0], a12 = alpha[0][1], a21 = alpha[1][0], a22 = alpha[1][1];
    if (a11 < 0.0 || a12 <= 0.0 || a21 <= 0.0 || a22 <= 0.0) {
        out.violated = "alpha_11 >= 0 and alpha_12, alpha_21, alpha_22 > 0";
        return out;
    }
    if (!(a11 + a12 < 1.0)) {
        out.violated = "alpha_11 + alpha_12 < 1";
        return out;
    }
    const double delta = 0.5 * ((1.0 - a11) / a12 - 1.0);
    const double e11 = 1.0;
    const double e12 = (1.0 - a11) / a12 - delta;
    const double e21 = delta * a12 / (4.0 * a21);
    const double e22 = delta * a12 / (4.0 * a22);
    const double e = 1.0 - a11 - delta * a12 / 2.0;
    out.delta = delta;
    out.eta = {e11, e12, e21, e22, e};

    const double upward = e11 * a11 + e21 * a21 + e;
    out.slack = {e - (e12 * a12 + e22 * a22), e11 - upward, e12 - upward};
    const char* names[] = {"H1", "H2", "H3"};
    for (int i = 0; i < 3; ++i) {
        if (!(out.slack[static_cast<std::size_t>(i)] > 0.0)) {
            out.violated = names[i];
            return out;
        }
    }
    for (double v : out.eta) {
        if (!(v > 0.0)) {
            out.violated = "eta > 0";
            return out;
        }
    }
    out.feasible = true;
    return out;
}

StabilityReport check_general(const ModelSpec& spec) {
    spec.validate(false);  // structural zeros are reported, not rejected
    const int K = spec.K;
    if (K > 2) throw std::invalid_argument("check_general supports K <= 2 (got K = " + std::to_string(K) + ")");
    const int dim = spec.dimension();
    StabilityReport report;
    report.heuristic = spec.decays() > 1;

    ConditionResult zeros;
    zeros.label = "A1.zeros";
    zeros.status = ConditionStatus::kPass;
    for (int k = 1; k <= K; ++k) {
        for (int s = 1; s <= k; ++s) {
            const double v = spec.statefns(EventType{-k}.index(K), s);
            if (v != 0.0) {
                zeros.status = ConditionStatus::kFail;
                zeros.detail = "f^{-" + std::to_string(k) + "}(" + std::to_string(s) + ") = " + std::to_string(v);
            }
        }
    }
    if (zeros.status == ConditionStatus::kPass) zeros.detail = "f^{-k}(s) = 0 for s <= k";
    report.conditions.push_back(zeros);

    report.conditions.push_back(growth_condition(spec, "A1.growth", K + 1));

    // LP variables: eta[target][source] (dim^2), eta, margin t.
    const std::size_t n_eta = static_cast<std::size_t>(dim * dim) + 1;
    const std::size_t eta_s = n_eta - 1;
    auto var = [dim](int target, int source) { return static_cast<std::size_t>(target * dim + source); };
    std::vector<std::vector<double>> rows;  // coefficients on eta, the margin enters with +1
    std::vector<std::string> row_labels;
    std::vector<double> sup_up(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        const int source = EventType{-k}.index(K);
        std::vector<double> row(n_eta, 0.0);
        for (int e = 0; e < dim; ++e) row[var(e, source)] += kernel_mass(spec, e, source);
        row[eta_s] -= k;
        rows.push_back(row);
        row_labels.push_back("H1.down" + std::to_string(k));
    }
    for (int k = 1; k <= K; ++k) {
        const int up = EventType{k}.index(K);
        const double F = spec.statefns.sup(up);
        sup_up[static_cast<std::size_t>(k - 1)] = F;
        for (int other = 0; other < dim; ++other) {
            std::vector<double> row(n_eta, 0.0);
            for (int e = 0; e < dim; ++e) row[var(e, up)] += F * kernel_mass(spec, e, up);
            row[eta_s] += F * k;
            row[var(up, other)] -= 1.0;
            rows.push_back(row);
            row_labels.push_back("H1.up" + std::to_string(k) + "." + type_label(other, K));
        }
    }

    // Shift to y = eta - lower >= 0 and u = t + M >= 0 so the origin is feasible.
    double M = 1.0;
    for (const auto& row : rows) {
        double sum = 0.0;
        for (double a : row) sum += a;
        M = std::max(M, 1.0 + kEtaLower * sum);
    }
    const std::size_t n = n_eta + 1;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (const auto& row : rows) {
        std::vector<double> a(n, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < n_eta; ++j) {
            a[j] = row[j];
            sum += row[j];
        }
        a[n_eta] = 1.0;
        A.push_back(a);
        b.push_back(M - kEtaLower * sum);
    }
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> a(n, 0.0);
        a[j] = 1.0;
        A.push_back(a);
        b.push_back(j < n_eta ? kEtaUpper - kEtaLower : M + kMarginCap);
    }
    std::vector<double> c(n, 0.0);
    c[n_eta] = 1.0;
    const LpResult lp = solve_lp(c, A, b);

    ConditionResult h;
    h.label = "H1";
    for (int k = 1; k <= K; ++k) h.witnesses["sup_f_plus" + std::to_string(k)] = sup_up[static_cast<std::size_t>(k - 1)];
    h.witnesses["lp_pivots"] = lp.pivots;
    if (lp.status != LpStatus::kOptimal) {
        h.status = ConditionStatus::kFail;
        h.detail = "margin LP did not solve: " + to_string(lp.status);
    } else {
        const double margin = lp.x[n_eta] - M;
        std::vector<double> eta(n_eta);
        for (std::size_t j = 0; j < n_eta; ++j) eta[j] = lp.x[j] + kEtaLower;
        // Re-evaluate every inequality on the recovered weights.
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows.size(); ++r) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n_eta; ++j) lhs += rows[r][j] * eta[j];
            worst = std::min(worst, -lhs);
            h.witnesses["slack." + row_labels[r]] = -lhs;
        }
        h.witnesses["margin"] = margin;
        if (margin > kMarginTolerance && worst > 0.0) {
            h.status = ConditionStatus::kPass;
            h.detail = "feasible weights found, margin " + std::to_string(margin);
            report.eta = eta;
            for (int t = 0; t < dim; ++t) {
                for (int s = 0; s < dim; ++s) {
                    report.eta_labels.push_back("eta[" + type_label(t, K) + "][" + type_label(s, K) + "]");
                }
            }
            report.eta_labels.push_back("eta");
        } else {
            h.status = ConditionStatus::kFail;
            h.detail = "no strictly positive weights satisfy the inequalities (best margin " + std::to_string(margin) + ")";
        }
    }
    if (report.heuristic) h.detail += "; kernels collapsed to L1 norms (heuristic for L > 1)";
    report.conditions.push_back(h);
    finish(report);
    return report;
}

Json report_to_json(const StabilityReport& report) {
    Json doc;
    doc["overall"] = to_string(report.overall);
    doc["heuristic"] = report.heuristic;
    Json conditions = Json::array();
    for (const auto& c : report.conditions) {
        Json item;
        item["label"] = c.label;
        item["status"] = to_string(c.status);
        item["detail"] = c.detail;
        Json w = Json::object();
        for (const auto& [k, v] : c.witnesses) w[k] = v;
        item["witnesses"] = w;
        conditions.push_back(item);
    }
    doc["conditions"] = conditions;
    if (report.eta) {
        Json eta = Json::object();
        for (std::size_t i = 0; i < report.eta->size(); ++i) eta[report.eta_labels[i]] = (*report.eta)[i];
        doc["eta"] = eta;
    } else {
        doc["eta"] = nullptr;
    }
    return doc;
}

std::string format_report(const StabilityReport& report) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "condition" << std::setw(38) << "status" << "detail\n";
    for (const auto& c : report.conditions) {
        out << std::setw(12) << c.label << std::setw(38) << to_string(c.status) << c.detail << "\n";
        for (const auto& [k, v] : c.witnesses) out << "    " << k << " = " << std::setprecision(10) << v << "\n";
    }
    if (report.eta) {
        out << "weights:\n";
        for (std::size_t i = 0; i < report.eta->size(); ++i) {
            out << "    " << report.eta_labels[i] << " = " << std::setprecision(10) << (*report.eta)[i] << "\n";
        }
    }
    out << "overall: " << to_string(report.overall) << (report.heuristic ? " (heuristic)" : "") << "\n";
    return out.str();
}

}  // namespace sdsh
