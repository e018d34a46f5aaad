// sdsh: command-line front end. Every subcommand writes into a run directory (--out):
// manifest.json first (status "running"), result files, then the manifest again with
// status "completed". A failed run leaves a FAILED file with the error message.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdsh/acdp.hpp"
#include "sdsh/data_io.hpp"
#include "sdsh/errors.hpp"
#include "sdsh/forecaster.hpp"
#include "sdsh/likelihood.hpp"
#include "sdsh/logging.hpp"
#include "sdsh/model_io.hpp"
#include "sdsh/simulator.hpp"
#include "sdsh/stability.hpp"
#include "sdsh/statistics.hpp"

namespace fs = std::filesystem;
using namespace sdsh;

namespace {

/// Flags registered on a subcommand; each one overrides the config key it names when given.
class Flags {
public:
    explicit Flags(CLI::App* app) : app_(app) {}

    template <class T>
    void add(const std::string& flag, const std::string& key, const std::string& description) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app_->add_option(flag, *value, description);
        apply_.push_back([opt, value, key](Json& cfg) {
            if (opt->count() > 0) cfg[key] = *value;
        });
    }

    void apply(Json& cfg) const {
        for (const auto& f : apply_) f(cfg);
    }

private:
    CLI::App* app_;
    std::vector<std::function<void(Json&)>> apply_;
};

struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::unique_ptr<Flags> flags;
    Json defaults;
    std::string config_path;
    std::string out_dir;
    std::function<void(const Json& cfg, struct Run& run)> body;
};

struct Run {
    fs::path dir;
    Json manifest;

    void input(const fs::path& path) {
        Json item;
        item["path"] = path.string();
        item["fnv1a"] = file_hash(path);
        manifest["inputs"].push_back(item);
        const fs::path side = sidecar_path(path);
        if (path.extension() == ".csv" && fs::exists(side)) {
            Json s;
            s["path"] = side.string();
            s["fnv1a"] = file_hash(side);
            manifest["inputs"].push_back(s);
        }
    }

    fs::path output(const std::string& name) {
        manifest["outputs"].push_back(name);
        return dir / name;
    }

    void save_manifest() const { write_json_file(manifest, dir / "manifest.json"); }
};

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

template <class T>
T get(const Json& cfg, const std::string& key) {
    if (!cfg.contains(key) || cfg[key].is_null()) throw ConfigurationError("config." + key + ": missing");
    try {
        return cfg[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigurationError("config." + key + ": wrong type (" + std::string(cfg[key].type_name()) + ")");
    }
}

bool has(const Json& cfg, const std::string& key) { return cfg.contains(key) && !cfg[key].is_null(); }

Json merge_config(const Command& cmd) {
    Json cfg = cmd.defaults;
    if (!cmd.config_path.empty()) {
        Json file;
        try {
            file = read_json_file(cmd.config_path);
        } catch (const std::exception& e) {
            throw ConfigurationError("config: " + std::string(e.what()));
        }
        if (!file.is_object()) throw ConfigurationError("config: top level must be an object");
        for (auto it = file.begin(); it != file.end(); ++it) {
            if (!cmd.defaults.contains(it.key())) throw ConfigurationError("config." + it.key() + ": unknown key");
            cfg[it.key()] = it.value();
        }
    }
    cmd.flags->apply(cfg);
    return cfg;
}

LoadOptions load_options(const Json& cfg) {
    LoadOptions o;
    if (has(cfg, "slot")) {
        const auto slot = get<std::vector<double>>(cfg, "slot");
        if (slot.size() != 2 || !(slot[1] > slot[0])) throw ConfigurationError("config.slot: expected [start, end] with end > start");
        o.slot = std::make_pair(slot[0], slot[1]);
    }
    o.min_events = get<std::size_t>(cfg, "min_events");
    o.max_jump = get<int>(cfg, "max_jump");
    const auto policy = get<std::string>(cfg, "jump_policy");
    if (policy == "reject") {
        o.jump_policy = JumpPolicy::kReject;
    } else if (policy == "clip") {
        o.jump_policy = JumpPolicy::kClip;
    } else {
        throw ConfigurationError("config.jump_policy: expected \"reject\" or \"clip\"");
    }
    return o;
}

Dataset load_data(const Json& cfg, const std::string& key, Run& run) {
    const fs::path path = get<std::string>(cfg, key);
    run.input(path);
    LoadReport report;
    Dataset data = load_dataset(path, load_options(cfg), &report);
    Json r;
    r["days_read"] = report.days_read;
    r["days_dropped"] = report.days_dropped;
    r["duplicates_bumped"] = report.duplicates_bumped;
    r["jumps_clipped"] = report.jumps_clipped;
    run.manifest["load_report"][key] = r;
    std::cout << path.string() << ": " << format_summary(summarize(data)) << " (dropped " << report.days_dropped
              << " days)\n";
    return data;
}

ModelSpec spec_from(const Json& cfg, Run& run) {
    if (has(cfg, "spec")) {
        const fs::path path = get<std::string>(cfg, "spec");
        run.input(path);
        return load_spec(path);
    }
    if (has(cfg, "preset")) {
        const auto name = get<std::string>(cfg, "preset");
        if (name == "demo") return demo_spec();
        if (name == "recovery") return recovery_spec();
        return preset(name, has(cfg, "preset_params") ? cfg["preset_params"] : Json::object());
    }
    throw ConfigurationError("config.spec: give a spec file or a preset");
}

void add_data_flags(Flags& f, Json& defaults) {
    f.add<std::vector<double>>("--slot", "slot", "clock window start end (seconds)");
    f.add<std::size_t>("--min-events", "min_events", "drop days with fewer events");
    f.add<int>("--max-jump", "max_jump", "largest accepted |jump| (0 = no check)");
    f.add<std::string>("--jump-policy", "jump_policy", "reject | clip");
    defaults["slot"] = nullptr;
    defaults["min_events"] = 0;
    defaults["max_jump"] = 0;
    defaults["jump_policy"] = "reject";
}

void add_spec_flags(Flags& f, Json& defaults) {
    f.add<std::string>("--spec", "spec", "model spec JSON");
    f.add<std::string>("--preset", "preset", "demo | recovery | zheng | fosset");
    defaults["spec"] = nullptr;
    defaults["preset"] = nullptr;
    defaults["preset_params"] = nullptr;
}

std::string csv_number(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

std::string type_name(int index, int K) {
    const int size = EventType::from_index(index, K).size;
    return (size > 0 ? "+" : "") + std::to_string(size);
}

void write_histogram(const Histogram& h, const std::string& column, const fs::path& path) {
    std::ostringstream out;
    out << column << ",probability\n";
    for (std::size_t i = 0; i < h.support.size(); ++i) out << h.support[i] << ',' << csv_number(h.probabilities[i]) << '\n';
    write_text_file(out.str(), path);
}

void write_kernels(const ModelSpec& spec, const ModelSpec* truth, const fs::path& path) {
    const auto grid = log_grid(1e-4, 10.0, 121);
    std::ostringstream out;
    out << "target,source,t,phi" << (truth ? ",phi_true" : "") << '\n';
    for (int e = 0; e < spec.dimension(); ++e) {
        for (int s = 0; s < spec.dimension(); ++s) {
            const auto phi = kernel_curve(spec, e, s, grid);
            std::vector<double> ref;
            if (truth) ref = kernel_curve(*truth, e, s, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                out << type_name(e, spec.K) << ',' << type_name(s, spec.K) << ',' << csv_number(grid[i]) << ','
                    << csv_number(phi[i]);
                if (truth) out << ',' << csv_number(ref[i]);
                out << '\n';
            }
        }
    }
    write_text_file(out.str(), path);
}

void write_state_functions(const ModelSpec& spec, const fs::path& path) {
    std::ostringstream out;
    out << "type,spread,f\n";
    for (int e = 0; e < spec.dimension(); ++e) {
        for (int s = 1; s <= spec.statefns.sbar; ++s) {
            out << type_name(e, spec.K) << ',' << s << ',' << csv_number(spec.statefns(e, s)) << '\n';
        }
    }
    write_text_file(out.str(), path);
}

Dataset single_day(const SpreadPath& path) {
    Dataset d;
    d.days.push_back(path);
    d.day_ids.push_back(0);
    return d;
}

// ---------------------------------------------------------------------------------------

void cmd_gen_data(const Json& cfg, Run& run) {
    const ModelSpec spec = spec_from(cfg, run);
    Dataset data = generate_synthetic(spec, get<std::size_t>(cfg, "days"), get<double>(cfg, "horizon"),
                                      get<std::uint64_t>(cfg, "seed"), get<int>(cfg, "s0"));
    save_spec(spec, run.output("spec.json"));
    save_dataset(data, run.output("data.csv"));
    run.manifest["outputs"].push_back("data.csv.json");
    std::cout << format_summary(summarize(data)) << '\n';
}

void cmd_simulate(const Json& cfg, Run& run) {
    const ModelSpec spec = spec_from(cfg, run);
    const SpreadPath path = simulate(spec, get<double>(cfg, "horizon"), get<int>(cfg, "s0"), get<std::uint64_t>(cfg, "seed"));
    Dataset data = single_day(path);
    data.asset = "simulated";
    data.metadata["spec_hash"] = spec_hash(spec);
    data.metadata["seed"] = get<std::uint64_t>(cfg, "seed");
    save_spec(spec, run.output("spec.json"));
    save_dataset(data, run.output("path.csv"));
    run.manifest["outputs"].push_back("path.csv.json");
    std::cout << path.events.size() << " events, final spread " << path.final_spread() << '\n';
}

void cmd_estimate(const Json& cfg, Run& run) {
    const Dataset data = load_data(cfg, "data", run);
    FitConfig fc;
    fc.K = get<int>(cfg, "K");
    fc.betas = get<std::vector<double>>(cfg, "betas");
    fc.sbar = get<int>(cfg, "sbar");
    const auto mode = get<std::string>(cfg, "alpha_mode");
    if (mode == "non_negative") {
        fc.alpha_mode = AlphaMode::kNonNegative;
    } else if (mode == "signed") {
        fc.alpha_mode = AlphaMode::kSigned;
    } else {
        throw ConfigurationError("config.alpha_mode: expected \"non_negative\" or \"signed\"");
    }
    fc.optimizer.max_iterations = get<int>(cfg, "max_iterations");
    fc.optimizer.relative_tolerance = get<double>(cfg, "relative_tolerance");
    fc.optimizer.gradient_tolerance = get<double>(cfg, "gradient_tolerance");
    fc.alpha_init = get<double>(cfg, "alpha_init");
    std::optional<ModelSpec> init;
    if (has(cfg, "init")) {
        run.input(get<std::string>(cfg, "init"));
        init = load_spec(get<std::string>(cfg, "init"));
    }
    const FitReport report = fit(data, fc, init);

    Json doc;
    doc["spec"] = spec_to_json(report.spec);
    doc["loglik"] = report.loglik;
    doc["trace"] = report.trace;
    doc["converged"] = report.converged;
    doc["iterations"] = report.iterations;
    doc["reason"] = report.reason;
    doc["clamp_count"] = report.clamp_count;
    doc["free_parameters_optimized"] = report.free_parameters;
    doc["free_parameters_formula"] = free_parameter_count(fc.K, static_cast<int>(fc.betas.size()), fc.sbar);
    doc["events"] = report.events;
    doc["wall_seconds"] = report.wall_seconds;
    write_json_file(doc, run.output("fit_report.json"));
    save_spec(report.spec, run.output("spec.json"));

    std::optional<ModelSpec> truth;
    if (has(cfg, "truth")) {
        run.input(get<std::string>(cfg, "truth"));
        truth = load_spec(get<std::string>(cfg, "truth"));
    }
    write_kernels(report.spec, truth ? &*truth : nullptr, run.output("kernels.csv"));
    write_state_functions(report.spec, run.output("f_values.csv"));
    std::ostringstream mu;
    mu << "type,mu\n";
    for (int e = 0; e < report.spec.dimension(); ++e) mu << type_name(e, report.spec.K) << ',' << csv_number(report.spec.mus[static_cast<std::size_t>(e)]) << '\n';
    write_text_file(mu.str(), run.output("mu.csv"));

    std::cout << "loglik " << csv_number(report.loglik) << ", " << report.iterations << " iterations, "
              << (report.converged ? "converged" : "not converged") << " (" << report.reason << "), "
              << report.wall_seconds << " s\n";
    for (int e = 0; e < report.spec.dimension(); ++e) {
        std::cout << "mu[" << type_name(e, report.spec.K) << "] = " << report.spec.mus[static_cast<std::size_t>(e)] << '\n';
    }
}

void cmd_check_stability(const Json& cfg, Run& run) {
    const ModelSpec spec = spec_from(cfg, run);
    Json doc;
    if (spec.K == 1 && spec.decays() == 1) {
        const StabilityReport k1 = check_k1(spec);
        std::cout << "K = 1 conditions\n" << format_report(k1) << '\n';
        doc["k1"] = report_to_json(k1);
    }
    if (spec.K <= 2) {
        const StabilityReport general = check_general(spec);
        std::cout << "linear-feasibility conditions\n" << format_report(general);
        doc["general"] = report_to_json(general);
    } else {
        std::cout << "no stability check available for K = " << spec.K << '\n';
        doc["general"] = nullptr;
    }
    write_json_file(doc, run.output("stability.json"));
}

void cmd_stats(const Json& cfg, Run& run) {
    const Dataset data = load_data(cfg, "data", run);
    const DatasetSummary summary = summarize(data);
    Json doc;
    doc["days"] = summary.days;
    doc["total_events"] = summary.total_events;
    doc["mean_event_spread"] = summary.mean_event_spread;
    doc["mean_calendar_spread"] = summary.mean_calendar_spread;

    write_histogram(calendar_distribution(data), "spread", run.output("calendar_pmf.csv"));
    write_histogram(event_distribution(data), "spread", run.output("event_pmf.csv"));
    const Histogram jumps = jump_size_distribution(data);
    write_histogram(jumps, "jump", run.output("jump_pmf.csv"));
    doc["recommended_K"] = recommend_K(jumps, get<double>(cfg, "k_threshold"));

    {
        std::ostringstream out;
        out << "dt\n";
        for (double v : inter_event_times(data)) out << csv_number(v) << '\n';
        write_text_file(out.str(), run.output("inter_event_times.csv"));
    }
    {
        // Every attained (S1, S2) pair plus any requested pair, empty or not.
        std::map<std::pair<int, int>, std::vector<double>> buckets;
        for (const auto& day : data.days) {
            int spread = day.s0;
            for (std::size_t i = 0; i + 1 < day.events.size(); ++i) {
                spread += day.events[i].size;
                const int next = spread + day.events[i + 1].size;
                buckets[{spread, next}].push_back(to_seconds(day.events[i + 1].time - day.events[i].time));
            }
        }
        for (const auto& pair : get<std::vector<std::vector<int>>>(cfg, "conditions")) {
            if (pair.size() != 2) throw ConfigurationError("config.conditions: expected [[s1, s2], ...]");
            buckets[{pair[0], pair[1]}];
        }
        std::ostringstream samples, counts;
        samples << "s1,s2,dt\n";
        counts << "s1,s2,count\n";
        for (const auto& [key, values] : buckets) {
            counts << key.first << ',' << key.second << ',' << values.size() << '\n';
            for (double v : values) samples << key.first << ',' << key.second << ',' << csv_number(v) << '\n';
        }
        write_text_file(samples.str(), run.output("conditional_inter_event_times.csv"));
        write_text_file(counts.str(), run.output("conditional_counts.csv"));
    }
    {
        AutocorrelationOptions o;
        o.max_lag = get<double>(cfg, "acf_max_lag");
        o.slot_length = get<double>(cfg, "acf_slot");
        o.grid = get<double>(cfg, "acf_grid");
        const CorrelationCurve c = spread_autocorrelation(data, o);
        std::ostringstream out;
        out << "lag,acf\n";
        for (std::size_t i = 0; i < c.lags.size(); ++i) out << csv_number(c.lags[i]) << ',' << csv_number(c.values[i]) << '\n';
        write_text_file(out.str(), run.output("autocorrelation.csv"));
        doc["acf_slots"] = c.slots;
        doc["acf_diagnostic"] = c.diagnostic;
    }
    {
        std::ostringstream out;
        out << "delta,tau,acv,count\n";
        const auto taus = get<std::vector<double>>(cfg, "acv_taus");
        for (double delta : get<std::vector<double>>(cfg, "acv_deltas")) {
            AcvOptions o;
            o.delta = delta;
            o.slot_length = get<double>(cfg, "acv_slot");
            for (double t : taus) {
                if (t >= o.min_ratio * delta) o.taus.push_back(t);
            }
            const AcvCurve c = acv(data, o);
            for (std::size_t i = 0; i < c.taus.size(); ++i) {
                out << csv_number(delta) << ',' << csv_number(c.taus[i]) << ',' << csv_number(c.values[i]) << ','
                    << c.counts[i] << '\n';
            }
        }
        write_text_file(out.str(), run.output("acv.csv"));
    }
    if (has(cfg, "spec") || has(cfg, "preset")) {
        const ModelSpec spec = spec_from(cfg, run);
        const InfluenceTable table = kernel_influence(spec, data);
        std::ostringstream out;
        out << "spread,type,source,events,raw,normalized\n";
        for (const auto& row : table.rows) {
            for (int s = 0; s < spec.dimension(); ++s) {
                out << row.spread << ',' << type_name(row.type, spec.K) << ',' << type_name(s, spec.K) << ','
                    << row.events << ',' << csv_number(row.raw[static_cast<std::size_t>(s)]) << ','
                    << csv_number(row.normalized[static_cast<std::size_t>(s)]) << '\n';
            }
        }
        write_text_file(out.str(), run.output("influence.csv"));
        write_kernels(spec, nullptr, run.output("kernel_curves.csv"));
    }
    write_json_file(doc, run.output("summary.json"));
    std::cout << format_summary(summary) << '\n';
}

void cmd_forecast(const Json& cfg, Run& run) {
    const ModelSpec spec = spec_from(cfg, run);
    const Dataset data = load_data(cfg, "data", run);
    const auto day_id = get<std::int64_t>(cfg, "day_id");
    std::size_t d = data.days.size();
    for (std::size_t i = 0; i < data.day_ids.size(); ++i) {
        if (data.day_ids[i] == day_id) d = i;
    }
    if (d == data.days.size()) throw ConfigurationError("config.day_id: day " + std::to_string(day_id) + " not in data");
    ForecastRequest req;
    req.t0 = get<double>(cfg, "t0");
    req.window = get<double>(cfg, "window");
    req.horizon = get<double>(cfg, "horizon");
    req.n_paths = get<int>(cfg, "paths");
    req.seed = get<std::uint64_t>(cfg, "seed");
    const ForecastResult r = sdsh_forecast(spec, data.days[d], req);
    Json doc;
    doc["mean"] = r.mean;
    doc["samples"] = r.samples;
    doc["spread_at_t0"] = r.spread_at_t0;
    doc["last_predict"] = last_predict(data.days[d], req.t0);
    doc["cold_start"] = r.cold_start;
    write_json_file(doc, run.output("forecast.json"));
    std::cout << "S(t0) = " << r.spread_at_t0 << ", E[S(t0 + " << req.horizon << ")] = " << r.mean << '\n';
}

void cmd_evaluate(const Json& cfg, Run& run) {
    const ModelSpec spec = spec_from(cfg, run);
    const Dataset test = load_data(cfg, "data", run);
    EvaluationConfig ec;
    ec.deltas = get<std::vector<double>>(cfg, "deltas");
    ec.start = get<double>(cfg, "start");
    ec.end = get<double>(cfg, "end");
    if (has(cfg, "train_data")) {
        const Dataset train = load_data(cfg, "train_data", run);
        ec.train_day_ids = train.day_ids;
    }
    LastPredictor last;
    AcdpPredictor acdp;
    SdshPredictor sdsh(spec, get<double>(cfg, "window"), get<int>(cfg, "paths"), get<std::uint64_t>(cfg, "seed"));
    std::vector<Predictor*> predictors = {&last};
    if (get<bool>(cfg, "acdp")) predictors.push_back(&acdp);
    predictors.push_back(&sdsh);
    const EvaluationTable table = evaluate(predictors, test, ec);
    write_text_file(table.to_csv(), run.output("mse_table.csv"));
    run.manifest["sdsh_cold_starts"] = sdsh.cold_starts();
    run.manifest["acdp_fits"] = acdp.fits();
    std::cout << table.format();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"State-dependent spread Hawkes model: simulation, estimation, diagnostics and forecasting"};
    app.require_subcommand(1);
    std::string log_level = "warning";
    app.add_option("--log-level", log_level, "debug | info | warning | error | silent");

    std::vector<std::unique_ptr<Command>> commands;
    auto make = [&](const std::string& name, const std::string& help, auto body) -> Command& {
        auto cmd = std::make_unique<Command>();
        cmd->name = name;
        cmd->app = app.add_subcommand(name, help);
        cmd->flags = std::make_unique<Flags>(cmd->app);
        cmd->defaults = Json::object();
        cmd->app->add_option("--config", cmd->config_path, "JSON config; flags override its keys");
        cmd->app->add_option("--out", cmd->out_dir, "run directory")->required();
        cmd->body = body;
        commands.push_back(std::move(cmd));
        return *commands.back();
    };

    {
        Command& c = make("gen-data", "simulate independent days into an event file", cmd_gen_data);
        add_spec_flags(*c.flags, c.defaults);
        c.flags->add<std::size_t>("--days", "days", "number of days");
        c.flags->add<double>("--horizon", "horizon", "seconds per day");
        c.flags->add<int>("--s0", "s0", "initial spread");
        c.flags->add<std::uint64_t>("--seed", "seed", "random seed");
        c.defaults.update(Json{{"days", 50}, {"horizon", 5000.0}, {"s0", 1}, {"seed", 1}});
    }
    {
        Command& c = make("simulate", "simulate one path", cmd_simulate);
        add_spec_flags(*c.flags, c.defaults);
        c.flags->add<double>("--horizon", "horizon", "seconds");
        c.flags->add<int>("--s0", "s0", "initial spread");
        c.flags->add<std::uint64_t>("--seed", "seed", "random seed");
        c.defaults.update(Json{{"horizon", 20.0}, {"s0", 1}, {"seed", 1}});
    }
    {
        Command& c = make("estimate", "maximum-likelihood fit", cmd_estimate);
        add_data_flags(*c.flags, c.defaults);
        c.flags->add<std::string>("--data", "data", "event file");
        c.flags->add<int>("--K", "K", "largest jump size");
        c.flags->add<std::vector<double>>("--betas", "betas", "decay rates (1/s)");
        c.flags->add<int>("--sbar", "sbar", "saturation spread");
        c.flags->add<std::string>("--alpha-mode", "alpha_mode", "non_negative | signed");
        c.flags->add<int>("--max-iterations", "max_iterations", "optimizer iteration cap");
        c.flags->add<double>("--relative-tolerance", "relative_tolerance", "relative improvement tolerance");
        c.flags->add<double>("--gradient-tolerance", "gradient_tolerance", "projected gradient tolerance (per event)");
        c.flags->add<double>("--alpha-init", "alpha_init", "initial kernel weight");
        c.flags->add<std::string>("--init", "init", "initial spec JSON");
        c.flags->add<std::string>("--truth", "truth", "true spec JSON, added to kernels.csv");
        c.defaults.update(Json{{"data", nullptr}, {"K", 1}, {"betas", {10.0, 100.0, 1000.0}}, {"sbar", 4},
                               {"alpha_mode", "non_negative"}, {"max_iterations", 500}, {"relative_tolerance", 1e-9},
                               {"gradient_tolerance", 1e-6}, {"alpha_init", 0.01}, {"init", nullptr}, {"truth", nullptr}});
    }
    {
        Command& c = make("check-stability", "ergodicity conditions", cmd_check_stability);
        add_spec_flags(*c.flags, c.defaults);
    }
    {
        Command& c = make("stats", "goodness-of-fit statistics", cmd_stats);
        add_data_flags(*c.flags, c.defaults);
        add_spec_flags(*c.flags, c.defaults);
        c.flags->add<std::string>("--data", "data", "event file");
        c.flags->add<double>("--k-threshold", "k_threshold", "tail mass for the recommended K");
        c.flags->add<double>("--acf-max-lag", "acf_max_lag", "largest autocorrelation lag (s)");
        c.flags->add<double>("--acf-slot", "acf_slot", "autocorrelation slot length (s)");
        c.flags->add<double>("--acf-grid", "acf_grid", "sampling grid (s)");
        c.flags->add<std::vector<double>>("--acv-deltas", "acv_deltas", "increment widths (s)");
        c.flags->add<std::vector<double>>("--acv-taus", "acv_taus", "lags (s)");
        c.flags->add<double>("--acv-slot", "acv_slot", "slot length (s), 0 = whole day");
        c.defaults.update(Json{{"data", nullptr}, {"k_threshold", 0.01}, {"acf_max_lag", 10.0}, {"acf_slot", 900.0},
                               {"acf_grid", 0.1}, {"acv_deltas", {0.01, 0.1, 1.0}},
                               {"acv_taus", {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}},
                               {"acv_slot", 0.0}, {"conditions", Json::array()}});
    }
    {
        Command& c = make("forecast", "Monte-Carlo spread forecast at one time", cmd_forecast);
        add_data_flags(*c.flags, c.defaults);
        add_spec_flags(*c.flags, c.defaults);
        c.flags->add<std::string>("--data", "data", "event file");
        c.flags->add<std::int64_t>("--day-id", "day_id", "day to condition on");
        c.flags->add<double>("--t0", "t0", "forecast origin (s from day start)");
        c.flags->add<double>("--window", "window", "conditioning window (s)");
        c.flags->add<double>("--horizon", "horizon", "forecast horizon (s)");
        c.flags->add<int>("--paths", "paths", "Monte-Carlo paths");
        c.flags->add<std::uint64_t>("--seed", "seed", "random seed");
        c.defaults.update(Json{{"data", nullptr}, {"day_id", 0}, {"t0", nullptr}, {"window", 60.0}, {"horizon", 3.0},
                               {"paths", 100}, {"seed", 1}});
    }
    {
        Command& c = make("evaluate", "MSE of Last, ACDP and SDSH predictors", cmd_evaluate);
        add_data_flags(*c.flags, c.defaults);
        add_spec_flags(*c.flags, c.defaults);
        c.flags->add<std::string>("--data", "data", "test event file");
        c.flags->add<std::string>("--train-data", "train_data", "training event file (day-id overlap check)");
        c.flags->add<std::vector<double>>("--deltas", "deltas", "horizons (s)");
        c.flags->add<double>("--start", "start", "first evaluation time (s from day start)");
        c.flags->add<double>("--end", "end", "last realized time (s from day start)");
        c.flags->add<double>("--window", "window", "SDSH conditioning window (s)");
        c.flags->add<int>("--paths", "paths", "SDSH Monte-Carlo paths");
        c.flags->add<bool>("--acdp", "acdp", "include the ACDP predictor");
        c.flags->add<std::uint64_t>("--seed", "seed", "random seed");
        c.defaults.update(Json{{"data", nullptr}, {"train_data", nullptr}, {"deltas", {3.0, 6.0, 12.0, 30.0}},
                               {"start", 3600.0}, {"end", 7200.0}, {"window", 60.0}, {"paths", 100}, {"acdp", true},
                               {"seed", 1}});
    }

    CLI11_PARSE(app, argc, argv);

    static const std::map<std::string, LogLevel> levels = {{"debug", LogLevel::kDebug}, {"info", LogLevel::kInfo},
                                                            {"warning", LogLevel::kWarning}, {"error", LogLevel::kError},
                                                            {"silent", LogLevel::kSilent}};
    if (!levels.count(log_level)) {
        std::cerr << "error: --log-level must be one of debug, info, warning, error, silent\n";
        return 2;
    }
    set_log_level(levels.at(log_level));

    for (const auto& cmd : commands) {
        if (!cmd->app->parsed()) continue;
        Run run;
        run.dir = cmd->out_dir;
        run.manifest["command"] = cmd->name;
        run.manifest["argv"] = std::vector<std::string>(argv, argv + argc);
        run.manifest["started"] = now_utc();
        run.manifest["status"] = "running";
        run.manifest["inputs"] = Json::array();
        run.manifest["outputs"] = Json::array();
        try {
            fs::create_directories(run.dir);
            fs::remove(run.dir / "FAILED");
            const Json cfg = merge_config(*cmd);
            run.manifest["config"] = cfg;
            if (!cmd->config_path.empty()) run.input(cmd->config_path);
            run.save_manifest();
            const auto t0 = std::chrono::steady_clock::now();
            cmd->body(cfg, run);
            run.manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            run.manifest["status"] = "completed";
            run.manifest["finished"] = now_utc();
            run.save_manifest();
            return 0;
        } catch (const std::exception& e) {
            const bool config_error = dynamic_cast<const ConfigurationError*>(&e) != nullptr;
            std::cerr << "error: " << e.what() << '\n';
            try {
                write_text_file(std::string(e.what()) + "\n", run.dir / "FAILED");
                run.manifest["status"] = "failed";
                run.manifest["error"] = e.what();
                run.save_manifest();
            } catch (const std::exception&) {
            }
            return config_error ? 2 : 1;
        }
    }
    return 1;
}
