#include "sdsh/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sdsh/errors.hpp"
#include "sdsh/logging.hpp"
#include "sdsh/model_io.hpp"
#include "sdsh/parallel.hpp"
#include "sdsh/simulator.hpp"
#include "sdsh/statistics.hpp"

namespace sdsh {

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    std::filesystem::path p = csv;
    p += ".json";
    return p;
}

std::optional<Nanos> parse_seconds(std::string_view text) {
    if (text.empty()) return std::nullopt;
    const auto dot = text.find('.');
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 9) return std::nullopt;
    if (dot != std::string_view::npos && frac.empty()) return std::nullopt;
    auto digits = [](std::string_view s) { return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }); };
    if (!digits(whole) || !digits(frac)) return std::nullopt;
    Nanos seconds = 0;
    const auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), seconds);
    if (ec != std::errc{} || p != whole.data() + whole.size() || seconds > 9'000'000'000LL) return std::nullopt;
    Nanos nanos = 0;
    for (std::size_t i = 0; i < 9; ++i) nanos = nanos * 10 + (i < frac.size() ? frac[i] - '0' : 0);
    return seconds * 1'000'000'000LL + nanos;
}

std::string format_seconds(Nanos t) {
    char buf[40];
    const char* sign = t < 0 ? "-" : "";
    const Nanos a = t < 0 ? -t : t;
    std::snprintf(buf, sizeof buf, "%s%lld.%09lld", sign, static_cast<long long>(a / 1'000'000'000LL),
                  static_cast<long long>(a % 1'000'000'000LL));
    return buf;
}

namespace {

struct DayMeta {
    std::int64_t day_id = 0;
    int s0 = 1;
    Nanos start = 0;
    Nanos end = 0;
};

struct RawEvent {
    Nanos time;
    int size;
    long line;
};

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

template <class T>
bool parse_int(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

std::vector<DayMeta> read_sidecar(const Json& doc, const std::filesystem::path& where, Dataset& data) {
    const std::string prefix = where.string() + ": ";
    if (!doc.is_object() || !doc.contains("days") || !doc["days"].is_array()) {
        throw DataError(prefix + "sidecar must be an object with a \"days\" array");
    }
    if (doc.contains("asset") && doc["asset"].is_string()) data.asset = doc["asset"].get<std::string>();
    if (doc.contains("metadata") && doc["metadata"].is_object()) data.metadata = doc["metadata"];
    std::vector<DayMeta> days;
    for (std::size_t i = 0; i < doc["days"].size(); ++i) {
        const Json& d = doc["days"][i];
        const std::string field = prefix + "days[" + std::to_string(i) + "]";
        try {
            DayMeta m;
            m.day_id = d.at("day_id").get<std::int64_t>();
            m.s0 = d.at("s0").get<int>();
            m.start = to_nanos(d.at("start_s").get<double>());
            m.end = to_nanos(d.at("end_s").get<double>());
            if (m.s0 < 1) throw DataError(field + ".s0: must be >= 1");
            if (m.end < m.start) throw DataError(field + ": end_s before start_s");
            days.push_back(m);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(field + ": " + e.what());
        }
    }
    return days;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& csv, const LoadOptions& options, LoadReport* report) {
    LoadReport rep;
    Dataset data;
    const std::filesystem::path meta_path = sidecar_path(csv);
    if (!std::filesystem::exists(meta_path)) throw DataError("missing sidecar " + meta_path.string());
    Json meta;
    try {
        meta = read_json_file(meta_path);
    } catch (const std::exception& e) {
        throw DataError(meta_path.string() + ": " + e.what());
    }
    const std::vector<DayMeta> days = read_sidecar(meta, meta_path, data);
    std::map<std::int64_t, std::size_t> index;
    for (std::size_t i = 0; i < days.size(); ++i) {
        if (!index.emplace(days[i].day_id, i).second) {
            throw DataError(meta_path.string() + ": duplicate day_id " + std::to_string(days[i].day_id));
        }
    }

    std::ifstream in(csv);
    if (!in) throw DataError("cannot open " + csv.string());
    std::vector<std::vector<RawEvent>> events(days.size());
    std::vector<Nanos> last_raw(days.size(), -1);
    std::string line;
    long number = 0;
    const std::string file = csv.string();
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (number == 1) {
            if (line != "day_id,time_s,jump") throw DataError(file + ": expected header day_id,time_s,jump", number);
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != 3) throw DataError(file + ": expected 3 fields", number);
        std::int64_t day_id = 0;
        int jump = 0;
        if (!parse_int(fields[0], day_id)) throw DataError(file + ": bad day_id", number);
        const auto t = parse_seconds(fields[1]);
        if (!t) throw DataError(file + ": bad time_s '" + std::string(fields[1]) + "'", number);
        if (!parse_int(fields[2], jump)) throw DataError(file + ": bad jump", number);
        if (jump == 0) throw DataError(file + ": zero jump", number);
        const auto it = index.find(day_id);
        if (it == index.end()) throw DataError(file + ": day_id " + std::to_string(day_id) + " not in sidecar", number);
        const std::size_t d = it->second;
        if (*t < days[d].start || *t > days[d].end) throw DataError(file + ": time outside the day window", number);
        if (options.max_jump > 0 && std::abs(jump) > options.max_jump) {
            if (options.jump_policy == JumpPolicy::kReject) {
                throw DataError(file + ": jump " + std::to_string(jump) + " exceeds K = " + std::to_string(options.max_jump),
                                number);
            }
            jump = jump > 0 ? options.max_jump : -options.max_jump;
            ++rep.jumps_clipped;
        }
        Nanos time = *t;
        if (*t < last_raw[d]) throw DataError(file + ": time goes backwards within day " + std::to_string(day_id), number);
        if (!events[d].empty() && time <= events[d].back().time) {
            time = events[d].back().time + 1;
            ++rep.duplicates_bumped;
        }
        last_raw[d] = *t;
        events[d].push_back({time, jump, number});
    }
    if (number == 0) throw DataError(file + ": empty file (missing header)");
    if (rep.duplicates_bumped > 0) {
        log_warning(file + ": " + std::to_string(rep.duplicates_bumped) + " duplicate timestamps moved forward by 1 ns");
    }
    if (rep.jumps_clipped > 0) log_warning(file + ": " + std::to_string(rep.jumps_clipped) + " oversized jumps clipped");

    data.slot = options.slot;
    for (std::size_t d = 0; d < days.size(); ++d) {
        ++rep.days_read;
        const DayMeta& m = days[d];
        Nanos start = m.start, end = m.end;
        if (options.slot) {
            start = std::max(start, to_nanos(options.slot->first));
            end = std::min(end, to_nanos(options.slot->second));
        }
        SpreadPath path;
        path.s0 = m.s0;
        int spread = m.s0;
        for (const auto& ev : events[d]) {
            spread += ev.size;
            if (spread < 1) {
                throw DataError(file + ": day " + std::to_string(m.day_id) + " replays to spread " +
                                std::to_string(spread), ev.line);
            }
            if (ev.time < start) {
                path.s0 = spread;
            } else if (ev.time <= end) {
                path.events.push_back({ev.time - start, ev.size});
            }
        }
        if (end <= start) {
            ++rep.days_dropped;
            continue;
        }
        path.horizon = end - start;
        if (path.events.size() < options.min_events) {
            ++rep.days_dropped;
            continue;
        }
        data.days.push_back(std::move(path));
        data.day_ids.push_back(m.day_id);
    }
    if (rep.days_dropped > 0) {
        log_info(file + ": dropped " + std::to_string(rep.days_dropped) + " of " + std::to_string(rep.days_read) +
                 " days (empty window or fewer than " + std::to_string(options.min_events) + " events)");
    }
    if (report != nullptr) *report = rep;
    return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv) {
    if (data.day_ids.size() != data.days.size()) throw std::invalid_argument("save_dataset: day_ids do not match days");
    std::ostringstream out;
    out << "day_id,time_s,jump\n";
    Json days = Json::array();
    for (std::size_t d = 0; d < data.days.size(); ++d) {
        const SpreadPath& path = data.days[d];
        for (const auto& ev : path.events) {
            out << data.day_ids[d] << ',' << format_seconds(ev.time) << ',' << ev.size << '\n';
        }
        Json m;
        m["day_id"] = data.day_ids[d];
        m["s0"] = path.s0;
        m["start_s"] = 0.0;
        m["end_s"] = path.horizon_seconds();
        days.push_back(m);
    }
    write_text_file(out.str(), csv);
    Json meta;
    meta["version"] = 1;
    meta["asset"] = data.asset;
    meta["slot"] = data.slot ? Json::array({data.slot->first, data.slot->second}) : Json(nullptr);
    meta["metadata"] = data.metadata;
    meta["days"] = days;
    write_json_file(meta, sidecar_path(csv));
}

DatasetSummary summarize(const Dataset& data) {
    DatasetSummary s;
    s.days = data.days.size();
    if (s.days == 0) return s;
    s.min_events = data.days.front().events.size();
    for (const auto& day : data.days) {
        s.total_events += day.events.size();
        s.min_events = std::min(s.min_events, day.events.size());
        s.max_events = std::max(s.max_events, day.events.size());
    }
    if (s.total_events > 0) s.mean_event_spread = event_distribution(data).mean();
    s.mean_calendar_spread = calendar_distribution(data).mean();
    return s;
}

std::string format_summary(const DatasetSummary& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "#days %zu | total #events %zu | min #events %zu | max #events %zu | E_event[S] %.2f | E_cal[S] %.2f",
                  s.days, s.total_events, s.min_events, s.max_events, s.mean_event_spread, s.mean_calendar_spread);
    return buf;
}

Dataset generate_synthetic(const ModelSpec& spec, std::size_t n_days, double day_horizon, std::uint64_t seed, int s0) {
    spec.validate_normalized();
    if (!(day_horizon > 0.0)) throw ConfigurationError("generate_synthetic: day horizon must be > 0");
    if (s0 < 1) throw ConfigurationError("generate_synthetic: s0 must be >= 1");
    Dataset data;
    data.days.resize(n_days);
    parallel_for(n_days, [&](std::size_t d) {
        Philox rng(seed, d);
        data.days[d] = simulate_from_state(spec, ExcitationState::cold(spec, s0), std::nullopt, day_horizon, rng);
    });
    for (std::size_t d = 0; d < n_days; ++d) data.day_ids.push_back(static_cast<std::int64_t>(d));
    data.asset = "synthetic";
    data.metadata["spec_hash"] = spec_hash(spec);
    data.metadata["seed"] = seed;
    data.metadata["day_horizon_s"] = day_horizon;
    data.metadata["s0"] = s0;
    return data;
}

}  // namespace sdsh
