#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "sdsh/likelihood.hpp"

namespace sdsh {

// Event file: CSV with header `day_id,time_s,jump`, one row per spread change, times in
// seconds on the day's clock with up to 9 decimals. Sidecar `<file>.json`:
//   {"version": 1, "asset": "...", "slot": [a, b] | null, "metadata": {...},
//    "days": [{"day_id": 3, "s0": 1, "start_s": 0.0, "end_s": 7200.0}, ...]}
// Every day lives in the sidecar (days without events have no CSV rows).

enum class JumpPolicy { kReject, kClip };

struct LoadOptions {
    /// Clock window; events outside are dropped and times are rebased to its start.
    std::optional<std::pair<double, double>> slot;
    std::size_t min_events = 0;
    /// 0 disables the size check.
    int max_jump = 0;
    JumpPolicy jump_policy = JumpPolicy::kReject;
};

struct LoadReport {
    std::size_t days_read = 0;
    std::size_t days_dropped = 0;
    std::size_t duplicates_bumped = 0;
    std::size_t jumps_clipped = 0;
};

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Throws DataError (with the line number when applicable) on malformed rows, unknown days,
/// times going backwards, zero jumps, oversized jumps under kReject, or a replay that takes
/// the spread below one tick.
Dataset load_dataset(const std::filesystem::path& csv, const LoadOptions& options = {},
                     LoadReport* report = nullptr);

/// Canonical output: days in dataset order, times with 9 decimals, start_s = 0.
void save_dataset(const Dataset& data, const std::filesystem::path& csv);

/// Parses a non-negative decimal with at most 9 fractional digits into nanoseconds.
std::optional<Nanos> parse_seconds(std::string_view text);
std::string format_seconds(Nanos t);

struct DatasetSummary {
    std::size_t days = 0;
    std::size_t total_events = 0;
    std::size_t min_events = 0;
    std::size_t max_events = 0;
    double mean_event_spread = 0.0;
    double mean_calendar_spread = 0.0;
};

DatasetSummary summarize(const Dataset& data);
std::string format_summary(const DatasetSummary& summary);

/// n_days cold-start simulations; day d uses Philox(seed, d). day_ids are 0..n_days-1.
Dataset generate_synthetic(const ModelSpec& spec, std::size_t n_days, double day_horizon, std::uint64_t seed,
                           int s0 = 1);

}  // namespace sdsh
