#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sdsh/event_model.hpp"

namespace sdsh {

using Json = nlohmann::json;

/// ModelSpec document: {"K", "sbar", "betas", "mus", "alphas", "f", "alpha_mode"}.
/// alphas is nested [target][source][l]; f is [type][s - 1]; per-type arrays follow the
/// [+1..+K, -1..-K] order. Doubles are written with round-trip precision.
Json spec_to_json(const ModelSpec& spec);

/// Throws ConfigurationError naming the offending field path (prefixed by `where`).
ModelSpec spec_from_json(const Json& doc, std::string_view where = "spec");

ModelSpec load_spec(const std::filesystem::path& path);
void save_spec(const ModelSpec& spec, const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const Json& doc, const std::filesystem::path& path);
void write_text_file(const std::string& text, const std::filesystem::path& path);

/// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);
std::string spec_hash(const ModelSpec& spec);

}  // namespace sdsh
