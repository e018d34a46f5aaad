#include "sdsh/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdsh/errors.hpp"

namespace sdsh {

namespace {

std::string field(std::string_view where, std::string_view name) {
    return std::string(where) + "." + std::string(name);
}

std::string index(const std::string& where, std::size_t i) {
    return where + "[" + std::to_string(i) + "]";
}

const Json& require(const Json& doc, std::string_view where, const char* name) {
    if (!doc.is_object()) throw ConfigurationError(std::string(where) + ": expected an object");
    auto it = doc.find(name);
    if (it == doc.end()) throw ConfigurationError(field(where, name) + ": missing");
    return *it;
}

double as_number(const Json& value, const std::string& where) {
    if (!value.is_number()) throw ConfigurationError(where + ": expected a number");
    return value.get<double>();
}

std::vector<double> as_numbers(const Json& value, const std::string& where) {
    if (!value.is_array()) throw ConfigurationError(where + ": expected an array");
    std::vector<double> out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_number(value[i], index(where, i)));
    return out;
}

}  // namespace

Json spec_to_json(const ModelSpec& spec) {
    const int dim = spec.dimension();
    Json alphas = Json::array();
    for (int e = 0; e < dim; ++e) {
        Json row = Json::array();
        for (int src = 0; src < dim; ++src) {
            Json cell = Json::array();
            for (std::size_t l = 0; l < spec.decays(); ++l) cell.push_back(spec.kernels.alpha(e, src, l));
            row.push_back(std::move(cell));
        }
        alphas.push_back(std::move(row));
    }
    Json doc;
    doc["K"] = spec.K;
    doc["sbar"] = spec.statefns.sbar;
    doc["betas"] = spec.kernels.betas;
    doc["mus"] = spec.mus;
    doc["alphas"] = std::move(alphas);
    doc["f"] = spec.statefns.values;
    doc["alpha_mode"] = spec.alpha_mode == AlphaMode::kSigned ? "signed" : "non_negative";
    return doc;
}

ModelSpec spec_from_json(const Json& doc, std::string_view where) {
    const Json& k_field = require(doc, where, "K");
    if (!k_field.is_number_integer() || k_field.get<int>() < 1) {
        throw ConfigurationError(field(where, "K") + ": expected an integer >= 1");
    }
    const Json& sbar_field = require(doc, where, "sbar");
    if (!sbar_field.is_number_integer()) {
        throw ConfigurationError(field(where, "sbar") + ": expected an integer");
    }
    const int K = k_field.get<int>();
    const int sbar = sbar_field.get<int>();
    const int dim = type_count(K);

    ModelSpec spec = make_spec(K, as_numbers(require(doc, where, "betas"), field(where, "betas")),
                               sbar < K + 1 ? K + 1 : sbar);
    spec.statefns.sbar = sbar;
    spec.mus = as_numbers(require(doc, where, "mus"), field(where, "mus"));
    if (static_cast<int>(spec.mus.size()) != dim) {
        throw ConfigurationError(field(where, "mus") + ": expected " + std::to_string(dim) + " entries");
    }
    if (auto it = doc.find("alpha_mode"); it != doc.end()) {
        if (*it == "signed") {
            spec.alpha_mode = AlphaMode::kSigned;
        } else if (*it != "non_negative") {
            throw ConfigurationError(field(where, "alpha_mode") + ": expected \"signed\" or \"non_negative\"");
        }
    }

    const std::string alpha_path = field(where, "alphas");
    const Json& alphas = require(doc, where, "alphas");
    if (!alphas.is_array() || static_cast<int>(alphas.size()) != dim) {
        throw ConfigurationError(alpha_path + ": expected " + std::to_string(dim) + " rows");
    }
    const std::size_t L = spec.decays();
    for (int e = 0; e < dim; ++e) {
        const auto row_path = index(alpha_path, static_cast<std::size_t>(e));
        const Json& row = alphas[static_cast<std::size_t>(e)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim) {
            throw ConfigurationError(row_path + ": expected " + std::to_string(dim) + " columns");
        }
        for (int src = 0; src < dim; ++src) {
            const auto cell_path = index(row_path, static_cast<std::size_t>(src));
            auto cell = as_numbers(row[static_cast<std::size_t>(src)], cell_path);
            if (cell.size() != L) {
                throw ConfigurationError(cell_path + ": expected " + std::to_string(L) + " weights");
            }
            for (std::size_t l = 0; l < L; ++l) spec.kernels.alpha(e, src, l) = cell[l];
        }
    }

    const std::string f_path = field(where, "f");
    const Json& f = require(doc, where, "f");
    if (!f.is_array() || static_cast<int>(f.size()) != dim) {
        throw ConfigurationError(f_path + ": expected " + std::to_string(dim) + " rows");
    }
    spec.statefns.values.clear();
    for (int e = 0; e < dim; ++e) {
        const auto row_path = index(f_path, static_cast<std::size_t>(e));
        auto row = as_numbers(f[static_cast<std::size_t>(e)], row_path);
        if (static_cast<int>(row.size()) != sbar) {
            throw ConfigurationError(row_path + ": expected sbar = " + std::to_string(sbar) + " entries");
        }
        spec.statefns.values.push_back(std::move(row));
    }

    try {
        spec.validate();
    } catch (const ConfigurationError& err) {
        throw ConfigurationError(std::string(where) + ": " + err.what());
    }
    return spec;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& err) {
        throw ConfigurationError(path.string() + ": " + err.what());
    }
}

void write_text_file(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json_file(const Json& doc, const std::filesystem::path& path) {
    write_text_file(doc.dump(2) + "\n", path);
}

ModelSpec load_spec(const std::filesystem::path& path) {
    return spec_from_json(read_json_file(path), path.filename().string());
}

void save_spec(const ModelSpec& spec, const std::filesystem::path& path) {
    write_json_file(spec_to_json(spec), path);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
    return buffer;
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream content;
    content << in.rdbuf();
    return fnv1a_hex(content.str());
}

std::string spec_hash(const ModelSpec& spec) { return fnv1a_hex(spec_to_json(spec).dump()); }

}  // namespace sdsh
