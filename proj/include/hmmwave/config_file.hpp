// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file config_file.hpp
 * @brief Plain-text study configuration files.
 *
 * The format is flat `key = value` lines with `#` comments. Optional
 * `[space]`, `[time]`, `[micro]`, or `[plateau]` section headers scope the
 * keys that follow to one study kind, so a single file can configure several
 * studies; keys before the first header apply to every kind. Unknown keys
 * and malformed values are rejected with the offending line number.
 */

#include "hmmwave/study.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hmmwave {

inline StudyKind study_kind_from_string(std::string_view s) {
    if (s == "space") return StudyKind::space;
    if (s == "time") return StudyKind::time;
    if (s == "micro") return StudyKind::micro;
    if (s == "plateau") return StudyKind::plateau;
    throw std::invalid_argument("unknown study kind: " + std::string(s));
}

inline Scheme scheme_from_string(std::string_view s) {
    if (s == "imex") return Scheme::imex;
    if (s == "implicit_mp") return Scheme::implicit_midpoint;
    if (s == "explicit_mp") return Scheme::explicit_midpoint;
    throw std::invalid_argument("unknown scheme: " + std::string(s));
}

inline TensorSource tensor_source_from_string(std::string_view s) {
    if (s == "exact") return TensorSource::exact;
    if (s == "hmm") return TensorSource::hmm;
    throw std::invalid_argument("unknown tensor source: " + std::string(s));
}

inline TimeReference time_reference_from_string(std::string_view s) {
    if (s == "exact") return TimeReference::exact;
    if (s == "reference") return TimeReference::reference;
    if (s == "both") return TimeReference::both;
    throw std::invalid_argument("unknown reference mode: " + std::string(s));
}

inline CellCoupling coupling_from_string(std::string_view s) {
    if (s == "periodic") return CellCoupling::periodic;
    if (s == "dirichlet") return CellCoupling::dirichlet;
    if (s == "neumann-mean-free") return CellCoupling::neumann_mean_free;
    throw std::invalid_argument("unknown cell coupling: " + std::string(s));
}

inline CoefficientSampling sampling_from_string(std::string_view s) {
    if (s == "frozen") return CoefficientSampling::frozen;
    if (s == "sampled") return CoefficientSampling::sampled;
    throw std::invalid_argument("unknown coefficient sampling: " + std::string(s));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

[[noreturn]] inline void config_error(int line, const std::string& message) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + message);
}

inline double parse_config_double(std::string_view value, int line) {
    double out = 0.0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        config_error(line, "expected a number, got '" + std::string(value) + "'");
    return out;
}

inline int parse_config_int(std::string_view value, int line) {
    int out = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
        config_error(line, "expected an integer, got '" + std::string(value) + "'");
    return out;
}

inline bool parse_config_bool(std::string_view value, int line) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    config_error(line, "expected true or false, got '" + std::string(value) + "'");
}

inline std::vector<std::string_view> split_config_list(std::string_view value, int line) {
    std::vector<std::string_view> items;
    if (trim(value).empty()) return items;
    std::size_t begin = 0;
    while (begin <= value.size()) {
        const std::size_t comma = value.find(',', begin);
        const std::string_view raw =
            value.substr(begin, comma == std::string_view::npos ? comma : comma - begin);
        const std::string_view item = trim(raw);
        if (item.empty()) config_error(line, "empty item in list");
        items.push_back(item);
        if (comma == std::string_view::npos) break;
        begin = comma + 1;
    }
    return items;
}

inline bool config_key_known(std::string_view key) {
    static constexpr std::string_view known[] = {
        "schemes",       "order",          "mesh_levels",    "time_mesh_level",
        "tau",           "tau_list",       "tau_ref",        "reference",
        "tensor",        "epsilon",        "delta",          "micro_subdivisions",
        "micro_sweep",   "coupling",       "sampling",       "micro_point",
        "final_time",    "cg_tolerance",   "fp_tolerance",   "fp_max_iterations",
        "divergence_threshold", "threads", "literal_nonlinearity", "emit_timings"};
    for (std::string_view k : known)
        if (k == key) return true;
    return false;
}

inline void apply_config_key(StudyConfig& config, std::string_view key, std::string_view value,
                             int line) {
    try {
        if (key == "schemes") {
            std::vector<Scheme> schemes;
            for (std::string_view item : split_config_list(value, line))
                schemes.push_back(scheme_from_string(item));
            if (schemes.empty()) config_error(line, "schemes must name at least one scheme");
            config.schemes = std::move(schemes);
        } else if (key == "order") {
            config.order = parse_config_int(value, line);
        } else if (key == "mesh_levels") {
            std::vector<int> levels;
            for (std::string_view item : split_config_list(value, line))
                levels.push_back(parse_config_int(item, line));
            config.mesh_levels = std::move(levels);
        } else if (key == "time_mesh_level") {
            config.time_mesh_level = parse_config_int(value, line);
        } else if (key == "tau") {
            config.tau = parse_config_double(value, line);
        } else if (key == "tau_list") {
            std::vector<double> taus;
            for (std::string_view item : split_config_list(value, line))
                taus.push_back(parse_config_double(item, line));
            config.tau_list = std::move(taus);
        } else if (key == "tau_ref") {
            config.tau_ref = parse_config_double(value, line);
        } else if (key == "reference") {
            config.reference = time_reference_from_string(value);
        } else if (key == "tensor") {
            config.tensor = tensor_source_from_string(value);
        } else if (key == "epsilon") {
            config.epsilon = parse_config_double(value, line);
        } else if (key == "delta") {
            config.delta = parse_config_double(value, line);
        } else if (key == "micro_subdivisions") {
            config.micro_subdivisions = parse_config_int(value, line);
        } else if (key == "micro_sweep") {
            std::vector<int> sweep;
            for (std::string_view item : split_config_list(value, line))
                sweep.push_back(parse_config_int(item, line));
            config.micro_sweep = std::move(sweep);
        } else if (key == "coupling") {
            config.coupling = coupling_from_string(value);
        } else if (key == "sampling") {
            config.sampling = sampling_from_string(value);
        } else if (key == "micro_point") {
            const auto items = split_config_list(value, line);
            if (items.size() != 2) config_error(line, "micro_point needs two coordinates");
            config.micro_point = {parse_config_double(items[0], line),
                                  parse_config_double(items[1], line)};
        } else if (key == "final_time") {
            config.final_time = parse_config_double(value, line);
        } else if (key == "cg_tolerance") {
            config.cg_tolerance = parse_config_double(value, line);
        } else if (key == "fp_tolerance") {
            config.fp_tolerance = parse_config_double(value, line);
        } else if (key == "fp_max_iterations") {
            config.fp_max_iterations = parse_config_int(value, line);
        } else if (key == "divergence_threshold") {
            config.divergence_threshold = parse_config_double(value, line);
        } else if (key == "threads") {
            config.threads = parse_config_int(value, line);
        } else if (key == "literal_nonlinearity") {
            config.literal_nonlinearity = parse_config_bool(value, line);
        } else if (key == "emit_timings") {
            config.emit_timings = parse_config_bool(value, line);
        } else {
            config_error(line, "unknown key '" + std::string(key) + "'");
        }
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        if (what.rfind("config line", 0) == 0) throw;
        config_error(line, what);
    }
}

} // namespace detail

/**
 * @brief Parse configuration text for one study kind.
 *
 * Keys outside any section and keys in the section matching `kind` are
 * applied in file order on top of the defaults; sections for other kinds are
 * checked for known keys but otherwise skipped. The result is validated.
 */
inline StudyConfig parse_study_config(const std::string& text, StudyKind kind) {
    StudyConfig config;
    config.kind = kind;
    std::istringstream stream(text);
    std::string raw;
    std::string active_section;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') detail::config_error(line_no, "unterminated section header");
            const std::string_view name = detail::trim(line.substr(1, line.size() - 2));
            study_kind_from_string(name);
            active_section = std::string(name);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            detail::config_error(line_no, "expected 'key = value'");
        const std::string_view key = detail::trim(line.substr(0, eq));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) detail::config_error(line_no, "missing key before '='");
        if (!detail::config_key_known(key))
            detail::config_error(line_no, "unknown key '" + std::string(key) + "'");
        if (active_section.empty() || active_section == to_string(kind))
            detail::apply_config_key(config, key, value, line_no);
    }
    config.validate();
    return config;
}

/// Read a configuration file and parse it for one study kind.
inline StudyConfig load_study_config(const std::filesystem::path& path, StudyKind kind) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_study_config(buffer.str(), kind);
}

/**
 * @brief Serialize a configuration under its kind's section header.
 *
 * Every key is written in a fixed order with round-trip number formatting,
 * so parse_study_config(serialize_study_config(c), c.kind) reproduces c.
 */
inline std::string serialize_study_config(const StudyConfig& config) {
    std::string out;
    const auto put = [&](std::string_view key, const std::string& value) {
        out += std::string(key) + " = " + value + "\n";
    };
    const auto join_ints = [](const std::vector<int>& values) {
        std::string s;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(values[i]);
        }
        return s;
    };

    out += "[" + std::string(to_string(config.kind)) + "]\n";
    std::string schemes;
    for (std::size_t i = 0; i < config.schemes.size(); ++i) {
        if (i) schemes += ",";
        schemes += to_string(config.schemes[i]);
    }
    put("schemes", schemes);
    put("order", std::to_string(config.order));
    put("mesh_levels", join_ints(config.mesh_levels));
    put("time_mesh_level", std::to_string(config.time_mesh_level));
    put("tau", format_double(config.tau));
    std::string taus;
    for (std::size_t i = 0; i < config.tau_list.size(); ++i) {
        if (i) taus += ",";
        taus += format_double(config.tau_list[i]);
    }
    put("tau_list", taus);
    put("tau_ref", format_double(config.tau_ref));
    put("reference", std::string(to_string(config.reference)));
    put("tensor", std::string(to_string(config.tensor)));
    put("epsilon", format_double(config.epsilon));
    put("delta", format_double(config.delta));
    put("micro_subdivisions", std::to_string(config.micro_subdivisions));
    put("micro_sweep", join_ints(config.micro_sweep));
    put("coupling", std::string(to_string(config.coupling)));
    put("sampling", std::string(to_string(config.sampling)));
    put("micro_point", format_double(config.micro_point.x) + "," + format_double(config.micro_point.y));
    put("final_time", format_double(config.final_time));
    put("cg_tolerance", format_double(config.cg_tolerance));
    put("fp_tolerance", format_double(config.fp_tolerance));
    put("fp_max_iterations", std::to_string(config.fp_max_iterations));
    put("divergence_threshold", format_double(config.divergence_threshold));
    put("threads", std::to_string(config.threads));
    put("literal_nonlinearity", config.literal_nonlinearity ? "true" : "false");
    put("emit_timings", config.emit_timings ? "true" : "false");
    return out;
}

} // namespace hmmwave
