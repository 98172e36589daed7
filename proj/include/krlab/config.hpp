#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "krlab/io.hpp"
#include "krlab/studies.hpp"

namespace krlab {

struct config_error : std::runtime_error {
    int line;
    config_error(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

/// A fully validated configuration: the study parameters plus the flat
/// "section.key" -> value echo of every effective setting, defaults included.
struct ParsedConfig {
    StudyConfig cfg;
    std::map<std::string, std::string> echo;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"study",
         {"name", "p", "t", "lambda", "delta0", "flow_dt", "k_list", "kappa_list", "h_list",
          "output_times", "normalization"}},
        {"grid", {"resolution"}},
        {"field",
         {"name", "name_b", "k", "omega", "amplitude", "m", "period", "cx", "cy", "k_b", "omega_b",
          "amplitude_b", "m_b", "period_b", "cx_b", "cy_b"}},
        {"output", {"dir"}},
    };
    return schema;
}

inline int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string nearest_key(const std::string& key, const std::set<std::string>& valid) {
    std::string best;
    int best_d = std::numeric_limits<int>::max();
    for (const auto& v : valid) {
        const int d = edit_distance(key, v);
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    return best;
}

inline std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
    size_t used = 0;
    double x;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        throw config_error(line, "value '" + v + "' for key '" + key + "' is not a number");
    }
    if (used != v.size())
        throw config_error(line, "value '" + v + "' for key '" + key + "' is not a number");
    return x;
}

inline std::vector<double> parse_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), line, key));
    if (out.empty()) throw config_error(line, "empty list for key '" + key + "'");
    return out;
}

inline void require_strictly_monotone(const std::vector<double>& v, int line,
                                      const std::string& key) {
    for (size_t i = 1; i < v.size(); ++i)
        if ((v[i] - v[i - 1]) * (v[1] - v[0]) <= 0.0)
            throw config_error(line, "list '" + key + "' must be strictly monotone");
}

inline std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_number(v[i]);
    }
    return out;
}

}  // namespace detail

/// Strict INI-style parser: sections [study] [grid] [field] [output],
/// `key = value` lines, `#` comments. Unknown keys are rejected with the line
/// number and the nearest valid key; every default is materialized into the
/// echo so nothing is silently assumed.
inline ParsedConfig parse_config(const std::string& text,
                                 const std::map<std::string, std::string>& overrides = {}) {
    std::map<std::string, std::string> raw;    // "section.key" -> value
    std::map<std::string, int> raw_line;       // where each key was set
    std::string section;
    std::istringstream in(text);
    std::string full_line;
    int lineno = 0;
    while (std::getline(in, full_line)) {
        ++lineno;
        std::string line = full_line;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error(lineno, "malformed section header");
            section = line.substr(1, line.size() - 2);
            if (!detail::config_schema().count(section))
                throw config_error(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error(lineno, "expected 'key = value', got '" + line + "'");
        if (section.empty()) throw config_error(lineno, "key outside of any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto& valid = detail::config_schema().at(section);
        if (!valid.count(key))
            throw config_error(lineno, "unknown key '" + key + "' in [" + section +
                                           "]; nearest is '" + detail::nearest_key(key, valid) +
                                           "'");
        const std::string full = section + "." + key;
        if (raw.count(full)) throw config_error(lineno, "duplicate key '" + full + "'");
        raw[full] = value;
        raw_line[full] = lineno;
    }

    for (const auto& [full, value] : overrides) {
        const auto dot = full.find('.');
        if (dot == std::string::npos)
            throw config_error(0, "override key '" + full + "' must be section.key");
        const std::string section_name = full.substr(0, dot);
        const std::string key = full.substr(dot + 1);
        auto it = detail::config_schema().find(section_name);
        if (it == detail::config_schema().end())
            throw config_error(0, "override: unknown section [" + section_name + "]");
        if (!it->second.count(key))
            throw config_error(0, "override: unknown key '" + key + "' in [" + section_name +
                                      "]; nearest is '" + detail::nearest_key(key, it->second) +
                                      "'");
        raw[full] = value;
        raw_line[full] = 0;
    }

    if (!raw.count("study.name")) throw config_error(lineno, "missing required key 'study.name'");

    ParsedConfig out;
    StudyConfig& cfg = out.cfg;
    cfg.study = raw.at("study.name");
    static const std::set<std::string> studies = {"oscillating", "diffusion", "upwind", "mixing",
                                                 "lagrangian"};
    if (!studies.count(cfg.study))
        throw config_error(raw_line.at("study.name"), "unknown study '" + cfg.study + "'");

    auto line_of = [&](const std::string& full) { return raw.count(full) ? raw_line.at(full) : 0; };
    auto number = [&](const std::string& full, double fallback) {
        return raw.count(full) ? detail::parse_double(raw.at(full), line_of(full), full) : fallback;
    };
    auto list = [&](const std::string& full) {
        std::vector<double> v;
        if (raw.count(full)) {
            v = detail::parse_list(raw.at(full), line_of(full), full);
            detail::require_strictly_monotone(v, line_of(full), full);
        }
        return v;
    };

    cfg.p = number("study.p", 2.0);
    if (!(cfg.p > 1.0)) throw config_error(line_of("study.p"), "p must be > 1");
    cfg.lambda = number("study.lambda", 0.45);
    if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0))
        throw config_error(line_of("study.lambda"), "lambda must be in (0, 1]");
    cfg.delta0 = number("study.delta0", 0.1);
    cfg.flow_dt = number("study.flow_dt", 0.005);
    cfg.k_values = list("study.k_list");
    cfg.kappa_values = list("study.kappa_list");
    cfg.h_values = list("study.h_list");
    cfg.output_times = list("study.output_times");

    const std::string norm = raw.count("study.normalization") ? raw.at("study.normalization")
                                                              : "mass";
    if (norm == "mass")
        cfg.mixing_norm = MixingNormalization::MassAveraged;
    else if (norm == "volume")
        cfg.mixing_norm = MixingNormalization::VolumeAveraged;
    else
        throw config_error(line_of("study.normalization"),
                           "normalization must be 'mass' or 'volume'");

    const double res = number("grid.resolution", -1.0);
    if (res == 0.0) {
        cfg.resolution = 0;  // 0: derived from the sweep parameter
    } else if (res > 0.0) {
        const double l = std::log2(res);
        if (res != std::round(res) || l != std::round(l))
            throw config_error(line_of("grid.resolution"), "resolution must be a power of two");
        cfg.resolution = static_cast<int>(res);
    } else {
        cfg.resolution = -1;  // per-study default applied below
    }

    cfg.field_name = raw.count("field.name") ? raw.at("field.name") : "";
    cfg.field_name_b = raw.count("field.name_b") ? raw.at("field.name_b") : "";
    for (const char* key : {"k", "omega", "amplitude", "m", "period", "cx", "cy"}) {
        const std::string full = std::string("field.") + key;
        if (raw.count(full))
            cfg.field_params[key] = detail::parse_double(raw.at(full), line_of(full), full);
        const std::string full_b = full + "_b";
        if (raw.count(full_b))
            cfg.field_params_b[key] = detail::parse_double(raw.at(full_b), line_of(full_b), full_b);
    }

    // per-study defaults, required lists, and forwarded preconditions
    if (cfg.study == "oscillating") {
        if (cfg.k_values.empty())
            throw config_error(lineno, "study 'oscillating' requires study.k_list");
        cfg.t_final = number("study.t", 1.0);
    } else if (cfg.study == "diffusion") {
        if (cfg.kappa_values.empty())
            throw config_error(lineno, "study 'diffusion' requires study.kappa_list");
        cfg.t_final = number("study.t", 1.0);
        if (cfg.field_name.empty()) {
            cfg.field_name = "oscillating";
            cfg.field_params = {{"k", 4.0}};
        }
        if (cfg.resolution < 0) cfg.resolution = 1024;
    } else if (cfg.study == "upwind") {
        if (cfg.h_values.empty()) throw config_error(lineno, "study 'upwind' requires study.h_list");
        for (double h : cfg.h_values) {
            const double cells = 1.0 / h;
            const double l = std::log2(cells);
            if (cells != std::round(cells) || l != std::round(l))
                throw config_error(line_of("study.h_list"), "h list must be dyadic (h = 2^-j)");
        }
        cfg.t_final = number("study.t", 0.5);
        if (cfg.field_name.empty()) {
            cfg.field_name = "constant";
            cfg.field_params = {{"cx", 1.0}};
        }
    } else if (cfg.study == "mixing") {
        cfg.t_final = number("study.t", 8.0);
        if (cfg.field_name.empty()) {
            cfg.field_name = "alternating_shear";
            cfg.field_params = {{"amplitude", 1.0}, {"m", 1.0}, {"period", 1.0}};
        }
        if (cfg.resolution < 0) cfg.resolution = 128;
        if (cfg.output_times.empty())
            for (int i = 0; i <= 4; ++i) cfg.output_times.push_back(i * cfg.t_final / 4);
    } else if (cfg.study == "lagrangian") {
        cfg.t_final = number("study.t", 1.0);
        if (cfg.field_name.empty()) cfg.field_name = "zero";
        if (cfg.field_name_b.empty()) {
            cfg.field_name_b = "oscillating";
            if (cfg.field_params_b.empty()) cfg.field_params_b = {{"k", 8.0}};
        }
        if (cfg.resolution < 0) cfg.resolution = 256;
        if (cfg.output_times.empty()) cfg.output_times = {0.25, 0.5, 1.0};
    }
    if (cfg.resolution < 0) cfg.resolution = 0;

    // echo of every effective setting
    auto& echo = out.echo;
    echo["study.name"] = cfg.study;
    echo["study.p"] = detail::format_number(cfg.p);
    echo["study.t"] = detail::format_number(cfg.t_final);
    echo["study.lambda"] = detail::format_number(cfg.lambda);
    echo["study.delta0"] = detail::format_number(cfg.delta0);
    echo["study.flow_dt"] = detail::format_number(cfg.flow_dt);
    if (!cfg.k_values.empty()) echo["study.k_list"] = detail::format_list(cfg.k_values);
    if (!cfg.kappa_values.empty())
        echo["study.kappa_list"] = detail::format_list(cfg.kappa_values);
    if (!cfg.h_values.empty()) echo["study.h_list"] = detail::format_list(cfg.h_values);
    if (!cfg.output_times.empty())
        echo["study.output_times"] = detail::format_list(cfg.output_times);
    echo["study.normalization"] =
        (cfg.mixing_norm == MixingNormalization::MassAveraged) ? "mass" : "volume";
    echo["grid.resolution"] = std::to_string(cfg.resolution);
    if (!cfg.field_name.empty()) echo["field.name"] = cfg.field_name;
    for (const auto& [k, v] : cfg.field_params) echo["field." + k] = detail::format_number(v);
    if (!cfg.field_name_b.empty()) echo["field.name_b"] = cfg.field_name_b;
    for (const auto& [k, v] : cfg.field_params_b)
        echo["field." + k + "_b"] = detail::format_number(v);
    if (raw.count("output.dir")) echo["output.dir"] = raw.at("output.dir");
    return out;
}

/// Render an echo back into config text; parse(emit(parse(x).echo)) is the
/// identity on the echo (strict round-trip).
inline std::string emit_config(const std::map<std::string, std::string>& echo) {
    std::string out;
    for (const char* section : {"study", "grid", "field", "output"}) {
        std::string body;
        const std::string prefix = std::string(section) + ".";
        for (const auto& [k, v] : echo)
            if (k.rfind(prefix, 0) == 0) body += k.substr(prefix.size()) + " = " + v + "\n";
        if (!body.empty()) out += "[" + std::string(section) + "]\n" + body;
    }
    return out;
}

}  // namespace krlab
