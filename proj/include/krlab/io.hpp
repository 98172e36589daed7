#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "krlab/measure.hpp"
#include "krlab/studies.hpp"

namespace krlab {

namespace detail {

/// Shortest round-trip decimal form; '.' decimal point regardless of locale.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[32];
        std::snprintf(probe, sizeof probe, "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

inline std::string csv_cell(double v) { return std::isnan(v) ? "" : format_number(v); }

}  // namespace detail

inline std::string rate_report_csv(const RateReport& rep) {
    std::string out = "parameter,delta_scale,kr_value,l1_distance,h_minus1,bv,mixing_scale\n";
    for (const auto& r : rep.rows) {
        out += detail::csv_cell(r.parameter) + ',' + detail::csv_cell(r.delta_scale) + ',' +
               detail::csv_cell(r.kr_value) + ',' + detail::csv_cell(r.l1_distance) + ',' +
               detail::csv_cell(r.h_minus1) + ',' + detail::csv_cell(r.bv) + ',' +
               detail::csv_cell(r.mixing_scale) + '\n';
    }
    return out;
}

/// JSON summary: study id, the full config echo (defaults included), the fit,
/// named metrics, and the contract verdicts.
inline std::string rate_report_json(const RateReport& rep,
                                    const std::map<std::string, std::string>& config_echo) {
    nlohmann::json j;
    j["study"] = rep.study;
    for (const auto& [k, v] : config_echo) j["config"][k] = v;
    if (rep.fit_valid) {
        j["fit"]["slope"] = rep.fit.slope;
        j["fit"]["intercept"] = rep.fit.intercept;
        j["fit"]["residual"] = rep.fit.residual;
    } else {
        j["fit"] = nullptr;
    }
    for (const auto& [k, v] : rep.metrics)
        j["metrics"][k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    for (const auto& [k, v] : rep.passes) j["passes"][k] = v;
    j["all_pass"] = rep.all_pass();
    return j.dump(2) + "\n";
}

/// Transport plan export for visualization: one row per plan entry.
inline std::string plan_csv(const TransportPlan& plan, const DiscreteMeasure& pos,
                            const DiscreteMeasure& neg) {
    std::string out = "source_x,source_y,target_x,target_y,mass\n";
    for (const auto& e : plan.entries) {
        const Point& a = pos.points[e.source];
        const Point& b = neg.points[e.target];
        out += detail::format_number(a[0]) + ',' + detail::format_number(a[1]) + ',' +
               detail::format_number(b[0]) + ',' + detail::format_number(b[1]) + ',' +
               detail::format_number(e.mass) + '\n';
    }
    return out;
}

/// Field snapshot export: one row per cell.
inline std::string snapshot_csv(const CellField& f) {
    std::string out = (f.grid.dim() == 1) ? "time,cell_index,x,value\n"
                                          : "time,cell_index,x,y,value\n";
    for (int k = 0; k < f.grid.num_cells(); ++k) {
        const Point c = f.grid.cell_center(k);
        out += detail::format_number(f.time) + ',' + std::to_string(k) + ',' +
               detail::format_number(c[0]) + ',';
        if (f.grid.dim() == 2) out += detail::format_number(c[1]) + ',';
        out += detail::format_number(f.values[k]) + '\n';
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_file: cannot open " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write_file: write failed for " + path);
}

}  // namespace krlab
