#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "krlab/config.hpp"
#include "krlab/io.hpp"
#include "krlab/studies.hpp"
#include "krlab/validate.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& sets) {
    std::map<std::string, std::string> overrides;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::runtime_error("--set expects key=value, got " + s);
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    auto parsed = krlab::parse_config(read_file(config_path), overrides);

    std::string dir = out_dir;
    if (dir.empty()) {
        auto it = parsed.echo.find("output.dir");
        dir = (it != parsed.echo.end()) ? it->second : ".";
    }
    fs::create_directories(dir);

    auto report = krlab::run_study(parsed.cfg);
    krlab::write_file(dir + "/" + report.study + ".csv", krlab::rate_report_csv(report));
    krlab::write_file(dir + "/" + report.study + "_summary.json",
                      krlab::rate_report_json(report, parsed.echo));

    for (const auto& [name, ok] : report.passes)
        std::printf("contract %-28s %s\n", (name + ":").c_str(), ok ? "PASS" : "FAIL");
    return report.all_pass() ? 0 : 2;
}

int cmd_validate(bool quick) {
    auto results = krlab::run_validation(quick);
    bool all = true;
    for (const auto& r : results) {
        std::printf("%-32s %s  (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.c_str());
        all = all && r.pass;
    }
    return all ? 0 : 2;
}

int cmd_list_fields() {
    for (const auto& [name, desc] : krlab::list_builtin_fields())
        std::printf("%-18s %s\n", name.c_str(), desc.c_str());
    return 0;
}

int cmd_export_snapshot(const std::string& field, int k, double t, int cells,
                        const std::string& out_dir) {
    if (field != "oscillating")
        throw std::runtime_error("export-snapshot: only the oscillating family has a closed-form "
                                 "density");
    if (cells < 2) throw std::runtime_error("export-snapshot: need at least 2 cells");
    std::string csv = "x,value\n";
    for (int i = 0; i < cells; ++i) {
        const double x = (i + 0.5) / cells;
        csv += krlab::detail::format_number(x) + ',' +
               krlab::detail::format_number(krlab::exact_oscillating_solution(k, t, x)) + '\n';
    }
    if (out_dir.empty()) {
        std::fwrite(csv.data(), 1, csv.size(), stdout);
    } else {
        fs::create_directories(out_dir);
        char name[128];
        std::snprintf(name, sizeof name, "%s/snapshot_%s_k%d_t%g.csv", out_dir.c_str(),
                      field.c_str(), k, t);
        krlab::write_file(name, csv);
        std::printf("wrote %s\n", name);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuity-equation stability laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;
    auto* run = app.add_subcommand("run", "run a study from a config file");
    run->add_option("config", config_path, "config file")->required();
    run->add_option("-o,--output", out_dir, "output directory");
    run->add_option("--set", sets, "override config values (section.key=value)");

    bool quick = false;
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    validate->add_flag("--quick", quick, "reduced sample counts");

    app.add_subcommand("list-fields", "list the velocity field catalog");

    std::string snap_field;
    int snap_k = 1, snap_cells = 400;
    double snap_t = 1.0;
    std::string snap_dir;
    auto* snap = app.add_subcommand("export-snapshot", "export a closed-form density profile");
    snap->add_option("--field", snap_field, "field family")->required();
    snap->add_option("--k", snap_k, "oscillation count")->required();
    snap->add_option("--t", snap_t, "time")->required();
    snap->add_option("--cells", snap_cells, "sample count")->required();
    snap->add_option("-o,--output", snap_dir, "output directory (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, sets);
        if (validate->parsed()) return cmd_validate(quick);
        if (app.get_subcommand("list-fields")->parsed()) return cmd_list_fields();
        if (snap->parsed()) return cmd_export_snapshot(snap_field, snap_k, snap_t, snap_cells,
                                                       snap_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
