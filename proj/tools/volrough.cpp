// volrough: roughness estimation and rough-volatility experiments.
//
// Exit codes: 0 success, 2 data/config errors, 3 numerical errors.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "volrough/experiments.hpp"

namespace {

using namespace volrough;

constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

json read_config(const std::string& file) {
    if (file.empty()) return json::object();
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(file + ": " + e.what());
    }
}

struct InputOptions {
    std::string config;
    std::string input;
    std::string value_col;
    std::string date_col;
    std::string date_format = "auto";
    bool log = false;
    std::optional<std::size_t> k, l, stride, max_windows, bins;
    std::optional<double> p_hi;
    std::string out;

    void add(CLI::App* cmd, bool sliding_extras) {
        cmd->add_option("--config", config, "JSON spec (overridden by flags)");
        cmd->add_option("--input", input, "CSV file");
        cmd->add_option("--value-col", value_col, "value column name");
        cmd->add_option("--date-col", date_col, "date column name");
        cmd->add_option("--date-format", date_format, "auto | date | datetime")
            ->check(CLI::IsMember({"auto", "date", "datetime"}));
        cmd->add_flag("--log", log, "estimate on log values");
        cmd->add_option("--k", k, "block length K");
        cmd->add_option("--l", l, "window length L (default K^2)");
        cmd->add_option("--stride", stride, "window stride");
        cmd->add_option("--p-hi", p_hi, "upper end of the p bracket");
        if (sliding_extras) {
            cmd->add_option("--max-windows", max_windows, "cap on the number of windows (0 = all)");
            cmd->add_option("--bins", bins, "histogram bins");
        }
        cmd->add_option("--out", out, "output directory");
    }

    ExperimentSpec spec() const {
        auto s = resolve_spec(read_config(config), "market", "paper");
        if (!input.empty()) s.input.file = input;
        if (!value_col.empty()) s.input.value_col = value_col;
        if (!date_col.empty()) s.input.date_col = date_col;
        if (date_format != "auto") s.input.date_format = date_format;
        if (log) s.input.log = true;
        if (k) s.estimator.k = *k;
        if (l) s.estimator.l = *l;
        if (stride) s.estimator.stride = *stride;
        if (p_hi) s.estimator.p_hi = *p_hi;
        if (max_windows) s.estimator.max_windows = *max_windows;
        if (bins) s.estimator.bins = *bins;
        if (!out.empty()) s.output_dir = out;
        if (s.input.file.empty()) throw ConfigError("--input is required");
        return s;
    }
};

void print_summary(const SlidingSummary& s) {
    std::cout << "windows " << s.n_windows() << " (failed " << s.failures.size() << ")\n"
              << "H mean " << s.mean << "  std " << s.std << '\n';
}

int run_regression(const InputOptions& io, std::size_t max_lag_div, const std::vector<double>& q_list) {
    auto s = io.spec();
    s.kind = "regression";
    s.regression.max_lag_div = max_lag_div;
    if (!q_list.empty()) s.regression.q_list = q_list;

    const auto ing = ingest_csv_file(s.input.file, ingest_spec(s.input));
    const auto path = s.input.log ? log_transform(ing.path) : ing.path;
    const auto r = estimate_h_regression(path, s.regression.config());

    std::cout << "h " << r.h << "  (max lag " << r.max_lag << ", half-lag h " << r.h_half_lag << ")\n";
    if (!s.output_dir.empty()) {
        std::filesystem::create_directories(s.output_dir);
        const std::string head = "# spec: " + json(s).dump() + "\n";
        std::ofstream m(std::filesystem::path(s.output_dir) / "moments.csv", std::ios::binary);
        m << head << "q,lag,m,log_m\n";
        for (const auto& p : r.moments)
            m << detail::format_g17(p.q) << ',' << p.lag << ',' << detail::format_g17(p.m) << ','
              << detail::format_g17(std::log(p.m)) << '\n';
        std::ofstream z(std::filesystem::path(s.output_dir) / "zeta.csv", std::ios::binary);
        z << head << "q,zeta,r_squared\n";
        for (std::size_t i = 0; i < r.q_list.size(); ++i)
            z << detail::format_g17(r.q_list[i]) << ',' << detail::format_g17(r.zeta[i]) << ','
              << detail::format_g17(r.r_squared[i]) << '\n';
        std::ofstream j(std::filesystem::path(s.output_dir) / "summary.json", std::ios::binary);
        j << json{{"spec", s},
                  {"h", r.h},
                  {"h_half_lag", r.h_half_lag},
                  {"max_lag", r.max_lag},
                  {"zeta", r.zeta},
                  {"metadata",
                   {{"transform", s.input.log ? "log" : "level"},
                    {"q_list", r.q_list},
                    {"n_points", path.size()}}}}
                 .dump(2)
          << '\n';
    }
    return 0;
}

struct StudyOptions {
    std::string config;
    std::string scale = "smoke";
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> m_paths;

    void add(CLI::App* cmd) {
        cmd->add_option("--config", config, "JSON spec overriding the preset");
        cmd->add_option("--scale", scale, "preset size")->check(CLI::IsMember({"paper", "smoke"}));
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--m-paths", m_paths, "Monte-Carlo paths per valuation");
    }

    ExperimentSpec spec(const std::string& kind) const {
        auto s = resolve_spec(read_config(config), kind, scale);
        if (seed) s.mc.seed = *seed;
        if (m_paths) s.mc.m_paths = *m_paths;
        if (!out.empty()) s.output_dir = out;
        if (s.output_dir.empty()) s.output_dir = "out/" + kind + "-" + scale;
        return s;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"volrough: roughness of volatility time series and rough-volatility experiments"};
    app.require_subcommand(1);

    InputOptions est_opts, slide_opts, reg_opts;
    auto* estimate = app.add_subcommand("estimate", "sliding p-variation estimate of a CSV series");
    est_opts.add(estimate, false);
    auto* slide = app.add_subcommand("slide", "sliding estimate with window cap and histogram control");
    slide_opts.add(slide, true);

    auto* regression = app.add_subcommand("regression", "log-moment regression estimate of a CSV series");
    reg_opts.add(regression, false);
    std::size_t max_lag_div = 40;
    std::vector<double> q_list;
    regression->add_option("--max-lag-div", max_lag_div, "largest lag = n / this");
    regression->add_option("--q", q_list, "moment orders");

    std::optional<std::string> sim_model;
    StudyOptions sim_opts;
    auto* simulate = app.add_subcommand("simulate", "simulate a volatility path");
    simulate->add_option("--model", sim_model, "model")->check(CLI::IsMember({"heston", "roughexp"}));
    sim_opts.add(simulate);

    StudyOptions t1_opts, t2_opts, bias_opts;
    auto* table1 = app.add_subcommand("table1", "one-day implied roughness by dt and quadrature rule");
    t1_opts.add(table1);
    auto* table2 = app.add_subcommand("table2", "roughness by proxy and maturity");
    t2_opts.add(table2);
    auto* bias = app.add_subcommand("bias-curve", "measured against model H by maturity");
    bias_opts.add(bias);
    std::string f_hat_file;
    bias->add_option("--f-hat", f_hat_file, "CSV table theta,f for the theoretical overlay");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*estimate || *slide) {
            const auto s = (*estimate ? est_opts : slide_opts).spec();
            const auto r = run_market_roughness(s);
            std::cout << "points " << r.n_points << " (dropped " << r.dropped_rows << ")\n";
            print_summary(r.summary);
        } else if (*regression) {
            return run_regression(reg_opts, max_lag_div, q_list);
        } else if (*simulate) {
            auto s = sim_opts.spec("simulate");
            if (sim_model) s.model = *sim_model;
            const auto vol = run_simulate(s);
            std::cout << "wrote " << vol.size() << " points to " << s.output_dir << '\n';
        } else if (*table1) {
            const auto r = run_table1(t1_opts.spec("table1"));
            for (const auto& c : r.cells)
                std::cout << "dt " << c.dt << "  " << to_string(c.rule) << "  H " << c.mean << " (" << c.se
                          << ")\n";
        } else if (*table2) {
            const auto r = run_table2(t2_opts.spec("table2"));
            for (const auto& row : r.rows)
                std::cout << "h " << row.model_h << "  " << row.maturity_days << "d  " << to_string(row.proxy)
                          << "  H " << row.estimate.mean << " (" << row.estimate.std << ")\n";
            for (const auto& c : r.cross_checks)
                std::cout << "h " << c.model_h << "  1d implied: p-variation " << c.h_pvariation
                          << "  regression " << c.h_regression << '\n';
        } else if (*bias) {
            auto s = bias_opts.spec("bias-curve");
            if (!f_hat_file.empty()) s.study.f_hat_file = f_hat_file;
            const auto r = run_bias_curve(s);
            for (const auto& p : r.points)
                std::cout << "h " << p.model_h << "  " << p.maturity_days << "d  H " << p.mean << "  ["
                          << p.ci_low << ", " << p.ci_high << "]" << (p.all_failed() ? "  all windows failed" : "")
                          << '\n';
            for (const auto& [k, line] : r.slopes)
                std::cout << k << "d slope " << line.slope << '\n';
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
