#pragma once

// Named, fully serializable experiments with deterministic CSV/JSON output.
// Requires nlohmann/json ("json.hpp") on the include path.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "volrough/bias.hpp"
#include "volrough/errors.hpp"
#include "volrough/fbm.hpp"
#include "volrough/models.hpp"
#include "volrough/pricing.hpp"
#include "volrough/pvariation.hpp"
#include "volrough/random.hpp"
#include "volrough/regression.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

using json = nlohmann::json;

struct InputSpec {
    std::string file;
    std::string date_col = "date";
    std::string value_col = "value";
    std::string date_format = "auto";  // auto | date | datetime
    bool log = false;
};

struct EstimatorSpec {
    std::size_t k = 25;
    std::size_t l = 0;
    std::size_t stride = 1;
    std::size_t max_windows = 365;  // 0: every full window
    double p_lo = 1.0;
    double p_hi = 20.0;
    double tol = 1e-8;
    std::size_t bins = 20;

    EstimatorConfig config() const {
        EstimatorConfig c;
        c.k = k;
        c.l = l == 0 ? k * k : l;
        c.p_lo = p_lo;
        c.p_hi = p_hi;
        c.tol = tol;
        return c;
    }
    SlidingOptions sliding() const { return SlidingOptions{stride, max_windows, bins}; }
};

struct RegressionSpec {
    std::vector<double> q_list{0.5, 1.0, 1.5, 2.0, 3.0};
    std::size_t max_lag_div = 40;

    RegressionConfig config() const {
        RegressionConfig c;
        c.q_list = q_list;
        c.max_lag_div = max_lag_div;
        return c;
    }
};

struct StudySpec {
    std::vector<double> dts;
    std::vector<std::string> rules{"trapezoidal"};
    std::size_t n_initial = 1;
    std::vector<std::size_t> maturities{1};
    std::vector<double> h_values;
    std::size_t max_grid_points = 10200;
    std::size_t avg_subpaths = 16;  // sub-paths averaged for "integrated, on average"
    std::string f_hat_file;         // optional theta,f table for the bias overlay
    double bias_k_days = 25.0;
};

struct ExperimentSpec {
    std::string name;
    std::string kind;   // market | table1 | table2 | bias-curve | simulate
    std::string scale;  // paper | smoke
    std::string model = "roughexp";
    InputSpec input;
    EstimatorSpec estimator;
    RegressionSpec regression;
    RoughExpParams rough;
    HestonParams heston;
    McConfig mc;
    SimGrid grid;
    StudySpec study;
    std::string output_dir;
};

// ---------------------------------------------------------------- JSON

inline void to_json(json& j, const ExperimentSpec& s) {
    j = json{
        {"name", s.name},
        {"kind", s.kind},
        {"scale", s.scale},
        {"model", s.model},
        {"input",
         {{"file", s.input.file},
          {"date_col", s.input.date_col},
          {"value_col", s.input.value_col},
          {"date_format", s.input.date_format},
          {"log", s.input.log}}},
        {"estimator",
         {{"k", s.estimator.k},
          {"l", s.estimator.l},  // 0: K^2
          {"stride", s.estimator.stride},
          {"max_windows", s.estimator.max_windows},
          {"p_lo", s.estimator.p_lo},
          {"p_hi", s.estimator.p_hi},
          {"tol", s.estimator.tol},
          {"bins", s.estimator.bins}}},
        {"regression",
         {{"q_list", s.regression.q_list},
          {"max_lag_div", s.regression.max_lag_div},
          {"weights", "equal"}}},
        {"roughexp", {{"sigma", s.rough.sigma}, {"eta", s.rough.eta}, {"h", s.rough.h}}},
        {"heston",
         {{"v0", s.heston.v0},
          {"kappa", s.heston.kappa},
          {"theta", s.heston.theta},
          {"xi", s.heston.xi},
          {"rho", s.heston.rho}}},
        {"mc",
         {{"m_paths", s.mc.m_paths},
          {"antithetic", s.mc.antithetic},
          {"seed", s.mc.seed},
          {"qmc", s.mc.qmc}}},
        {"grid", {{"dt", s.grid.dt}, {"horizon", s.grid.horizon}}},
        {"study",
         {{"dts", s.study.dts},
          {"rules", s.study.rules},
          {"n_initial", s.study.n_initial},
          {"maturities", s.study.maturities},
          {"h_values", s.study.h_values},
          {"max_grid_points", s.study.max_grid_points},
          {"avg_subpaths", s.study.avg_subpaths},
          {"f_hat_file", s.study.f_hat_file},
          {"bias_k_days", s.study.bias_k_days}}},
        {"output_dir", s.output_dir},
    };
}

inline void from_json(const json& j, ExperimentSpec& s) {
    ExperimentSpec d;
    s.name = j.value("name", d.name);
    s.kind = j.value("kind", d.kind);
    s.scale = j.value("scale", d.scale);
    s.model = j.value("model", d.model);
    const json empty = json::object();
    const auto& in = j.contains("input") ? j.at("input") : empty;
    s.input.file = in.value("file", d.input.file);
    s.input.date_col = in.value("date_col", d.input.date_col);
    s.input.value_col = in.value("value_col", d.input.value_col);
    s.input.date_format = in.value("date_format", d.input.date_format);
    s.input.log = in.value("log", d.input.log);
    const auto& es = j.contains("estimator") ? j.at("estimator") : empty;
    s.estimator.k = es.value("k", d.estimator.k);
    s.estimator.l = es.value("l", d.estimator.l);
    s.estimator.stride = es.value("stride", d.estimator.stride);
    s.estimator.max_windows = es.value("max_windows", d.estimator.max_windows);
    s.estimator.p_lo = es.value("p_lo", d.estimator.p_lo);
    s.estimator.p_hi = es.value("p_hi", d.estimator.p_hi);
    s.estimator.tol = es.value("tol", d.estimator.tol);
    s.estimator.bins = es.value("bins", d.estimator.bins);
    const auto& rg = j.contains("regression") ? j.at("regression") : empty;
    s.regression.q_list = rg.value("q_list", d.regression.q_list);
    s.regression.max_lag_div = rg.value("max_lag_div", d.regression.max_lag_div);
    const auto& re = j.contains("roughexp") ? j.at("roughexp") : empty;
    s.rough.sigma = re.value("sigma", d.rough.sigma);
    s.rough.eta = re.value("eta", d.rough.eta);
    s.rough.h = re.value("h", d.rough.h);
    const auto& he = j.contains("heston") ? j.at("heston") : empty;
    s.heston.v0 = he.value("v0", d.heston.v0);
    s.heston.kappa = he.value("kappa", d.heston.kappa);
    s.heston.theta = he.value("theta", d.heston.theta);
    s.heston.xi = he.value("xi", d.heston.xi);
    s.heston.rho = he.value("rho", d.heston.rho);
    const auto& mc = j.contains("mc") ? j.at("mc") : empty;
    s.mc.m_paths = mc.value("m_paths", d.mc.m_paths);
    s.mc.antithetic = mc.value("antithetic", d.mc.antithetic);
    s.mc.seed = mc.value("seed", d.mc.seed);
    s.mc.qmc = mc.value("qmc", d.mc.qmc);
    const auto& gr = j.contains("grid") ? j.at("grid") : empty;
    s.grid.dt = gr.value("dt", d.grid.dt);
    s.grid.horizon = gr.value("horizon", d.grid.horizon);
    const auto& st = j.contains("study") ? j.at("study") : empty;
    s.study.dts = st.value("dts", d.study.dts);
    s.study.rules = st.value("rules", d.study.rules);
    s.study.n_initial = st.value("n_initial", d.study.n_initial);
    s.study.maturities = st.value("maturities", d.study.maturities);
    s.study.h_values = st.value("h_values", d.study.h_values);
    s.study.max_grid_points = st.value("max_grid_points", d.study.max_grid_points);
    s.study.avg_subpaths = st.value("avg_subpaths", d.study.avg_subpaths);
    s.study.f_hat_file = st.value("f_hat_file", d.study.f_hat_file);
    s.study.bias_k_days = st.value("bias_k_days", d.study.bias_k_days);
    s.output_dir = j.value("output_dir", d.output_dir);
}

// ---------------------------------------------------------------- presets

// Built-in configuration for `kind` at `scale` ("paper" or "smoke").
// Smoke runs keep the paper's 4-year horizon and K = 25 so that every
// estimate averages 365 sliding windows; they cut M and coarsen dt.
inline ExperimentSpec preset(const std::string& kind, const std::string& scale = "smoke") {
    if (scale != "paper" && scale != "smoke") throw ConfigError("scale must be 'paper' or 'smoke'");
    const bool paper = scale == "paper";
    ExperimentSpec s;
    s.kind = kind;
    s.scale = scale;
    s.name = kind + "-" + scale;
    s.mc.m_paths = paper ? 8192 : 1024;
    s.mc.antithetic = true;
    s.mc.seed = 20240101;
    s.grid = SimGrid{paper ? 0.001 : 0.002, 4.0};
    s.rough = RoughExpParams{0.5, 0.5, 0.1};
    s.estimator.k = 25;
    s.estimator.max_windows = 365;
    // Rough-model series routinely have p-hat beyond 20 (H below 0.05).
    s.estimator.p_hi = 100.0;

    if (kind == "market") {
        s.estimator.k = 70;
        s.estimator.max_windows = 0;
        s.estimator.p_hi = 20.0;
        s.input.date_col = "Date";
        s.input.value_col = "Close";
    } else if (kind == "table1") {
        s.study.dts = paper ? std::vector<double>{0.001, 0.0004} : std::vector<double>{0.002, 0.0005};
        s.study.rules = {"trapezoidal", "right", "left"};
        s.study.n_initial = paper ? 20 : 5;
        s.study.maturities = {1};
        s.rough.h = 0.10;
    } else if (kind == "table2") {
        s.study.h_values = {0.05, 0.10};
        s.study.maturities = {1, 10, 20};
        s.study.n_initial = 1;
        s.study.rules = {"trapezoidal"};
    } else if (kind == "bias-curve") {
        s.study.h_values = paper ? std::vector<double>{0.05, 0.10, 0.20, 0.30, 0.40}
                                 : std::vector<double>{0.05, 0.20, 0.40};
        s.study.maturities = {1, 10, 20};
        s.study.n_initial = paper ? 32 : 4;
        s.study.rules = {"trapezoidal"};
        s.mc.qmc = true;
    } else if (kind == "simulate") {
        s.grid = SimGrid{0.004, 5.0};
    } else {
        throw ConfigError("unknown experiment kind '" + kind + "'");
    }
    return s;
}

// Preset for spec["kind"] at spec["scale"], overridden by the given JSON.
inline ExperimentSpec resolve_spec(const json& overrides, const std::string& kind,
                                   const std::string& scale) {
    json base = preset(kind, scale);
    base.merge_patch(overrides);
    base["kind"] = kind;
    base["scale"] = scale;
    return base.get<ExperimentSpec>();
}

// ---------------------------------------------------------------- output

namespace detail {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    return format_g17(v);
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class OutputWriter {
public:
    OutputWriter(const std::string& dir, const ExperimentSpec& spec) : dir_(dir) {
        if (dir_.empty()) return;
        std::filesystem::create_directories(dir_);
        spec_line_ = "# spec: " + json(spec).dump() + "\n";
    }

    bool enabled() const { return !dir_.empty(); }

    void csv(const std::string& name, const std::string& body) const {
        if (!enabled()) return;
        std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
        out << spec_line_ << body;
        if (!out) throw Error("failed writing " + name);
    }

    void json_file(const std::string& name, const json& j) const {
        if (!enabled()) return;
        std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
        out << j.dump(2) << '\n';
        if (!out) throw Error("failed writing " + name);
    }

private:
    std::string dir_;
    std::string spec_line_;
};

inline std::string sliding_csv(const SlidingSummary& s, const TimeSeriesPath& path) {
    std::ostringstream os;
    os << "window_start,t_start,h,p,residual\n";
    for (const auto& e : s.estimates)
        os << e.window_start << ',' << fmt(path.times[e.window_start]) << ',' << fmt(e.h) << ','
           << fmt(e.p) << ',' << fmt(e.w_residual) << '\n';
    return os.str();
}

inline std::string histogram_csv(const SlidingSummary& s) {
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < s.hist_counts.size(); ++i)
        os << fmt(s.hist_edges[i]) << ',' << fmt(s.hist_edges[i + 1]) << ',' << s.hist_counts[i] << '\n';
    return os.str();
}

}  // namespace detail

inline json summary_json(const SlidingSummary& s) {
    return json{{"mean", s.mean},
                {"std", s.std},
                {"n_windows", s.n_windows()},
                {"n_failed", s.failures.size()},
                {"histogram", {{"edges", s.hist_edges}, {"counts", s.hist_counts}}}};
}

// ---------------------------------------------------------------- shared pieces

// Sliding mean/std of a series, tolerating runs where every window fails.
struct ProxyEstimate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_windows = 0;
    std::size_t n_failed = 0;
    bool all_failed() const { return n_windows > 0 && n_failed == n_windows; }
};

inline ProxyEstimate estimate_proxy(const std::vector<double>& series, const EstimatorSpec& es) {
    ProxyEstimate out;
    const auto cfg = es.config();
    const auto path = TimeSeriesPath::daily(series);
    try {
        const auto s = sliding_estimate(path, cfg, es.sliding());
        out.mean = s.mean;
        out.std = s.std;
        out.n_windows = s.n_windows();
        out.n_failed = s.failures.size();
    } catch (const EmptySummaryError&) {
        if (path.size() < cfg.window_points() + 1) throw;
        std::size_t count = (path.size() - cfg.window_points()) / es.stride + 1;
        if (es.max_windows > 0) count = std::min(count, es.max_windows);
        out.n_windows = count;
        out.n_failed = count;
    }
    return out;
}

inline std::vector<QuadratureRule> parse_rules(const std::vector<std::string>& names) {
    std::vector<QuadratureRule> out;
    for (const auto& n : names) out.push_back(parse_rule(n));
    if (out.empty()) throw ConfigError("at least one quadrature rule required");
    return out;
}

// Values every business day 0..days of one initial path. Days are
// independent and run in parallel; output is in day order.
inline std::vector<DayValuation> value_days(const ConditionalPricer& pricer, const RoughExpPath& path,
                                            std::size_t spd, std::size_t days, std::size_t k_days,
                                            std::span<const QuadratureRule> rules) {
    std::vector<DayValuation> out(days + 1);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t d = 0; d <= static_cast<std::ptrdiff_t>(days); ++d) {
        try {
            out[d] = pricer.value(path.normals, path.vol[d * spd], static_cast<std::size_t>(d), k_days, rules);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

inline std::vector<double> implied_series(const std::vector<DayValuation>& days, std::size_t rule_index) {
    std::vector<double> out(days.size());
    for (std::size_t d = 0; d < days.size(); ++d) {
        const auto& rv = days[d].rules[rule_index];
        if (!rv.implied_vol) throw InversionError(rv.price, rv.price_se);
        out[d] = *rv.implied_vol;
    }
    return out;
}

inline RoughExpPath draw_initial_path(const ExperimentSpec& spec, const RoughExpParams& params,
                                      const FbmEngine& engine, std::size_t index,
                                      const ScrambledSobol* sobol) {
    if (sobol) {
        GaussianStream g(*sobol, index);
        return simulate_rough_exp_vol(params, engine, g);
    }
    GaussianStream g(spec.mc.seed, StreamId{StreamPurpose::initial_path, index, 0, 0});
    return simulate_rough_exp_vol(params, engine, g);
}

inline std::size_t checked_grid_points(const ExperimentSpec& spec, std::size_t n) {
    if (n > spec.study.max_grid_points)
        throw ConfigError("simulation grid of " + std::to_string(n) + " points exceeds max_grid_points = " +
                          std::to_string(spec.study.max_grid_points));
    return n;
}

// ---------------------------------------------------------------- market

struct MarketResult {
    SlidingSummary summary;
    std::size_t n_points = 0;
    std::size_t dropped_rows = 0;
};

inline IngestSpec ingest_spec(const InputSpec& in) {
    IngestSpec is;
    is.date_column = in.date_col;
    is.value_column = in.value_col;
    if (in.date_format == "date")
        is.date_format = DateFormat::iso_date;
    else if (in.date_format == "datetime")
        is.date_format = DateFormat::iso_datetime;
    else if (in.date_format != "auto")
        throw ConfigError("date_format must be auto, date or datetime");
    return is;
}

inline MarketResult run_market_roughness(const ExperimentSpec& spec) {
    IngestResult ing;
    try {
        ing = ingest_csv_file(spec.input.file, ingest_spec(spec.input));
    } catch (const DataError& e) {
        throw DataError(spec.input.file + ": " + e.what());
    }
    const TimeSeriesPath path = spec.input.log ? log_transform(ing.path) : ing.path;

    MarketResult r;
    r.n_points = path.size();
    r.dropped_rows = ing.dropped_rows;
    try {
        r.summary = sliding_estimate(path, spec.estimator.config(), spec.estimator.sliding());
    } catch (const Error& e) {
        throw NumericalError(spec.input.file + ": " + e.what());
    }

    detail::OutputWriter out(spec.output_dir, spec);
    if (out.enabled()) {
        out.csv("sliding.csv", detail::sliding_csv(r.summary, path));
        out.csv("histogram.csv", detail::histogram_csv(r.summary));
        std::ostringstream failed;
        failed << "window_start,reason\n";
        for (const auto& f : r.summary.failures) failed << f.window_start << ",\"" << f.reason << "\"\n";
        out.csv("failures.csv", failed.str());
        json j = summary_json(r.summary);
        // L is resolved here; the embedded spec keeps 0 for the K^2 default.
        j["spec"] = spec;
        j["metadata"] = {{"k", spec.estimator.k},
                         {"l", spec.estimator.config().l},
                         {"transform", spec.input.log ? "log" : "level"},
                         {"stride", spec.estimator.stride},
                         {"n_points", r.n_points},
                         {"dropped_rows", r.dropped_rows},
                         {"first_date", ing.dates.front()},
                         {"last_date", ing.dates.back()}};
        out.json_file("summary.json", j);
    }
    return r;
}

// ---------------------------------------------------------------- table 1

struct Table1Cell {
    double dt = 0.0;
    QuadratureRule rule = QuadratureRule::trapezoidal;
    std::vector<double> per_path;  // sliding mean per initial path
    double mean = 0.0;
    double se = 0.0;
};

struct Table1Result {
    std::vector<Table1Cell> cells;
    bool common_paths = false;  // initial paths shared across dt

    const Table1Cell& cell(double dt, QuadratureRule rule) const {
        for (const auto& c : cells)
            if (std::fabs(c.dt - dt) <= 1e-12 && c.rule == rule) return c;
        throw ConfigError("no table cell for the requested dt/rule");
    }
};

namespace detail {

inline void mean_se(const std::vector<double>& x, double& mean, double& se) {
    const auto n = static_cast<double>(x.size());
    mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    se = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

// Integer ratio a / b, if a is a whole multiple of b.
inline std::optional<std::size_t> multiple_of(double a, double b) {
    const double r = a / b;
    const double n = std::round(r);
    if (n >= 1.0 && std::fabs(r - n) <= 1e-9 * n) return static_cast<std::size_t>(n);
    return std::nullopt;
}

}  // namespace detail

// Roughness of one-day implied vols for several dt and quadrature rules.
// When a common refinement of all dt fits within max_grid_points, each
// initial path is drawn once on it and restricted to every coarser grid,
// then re-whitened there, so that the columns differ only by discretization
// and Monte-Carlo noise.
inline Table1Result run_table1(const ExperimentSpec& spec) {
    if (spec.study.dts.empty()) throw ConfigError("table1 needs at least one dt");
    if (spec.study.maturities.size() != 1) throw ConfigError("table1 uses a single maturity");
    const auto rules = parse_rules(spec.study.rules);
    const std::size_t k_days = spec.study.maturities.front();
    const auto params = spec.rough;
    params.validate();

    const double ref_dt = *std::min_element(spec.study.dts.begin(), spec.study.dts.end());
    const std::size_t days = SimGrid{ref_dt, spec.grid.horizon}.days();
    const std::size_t ref_spd = SimGrid{ref_dt, spec.grid.horizon}.steps_per_day();
    const std::size_t ref_points = (days + k_days) * ref_spd;
    bool common = ref_points <= spec.study.max_grid_points;
    for (double dt : spec.study.dts) common = common && detail::multiple_of(dt, ref_dt).has_value();

    Table1Result result;
    result.common_paths = common;
    std::optional<FbmEngine> ref_engine;
    if (common) ref_engine.emplace(FbmEngine::uniform(params.h, ref_points, ref_dt));

    // per dt, per rule, per path
    std::vector<std::vector<std::vector<double>>> est(
        spec.study.dts.size(), std::vector<std::vector<double>>(rules.size(), std::vector<double>(spec.study.n_initial)));

    for (std::size_t di = 0; di < spec.study.dts.size(); ++di) {
        const double dt = spec.study.dts[di];
        const SimGrid grid{dt, spec.grid.horizon};
        const std::size_t spd = grid.steps_per_day();
        const std::size_t n_points = checked_grid_points(spec, (days + k_days) * spd);
        std::optional<FbmEngine> own;
        const FbmEngine* engine = nullptr;
        if (common && n_points == ref_points) {
            engine = &*ref_engine;
        } else {
            own.emplace(FbmEngine::uniform(params.h, n_points, dt));
            engine = &*own;
        }
        for (std::size_t n = 0; n < spec.study.n_initial; ++n) {
            RoughExpPath path;
            if (common) {
                GaussianStream g(spec.mc.seed, StreamId{StreamPurpose::initial_path, n, 0, 0});
                auto ref = ref_engine->draw(g);
                if (engine == &*ref_engine) {
                    path = rough_exp_from_draw(params, *engine, std::move(ref));
                } else {
                    const std::size_t stride = *detail::multiple_of(dt, ref_dt);
                    FbmDraw coarse;
                    std::vector<double> w(n_points);
                    for (std::size_t p = 0; p < n_points; ++p) w[p] = ref.values[(p + 1) * stride];
                    coarse.normals = engine->whiten(w);
                    coarse.values.push_back(0.0);
                    coarse.values.insert(coarse.values.end(), w.begin(), w.end());
                    path = rough_exp_from_draw(params, *engine, std::move(coarse));
                }
            } else {
                GaussianStream g(spec.mc.seed, StreamId{StreamPurpose::initial_path, n, 0, 0});
                path = simulate_rough_exp_vol(params, *engine, g);
            }
            const ConditionalPricer pricer(*engine, params, spec.mc, spd, n);
            const auto vals = value_days(pricer, path, spd, days, k_days, rules);
            for (std::size_t r = 0; r < rules.size(); ++r) {
                const auto e = estimate_proxy(implied_series(vals, r), spec.estimator);
                est[di][r][n] = e.mean;
            }
        }
    }

    std::ostringstream table, per_path;
    table << "dt,rule,h_mean,h_se,n_paths\n";
    per_path << "dt,rule,initial_path,h\n";
    for (std::size_t di = 0; di < spec.study.dts.size(); ++di) {
        for (std::size_t r = 0; r < rules.size(); ++r) {
            Table1Cell c;
            c.dt = spec.study.dts[di];
            c.rule = rules[r];
            c.per_path = est[di][r];
            detail::mean_se(c.per_path, c.mean, c.se);
            table << detail::fmt(c.dt) << ',' << to_string(c.rule) << ',' << detail::fmt(c.mean) << ','
                  << detail::fmt(c.se) << ',' << c.per_path.size() << '\n';
            for (std::size_t n = 0; n < c.per_path.size(); ++n)
                per_path << detail::fmt(c.dt) << ',' << to_string(c.rule) << ',' << n << ','
                         << detail::fmt(c.per_path[n]) << '\n';
            result.cells.push_back(std::move(c));
        }
    }

    detail::OutputWriter out(spec.output_dir, spec);
    if (out.enabled()) {
        out.csv("table1.csv", table.str());
        out.csv("table1_paths.csv", per_path.str());
        json cells = json::array();
        for (const auto& c : result.cells)
            cells.push_back({{"dt", c.dt}, {"rule", to_string(c.rule)}, {"h_mean", c.mean}, {"h_se", c.se}});
        out.json_file("summary.json",
                      json{{"spec", spec},
                           {"cells", cells},
                           {"metadata",
                            {{"common_initial_paths", common},
                             {"maturity_days", k_days},
                             {"days", days},
                             {"sliding_windows_per_path", spec.estimator.max_windows},
                             {"transform", "level"}}}});
    }
    return result;
}

// ---------------------------------------------------------------- table 2

enum class Proxy {
    instantaneous,             // v(t_i)
    integrated_path,           // sqrt(wbar / tau) on Monte-Carlo path 1
    integrated_average,        // mean estimate over the first avg_subpaths paths
    integrated_mean_variance,  // sqrt(E_M[wbar] / tau)
    implied,
};

inline std::string_view to_string(Proxy p) {
    switch (p) {
        case Proxy::instantaneous: return "instantaneous";
        case Proxy::integrated_path: return "integrated_path";
        case Proxy::integrated_average: return "integrated_average";
        case Proxy::integrated_mean_variance: return "integrated_mean_variance";
        case Proxy::implied: return "implied";
    }
    return "?";
}

struct Table2Row {
    double model_h = 0.0;
    std::size_t maturity_days = 0;  // 0 for the instantaneous volatility
    Proxy proxy = Proxy::implied;
    ProxyEstimate estimate;
};

struct CrossCheck {
    double model_h = 0.0;
    double h_pvariation = 0.0;
    double h_regression = 0.0;
    double h_regression_half_lag = 0.0;
};

struct Table2Result {
    std::vector<Table2Row> rows;
    std::vector<CrossCheck> cross_checks;  // one-day implied series, first initial path
    std::map<double, std::vector<double>> implied_1d;

    const ProxyEstimate& at(double h, std::size_t maturity, Proxy proxy) const {
        for (const auto& r : rows)
            if (std::fabs(r.model_h - h) < 1e-12 && r.maturity_days == maturity && r.proxy == proxy)
                return r.estimate;
        throw ConfigError("no table2 row for the requested cell");
    }
};

// Roughness of volatility proxies by maturity for one initial path per
// model h (more if n_initial > 1; rows then hold the first path and the
// cross-path means are written separately).
inline Table2Result run_table2(const ExperimentSpec& spec) {
    if (spec.study.h_values.empty()) throw ConfigError("table2 needs model h values");
    if (spec.study.maturities.empty()) throw ConfigError("table2 needs maturities");
    const auto rules = parse_rules(spec.study.rules);
    const SimGrid grid = spec.grid;
    grid.validate();
    const std::size_t spd = grid.steps_per_day();
    const std::size_t days = grid.days();
    const std::size_t k_max = *std::max_element(spec.study.maturities.begin(), spec.study.maturities.end());
    const std::size_t n_points = checked_grid_points(spec, (days + k_max) * spd);
    const std::size_t n_avg = std::max<std::size_t>(1, spec.study.avg_subpaths);
    const auto rcfg = spec.regression.config();

    Table2Result result;
    std::ostringstream table, series;
    table << "model_h,maturity_days,proxy,initial_path,h_mean,h_std,n_windows,n_failed\n";
    series << "model_h,initial_path,day,t,tau_days,implied_vol,price_se\n";

    for (double h : spec.study.h_values) {
        RoughExpParams params = spec.rough;
        params.h = h;
        params.validate();
        const auto engine = FbmEngine::uniform(h, n_points, grid.dt);
        for (std::size_t n = 0; n < spec.study.n_initial; ++n) {
            const auto path = draw_initial_path(spec, params, engine, n, nullptr);
            ConditionalPricer pricer(engine, params, spec.mc, spd, n);
            pricer.keep_paths(n_avg);

            auto emit = [&](std::size_t k, Proxy proxy, const ProxyEstimate& e) {
                table << detail::fmt(h) << ',' << k << ',' << to_string(proxy) << ',' << n << ','
                      << detail::fmt(e.mean) << ',' << detail::fmt(e.std) << ',' << e.n_windows << ','
                      << e.n_failed << '\n';
                if (n == 0) result.rows.push_back(Table2Row{h, k, proxy, e});
            };

            std::vector<double> inst(days + 1);
            for (std::size_t d = 0; d <= days; ++d) inst[d] = path.vol[d * spd];
            emit(0, Proxy::instantaneous, estimate_proxy(inst, spec.estimator));

            for (std::size_t k : spec.study.maturities) {
                const auto vals = value_days(pricer, path, spd, days, k, rules);
                const auto iv = implied_series(vals, 0);
                std::vector<double> mean_var(days + 1);
                std::vector<std::vector<double>> sub(n_avg, std::vector<double>(days + 1));
                for (std::size_t d = 0; d <= days; ++d) {
                    mean_var[d] = std::sqrt(vals[d].rules[0].mean_total_variance / vals[d].tau);
                    for (std::size_t m = 0; m < n_avg; ++m)
                        sub[m][d] = std::sqrt(vals[d].path_variance.at(m) / vals[d].tau);
                }
                emit(k, Proxy::integrated_path, estimate_proxy(sub[0], spec.estimator));
                // std column: mean of the per-path sliding stds
                ProxyEstimate avg;
                avg.mean = avg.std = 0.0;
                std::size_t ok = 0;
                for (const auto& s : sub) {
                    const auto e = estimate_proxy(s, spec.estimator);
                    avg.n_windows += e.n_windows;
                    avg.n_failed += e.n_failed;
                    if (!std::isnan(e.mean)) {
                        avg.mean += e.mean;
                        avg.std += e.std;
                        ++ok;
                    }
                }
                if (ok > 0) {
                    avg.mean /= static_cast<double>(ok);
                    avg.std /= static_cast<double>(ok);
                } else {
                    avg.mean = avg.std = std::numeric_limits<double>::quiet_NaN();
                }
                emit(k, Proxy::integrated_average, avg);
                emit(k, Proxy::integrated_mean_variance, estimate_proxy(mean_var, spec.estimator));
                const auto implied = estimate_proxy(iv, spec.estimator);
                emit(k, Proxy::implied, implied);

                if (n == 0) {
                    for (std::size_t d = 0; d <= days; ++d)
                        series << detail::fmt(h) << ',' << n << ',' << d << ','
                               << detail::fmt(static_cast<double>(d) * kBusinessDay) << ',' << k << ','
                               << detail::fmt(iv[d]) << ',' << detail::fmt(vals[d].rules[0].price_se) << '\n';
                }
                if (n == 0 && k == 1) {
                    result.implied_1d[h] = iv;
                    CrossCheck cc;
                    cc.model_h = h;
                    cc.h_pvariation = implied.mean;
                    try {
                        const auto rg = estimate_h_regression(log_transform(TimeSeriesPath::daily(iv)), rcfg);
                        cc.h_regression = rg.h;
                        cc.h_regression_half_lag = rg.h_half_lag;
                    } catch (const Error&) {
                        cc.h_regression = cc.h_regression_half_lag = std::numeric_limits<double>::quiet_NaN();
                    }
                    result.cross_checks.push_back(cc);
                }
            }
        }
    }

    detail::OutputWriter out(spec.output_dir, spec);
    if (out.enabled()) {
        out.csv("table2.csv", table.str());
        out.csv("implied_series.csv", series.str());
        json rows = json::array();
        for (const auto& r : result.rows)
            rows.push_back({{"model_h", r.model_h},
                            {"maturity_days", r.maturity_days},
                            {"proxy", to_string(r.proxy)},
                            {"h_mean", detail::finite_or_null(r.estimate.mean)},
                            {"h_std", detail::finite_or_null(r.estimate.std)}});
        json cross = json::array();
        for (const auto& c : result.cross_checks)
            cross.push_back({{"model_h", c.model_h},
                             {"h_pvariation", detail::finite_or_null(c.h_pvariation)},
                             {"h_regression", detail::finite_or_null(c.h_regression)},
                             {"h_regression_half_lag", detail::finite_or_null(c.h_regression_half_lag)}});
        out.json_file("summary.json",
                      json{{"spec", spec},
                           {"rows", rows},
                           {"cross_check_1d_implied", cross},
                           {"metadata",
                            {{"sliding_windows", spec.estimator.max_windows},
                             {"pvariation_transform", "level"},
                             {"regression_transform", "log"},
                             {"integrated_path", "Monte-Carlo path 1 from each day"},
                             {"integrated_average", "mean estimate over the first avg_subpaths Monte-Carlo paths"},
                             {"integrated_mean_variance", "sqrt of the M-path mean total variance"}}}});
    }
    return result;
}

// ---------------------------------------------------------------- bias curve

struct BiasPoint {
    double model_h = 0.0;
    std::size_t maturity_days = 0;
    std::vector<double> per_path;  // NaN where every window failed
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();
    double ci_high = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_failed_paths = 0;
    std::optional<double> theoretical;
    bool all_failed() const { return n_failed_paths == per_path.size(); }
};

struct BiasResult {
    std::vector<BiasPoint> points;
    std::vector<std::pair<std::size_t, BiasLine>> slopes;  // per maturity
    bool flattens = false;  // slopes strictly decrease with maturity

    const BiasPoint& at(double h, std::size_t maturity) const {
        for (const auto& p : points)
            if (std::fabs(p.model_h - h) < 1e-12 && p.maturity_days == maturity) return p;
        throw ConfigError("no bias point for the requested cell");
    }
};

inline BiasResult run_bias_curve(const ExperimentSpec& spec) {
    if (spec.study.h_values.empty()) throw ConfigError("bias curve needs model h values");
    const auto rules = parse_rules(spec.study.rules);
    const SimGrid grid = spec.grid;
    grid.validate();
    const std::size_t spd = grid.steps_per_day();
    const std::size_t days = grid.days();
    const std::size_t k_max = *std::max_element(spec.study.maturities.begin(), spec.study.maturities.end());
    const std::size_t n_points = checked_grid_points(spec, (days + k_max) * spd);

    std::optional<TabulatedFHat> f_hat;
    if (!spec.study.f_hat_file.empty()) {
        std::ifstream in(spec.study.f_hat_file);
        if (!in) throw DataError("cannot open " + spec.study.f_hat_file);
        f_hat = TabulatedFHat::read_csv(in);
    }

    BiasResult result;
    for (double h : spec.study.h_values) {
        RoughExpParams params = spec.rough;
        params.h = h;
        params.validate();
        const auto engine = FbmEngine::uniform(h, n_points, grid.dt);
        std::optional<ScrambledSobol> sobol;
        if (spec.mc.qmc)
            sobol.emplace(n_points, GaussianStream::sequence_key(
                                        spec.mc.seed, StreamId{StreamPurpose::initial_path, 0, 0, 0}));
        std::vector<BiasPoint> pts(spec.study.maturities.size());
        for (std::size_t m = 0; m < pts.size(); ++m) {
            pts[m].model_h = h;
            pts[m].maturity_days = spec.study.maturities[m];
        }
        for (std::size_t n = 0; n < spec.study.n_initial; ++n) {
            const auto path = draw_initial_path(spec, params, engine, n, sobol ? &*sobol : nullptr);
            const ConditionalPricer pricer(engine, params, spec.mc, spd, n);
            for (std::size_t m = 0; m < pts.size(); ++m) {
                const auto vals = value_days(pricer, path, spd, days, pts[m].maturity_days, rules);
                const auto e = estimate_proxy(implied_series(vals, 0), spec.estimator);
                pts[m].per_path.push_back(e.mean);
            }
        }
        for (auto& p : pts) {
            std::vector<double> ok;
            for (double v : p.per_path)
                if (!std::isnan(v)) ok.push_back(v);
            p.n_failed_paths = p.per_path.size() - ok.size();
            if (!ok.empty()) {
                double se = 0.0;
                detail::mean_se(ok, p.mean, se);
                p.ci_low = p.mean - 1.96 * se;
                p.ci_high = p.mean + 1.96 * se;
                p.min = *std::min_element(ok.begin(), ok.end());
                p.max = *std::max_element(ok.begin(), ok.end());
            }
            if (f_hat)
                p.theoretical = theoretical_h_hat(
                    h, BiasConfig{static_cast<double>(p.maturity_days), spec.study.bias_k_days, *f_hat});
            result.points.push_back(std::move(p));
        }
    }

    if (spec.study.h_values.size() >= 2) {
        for (std::size_t k : spec.study.maturities) {
            std::vector<double> xs, ys;
            for (const auto& p : result.points)
                if (p.maturity_days == k && !std::isnan(p.mean)) {
                    xs.push_back(p.model_h);
                    ys.push_back(p.mean);
                }
            if (xs.size() >= 2) result.slopes.emplace_back(k, fit_bias_line(xs, ys));
        }
        auto sorted = result.slopes;
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        result.flattens = sorted.size() >= 2;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            result.flattens = result.flattens && sorted[i].second.slope < sorted[i - 1].second.slope;
    }

    detail::OutputWriter out(spec.output_dir, spec);
    if (out.enabled()) {
        std::ostringstream curve, slopes, paths;
        curve << "model_h,t_days,theoretical_h_hat,mc_h_hat_mean,mc_h_hat_ci_low,mc_h_hat_ci_high\n";
        paths << "model_h,t_days,initial_path,h\n";
        for (const auto& p : result.points) {
            curve << detail::fmt(p.model_h) << ',' << p.maturity_days << ','
                  << (p.theoretical ? detail::fmt(*p.theoretical) : std::string("nan")) << ','
                  << detail::fmt(p.mean) << ',' << detail::fmt(p.ci_low) << ',' << detail::fmt(p.ci_high) << '\n';
            for (std::size_t n = 0; n < p.per_path.size(); ++n)
                paths << detail::fmt(p.model_h) << ',' << p.maturity_days << ',' << n << ','
                      << detail::fmt(p.per_path[n]) << '\n';
        }
        slopes << "t_days,slope,intercept,r_squared\n";
        for (const auto& [k, line] : result.slopes)
            slopes << k << ',' << detail::fmt(line.slope) << ',' << detail::fmt(line.intercept) << ','
                   << detail::fmt(line.r_squared) << '\n';
        out.csv("bias_curve.csv", curve.str());
        out.csv("bias_paths.csv", paths.str());
        out.csv("bias_slopes.csv", slopes.str());
        json pts = json::array();
        for (const auto& p : result.points)
            pts.push_back({{"model_h", p.model_h},
                           {"t_days", p.maturity_days},
                           {"mean", detail::finite_or_null(p.mean)},
                           {"ci_low", detail::finite_or_null(p.ci_low)},
                           {"ci_high", detail::finite_or_null(p.ci_high)},
                           {"min", detail::finite_or_null(p.min)},
                           {"max", detail::finite_or_null(p.max)},
                           {"n_failed_paths", p.n_failed_paths},
                           {"all_failed", p.all_failed()}});
        json sl = json::array();
        for (const auto& [k, line] : result.slopes)
            sl.push_back({{"t_days", k}, {"slope", line.slope}, {"intercept", line.intercept}});
        out.json_file("summary.json", json{{"spec", spec},
                                           {"points", pts},
                                           {"slopes", sl},
                                           {"flattens_with_maturity", result.flattens},
                                           {"metadata", {{"ci", "normal approximation, 95%"}}}});
    }
    return result;
}

// ---------------------------------------------------------------- simulate

// Writes vol.csv (and variance.csv, spot.csv for Heston) on the
// business-day subgrid when dt divides 0.004, the full grid otherwise.
inline TimeSeriesPath run_simulate(const ExperimentSpec& spec) {
    const SimGrid grid = spec.grid;
    grid.validate();
    std::size_t stride = 1;
    try {
        stride = grid.steps_per_day();
    } catch (const ConfigError&) {
        stride = 1;
    }
    auto subsample = [&](const std::vector<double>& t, const std::vector<double>& x) {
        TimeSeriesPath p;
        for (std::size_t i = 0; i < x.size(); i += stride) {
            p.times.push_back(t[i]);
            p.values.push_back(x[i]);
        }
        return p;
    };
    detail::OutputWriter out(spec.output_dir, spec);
    auto write = [&](const std::string& name, const TimeSeriesPath& p) {
        std::ostringstream os;
        write_path_csv(os, p);
        out.csv(name, os.str());
    };
    TimeSeriesPath vol;
    json meta;
    if (spec.model == "heston") {
        GaussianStream g(spec.mc.seed, StreamId{StreamPurpose::heston, 0, 0, 0});
        const auto path = simulate_heston(spec.heston, grid, g);
        vol = subsample(path.times, path.vol());
        if (out.enabled()) {
            write("variance.csv", subsample(path.times, path.variance));
            write("spot.csv", subsample(path.times, path.spot));
        }
        meta = {{"feller", spec.heston.feller()}, {"scheme", "full-truncation Euler"}};
    } else if (spec.model == "roughexp") {
        GaussianStream g(spec.mc.seed, StreamId{StreamPurpose::initial_path, 0, 0, 0});
        checked_grid_points(spec, grid.steps());
        const auto path = simulate_rough_exp_vol(spec.rough, grid, g);
        vol = subsample(path.times, path.vol);
    } else {
        throw ConfigError("model must be 'heston' or 'roughexp'");
    }
    if (out.enabled()) {
        write("vol.csv", vol);
        out.json_file("summary.json", json{{"spec", spec}, {"n_points", vol.size()}, {"metadata", meta}});
    }
    return vol;
}

}  // namespace volrough
