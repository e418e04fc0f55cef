#pragma once

// Experiment runner behind the CLI. Every command reads an ExperimentConfig,
// writes CSV (and optionally path files) into the output directory, and
// returns a manifest whose criteria decide the exit status.

#include "levyou/girsanov.hpp"
#include "levyou/harness/config.hpp"
#include "levyou/jump_calculus.hpp"
#include "levyou/levy.hpp"
#include "levyou/ou_solver.hpp"
#include "levyou/path_io.hpp"
#include "levyou/paths.hpp"
#include "levyou/rigidity.hpp"

#include "json.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace levyou::harness {

inline constexpr std::string_view kVersion = "0.1.0";

struct CriterionResult {
    std::string id;
    bool passed = false;
    std::string detail;
};

struct ReplicaKeys {
    std::uint64_t replica = 0;
    std::uint64_t wiener = 0;
    std::uint64_t jumps = 0;
    std::uint64_t solver = 0;
};

struct RunManifest {
    std::string config_hash;
    std::string version{kVersion};
    std::string command;
    std::uint64_t seed = 0;
    std::string canonical_config;
    std::vector<ReplicaKeys> replica_seeds;
    std::string started_utc;
    std::string finished_utc;
    std::vector<CriterionResult> criteria;
    std::vector<std::string> files;  // relative to the output directory

    [[nodiscard]] bool passed() const {
        return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
    }
};

namespace detail {

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

inline std::string cell(double x) { return format_double(x); }
inline std::string cell(std::size_t x) { return std::to_string(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(std::string_view x) { return std::string(x); }
inline std::string cell(const char* x) { return x; }
inline std::string cell(const std::string& x) { return x; }

class CsvFile {
public:
    CsvFile(const std::filesystem::path& file, const std::vector<std::string>& header) : out_(file) {
        if (!out_) throw ConfigError("out", "cannot write " + file.string());
        write(header);
    }

    template <class... Ts>
    void row(const Ts&... xs) {
        write({cell(xs)...});
    }

    void write(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline std::vector<std::string> indexed(const std::string& prefix, int d) {
    std::vector<std::string> out;
    for (int i = 0; i < d; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline std::vector<std::string> cells(const Vector& v) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(format_double(v[i]));
    return out;
}

inline std::string matrix_cell(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i || j) out += ' ';
            out += format_double(m(i, j));
        }
    }
    return out;
}

struct Context {
    const ExperimentConfig& config;
    std::filesystem::path out;
    RunManifest& manifest;

    [[nodiscard]] std::filesystem::path file(const std::string& name) const {
        manifest.files.push_back(name);
        const auto full = out / name;
        std::filesystem::create_directories(full.parent_path());
        return full;
    }

    void criterion(std::string id, bool passed, std::string detail) const {
        manifest.criteria.push_back({std::move(id), passed, std::move(detail)});
    }

    void record_replicas(std::size_t n, std::uint64_t offset = 0) const {
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint64_t rep = offset + r;
            manifest.replica_seeds.push_back({rep, derive_stream_key(config.seed, rep, StreamRole::wiener),
                                              derive_stream_key(config.seed, rep, StreamRole::jumps),
                                              derive_stream_key(config.seed, rep, StreamRole::solver)});
        }
    }
};

inline CadlagPath load_input(const std::string& file, const char* field) {
    if (file.empty()) throw ConfigError(field, "an input path file is required");
    return load_path(file);
}

inline const std::vector<double>& signature_radii() {
    static const std::vector<double> radii{0.1, 0.5, 1.0, 2.0};
    return radii;
}

// ---------------------------------------------------------------------------

inline void run_simulate(const Context& ctx) {
    const auto& c = ctx.config;
    const auto triplet = c.triplet();
    const OUSpec spec{c.a, triplet, c.horizon, c.step};
    spec.validate();
    ctx.record_replicas(c.replicas);
    const int d = c.dimension;
    CsvFile summary(ctx.file("simulate.csv"),
                    concat(concat({"replica", "samples", "jumps"}, indexed("x_T_", d)), indexed("l_T_", d)));
    const bool jumps = triplet.jumps.has_jumps();
    const bool pure = triplet.pure_jump() && jumps;
    const auto mu = triplet.jumps.compensator();
    const double floor = measure_floor(triplet.jumps);
    std::size_t signature_mismatches = 0;
    std::size_t xi_failures = 0;
    double xi_worst = 0.0;
    bool finite = true;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        const auto sample = solve_exact(spec, c.seed, r);
        const auto& x = sample.path;
        const auto& l = sample.driving.levy;
        if (c.write_paths) {
            save_path(ctx.file("paths/levy_" + std::to_string(r) + ".path").string(), l);
            save_path(ctx.file("paths/ou_" + std::to_string(r) + ".path").string(), x);
        }
        finite = finite && x.values().allFinite() && l.values().allFinite();
        if (jumps) {
            for (std::size_t k = 0; k < x.sample_count(); ++k) {
                if (jump_signature(x, signature_radii(), x.time(k)) !=
                    jump_signature(sample.driving.jumps, signature_radii(), x.time(k))) {
                    ++signature_mismatches;
                }
            }
        }
        if (pure) {
            const int n = select_shell_index(x, floor, triplet.jumps.cutoff);
            const double sup = xi_residual(c.a, x, mu, n, triplet.jumps.cutoff).sup_norm;
            xi_worst = std::max(xi_worst, sup);
            if (!(sup <= 1e-8)) ++xi_failures;
        }
        const auto last = x.sample_count() - 1;
        auto row = concat(concat({cell(r), cell(x.sample_count()), cell(x.jumps().size())}, cells(x.value(last))),
                          cells(l.value(l.sample_count() - 1)));
        summary.write(row);
    }
    ctx.criterion("simulate.finite", finite, finite ? "all samples finite" : "non-finite samples");
    if (jumps) {
        ctx.criterion("1.jump_invariance", signature_mismatches == 0,
                      std::to_string(signature_mismatches) + " grid times with differing jump signatures");
    }
    if (pure) {
        ctx.criterion("2.xi_full_measure", xi_failures == 0,
                      std::to_string(c.replicas - xi_failures) + "/" + std::to_string(c.replicas) +
                          " replicas with residual <= 1e-8, worst " + format_double(xi_worst));
    }
}

inline void run_decompose(const Context& ctx) {
    const auto& c = ctx.config;
    const int d = c.dimension;
    if (!c.input.empty()) {
        const auto f = load_input(c.input, "input");
        const auto parts = decompose(f);
        const double error = uniform_distance(recompose(parts), f);
        CsvFile trend(ctx.file("trend.csv"), {"component", "trend"});
        for (Eigen::Index i = 0; i < parts.trend.size(); ++i) trend.row(static_cast<std::size_t>(i), parts.trend[i]);
        save_path(ctx.file("continuous.path").string(), parts.continuous);
        save_path(ctx.file("jumps.path").string(), parts.jumps);
        ctx.criterion("7.levy_ito_round_trip", error <= 1e-12, "sup-norm recomposition error " + format_double(error));
        return;
    }
    const auto triplet = c.triplet();
    triplet.validate();
    ctx.record_replicas(c.replicas);
    const auto grid = uniform_grid(c.horizon, c.step);
    CsvFile table(ctx.file("decompose.csv"), concat({"replica", "jumps", "roundtrip_error"}, indexed("trend_", d)));
    double worst = 0.0;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        const auto l = sample_levy(triplet, grid, c.seed, r).levy;
        const auto parts = decompose(l);
        const double error = uniform_distance(recompose(parts), l);
        worst = std::max(worst, error);
        if (c.write_paths) {
            const std::string stem = "paths/replica_" + std::to_string(r);
            save_path(ctx.file(stem + "_levy.path").string(), l);
            save_path(ctx.file(stem + "_continuous.path").string(), parts.continuous);
            save_path(ctx.file(stem + "_jumps.path").string(), parts.jumps);
        }
        table.write(concat({cell(r), cell(l.jumps().size()), cell(error)}, cells(parts.trend)));
    }
    ctx.criterion("7.levy_ito_round_trip", worst <= 1e-12, "worst sup-norm recomposition error " + format_double(worst));
}

inline void run_girsanov(const Context& ctx) {
    const auto& c = ctx.config;
    GirsanovSettings s{c.a, c.a_tilde, c.triplet(), c.horizon, c.step, c.replicas, c.seed, c.se_multiplier, c.refine};
    const auto check = check_equivalence_condition(s.triplet.covariance);
    ctx.criterion("6.hypothesis_sensitivity", check.holds == c.expect_equivalence,
                  std::string("equivalence condition ") + (check.holds ? "holds" : "fails") + ", lambda_min(Q) = " +
                      format_double(check.min_eigenvalue));
    CsvFile summary(ctx.file("girsanov_summary.csv"), {"quantity", "value", "standard_error"});
    if (!check.holds) {
        const auto report = equivalence_report(s);
        summary.row("hypothesis_violated", report.hypothesis_violated ? "true" : "false", "");
        summary.row("min_eigenvalue", report.min_eigenvalue, "");
        return;
    }
    if (c.replicas < 2) throw ConfigError("replicas", "girsanov-check needs at least two replicas");
    ctx.record_replicas(c.replicas);
    ctx.record_replicas(c.replicas, std::uint64_t{1} << 40);
    const auto report = equivalence_report(s);
    CsvFile table(ctx.file("girsanov.csv"), {"replica", "llr", "weight", "truncation_level"});
    for (std::size_t r = 0; r < report.log_likelihood_ratios.size(); ++r) {
        const double llr = report.log_likelihood_ratios[r];
        table.row(r, llr, std::exp(llr), report.truncation_levels[r]);
    }
    summary.row("hypothesis_violated", "false", "");
    summary.row("min_eigenvalue", report.min_eigenvalue, "");
    summary.row("step", report.step, "");
    summary.row("refined_step", report.refined_step, "");
    summary.row("weight_mean", report.weight.mean, report.weight.standard_error);
    summary.row("refined_weight_mean", report.refined_weight.mean, report.refined_weight.standard_error);
    summary.row("weight_bias", report.bias.mean, report.bias.standard_error);
    summary.row("refined_weight_bias", report.refined_bias.mean, report.refined_bias.standard_error);
    for (std::size_t i = 0; i < report.direct.size(); ++i) {
        summary.row("direct_x_T_" + std::to_string(i), report.direct[i].mean, report.direct[i].standard_error);
        summary.row("reweighted_x_T_" + std::to_string(i), report.reweighted[i].mean, report.reweighted[i].standard_error);
    }
    const double gap = std::abs(report.bias.mean);
    const double refined_gap = std::abs(report.refined_bias.mean);
    ctx.criterion("4.girsanov_mean_one", report.mean_one_pass && report.gap_shrinks,
                  "mean " + format_double(report.weight.mean) + " +- " + format_double(report.weight.standard_error) +
                      ", bias gap " + format_double(gap) + " -> " + format_double(refined_gap) + " at h/2");
    ctx.criterion("5.reweighting", report.reweighting_pass,
                  "terminal coordinates agree within " + format_double(c.se_multiplier) + " SE");
}

inline void run_recover_drift(const Context& ctx) {
    const auto& c = ctx.config;
    const auto triplet = c.triplet();
    triplet.validate();
    const auto mu = triplet.jumps.compensator();
    const double floor = measure_floor(triplet.jumps);
    CsvFile table(ctx.file("recover.csv"), {"replica", "jumps", "status", "sigma_min", "a_hat", "error", "fit_residual"});

    auto recover_one = [&](const CadlagPath& f, std::size_t r) -> std::optional<double> {
        const int n = select_shell_index(f, floor, triplet.jumps.cutoff);
        const auto z = extract_driving_jumps(f, mu, n, triplet.jumps.cutoff);
        const double tol = c.sigma_tol > 0.0 ? c.sigma_tol : default_sigma_tolerance(f);
        try {
            const auto est = recover_drift(f, z, tol);
            const double error = (est.estimate - c.a).norm();
            table.row(r, f.jumps().size(), "ok", est.sigma_min, matrix_cell(est.estimate), error, est.residual);
            return error;
        } catch (const SingularGram& e) {
            table.row(r, f.jumps().size(), "singular_gram", e.sigma_min(), "", "", "");
            return std::nullopt;
        }
    };

    if (!c.input.empty()) {
        const auto f = load_input(c.input, "input");
        if (f.dimension() != c.dimension) throw ConfigError("dimension", "does not match the input path");
        const auto error = recover_one(f, 0);
        ctx.criterion("3.drift_recovery", error && *error <= c.drift_tol,
                      error ? "|A_hat - A| = " + format_double(*error) : "Gram matrix singular");
        return;
    }
    if (!triplet.pure_jump()) {
        table.row(0, 0, "hypothesis_violated", "", "", "", "");
        ctx.criterion("3.drift_recovery", false, "recover-drift needs a pure-jump triplet (b = 0, Q = 0)");
        return;
    }
    const OUSpec spec{c.a, triplet, c.horizon, c.step};
    spec.validate();
    ctx.record_replicas(c.replicas);
    std::size_t with_jumps = 0;
    std::size_t failures = 0;
    double worst = 0.0;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        const auto x = solve_exact(spec, c.seed, r).path;
        const auto error = recover_one(x, r);
        if (x.jumps().empty()) continue;
        ++with_jumps;
        if (!error || !(*error <= c.drift_tol)) ++failures;
        if (error) worst = std::max(worst, *error);
    }
    ctx.criterion("3.drift_recovery", failures == 0,
                  std::to_string(with_jumps - failures) + "/" + std::to_string(with_jumps) +
                      " replicas with jumps recovered, worst error " + format_double(worst));
}

inline void run_distinctness(const Context& ctx) {
    const auto& c = ctx.config;
    VerdictSettings s{c.a, c.a_tilde, c.triplet(), c.horizon, c.step, c.replicas, c.seed, c.tau};
    ctx.record_replicas(c.replicas);
    const auto record = distinctness_verdict(s);
    CsvFile verdict(ctx.file("verdict.csv"),
                    {"a", "a_tilde", "rate", "replicas", "tau", "replicas_with_jumps", "fraction", "verdict"});
    verdict.row(matrix_cell(c.a), matrix_cell(c.a_tilde), c.rate, c.replicas, c.tau, record.replicas_with_jumps,
                record.fraction, to_string(record.verdict));
    CsvFile residuals(ctx.file("residuals.csv"), {"replica", "jumps", "residual_sup"});
    for (std::size_t r = 0; r < record.residual_sup.size(); ++r) {
        residuals.row(r, record.jump_counts[r], record.residual_sup[r]);
    }
    ctx.criterion("3.distinctness_verdict", to_string(record.verdict) == c.expect_verdict,
                  "verdict " + std::string(to_string(record.verdict)) + ", fraction " + format_double(record.fraction) +
                      ", expected " + c.expect_verdict);
}

/// A step path with up to four jumps at uniform times and N(0, 1) levels.
inline CadlagPath random_step_path(int d, double horizon, CounterRng& rng) {
    const auto jumps = static_cast<std::size_t>(rng() % 5);
    std::vector<double> times{0.0, horizon};
    for (std::size_t i = 0; i < jumps; ++i) times.push_back(horizon * rng.uniform());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    Matrix values(d, static_cast<Eigen::Index>(times.size()));
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
        for (int i = 0; i < d; ++i) values(i, k) = rng.normal();
    }
    values.col(values.cols() - 1) = values.col(values.cols() - 2);  // no jump at the horizon
    std::vector<JumpEvent> events;
    for (Eigen::Index k = 1; k + 1 < values.cols(); ++k) {
        events.push_back({times[static_cast<std::size_t>(k)], values.col(k - 1), values.col(k)});
    }
    return CadlagPath(horizon, std::move(times), std::move(values), std::move(events));
}

inline void run_skorohod(const Context& ctx) {
    const auto& c = ctx.config;
    if (!c.input.empty() || !c.input_b.empty()) {
        const auto f = load_input(c.input, "input");
        const auto g = load_input(c.input_b, "input_b");
        const double fg = skorohod_distance(f, g);
        const double gf = skorohod_distance(g, f);
        const double uniform = uniform_distance(f, g);
        CsvFile table(ctx.file("skorohod.csv"), {"skorohod", "skorohod_reversed", "uniform"});
        table.row(fg, gf, uniform);
        ctx.criterion("9.skorohod_metric", fg == gf && fg <= uniform + 1e-12,
                      "d_S = " + format_double(fg) + ", uniform = " + format_double(uniform));
        return;
    }
    CounterRng rng(c.seed, 0, StreamRole::aux);
    CsvFile table(ctx.file("skorohod.csv"), {"pair", "d_fg", "d_gf", "uniform_fg", "d_fh", "d_gh", "d_ff"});
    std::size_t violations = 0;
    for (std::size_t r = 0; r < c.replicas; ++r) {
        const auto f = random_step_path(c.dimension, c.horizon, rng);
        const auto g = random_step_path(c.dimension, c.horizon, rng);
        const auto h = random_step_path(c.dimension, c.horizon, rng);
        const double fg = skorohod_distance(f, g);
        const double gf = skorohod_distance(g, f);
        const double fh = skorohod_distance(f, h);
        const double gh = skorohod_distance(g, h);
        const double ff = skorohod_distance(f, f);
        const double uniform = uniform_distance(f, g);
        table.row(r, fg, gf, uniform, fh, gh, ff);
        const bool ok = fg == gf && ff == 0.0 && fh <= fg + gh + 1e-12 && fg <= uniform + 1e-12 && fg >= 0.0;
        if (!ok) ++violations;
    }
    const Vector one = Vector::Ones(c.dimension);
    const double example = skorohod_distance(step_path(one, 0.5, 1.0), step_path(one, 0.6, 1.0));
    table.row("step_example", example, "", "", "", "", "");
    ctx.criterion("9.skorohod_metric", violations == 0 && std::abs(example - 0.1) <= 1e-3,
                  std::to_string(violations) + " axiom violations over " + std::to_string(c.replicas) +
                      " triples, step example " + format_double(example));
}

inline void run_probe(const Context& ctx) {
    const auto& c = ctx.config;
    const auto spec = c.jump_spec();
    ctx.record_replicas(c.replicas);
    const auto rows = small_jump_convergence_probe(spec, c.probe_time, c.probe_radii, c.replicas, c.seed);
    CsvFile table(ctx.file("probe.csv"), {"outer_radius", "inner_radius", "empirical_variance", "analytic_variance",
                                          "relative_error", "max_abs_difference"});
    double worst = 0.0;
    for (const auto& row : rows) {
        table.row(row.outer_radius, row.inner_radius, row.empirical_variance, row.analytic_variance, row.relative_error,
                  row.max_abs_difference);
        worst = std::max(worst, row.relative_error);
    }
    ctx.criterion("8.compensated_convergence", worst <= c.probe_tol,
                  "worst relative variance error " + format_double(worst));
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& file) {
    nlohmann::ordered_json j;
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["started_utc"] = m.started_utc;
    j["finished_utc"] = m.finished_utc;
    j["passed"] = m.passed();
    auto& criteria = j["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : m.criteria) criteria.push_back({{"id", c.id}, {"passed", c.passed}, {"detail", c.detail}});
    j["files"] = m.files;
    j["config"] = m.canonical_config;
    auto& seeds = j["replica_seeds"] = nlohmann::ordered_json::array();
    for (const auto& r : m.replica_seeds) {
        seeds.push_back({{"replica", r.replica}, {"wiener", hex64(r.wiener)}, {"jumps", hex64(r.jumps)},
                         {"solver", hex64(r.solver)}});
    }
    std::ofstream out(file);
    if (!out) throw ConfigError("out", "cannot write " + file.string());
    out << j.dump(2) << '\n';
}

}  // namespace detail

/// Runs the configured command, writes results and `manifest.json` under
/// `config.out`, and returns the manifest.
inline RunManifest run(const ExperimentConfig& config) {
    RunManifest manifest;
    manifest.config_hash = hex64(config_hash(config));
    manifest.command = std::string(to_string(config.command));
    manifest.seed = config.seed;
    manifest.canonical_config = canonical_form(config);
    manifest.started_utc = detail::utc_now();
    const std::filesystem::path out(config.out);
    std::filesystem::create_directories(out);
    const detail::Context ctx{config, out, manifest};
    switch (config.command) {
        case Command::simulate: detail::run_simulate(ctx); break;
        case Command::decompose: detail::run_decompose(ctx); break;
        case Command::girsanov_check: detail::run_girsanov(ctx); break;
        case Command::recover_drift: detail::run_recover_drift(ctx); break;
        case Command::distinctness: detail::run_distinctness(ctx); break;
        case Command::skorohod: detail::run_skorohod(ctx); break;
        case Command::convergence_probe: detail::run_probe(ctx); break;
    }
    manifest.finished_utc = detail::utc_now();
    manifest.files.push_back("manifest.json");
    detail::write_manifest(manifest, out / "manifest.json");
    return manifest;
}

}  // namespace levyou::harness
