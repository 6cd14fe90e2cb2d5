// effreg: semiparametric efficient-score regression front end.
//
// Subcommands:
//   fit       estimate (beta, v) from a CSV dataset
//   simulate  run a Monte Carlo study from a scenario JSON file
//   diagnose  residual diagnostics (Shapiro-Wilk, q-q, histogram)
//
// Exit codes: 0 success, 1 input error, 2 numerical non-convergence.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "effreg/csv.hpp"
#include "effreg/diagnose.hpp"
#include "effreg/error.hpp"
#include "effreg/model.hpp"
#include "effreg/simulate.hpp"
#include "effreg/solver.hpp"

namespace {

constexpr std::uint64_t DEFAULT_SEED = 42;

struct CliConfig {
    std::string subcommand;
    std::string input;
    std::string response;
    std::string model = "linear";
    bool intercept = true;
    std::string error_mode = "normal";
    std::uint64_t seed = DEFAULT_SEED;
    int reps = -1; // -1: no override
    std::string out = ".";
    std::string format = "json";
    bool error_given = false;
};

nlohmann::json config_json(const CliConfig& c) {
    return {{"subcommand", c.subcommand}, {"input", c.input},
            {"response", c.response},     {"model", c.model},
            {"intercept", c.intercept},   {"error", c.error_mode},
            {"seed", c.seed},             {"reps", c.reps},
            {"out", c.out},               {"format", c.format}};
}

void write_json_file(const std::filesystem::path& path,
                     const nlohmann::json& j) {
    effreg::write_text_file(path.string(), j.dump(2) + "\n");
}

// Builds the regression dataset: the response column by name, every other
// column (in file order) as a covariate.
struct LoadedData {
    effreg::Dataset data;
    std::vector<std::string> covariate_names;
};

LoadedData load_dataset(const std::string& path, const std::string& response) {
    const effreg::CsvTable table = effreg::read_csv(path);
    const std::vector<double> y_col = table.column(table.col(response));
    std::vector<std::string> names;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == response) continue;
        names.push_back(table.header[c]);
        cols.push_back(c);
    }
    if (cols.empty())
        throw effreg::InputError(path + ": no covariate columns besides "
                                        "response '" + response + "'");
    const auto n = static_cast<Eigen::Index>(table.n_rows());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i) = y_col[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < cols.size(); ++c)
            x(i, static_cast<Eigen::Index>(c)) =
                table.rows[static_cast<std::size_t>(i)][cols[c]];
    }
    return {effreg::Dataset{std::move(x), std::move(y)}, std::move(names)};
}

std::string residuals_csv(const Eigen::VectorXd& resid) {
    std::ostringstream os;
    os << "residual\n";
    for (Eigen::Index i = 0; i < resid.size(); ++i)
        os << effreg::format_double(resid(i)) << '\n';
    return os.str();
}

std::vector<std::string> parameter_labels(const effreg::MeanModel& model) {
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < model.k(); ++i)
        labels.push_back("beta" + std::to_string(i + 1));
    labels.push_back("v");
    return labels;
}

int cmd_fit(const CliConfig& cfg) {
    const LoadedData loaded = load_dataset(cfg.input, cfg.response);

    effreg::MeanModel model = [&] {
        if (cfg.model == "linear")
            return effreg::MeanModel::linear(loaded.data.l(), cfg.intercept);
        if (cfg.model == "exponential") {
            if (loaded.data.l() != 1)
                throw effreg::InputError(
                    "exponential model needs exactly one covariate column; "
                    "got " + std::to_string(loaded.data.l()));
            return effreg::MeanModel::exponential();
        }
        throw effreg::InputError("unknown model '" + cfg.model +
                                 "' (expected linear|exponential)");
    }();

    effreg::FitConfig fit_cfg;
    fit_cfg.error_mode = effreg::error_mode_from_name(cfg.error_mode);
    if (fit_cfg.error_mode == effreg::ErrorMode::CustomParametric)
        throw effreg::InputError(
            "error mode 'custom' needs a refresh callback and is "
            "library-only; choose normal|gumbel|mixture|kernel");

    const effreg::FitResult fit =
        effreg::solve_efficient(loaded.data, model, fit_cfg);

    const std::filesystem::path out(cfg.out);
    std::filesystem::create_directories(out);
    nlohmann::json fit_json = effreg::fit_result_json(fit);
    fit_json["covariates"] = loaded.covariate_names;
    write_json_file(out / "fit.json", fit_json);
    effreg::write_text_file((out / "residuals.csv").string(),
                            residuals_csv(fit.residuals));

    const effreg::ResidualDiagnostics diag = effreg::diagnose_residuals(
        effreg::as_span(fit.residuals), "fit:" + cfg.error_mode);
    write_json_file(out / "diagnostics.json", diag.to_json());

    nlohmann::json meta;
    meta["config"] = config_json(cfg);
    meta["n"] = loaded.data.n();
    meta["covariates"] = loaded.covariate_names;
    meta["converged"] = fit.converged;
    write_json_file(out / "metadata.json", meta);

    if (cfg.format == "csv") {
        std::ostringstream os;
        os << "parameter,estimate,se,ci95_lo,ci95_hi\n";
        const std::vector<std::string> labels = parameter_labels(model);
        for (Eigen::Index p = 0; p < fit.theta.q(); ++p) {
            const double est =
                p < model.k() ? fit.theta.beta(p) : fit.theta.v;
            const auto& ci = fit.ci95[static_cast<std::size_t>(p)];
            os << labels[static_cast<std::size_t>(p)] << ','
               << effreg::format_double(est) << ','
               << effreg::format_double(fit.se(p)) << ','
               << effreg::format_double(ci[0]) << ','
               << effreg::format_double(ci[1]) << '\n';
        }
        effreg::write_text_file((out / "fit.csv").string(), os.str());
    }

    // One-line human summary; machine output lives in the files.
    std::ostringstream line;
    const std::vector<std::string> labels = parameter_labels(model);
    for (Eigen::Index p = 0; p < model.k(); ++p) {
        line << labels[static_cast<std::size_t>(p)] << " = " << std::fixed;
        line.precision(4);
        line << fit.theta.beta(p) << " +/- " << fit.se(p) << ", ";
    }
    line << "v = " << fit.theta.v << " +/- " << fit.se(model.k());
    line << (fit.converged ? "" : "  [NOT CONVERGED]");
    std::printf("%s\n", line.str().c_str());

    if (!fit.converged) {
        std::fprintf(stderr, "fit did not converge: %s\n",
                     fit.message.c_str());
        return 2;
    }
    return 0;
}

int cmd_simulate(const CliConfig& cfg) {
    std::ifstream in(cfg.input);
    if (!in)
        throw effreg::InputError("cannot open scenario file '" + cfg.input +
                                 "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw effreg::InputError("scenario file '" + cfg.input +
                                 "': " + e.what());
    }

    effreg::SimScenario scenario = effreg::SimScenario::from_json(j);
    if (cfg.seed != DEFAULT_SEED) scenario.seed = cfg.seed;
    if (cfg.reps >= 0) {
        if (cfg.reps == 0)
            throw effreg::InputError("simulate: --reps must be positive");
        scenario.reps = cfg.reps;
    }

    // An explicit --error runs that single mode; otherwise the scenario's
    // 'modes' list applies, defaulting to normal.
    std::vector<effreg::ErrorMode> modes;
    if (cfg.error_given) {
        modes.push_back(effreg::error_mode_from_name(cfg.error_mode));
    } else if (j.contains("modes")) {
        if (!j.at("modes").is_array() || j.at("modes").empty())
            throw effreg::InputError(
                "scenario: 'modes' must be a non-empty array of mode names");
        for (const auto& m : j.at("modes")) {
            if (!m.is_string())
                throw effreg::InputError(
                    "scenario: 'modes' entries must be strings");
            modes.push_back(
                effreg::error_mode_from_name(m.get<std::string>()));
        }
    } else {
        modes.push_back(effreg::error_mode_from_name(cfg.error_mode));
    }

    effreg::FitConfig fit_cfg;
    const effreg::SimReport report =
        effreg::run_study(scenario, modes, fit_cfg);

    const std::filesystem::path out(cfg.out);
    std::filesystem::create_directories(out);
    effreg::write_text_file((out / "report.csv").string(), report.to_csv());

    nlohmann::json meta = report.metadata();
    meta["config"] = config_json(cfg);
    meta["fit_config"] = {{"max_outer_iters", fit_cfg.max_outer_iters},
                          {"max_newton_iters", fit_cfg.max_newton_iters},
                          {"tol_theta", fit_cfg.tol_theta},
                          {"tol_score", fit_cfg.tol_score},
                          {"jacobian_step", fit_cfg.jacobian_step},
                          {"mixture_restarts", fit_cfg.mixture_restarts}};
    write_json_file(out / "metadata.json", meta);

    int total_failures = 0;
    for (const auto& m : report.modes) total_failures += m.failures;
    std::printf("wrote %s (%d modes, %d reps, %d failed fits)\n",
                (out / "report.csv").string().c_str(),
                static_cast<int>(report.modes.size()), scenario.reps,
                total_failures);
    if (report.insufficient_replications)
        std::fprintf(stderr,
                     "warning: a mode has fewer than 2 successful "
                     "replications; SE1 is undefined there\n");
    return 0;
}

int cmd_diagnose(const CliConfig& cfg) {
    const effreg::CsvTable table = effreg::read_csv(cfg.input);
    std::string column = cfg.response;
    if (column.empty()) {
        if (table.header.size() == 1) {
            column = table.header[0];
        } else {
            std::ostringstream os;
            os << "diagnose: --response required for multi-column input; "
                  "available columns:";
            for (const auto& h : table.header) os << ' ' << h;
            throw effreg::InputError(os.str());
        }
    }
    const std::vector<double> sample = table.column(table.col(column));

    const effreg::ResidualDiagnostics diag = effreg::diagnose_residuals(
        sample, "file:" + cfg.input + ":" + column);

    const effreg::QqReference reference =
        effreg::qq_reference_from_name(cfg.error_mode);
    const effreg::QqPoints qq = effreg::qq_export(sample, reference);
    const effreg::Histogram hist = effreg::fd_histogram(sample);

    const std::filesystem::path out(cfg.out);
    std::filesystem::create_directories(out);
    write_json_file(out / "diagnostics.json", diag.to_json());

    std::ostringstream qq_os;
    qq_os << "theoretical,sample\n";
    for (std::size_t i = 0; i < qq.sample.size(); ++i)
        qq_os << effreg::format_double(qq.theoretical[i]) << ','
              << effreg::format_double(qq.sample[i]) << '\n';
    effreg::write_text_file((out / "qq.csv").string(), qq_os.str());

    std::ostringstream hist_os;
    hist_os << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        hist_os << effreg::format_double(hist.edges[b]) << ','
                << effreg::format_double(hist.edges[b + 1]) << ','
                << hist.counts[b] << '\n';
    effreg::write_text_file((out / "hist.csv").string(), hist_os.str());

    nlohmann::json meta;
    meta["config"] = config_json(cfg);
    meta["column"] = column;
    meta["n"] = sample.size();
    meta["qq_reference"] = qq.reference;
    meta["qq_reference_model"] = qq.reference_model;
    write_json_file(out / "metadata.json", meta);

    if (diag.shapiro_ok)
        std::printf("n=%zu W=%.6f p=%.6g skew=%.4f exkurt=%.4f\n", diag.n,
                    diag.shapiro_w, diag.shapiro_p, diag.skewness,
                    diag.excess_kurtosis);
    else
        std::printf("n=%zu shapiro skipped (%s) skew=%.4f exkurt=%.4f\n",
                    diag.n, diag.shapiro_note.c_str(), diag.skewness,
                    diag.excess_kurtosis);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CliConfig cfg;
    CLI::App app{
        "effreg: semiparametric efficient-score regression with flexible "
        "error densities"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool needs_input) {
        sub->add_option("--input", cfg.input,
                        needs_input ? "Input file (required)" : "Input file")
            ->required(needs_input);
        sub->add_option("--out", cfg.out, "Output directory (default '.')");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--format", cfg.format,
                        "Extra tabular output format for fit: json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    CLI::App* fit = app.add_subcommand("fit", "Fit (beta, v) from a CSV file");
    add_common(fit, true);
    fit->add_option("--response", cfg.response,
                    "Response column name (required)")
        ->required();
    fit->add_option("--model", cfg.model, "Mean model: linear|exponential")
        ->check(CLI::IsMember({"linear", "exponential"}));
    fit->add_flag("--intercept,!--no-intercept", cfg.intercept,
                  "Include an intercept in the linear model (default on)");
    fit->add_option("--error", cfg.error_mode,
                    "Error mode: normal|gumbel|mixture|kernel")
        ->check(CLI::IsMember({"normal", "gumbel", "mixture", "kernel"}));

    CLI::App* sim = app.add_subcommand(
        "simulate", "Run a Monte Carlo study from a scenario JSON file");
    add_common(sim, true);
    sim->add_option("--reps", cfg.reps, "Override scenario replication count");
    sim->add_option(
        "--error", cfg.error_mode,
        "Single error mode (used when the scenario lists no 'modes')")
        ->check(CLI::IsMember({"normal", "gumbel", "mixture", "kernel"}));

    CLI::App* diag = app.add_subcommand(
        "diagnose", "Residual diagnostics for a CSV column");
    add_common(diag, true);
    diag->add_option("--response", cfg.response,
                     "Column to diagnose (default: the only column)");
    diag->add_option("--error", cfg.error_mode,
                     "Q-q reference: normal|gumbel|mixture|kernel")
        ->check(CLI::IsMember({"normal", "gumbel", "mixture", "kernel"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (fit->parsed()) {
            cfg.subcommand = "fit";
            return cmd_fit(cfg);
        }
        if (sim->parsed()) {
            cfg.subcommand = "simulate";
            cfg.error_given = sim->count("--error") > 0;
            return cmd_simulate(cfg);
        }
        cfg.subcommand = "diagnose";
        return cmd_diagnose(cfg);
    } catch (const effreg::ConvergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const effreg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
