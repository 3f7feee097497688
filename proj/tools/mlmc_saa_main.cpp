// Command-line front end: solve / experiment / rates / gap.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlmc_saa/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mlmc_saa;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240513ull;

struct RunConfig {
    std::string problem = "gbm_milstein";
    std::string solver = "mlmc";
    std::vector<double> eps_list;
    double eps = 0.125;
    int replications = desk_scale_replications;
    std::uint64_t master_seed = kDefaultSeed;
    double theta = -1.0;  // negative: use the problem default
    int m = -1;
    double h0 = -1.0;
    double a = 1e-3;
    int pilot_n = 2000;
    std::string domain_text;  // "lo:hi"
    std::string output_dir = "out";
    std::vector<std::string> formats{"dat", "csv", "json"};
    int threads = 0;
    bool full_scale = false;
    int rate_levels = 4;
    int rate_samples = 100000;
    double candidate = 0.0;
};

struct ProblemSetup {
    std::unique_ptr<Problem> problem;
    SolverConfig config;
};

Interval parse_domain(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--domain", "expected lo:hi");
    try {
        const double lo = std::stod(text.substr(0, colon));
        const double hi = std::stod(text.substr(colon + 1));
        return Interval(lo, hi);
    } catch (const CLI::ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--domain", e.what());
    }
}

std::string format_number(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

// Fill the per-problem benchmark defaults for everything the user left unset, so
// the emitted config echo pins the run completely.
void resolve_defaults(RunConfig& cfg) {
    const bool nested = cfg.problem == "nested";
    if (cfg.theta <= 0) cfg.theta = nested ? 0.975 : 0.95;
    if (cfg.m <= 0) cfg.m = nested ? 2 : 4;
    if (cfg.h0 <= 0) cfg.h0 = nested ? 1.0 / 64.0 : 1.0;
    if (cfg.domain_text.empty()) cfg.domain_text = nested ? "1:4" : "23:25";
    cfg.formats.erase(std::remove(cfg.formats.begin(), cfg.formats.end(), std::string()),
                      cfg.formats.end());
    if (cfg.formats.empty()) cfg.formats = {"dat", "csv", "json"};
}

ProblemSetup make_setup(RunConfig& cfg) {
    resolve_defaults(cfg);
    const Interval domain = parse_domain(cfg.domain_text);

    ProblemSetup setup{
        nullptr,
        SolverConfig{RateContract(1.0, cfg.problem == "gbm_milstein" ? 2.0 : 1.0, cfg.a)}};
    if (cfg.problem == "nested") {
        setup.problem = std::make_unique<NestedProblem>(NestedParams{}, cfg.theta, domain);
        setup.config.mc_h_ref = 1.0 / 64.0;
    } else {
        const GbmScheme scheme =
            cfg.problem == "gbm_euler" ? GbmScheme::euler : GbmScheme::milstein;
        setup.problem = std::make_unique<GbmProblem>(GbmParams{}, scheme, cfg.theta, domain);
        setup.config.mc_h_ref = 0.5;
    }
    setup.config.mc_eps_ref = 0.5;
    setup.config.m = cfg.m;
    setup.config.h0 = cfg.h0;
    setup.config.pilot_n = cfg.pilot_n;
    return setup;
}

// Sectioned key=value echo of the resolved configuration; reading it back
// through --config reproduces the run, with command-line flags taking
// precedence.
std::string config_echo(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "problem=\"" << cfg.problem << "\"\n";
    out << "solver=\"" << cfg.solver << "\"\n";
    out << "eps-list=[";
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i)
        out << (i ? ", " : "") << format_number("%.17g", cfg.eps_list[i]);
    out << "]\n";
    out << "reps=" << cfg.replications << "\n";
    out << "seed=" << cfg.master_seed << "\n";
    out << "theta=" << format_number("%.17g", cfg.theta) << "\n";
    out << "m=" << cfg.m << "\n";
    out << "h0=" << format_number("%.17g", cfg.h0) << "\n";
    out << "a=" << format_number("%.17g", cfg.a) << "\n";
    out << "pilot=" << cfg.pilot_n << "\n";
    out << "domain=\"" << cfg.domain_text << "\"\n";
    out << "out=\"" << cfg.output_dir << "\"\n";
    out << "format=[";
    for (std::size_t i = 0; i < cfg.formats.size(); ++i)
        out << (i ? ", " : "") << '"' << cfg.formats[i] << '"';
    out << "]\n";
    out << "threads=" << cfg.threads << "\n";
    return out.str();
}

std::vector<std::string> summary_row(const ExperimentSummary& s) {
    return {format_number("%.5f", s.eps),       format_number("%.5f", s.h0),
            format_number("%.4e", s.bias),      format_number("%.4e", s.variance),
            format_number("%.4e", s.rmse),      format_number("%.3f", s.tail_prob),
            format_number("%.4e", s.mean_cost), format_number("%.3f", s.mean_value)};
}

const std::vector<std::string> kTableHeader = {"eps",      "h0",   "Bias", "Variance",
                                               "RMSE",     "TailProb", "Cost", "Value"};

void write_rows(std::ostream& out, const std::vector<std::vector<std::string>>& rows,
                const char* sep) {
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i == 0 ? "" : sep) << row[i];
        out << "\n";
    }
}

json plan_to_json(const MlmcPlan& plan) {
    return json{{"L", plan.L},
                {"h", plan.h},
                {"m", plan.m},
                {"q", plan.q},
                {"N_total", plan.N_total},
                {"N_levels", plan.N_levels}};
}

json report_to_json(const SolveReport& r, bool with_wall_time) {
    json j{{"argmin", r.argmin},
           {"value", r.value},
           {"cost", {{"total", r.cost.total}, {"per_level", r.cost.per_level}}},
           {"h_used", r.h_used},
           {"seed",
            {{"master_seed", r.seed.master_seed},
             {"replication_index", r.seed.replication_index}}}};
    if (r.plan)
        j["plan"] = plan_to_json(*r.plan);
    else
        j["mc_samples"] = r.mc_samples;
    if (with_wall_time) j["wall_time_s"] = r.wall_time_s;
    return j;
}

std::string plot_file_name(const std::string& problem, const std::string& solver) {
    std::string stem = solver == "mc" ? "mc_saa_" : "mlmc_saa_";
    if (problem == "nested")
        stem += "nested";
    else
        stem += problem == "gbm_euler" ? "sde_eu" : "sde_ml";
    return stem + ".dat";
}

void require_writable(std::ofstream& out, const fs::path& path) {
    if (!out) throw std::runtime_error("cannot write to " + path.string());
}

int cmd_solve(RunConfig& cfg) {
    const ProblemSetup setup = make_setup(cfg);
    const SeedSpec seed{cfg.master_seed, 0, 0, StreamRole::pilot};
    const SolveReport report =
        cfg.solver == "mc" ? mc_saa_solve(*setup.problem, cfg.eps, setup.config, seed)
                           : mlmc_saa_solve(*setup.problem, cfg.eps, setup.config, seed);

    json j = report_to_json(report, true);
    j["problem"] = cfg.problem;
    j["solver"] = cfg.solver;
    j["eps"] = cfg.eps;
    j["p_star"] = setup.problem->reference_value();
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_experiment(RunConfig& cfg) {
    const ProblemSetup setup = make_setup(cfg);
    const double p_star = setup.problem->reference_value();
    const std::string echo = config_echo(cfg);

    const fs::path out_dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    std::vector<std::vector<SolveReport>> all_reports;
    std::vector<ExperimentSummary> table;
    for (std::size_t row = 0; row < cfg.eps_list.size(); ++row) {
        const std::uint64_t row_seed =
            detail::splitmix64(cfg.master_seed + 0x9E3779B97F4A7C15ull * (row + 1));
        all_reports.push_back(run_replications(*setup.problem,
                                               cfg.solver == "mc" ? SolverKind::mc
                                                                  : SolverKind::mlmc,
                                               cfg.eps_list[row], cfg.replications,
                                               setup.config, row_seed, cfg.threads));
        table.push_back(summarize(all_reports.back(), p_star, cfg.eps_list[row]));
    }

    std::vector<std::vector<std::string>> rows{kTableHeader};
    for (const auto& s : table) rows.push_back(summary_row(s));

    const std::string stem = cfg.problem + "_" + cfg.solver;
    for (const std::string& format : cfg.formats) {
        if (format == "dat") {
            std::ofstream out(out_dir / (stem + ".dat"));
            require_writable(out, out_dir / (stem + ".dat"));
            write_rows(out, rows, " ");
        } else if (format == "csv") {
            std::ofstream out(out_dir / (stem + ".csv"));
            require_writable(out, out_dir / (stem + ".csv"));
            write_rows(out, rows, ",");
        } else if (format == "json") {
            json j{{"problem", cfg.problem},
                   {"solver", cfg.solver},
                   {"p_star", p_star},
                   {"master_seed", cfg.master_seed},
                   {"replications", cfg.replications},
                   {"rows", json::array()}};
            for (std::size_t row = 0; row < table.size(); ++row) {
                json jr{{"eps", table[row].eps},
                        {"h0", table[row].h0},
                        {"bias", table[row].bias},
                        {"variance", table[row].variance},
                        {"rmse", table[row].rmse},
                        {"tail_prob", table[row].tail_prob},
                        {"mean_cost", table[row].mean_cost},
                        {"mean_value", table[row].mean_value},
                        {"reports", json::array()}};
                for (const auto& r : all_reports[row])
                    jr["reports"].push_back(report_to_json(r, false));
                j["rows"].push_back(std::move(jr));
            }
            std::ofstream out(out_dir / (stem + ".json"));
            require_writable(out, out_dir / (stem + ".json"));
            out << j.dump(2) << "\n";
        } else {
            throw CLI::ValidationError("--format", "unknown format " + format);
        }
    }

    // Plot data in the layout the figures consume.
    {
        const fs::path plot_path = out_dir / plot_file_name(cfg.problem, cfg.solver);
        std::ofstream out(plot_path);
        require_writable(out, plot_path);
        std::vector<std::vector<std::string>> plot_rows{{"RMSE", "Cost"}};
        for (const auto& s : table)
            plot_rows.push_back({format_number("%.4e", s.rmse),
                                 format_number("%.4e", s.mean_cost)});
        write_rows(out, plot_rows, " ");
    }

    {
        std::ofstream out(out_dir / (stem + ".cfg"));
        require_writable(out, out_dir / (stem + ".cfg"));
        out << echo;
    }

    for (const auto& s : table)
        std::cout << s.eps << "\t rmse=" << s.rmse << "\t cost=" << s.mean_cost
                  << "\t value=" << s.mean_value << "\n";
    return 0;
}

int cmd_rates(RunConfig& cfg) {
    const ProblemSetup setup = make_setup(cfg);
    RandomStream pilot_stream(SeedSpec{cfg.master_seed, 0, 0, StreamRole::pilot});
    const PilotReport pilot =
        mc_pilot(*setup.problem, setup.config.h0, cfg.pilot_n, pilot_stream);

    const BiasLadder ladder(setup.config.h0, setup.config.m, cfg.rate_levels);
    const RateEstimate est = estimate_rates(*setup.problem, pilot.x_hat, ladder,
                                            cfg.rate_samples, cfg.master_seed);

    std::printf("# problem=%s x_probe=%.6f samples_per_level=%d\n", cfg.problem.c_str(),
                pilot.x_hat, cfg.rate_samples);
    std::printf("%-6s %-12s %-14s %-14s\n", "level", "h_l", "mean_diff", "var_diff");
    for (std::size_t i = 0; i < est.level_means.size(); ++i)
        std::printf("%-6zu %-12.6g %-14.6e %-14.6e\n", i + 1,
                    level_bias(ladder, static_cast<int>(i + 1)), est.level_means[i],
                    est.level_vars[i]);
    for (int ell : est.excluded_levels)
        std::printf("# warning: level %d excluded from the alpha regression (zero mean)\n", ell);
    std::printf("alpha_hat %.4f\n", est.alpha_hat);
    std::printf("beta_hat %.4f\n", est.beta_hat);
    return 0;
}

int cmd_gap(RunConfig& cfg) {
    const ProblemSetup setup = make_setup(cfg);
    const Interval domain = setup.problem->domain();
    if (!domain.contains(cfg.candidate))
        throw CLI::ValidationError("--candidate", "candidate lies outside the decision interval");
    const CvarCost cost(setup.problem->theta());

    // Monte Carlo gap with the sizing implied by eps.
    RandomStream pilot_stream(SeedSpec{cfg.master_seed, 0, 0, StreamRole::pilot});
    const double h =
        mc_bias_parameter(cfg.eps, setup.config.rates.alpha, setup.config.mc_h_ref,
                          setup.config.mc_eps_ref);
    const PilotReport pilot = mc_pilot(*setup.problem, h, cfg.pilot_n, pilot_stream);
    const std::int64_t n = pilot.degenerate_variance
                               ? pilot.pilot_n
                               : mc_sample_size(pilot.var_h, cfg.eps, setup.config.rates.alpha);
    const BiasLadder mc_ladder(h, setup.config.m, 0);
    RandomStream mc_stream(SeedSpec{cfg.master_seed, 0, 0, StreamRole::minimizer_probe});
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k)
        draws.push_back(setup.problem->sample_pair(mc_ladder, 0, mc_stream).fine);
    const double gap_mc =
        optimal_gap_mc(cfg.candidate, WeightedSampleSet::uniform(std::move(draws)), cost, domain);

    // MLMC gap from a freshly calibrated plan.
    RandomStream mlmc_pilot_stream(SeedSpec{cfg.master_seed, 1, 0, StreamRole::pilot});
    const PilotReport mpilot =
        mlmc_pilot(*setup.problem, setup.config.h0, setup.config.m, setup.config.rates,
                   cfg.pilot_n, mlmc_pilot_stream);
    double gap_mlmc;
    if (mpilot.degenerate_variance || mpilot.lambda_hat <= 0.0) {
        gap_mlmc = gap_mc;  // coupling is degenerate; the MLMC estimator reduces to MC
    } else {
        const MlmcPlan plan =
            mlmc_plan(cfg.eps, mpilot, setup.config.rates, setup.config.m, setup.config.h0);
        const BiasLadder ladder = plan.ladder();
        std::vector<LevelBatch> batches(plan.N_levels.size());
        for (std::size_t ell = 0; ell < batches.size(); ++ell) {
            RandomStream stream(SeedSpec{cfg.master_seed, 1,
                                         static_cast<std::uint32_t>(ell),
                                         StreamRole::minimizer_probe});
            for (std::int64_t k = 0; k < plan.N_levels[ell]; ++k)
                batches[ell].draws.push_back(
                    setup.problem->sample_pair(ladder, static_cast<int>(ell), stream));
        }
        gap_mlmc = optimal_gap_mlmc(cfg.candidate, batches, cost, domain);
    }

    json j{{"problem", cfg.problem}, {"candidate", cfg.candidate}, {"eps", cfg.eps},
           {"gap_mc", gap_mc},       {"gap_mlmc", gap_mlmc}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

void add_common_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--problem", cfg.problem, "Problem instance")
        ->check(CLI::IsMember({"gbm_euler", "gbm_milstein", "nested"}))
        ->capture_default_str();
    sub->add_option("--seed", cfg.master_seed, "Master seed (fallback: MLMC_SAA_SEED)")
        ->capture_default_str();
    sub->add_option("--theta", cfg.theta, "CVaR confidence level (default per problem)");
    sub->add_option("--m", cfg.m, "Ladder refinement factor (default per problem)");
    sub->add_option("--h0", cfg.h0, "Coarsest bias parameter (default per problem)");
    sub->add_option("--a", cfg.a, "RMSE exponent slack")->capture_default_str();
    sub->add_option("--pilot", cfg.pilot_n, "Pilot sample size")
        ->check(CLI::Range(2, 100000000))
        ->capture_default_str();
    sub->add_option("--domain", cfg.domain_text, "Decision interval lo:hi");
    sub->add_option("--threads", cfg.threads, "Worker thread cap (0 = hardware)")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Biased-sampling SAA with Monte Carlo and multilevel Monte Carlo estimators"};
    app.require_subcommand(1);
    app.fallthrough(true);
    app.set_config("--config", "", "Read options from a sectioned key=value file");

    RunConfig cfg;
    if (const char* env_seed = std::getenv("MLMC_SAA_SEED"))
        cfg.master_seed = std::strtoull(env_seed, nullptr, 10);

    CLI::App* solve = app.add_subcommand("solve", "Run one solve and print the report as JSON");
    add_common_options(solve, cfg);
    solve->add_option("--solver", cfg.solver, "mc or mlmc")
        ->check(CLI::IsMember({"mc", "mlmc"}))
        ->capture_default_str();
    solve->add_option("--eps", cfg.eps, "Target accuracy")
        ->check(CLI::PositiveNumber)
        ->required();

    CLI::App* experiment =
        app.add_subcommand("experiment", "Replicated table reproduction with file output");
    add_common_options(experiment, cfg);
    experiment->add_option("--solver", cfg.solver, "mc or mlmc")
        ->check(CLI::IsMember({"mc", "mlmc"}))
        ->capture_default_str();
    CLI::Option* eps_list_opt =
        experiment->add_option("--eps-list", cfg.eps_list, "Accuracy grid")
            ->check(CLI::PositiveNumber);
    CLI::Option* reps_opt = experiment->add_option("--reps", cfg.replications, "Replications")
                                ->check(CLI::Range(2, 1000000))
                                ->capture_default_str();
    experiment->add_option("--out", cfg.output_dir, "Output directory")->capture_default_str();
    experiment->add_option("--format", cfg.formats, "Output formats (dat, csv, json)")
        ->capture_default_str();
    experiment->add_flag("--full-scale", cfg.full_scale,
                         "Full benchmark grid: 100 replications, eps down to 0.03125");

    CLI::App* rates = app.add_subcommand("rates", "Empirical weak/strong rate regression");
    add_common_options(rates, cfg);
    rates->add_option("--levels", cfg.rate_levels, "Ladder levels for the regression")
        ->check(CLI::Range(3, 16))
        ->capture_default_str();
    rates->add_option("--samples", cfg.rate_samples, "Coupled samples per level")
        ->check(CLI::Range(2, 1000000000))
        ->capture_default_str();

    CLI::App* gap = app.add_subcommand("gap", "Optimal-gap estimates for a candidate solution");
    add_common_options(gap, cfg);
    gap->add_option("--candidate", cfg.candidate, "Candidate decision")->required();
    gap->add_option("--eps", cfg.eps, "Target accuracy")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (solve->parsed()) return cmd_solve(cfg);
        if (experiment->parsed()) {
            if (cfg.full_scale) {
                if (eps_list_opt->count() == 0) cfg.eps_list = full_scale_eps();
                if (reps_opt->count() == 0) cfg.replications = full_scale_replications;
            } else if (cfg.eps_list.empty()) {
                cfg.eps_list = desk_scale_eps();
            }
            return cmd_experiment(cfg);
        }
        if (rates->parsed()) return cmd_rates(cfg);
        if (gap->parsed()) return cmd_gap(cfg);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
