// Command-line front end: simulate processes, run constancy tests on data,
// validate the limit laws by simulation, and scan dependence coefficients.
//
// Exit codes: 0 success, 1 configuration or input error, 2 degenerate kernel,
// 3 domain violation inside a statistic evaluation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blockstat/asymptotics.hpp"
#include "blockstat/blocks.hpp"
#include "blockstat/dependence.hpp"
#include "blockstat/errors.hpp"
#include "blockstat/gfuncs.hpp"
#include "blockstat/harness.hpp"
#include "blockstat/io.hpp"
#include "blockstat/numeric.hpp"
#include "blockstat/processes.hpp"
#include "blockstat/ustat.hpp"

namespace {

using nlohmann::ordered_json;

void emit_json(const ordered_json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        blockstat::io::write_json(out_path, j);
    }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string token =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (token.empty()) throw blockstat::IoError(what + ": empty entry in '" + text + "'");
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') {
            throw blockstat::IoError(what + ": cannot parse '" + token + "'");
        }
        values.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (values.empty()) throw blockstat::IoError(what + ": no values");
    return values;
}

std::size_t preset_order(const std::string& name) {
    if (name == "log_variance") return 2;
    if (name == "skewness") return 3;
    if (name == "excess_kurtosis") return 4;
    throw blockstat::IoError("unknown moment functional '" + name + "'");
}

struct SimulateArgs {
    std::string spec_path;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_path;
};

int run_simulate(const SimulateArgs& args) {
    blockstat::processes::ProcessSpec spec =
        blockstat::processes::from_json(blockstat::io::read_json(args.spec_path));
    if (args.seed_given) spec.seed = args.seed;
    const blockstat::Series series = blockstat::processes::generate(spec, args.n);
    if (args.out_path.empty()) {
        std::cout << "x\n";
        for (double v : series.values) std::cout << blockstat::io::format_double(v) << "\n";
    } else {
        blockstat::io::write_series_csv(args.out_path, series.values);
    }
    return 0;
}

struct TestArgs {
    std::string data_path;
    std::size_t block_length = 0;
    std::string g_name = "log_variance";
    std::string kernel_name = "gini";
    std::string v0_text;
    double radius = 0.0;
    bool truncated = false;
    double sigma_sq = 0.0;
    bool sigma_given = false;
    std::size_t lag_window = 0;
    std::string out_path;
};

int run_test(const TestArgs& args) {
    const blockstat::Series series = blockstat::io::read_series_csv(args.data_path);
    const std::size_t m = preset_order(args.g_name);

    std::vector<double> v0;
    std::string v0_mode;
    if (!args.v0_text.empty()) {
        v0 = parse_double_list(args.v0_text, "--v0");
        v0_mode = "given";
    } else {
        // plug-in reference: global sample raw moments
        std::vector<blockstat::numeric::CompensatedSum> acc(m);
        for (double x : series.values) {
            double p = 1.0;
            for (std::size_t k = 0; k < m; ++k) {
                p *= x;
                acc[k].add(p);
            }
        }
        v0.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            v0[k] = acc[k].value() / static_cast<double>(series.size());
        }
        v0_mode = "estimated";
    }
    const blockstat::gfuncs::GSpec g = blockstat::gfuncs::preset_g(args.g_name, v0, args.radius);
    const blockstat::ustat::KernelSpec kernel = blockstat::ustat::kernel_by_name(args.kernel_name);

    const auto scheme = blockstat::blocks::partition(series, args.block_length);
    const auto moments = blockstat::blocks::local_moments(series, scheme, g.m);
    const auto w = blockstat::blocks::local_statistics(moments, g, args.truncated);

    blockstat::asymptotics::Estimate sigma;
    if (args.sigma_given) {
        sigma.value = args.sigma_sq;
        sigma.mode = "given";
    } else {
        sigma = blockstat::asymptotics::sigma_squared_from_data(series, g, args.lag_window);
    }
    if (!(sigma.value > 0.0)) {
        throw blockstat::DegenerateKernelError(
            "long-run variance estimate is not positive; cannot standardize");
    }
    const double gamma_sq =
        blockstat::asymptotics::gamma_squared(kernel, std::sqrt(sigma.value));
    const auto centering =
        blockstat::asymptotics::centering_gaussian(kernel, std::sqrt(sigma.value));

    blockstat::ustat::TestReport report = blockstat::ustat::standardized_statistic(
        w, kernel, centering.value, gamma_sq, centering.method);
    report.block_length = scheme.block_length;
    report.dropped = scheme.dropped;
    report.diagnostics["sigma_sq"] = sigma.value;
    report.diagnostics["block_ratio"] =
        static_cast<double>(scheme.block_count) / static_cast<double>(scheme.block_length);
    report.diagnostics["v0_estimated"] = v0_mode == "estimated" ? 1.0 : 0.0;
    report.diagnostics["g_eta_lipschitz"] = blockstat::gfuncs::lipschitz_estimate(g, 100'000, 1);

    ordered_json j = blockstat::io::test_report_to_json(report);
    ordered_json config;
    config["command"] = "test";
    config["data"] = args.data_path;
    config["block_length"] = args.block_length;
    config["g"] = args.g_name;
    config["kernel"] = args.kernel_name;
    config["v0"] = v0;
    config["v0_mode"] = v0_mode;
    config["radius"] = g.radius;
    config["truncated"] = args.truncated;
    config["sigma_mode"] = sigma.mode;
    config["lag_window"] =
        args.lag_window > 0 ? args.lag_window
                            : blockstat::asymptotics::default_lag_window(series.size());
    j["config"] = config;
    emit_json(j, args.out_path);
    return 0;
}

struct ValidateArgs {
    std::string mode;
    std::string kernel_name = "gini";
    std::size_t b = 0;
    std::size_t replications = 1000;
    std::uint64_t seed = 1;
    double sigma = 1.0;
    std::string atoms_text;
    std::string probs_text;
    std::string spec_path;
    std::string g_name = "log_variance";
    std::size_t block_length = 0;
    std::string centering = "gaussian";
    std::size_t centering_reps = 2000;
    double kappa = 0.5;
    double sigma_sq = 0.0;
    bool sigma_sq_given = false;
    std::string out_path;
    std::string dump_path;
};

int run_validate(const ValidateArgs& args) {
    const blockstat::ustat::KernelSpec kernel = blockstat::ustat::kernel_by_name(args.kernel_name);
    blockstat::harness::McReport report;
    ordered_json config;
    config["command"] = "validate";
    config["mode"] = args.mode;
    config["kernel"] = args.kernel_name;
    config["replications"] = args.replications;
    config["seed"] = args.seed;
    if (args.mode == "theorem1") {
        blockstat::ustat::WDistribution dist;
        if (!args.atoms_text.empty()) {
            dist = blockstat::ustat::make_discrete(
                parse_double_list(args.atoms_text, "--atoms"),
                parse_double_list(args.probs_text, "--probs"));
            config["dist"] = "discrete";
        } else {
            dist = blockstat::ustat::NormalDist{args.sigma};
            config["dist"] = "normal";
            config["sigma"] = args.sigma;
        }
        report = blockstat::harness::validate_theorem1(dist, kernel, args.b, args.replications,
                                                      args.seed);
        config["block_count"] = args.b;
    } else if (args.mode == "theorem2") {
        const blockstat::processes::ProcessSpec spec =
            blockstat::processes::from_json(blockstat::io::read_json(args.spec_path));
        const auto moments = blockstat::processes::population_moments(spec, preset_order(args.g_name));
        const blockstat::gfuncs::GSpec g =
            blockstat::gfuncs::preset_g(args.g_name, moments.values);
        blockstat::harness::Theorem2Options opts;
        opts.limit.method = blockstat::asymptotics::centering_method_from_string(args.centering);
        opts.limit.centering_replications = args.centering_reps;
        opts.limit.kappa = args.kappa;
        if (args.sigma_sq_given) opts.limit.sigma_sq_override = args.sigma_sq;
        report = blockstat::harness::validate_theorem2(spec, g, kernel, args.block_length, args.b,
                                                       args.replications, args.seed, opts);
        config["spec"] = args.spec_path;
        config["g"] = args.g_name;
        config["block_length"] = args.block_length;
        config["block_count"] = args.b;
        config["centering"] = args.centering;
        config["kappa"] = args.kappa;
    } else {
        throw blockstat::IoError("--mode must be theorem1 or theorem2");
    }
    ordered_json j = blockstat::io::mc_report_to_json(report, /*include_samples=*/false);
    j["config"] = config;
    emit_json(j, args.out_path);
    if (!args.dump_path.empty()) {
        blockstat::io::write_column_csv(args.dump_path, "stat", report.standardized);
    }
    return 0;
}

struct DeltaArgs {
    std::string spec_path;
    std::size_t power = 1;
    double p = 2.0;
    int window = blockstat::dependence::kDefaultWindow;
    std::size_t replications = 10'000;
    std::string mode = "auto";
    std::string out_path;
};

int run_delta(const DeltaArgs& args) {
    const blockstat::processes::ProcessSpec spec =
        blockstat::processes::from_json(blockstat::io::read_json(args.spec_path));
    const auto mode = args.mode == "mc" ? blockstat::dependence::DeltaMode::monte_carlo
                                        : blockstat::dependence::DeltaMode::automatic;
    const auto prof = blockstat::dependence::profile(spec, args.power, args.p, args.window,
                                                     args.replications, mode);
    if (args.out_path.empty()) {
        std::cout << "i,delta,stderr\n";
        for (int i = -prof.window; i <= prof.window; ++i) {
            std::cout << i << "," << blockstat::io::format_double(prof.at(i)) << ","
                      << blockstat::io::format_double(prof.stderr_at(i)) << "\n";
        }
    } else {
        blockstat::io::write_profile_csv(args.out_path, prof);
    }
    return 0;
}

int run_report(const std::string& in_path) {
    const nlohmann::json j = blockstat::io::read_json(in_path);
    if (j.contains("u_stat")) {
        std::cout << "constancy test report\n";
        std::cout << "  pair statistic     " << j["u_stat"].get<double>() << "\n";
        std::cout << "  centering          " << j["centering"].get<double>() << " ("
                  << j.value("centering_method", std::string("?")) << ")\n";
        std::cout << "  projection var     " << j["gamma_sq"].get<double>() << "\n";
        std::cout << "  standardized       " << j["standardized"].get<double>() << "\n";
        std::cout << "  p-value            " << j["p_value"].get<double>() << "\n";
        std::cout << "  blocks             " << j["block_count"].get<std::size_t>() << " x "
                  << j.value("block_length", std::size_t{0}) << " (dropped "
                  << j.value("dropped", std::size_t{0}) << ")\n";
    } else if (j.contains("scenario")) {
        std::cout << "simulation validation report\n";
        std::cout << "  scenario           " << j["scenario"].get<std::string>() << "\n";
        std::cout << "  replications       " << j["replications"].get<std::size_t>() << "\n";
        std::cout << "  reference sd       " << j["reference_sd"].get<double>() << "\n";
        std::cout << "  ks distance        " << j["ks"].get<double>() << "\n";
        std::cout << "  anderson-darling   " << j["ad"].get<double>() << "\n";
        std::cout << "  mean / variance    " << j["mean"].get<double>() << " / "
                  << j["variance"].get<double>() << "\n";
        if (j.contains("rejection_rates")) {
            for (const auto& [level, rate] : j["rejection_rates"].items()) {
                std::cout << "  rejection @ " << level << "   " << rate.get<double>() << "\n";
            }
        }
    } else {
        throw blockstat::IoError("'" + in_path + "': not a recognized report");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"block-local moment statistics: constancy tests for variance, "
                 "skewness, and kurtosis under weak dependence"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker cap (default: BLOCKSTAT_THREADS env, then 1)");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a series from a process spec");
    sim_cmd->add_option("--spec", sim.spec_path, "process spec JSON file")->required();
    sim_cmd->add_option("--n", sim.n, "number of observations")->required();
    auto* sim_seed = sim_cmd->add_option("--seed", sim.seed, "override the spec seed");
    sim_cmd->add_option("--out", sim.out_path, "output CSV (default: stdout)");

    TestArgs test;
    auto* test_cmd = app.add_subcommand("test", "run a constancy test on observed data");
    test_cmd->add_option("--data", test.data_path, "input CSV with header 'x'")->required();
    test_cmd->add_option("--l", test.block_length, "block length")->required();
    test_cmd->add_option("--g", test.g_name,
                         "moment functional: log_variance, skewness, excess_kurtosis");
    test_cmd->add_option("--kernel", test.kernel_name, "pair kernel: gini, sum, product, sqdiff");
    test_cmd->add_option("--v0", test.v0_text, "reference moments, comma separated (default: estimated)");
    test_cmd->add_option("--radius", test.radius, "cutoff radius (default: derived from v0)");
    test_cmd->add_flag("--truncated", test.truncated, "apply the cutoff to the block statistics");
    auto* test_sigma = test_cmd->add_option("--sigma-sq", test.sigma_sq,
                                            "long-run variance (default: estimated from data)");
    test_cmd->add_option("--lag", test.lag_window, "lag window for the long-run variance");
    test_cmd->add_option("--out", test.out_path, "report JSON (default: stdout)");

    ValidateArgs val;
    auto* val_cmd = app.add_subcommand("validate", "replicated validation of the limit laws");
    val_cmd->add_option("--mode", val.mode, "theorem1 or theorem2")->required();
    val_cmd->add_option("--kernel", val.kernel_name, "pair kernel");
    val_cmd->add_option("--b", val.b, "blocks per replication")->required();
    val_cmd->add_option("--replications", val.replications, "number of replications");
    val_cmd->add_option("--seed", val.seed, "master seed");
    val_cmd->add_option("--sigma", val.sigma, "normal block-value sd (theorem1)");
    val_cmd->add_option("--atoms", val.atoms_text, "discrete atoms, comma separated (theorem1)");
    val_cmd->add_option("--probs", val.probs_text, "discrete probabilities (theorem1)");
    val_cmd->add_option("--spec", val.spec_path, "process spec JSON (theorem2)");
    val_cmd->add_option("--g", val.g_name, "moment functional (theorem2)");
    val_cmd->add_option("--l", val.block_length, "block length (theorem2)");
    val_cmd->add_option("--centering", val.centering,
                        "gaussian, zn-expectation, or truncated-expectation");
    val_cmd->add_option("--centering-reps", val.centering_reps, "centering replications");
    val_cmd->add_option("--kappa", val.kappa, "block growth exponent in (0,1)");
    auto* val_sigma = val_cmd->add_option("--sigma-sq", val.sigma_sq, "long-run variance override");
    val_cmd->add_option("--out", val.out_path, "report JSON (default: stdout)");
    val_cmd->add_option("--dump", val.dump_path, "per-replication standardized statistics CSV");

    DeltaArgs del;
    auto* del_cmd = app.add_subcommand("delta", "dependence coefficient profile");
    del_cmd->add_option("--spec", del.spec_path, "process spec JSON file")->required();
    del_cmd->add_option("--power", del.power, "moment power k");
    del_cmd->add_option("--p", del.p, "norm exponent");
    del_cmd->add_option("--window", del.window, "half-width of the scan window");
    del_cmd->add_option("--replications", del.replications, "coupling replications per index");
    del_cmd->add_option("--mode", del.mode, "auto (closed forms allowed) or mc");
    del_cmd->add_option("--out", del.out_path, "output CSV (default: stdout)");

    std::string report_in;
    auto* rep_cmd = app.add_subcommand("report", "pretty-print a report JSON");
    rep_cmd->add_option("--in", report_in, "report JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (threads > 0) blockstat::numeric::set_worker_cap(threads);
    sim.seed_given = sim_seed->count() > 0;
    test.sigma_given = test_sigma->count() > 0;
    val.sigma_sq_given = val_sigma->count() > 0;

    try {
        if (sim_cmd->parsed()) return run_simulate(sim);
        if (test_cmd->parsed()) return run_test(test);
        if (val_cmd->parsed()) return run_validate(val);
        if (del_cmd->parsed()) return run_delta(del);
        if (rep_cmd->parsed()) return run_report(report_in);
    } catch (const blockstat::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
