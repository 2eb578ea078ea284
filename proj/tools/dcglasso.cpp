// dcglasso command-line front end: simulate, fit, bench, check.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dcglasso/bench.hpp"
#include "dcglasso/io.hpp"
#include "dcglasso/simgen.hpp"

using namespace dcglasso;

namespace {

enum Exit { kOk = 0, kViolation = 1, kBadInput = 2, kAllShardsFailed = 3 };

void write_text(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    out << text;
}

Json load_json(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
}

struct SimulateArgs
{
    std::optional<int> scenario;
    bool overlap = false;
    Index n = 1000;
    Index p = 1000;
    std::uint64_t seed = 0;
    std::string snr_mode = "sd";
    std::string out;
};

int cmd_simulate(const SimulateArgs& a)
{
    if (a.scenario.has_value() == a.overlap)
        throw Error(ErrorCode::InvalidArgument, "give exactly one of --scenario or --overlap");
    Json generator;
    if (a.overlap) {
        const auto data = gen_overlap_scenario(a.p, a.n, a.seed);
        generator["kind"] = "overlap";
        generator["p"] = a.p;
        generator["n"] = a.n;
        write_dataset(a.out, data, a.seed, generator);
        return kOk;
    }
    auto spec = ScenarioSpec::preset(*a.scenario, a.n, a.seed);
    if (a.snr_mode == "sd")
        spec.snr_mode = SnrMode::SdRatio;
    else if (a.snr_mode == "variance")
        spec.snr_mode = SnrMode::VarianceRatio;
    else
        throw Error(ErrorCode::InvalidArgument, "--snr-mode must be sd or variance");
    const auto data = gen_scenario(spec);
    generator["kind"] = "scenario";
    generator["scenario"] = *a.scenario;
    generator["p"] = spec.p;
    generator["q"] = spec.q;
    generator["s"] = spec.s;
    generator["rho"] = spec.rho;
    generator["n"] = spec.n;
    generator["snr"] = spec.snr;
    generator["snr_mode"] = a.snr_mode;
    write_dataset(a.out, data, a.seed, generator);
    return kOk;
}

struct FitArgs
{
    std::string data;
    std::string groups;
    std::string config;
    std::string out;
    int m = 1;
    std::uint64_t seed = 0;
    std::string loss;
    int path_length = 0;
    double lambda_min_ratio = 0.0;
    double tol = 0.0;
    int max_iter = 0;
    std::string strategy;
    std::string bic_fit;
};

int cmd_fit(const FitArgs& a, const CLI::App& sub)
{
    RunConfig cfg;
    if (!a.config.empty()) cfg = config_from_json(load_json(a.config));
    auto& s = cfg.dc.solver;
    if (sub.count("--m")) cfg.dc.m = a.m;
    if (sub.count("--seed")) cfg.dc.seed = a.seed;
    if (sub.count("--loss")) s.loss = parse_loss(a.loss);
    if (sub.count("--path-length")) s.path_length = a.path_length;
    if (sub.count("--lambda-min-ratio")) s.lambda_min_ratio = a.lambda_min_ratio;
    if (sub.count("--tol")) s.tol = a.tol;
    if (sub.count("--max-iter")) s.max_iter = a.max_iter;
    if (sub.count("--unweighted")) s.weights_mode = WeightsMode::Unweighted;
    if (sub.count("--no-standardize")) cfg.dc.standardize = false;
    if (sub.count("--strategy")) cfg.strategy = parse_strategy(a.strategy);
    if (sub.count("--bic-fit")) s.bic_fit = parse_bic_fit(a.bic_fit);
    cfg.dc.validate();

    const auto data = read_dataset(a.data, a.groups.empty() ? std::nullopt : std::optional<std::string>(a.groups));
    const auto result = run_fit(data.design, cfg);
    write_text(a.out, dump_json(result_to_json(result)));
    return kOk;
}

int cmd_bench(const std::string& grid_path, const std::string& out)
{
    const auto grid = grid_from_json(load_json(grid_path));
    std::string text;
    if (grid.grid) {
        text = bench_csv_header() + "\n";
        for (const auto& row : run_benchmark(*grid.grid)) text += bench_csv_line(row) + "\n";
    } else {
        const auto& v = *grid.vote_mc;
        text = vote_mc_csv_header() + "\n";
        for (const auto& row : vote_consistency_mc(v.p, v.ms, v.reps, v.seed)) text += vote_mc_csv_line(row) + "\n";
    }
    write_text(out, text);
    return kOk;
}

int cmd_check(const std::string& data_path, const std::string& groups, const std::string& result_path, double tol)
{
    const auto data = read_dataset(data_path, groups.empty() ? std::nullopt : std::optional<std::string>(groups));
    const auto result = result_from_json(load_json(result_path));
    const auto report = check_result(data.design, result, tol);
    for (const auto& s : report.shards) {
        std::printf("shard %d%s kkt %.3e refit_gradient %.3e\n", s.id, s.failed ? " (failed)" : "", s.kkt,
                    s.gradient_norm);
    }
    std::printf("average_error %.3e\n", report.average_error);
    std::printf("outside_support_max %.3e\n", report.support_error);
    for (const auto& v : report.violations) std::printf("violation: %s\n", v.c_str());
    std::printf("%s\n", report.ok ? "ok" : "FAILED");
    return report.ok ? kOk : kViolation;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Divide-and-conquer group lasso"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset (prefix.csv + prefix.json)");
    simulate->add_option("--scenario", sim.scenario, "scenario preset 1..6");
    simulate->add_flag("--overlap", sim.overlap, "overlapping-chain generator");
    simulate->add_option("--n", sim.n, "sample size");
    simulate->add_option("--p", sim.p, "feature count (overlap generator)");
    simulate->add_option("--seed", sim.seed, "RNG seed");
    simulate->add_option("--snr-mode", sim.snr_mode, "sd or variance");
    simulate->add_option("--out", sim.out, "output prefix")->required();

    FitArgs fit;
    auto* fitcmd = app.add_subcommand("fit", "run the DC pipeline and write a result JSON");
    fitcmd->add_option("data", fit.data, "dataset CSV")->required();
    fitcmd->add_option("--groups", fit.groups, "group JSON (default: sibling .json)");
    fitcmd->add_option("--config", fit.config, "config JSON; flags override it");
    fitcmd->add_option("--out", fit.out, "result path (default stdout)");
    fitcmd->add_option("--m", fit.m, "shard count; 1 is the full-set method");
    fitcmd->add_option("--seed", fit.seed, "shard seed");
    fitcmd->add_option("--loss", fit.loss, "squared or logistic");
    fitcmd->add_option("--path-length", fit.path_length, "lambdas per path");
    fitcmd->add_option("--lambda-min-ratio", fit.lambda_min_ratio, "smallest lambda / lambda_max");
    fitcmd->add_option("--tol", fit.tol, "solver tolerance");
    fitcmd->add_option("--max-iter", fit.max_iter, "sweeps per lambda");
    fitcmd->add_flag("--unweighted", "unit group weights instead of sqrt(d)");
    fitcmd->add_flag("--no-standardize", "center columns without scaling");
    fitcmd->add_option("--strategy", fit.strategy, "select-and-discard or select-in-groups");
    fitcmd->add_option("--bic-fit", fit.bic_fit, "refit or penalized");

    std::string grid_path, bench_out;
    auto* bench = app.add_subcommand("bench", "run a benchmark grid and write CSV");
    bench->add_option("grid", grid_path, "grid JSON")->required();
    bench->add_option("--out", bench_out, "CSV path (default stdout)");

    std::string check_data, check_groups, check_result_path;
    double check_tol = 1e-6;
    auto* check = app.add_subcommand("check", "verify a result against its dataset");
    check->add_option("data", check_data, "dataset CSV")->required();
    check->add_option("result", check_result_path, "result JSON")->required();
    check->add_option("--groups", check_groups, "group JSON (default: sibling .json)");
    check->add_option("--tol", check_tol, "tolerance for KKT and refit gradients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadInput;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*fitcmd) return cmd_fit(fit, *fitcmd);
        if (*bench) return cmd_bench(grid_path, bench_out);
        if (*check) return cmd_check(check_data, check_groups, check_result_path, check_tol);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::AllShardsFailed ? kAllShardsFailed : kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    }
    return kBadInput;
}
