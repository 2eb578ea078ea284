#include "dcglasso/bench.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dcglasso/metrics.hpp"
#include "dcglasso/parallel.hpp"
#include "dcglasso/simgen.hpp"

namespace dcglasso {

std::string_view to_string(BenchMethod m)
{
    return m == BenchMethod::FullSet ? "fullset" : "dc";
}

BenchMethod parse_bench_method(std::string_view name)
{
    if (name == "fullset") return BenchMethod::FullSet;
    if (name == "dc") return BenchMethod::Dc;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

std::string BenchCell::label() const
{
    return generator == Generator::Overlap ? "overlap" : std::to_string(scenario);
}

void BenchCell::validate() const
{
    solver.validate();
    if (generator == Generator::Scenario && (scenario < 1 || scenario > 6))
        throw Error(ErrorCode::InvalidArgument, "scenario must be 1..6");
    if (n_values.empty() == subset_sizes.empty())
        throw Error(ErrorCode::InvalidArgument, "a cell needs exactly one of n or subset_sizes");
    if (!subset_sizes.empty() && m < 1)
        throw Error(ErrorCode::InvalidArgument, "subset_sizes needs a fixed m");
    if (m < 0 || subset_size < 1) throw Error(ErrorCode::InvalidArgument, "m and subset_size must be positive");
    for (Index n : n_values)
        if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
    for (Index s : subset_sizes)
        if (s < 2) throw Error(ErrorCode::InvalidArgument, "subset sizes must be >= 2");
    if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "a cell needs at least one method");
    if (strategies.empty()) throw Error(ErrorCode::InvalidArgument, "a cell needs at least one strategy");
}

void BenchGrid::validate() const
{
    if (cells.empty()) throw Error(ErrorCode::InvalidArgument, "grid has no cells");
    if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
    if (workers < 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 0");
    for (const auto& c : cells) c.validate();
}

std::uint64_t bench_data_seed(std::uint64_t grid_seed, std::size_t cell, Index n, int rep)
{
    return mix_seed(grid_seed, cell, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

BenchRow base_row(const BenchCell& cell, Index n, int m, int rep, std::uint64_t seed, std::string method)
{
    BenchRow r;
    r.scenario = cell.label();
    r.n = n;
    r.m = m;
    r.subset_size = n / m;
    r.rep = rep;
    r.seed = seed;
    r.method = std::move(method);
    return r;
}

void fill_metrics(BenchRow& row, const DcResult& res, const SimulatedData& data, const SupportPattern& truth)
{
    row.wall_time_s = res.timings.simulated_total;
    row.elapsed_s = res.timings.elapsed;
    row.mse = mse(res.beta.beta, data.truth.beta_true);
    row.df = degrees_of_freedom(res.beta.beta);
    SupportPattern est = res.support;
    if (truth.mode == SupportPattern::Mode::Group && est.mode != truth.mode)
        est = group_support(res.beta, data.design.structure());
    const auto sm = support_metrics(est, truth);
    row.exact_recovery = sm.exact;
    row.missed = sm.missed;
    row.extra = sm.extra;
}

void mark_failed(BenchRow& row, const std::string& status)
{
    row.wall_time_s = kNaN;
    row.elapsed_s = kNaN;
    row.mse = kNaN;
    row.status = status;
}

std::string error_status(const std::exception& e)
{
    if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
    return "Exception";
}

} // namespace

std::vector<BenchRow> run_benchmark_rep(const BenchCell& cell, Index n, int dc_m, int rep, std::uint64_t data_seed,
                                        int workers)
{
    const bool overlap = cell.generator == BenchCell::Generator::Overlap;
    const auto data = overlap ? gen_overlap_scenario(cell.p, n, data_seed)
                              : gen_scenario(ScenarioSpec::preset(cell.scenario, n, data_seed));
    const SupportPattern truth = overlap
                                     ? SupportPattern(SupportPattern::Mode::Feature, data.truth.active_features())
                                     : SupportPattern(SupportPattern::Mode::Group, data.truth.active_groups);

    DcConfig config;
    config.solver = cell.solver;
    config.standardize = cell.standardize;
    config.seed = mix_seed(data_seed, 0x5eedULL);
    config.workers = workers;

    std::vector<BenchRow> rows;
    for (BenchMethod method : cell.methods) {
        config.m = method == BenchMethod::FullSet ? 1 : dc_m;
        if (!overlap) {
            BenchRow row = base_row(cell, n, config.m, rep, data_seed, std::string(to_string(method)));
            try {
                fill_metrics(row, run_dc_glasso(data.design, config), data, truth);
            } catch (const std::exception& e) {
                mark_failed(row, error_status(e));
            }
            rows.push_back(std::move(row));
            continue;
        }
        std::vector<BenchRow> block;
        for (OverlapStrategy s : cell.strategies)
            block.push_back(base_row(cell, n, config.m, rep, data_seed,
                                     std::string(to_string(method)) + ":" + std::string(to_string(s))));
        try {
            const auto results = run_dc_oglasso(data.design, config, cell.strategies);
            for (std::size_t k = 0; k < results.size(); ++k) fill_metrics(block[k], results[k], data, truth);
        } catch (const std::exception& e) {
            for (auto& row : block) mark_failed(row, error_status(e));
        }
        for (auto& row : block) rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<BenchRow> run_benchmark(const BenchGrid& grid)
{
    grid.validate();
    struct Task
    {
        std::size_t cell;
        Index n;
        int dc_m;
        int rep;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
        const auto& cell = grid.cells[c];
        if (!cell.subset_sizes.empty()) {
            for (Index size : cell.subset_sizes)
                for (int rep = 0; rep < grid.reps; ++rep) tasks.push_back({c, size * cell.m, cell.m, rep});
        } else {
            for (Index n : cell.n_values) {
                const int dc_m = cell.m > 0 ? cell.m : static_cast<int>(std::max<Index>(1, n / cell.subset_size));
                for (int rep = 0; rep < grid.reps; ++rep) tasks.push_back({c, n, dc_m, rep});
            }
        }
    }

    std::vector<std::vector<BenchRow>> out(tasks.size());
    auto run = [&](std::size_t t, int workers) {
        const auto& task = tasks[t];
        const auto& cell = grid.cells[task.cell];
        const auto seed = bench_data_seed(grid.seed, task.cell, task.n, task.rep);
        try {
            out[t] = run_benchmark_rep(cell, task.n, task.dc_m, task.rep, seed, workers);
        } catch (const std::exception& e) {
            // generation failed: one row per method so the table stays rectangular
            for (BenchMethod method : cell.methods) {
                BenchRow row = base_row(cell, task.n, method == BenchMethod::FullSet ? 1 : task.dc_m, task.rep, seed,
                                        std::string(to_string(method)));
                mark_failed(row, error_status(e));
                out[t].push_back(std::move(row));
            }
        }
    };
    const int workers = grid.workers > 0 ? grid.workers : default_workers();
    if (grid.parallel) {
        parallel_for(tasks.size(), workers, [&](std::size_t t) { run(t, 1); });
    } else {
        for (std::size_t t = 0; t < tasks.size(); ++t) run(t, workers);
    }

    std::vector<BenchRow> rows;
    for (auto& block : out)
        for (auto& r : block) rows.push_back(std::move(r));
    return rows;
}

std::string bench_csv_header()
{
    return "scenario,n,m,subset_size,rep,seed,method,wall_time_s,elapsed_s,mse,df,exact_recovery,missed,extra,status";
}

std::string bench_csv_line(const BenchRow& r)
{
    std::string s;
    s += r.scenario + ',' + std::to_string(r.n) + ',' + std::to_string(r.m) + ',' + std::to_string(r.subset_size) +
         ',' + std::to_string(r.rep) + ',' + std::to_string(r.seed) + ',' + r.method + ',';
    s += format_double(r.wall_time_s) + ',' + format_double(r.elapsed_s) + ',' + format_double(r.mse) + ',';
    s += std::to_string(r.df) + ',' + (r.exact_recovery ? "1" : "0") + ',' + std::to_string(r.missed) + ',' +
         std::to_string(r.extra) + ',' + r.status;
    return s;
}

double chebyshev_bound(double p, int m)
{
    return 1.0 - p * (1.0 - p) / (static_cast<double>(m) * (p - 0.5) * (p - 0.5));
}

std::vector<VoteMcRow> vote_consistency_mc(double p, const std::vector<int>& ms, int reps, std::uint64_t seed)
{
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "P must lie in (0, 1]");
    if (reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
    constexpr Index q = 100;
    IndexList true_groups;
    for (Index g = 9; g < q; g += 10) true_groups.push_back(g);
    const SupportPattern truth(SupportPattern::Mode::Group, true_groups);

    std::vector<VoteMcRow> rows;
    for (int m : ms) {
        if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
        std::bernoulli_distribution correct(p);
        std::bernoulli_distribution drop(0.5);
        std::uniform_int_distribution<std::size_t> pick_true(0, true_groups.size() - 1);
        std::uniform_int_distribution<Index> pick_any(0, q - 1);
        int hits = 0;
        for (int r = 0; r < reps; ++r) {
            std::vector<SupportPattern> votes;
            for (int k = 0; k < m; ++k) {
                if (correct(rng)) {
                    votes.push_back(truth);
                    continue;
                }
                IndexList wrong = true_groups;
                if (drop(rng)) {
                    wrong.erase(wrong.begin() + static_cast<std::ptrdiff_t>(pick_true(rng)));
                } else {
                    Index g;
                    do g = pick_any(rng);
                    while (truth.contains(g));
                    wrong.push_back(g);
                }
                votes.emplace_back(SupportPattern::Mode::Group, std::move(wrong));
            }
            if (majority_vote(votes, m) == truth) ++hits;
        }
        VoteMcRow row;
        row.m = m;
        row.p = p;
        row.reps = reps;
        row.rate = static_cast<double>(hits) / reps;
        row.std_error = std::sqrt(row.rate * (1.0 - row.rate) / reps);
        row.chebyshev_bound = chebyshev_bound(p, m);
        rows.push_back(row);
    }
    return rows;
}

std::string vote_mc_csv_header()
{
    return "m,P,reps,rate,std_error,chebyshev_bound";
}

std::string vote_mc_csv_line(const VoteMcRow& r)
{
    return std::to_string(r.m) + ',' + format_double(r.p) + ',' + std::to_string(r.reps) + ',' + format_double(r.rate) +
           ',' + format_double(r.std_error) + ',' + format_double(r.chebyshev_bound);
}

} // namespace dcglasso
