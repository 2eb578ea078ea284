#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "dcglasso/overlap.hpp"
#include "dcglasso/solver.hpp"

namespace dcglasso {

enum class BenchMethod { FullSet, Dc };

std::string_view to_string(BenchMethod m);
BenchMethod parse_bench_method(std::string_view name);

/// One benchmark cell. Sample sizes come either from `n_values` (DC uses
/// m = n / subset_size unless `m` is set) or, for a fixed m, from
/// `subset_sizes` with n = m * size.
struct BenchCell
{
    enum class Generator { Scenario, Overlap };

    Generator generator = Generator::Scenario;
    int scenario = 1;
    Index p = 1000;                     ///< overlap generator only
    IndexList n_values;
    Index subset_size = 1000;
    int m = 0;
    IndexList subset_sizes;
    std::vector<BenchMethod> methods{BenchMethod::FullSet, BenchMethod::Dc};
    std::vector<OverlapStrategy> strategies{OverlapStrategy::SelectAndDiscard};
    SolverConfig solver;
    bool standardize = true;

    std::string label() const;
    void validate() const;
};

struct BenchGrid
{
    std::vector<BenchCell> cells;
    int reps = 20;
    std::uint64_t seed = 0;
    /// Run reps concurrently. Timing columns are then not meaningful.
    bool parallel = false;
    int workers = 0;

    void validate() const;
};

struct BenchRow
{
    std::string scenario;
    Index n = 0;
    int m = 1;
    Index subset_size = 0;
    int rep = 0;
    std::uint64_t seed = 0;
    std::string method;
    double wall_time_s = 0.0;   ///< simulated parallel time (max over shards per stage)
    double elapsed_s = 0.0;     ///< in-process wall time
    double mse = 0.0;
    Index df = 0;
    bool exact_recovery = false;
    Index missed = 0;
    Index extra = 0;
    std::string status = "ok";
};

/// Data seed for (cell, n, rep).
std::uint64_t bench_data_seed(std::uint64_t grid_seed, std::size_t cell, Index n, int rep);

/// All method rows for one replicate at sample size n; dc_m is the DC shard count.
std::vector<BenchRow> run_benchmark_rep(const BenchCell& cell, Index n, int dc_m, int rep,
                                        std::uint64_t data_seed, int workers = 1);

std::vector<BenchRow> run_benchmark(const BenchGrid& grid);

std::string bench_csv_header();
std::string bench_csv_line(const BenchRow& row);

struct VoteMcRow
{
    int m = 1;
    double p = 0.0;
    int reps = 0;
    double rate = 0.0;
    double std_error = 0.0;     ///< binomial standard error of `rate`
    double chebyshev_bound = 0.0;
};

/// 1 - P(1-P) / (m (P - 1/2)^2); may be negative for small m.
double chebyshev_bound(double p, int m);

/**
 * Monte Carlo of the voting step alone. Each of m shards returns the true
 * support (10 of 100 groups) with probability P; otherwise it returns the
 * truth with one group dropped or one spurious group added.
 */
std::vector<VoteMcRow> vote_consistency_mc(double p, const std::vector<int>& ms, int reps, std::uint64_t seed);

std::string vote_mc_csv_header();
std::string vote_mc_csv_line(const VoteMcRow& row);

} // namespace dcglasso
