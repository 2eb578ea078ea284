#pragma once
#include <cstdint>
#include <vector>

#include "dcglasso/core.hpp"
#include "dcglasso/solver.hpp"

namespace dcglasso {

struct DcConfig
{
    SolverConfig solver;
    int m = 1;
    std::uint64_t seed = 0;
    /// false: center only (columns keep their scale).
    bool standardize = true;
    /// 0: default_workers(). Never affects results.
    int workers = 0;

    void validate() const;
};

/// Seeded row permutation cut into m contiguous blocks whose sizes differ by at most one.
struct ShardPlan
{
    int m = 1;
    std::uint64_t seed = 0;
    IndexList assignment;       ///< permutation of [0, n)
    IndexList offsets;          ///< m + 1 block boundaries into `assignment`

    IndexList rows(int k) const;
    Index shard_size(int k) const;
};

ShardPlan make_shard_plan(Index n, int m, std::uint64_t seed, Index min_shard_size = 1);

struct ShardSplit
{
    ShardPlan plan;
    std::vector<GroupedDesign> shards;
};

/// Minimum shard size defaults to 2 * max group size.
ShardSplit shard_split(const GroupedDesign& design, int m, std::uint64_t seed);
ShardSplit shard_split(const GroupedDesign& design, int m, std::uint64_t seed, Index min_shard_size);

/// Per-shard preprocessing used by every pipeline: standardize, or center only.
GroupedDesign prepare_shard(const GroupedDesign& shard, Loss loss, bool scale_columns);

struct ShardVote
{
    int shard_id = 0;
    SupportPattern support;         ///< group mode
    GroupCoefficients local_beta;   ///< BIC-selected fit, shard standardized scale
    double lambda = 0.0;
    std::size_t path_index = 0;
    double bic = 0.0;
    double seconds = 0.0;
    bool failed = false;
    FlagSet flags;
};

/// Path fit plus BIC choice on one (already standardized) shard. Solver
/// errors produce a failed, empty vote instead of propagating.
ShardVote local_select(const GroupedDesign& shard, const SolverConfig& config, int shard_id = 0);

/// True iff `count` of m votes meets the threshold count >= m/2.
constexpr bool passes_vote(int count, int m) noexcept { return 2 * count >= m; }

/// Per-index vote counts over [0, universe).
std::vector<int> count_votes(const std::vector<SupportPattern>& votes, Index universe);

/// Indices appearing in at least m/2 of the m votes. Mode follows the votes.
SupportPattern majority_vote(const std::vector<SupportPattern>& votes, int m);

struct Stage2Estimate
{
    int shard_id = 0;
    GroupCoefficients coef;     ///< original column scale
    double gradient_norm = 0.0; ///< refit stationarity on the standardized shard
    double seconds = 0.0;
    bool failed = false;
    FlagSet flags;
};

/// Unpenalized refit on the support columns of a standardized shard, mapped
/// back to the shard's original scale.
Stage2Estimate stage2_local(const GroupedDesign& shard, const SupportPattern& support, Loss loss,
                            int shard_id = 0);

/// Coordinate-wise mean, intercepts included.
GroupCoefficients average_estimates(const std::vector<GroupCoefficients>& estimates);

struct DcTimings
{
    double split = 0.0;
    double stage1_max = 0.0;
    double stage2_max = 0.0;
    double aggregation = 0.0;
    /// stage1_max + aggregation + stage2_max: one shard per machine.
    double simulated_total = 0.0;
    /// In-process wall time of the whole run.
    double elapsed = 0.0;
};

struct DcResult
{
    SupportPattern support;
    GroupCoefficients beta;                 ///< original scale, zero outside support
    SupportPattern::Mode vote_mode = SupportPattern::Mode::Group;
    std::vector<int> vote_counts;           ///< per group or per feature, following vote_mode
    std::vector<ShardVote> votes;
    std::vector<Stage2Estimate> stage2;
    ShardPlan plan;
    DcTimings timings;
    FlagSet flags;
    int failed_shards = 0;
};

/// Shard, select locally, vote, refit locally, average. m = 1 is the
/// full-set method.
DcResult run_dc_glasso(const GroupedDesign& design, const DcConfig& config);

} // namespace dcglasso
