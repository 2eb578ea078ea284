#pragma once
// Shared plumbing between the plain and overlapping DC pipelines.
#include <chrono>
#include <functional>

#include "dcglasso/dc.hpp"

namespace dcglasso::detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Stage1
{
    ShardPlan plan;
    std::vector<GroupedDesign> prepared;    ///< standardized shards, original feature space
    std::vector<ShardVote> votes;
    double split_seconds = 0.0;
    Clock::time_point started;
};

/// select(prepared shard, shard id) runs on a worker; its time is charged to the vote.
using SelectFn = std::function<ShardVote(const GroupedDesign&, int)>;

Stage1 run_stage1(const GroupedDesign& design, const DcConfig& config, Index min_shard_size,
                  const SelectFn& select);

/// Stage 2 and averaging for an already voted support.
DcResult finish(const DcConfig& config, const Stage1& stage1, SupportPattern support,
                SupportPattern::Mode vote_mode, std::vector<int> vote_counts, double vote_seconds);

} // namespace dcglasso::detail
