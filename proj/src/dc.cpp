#include "dcglasso/dc.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>

#include "dcglasso/parallel.hpp"
#include "pipeline.hpp"

namespace dcglasso {

void DcConfig::validate() const
{
    solver.validate();
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
    if (workers < 0) throw Error(ErrorCode::InvalidArgument, "workers must be >= 0");
}

IndexList ShardPlan::rows(int k) const
{
    if (k < 0 || k >= m) throw Error(ErrorCode::IndexOutOfRange, "shard id out of range");
    const auto b = assignment.begin();
    return IndexList(b + offsets[static_cast<std::size_t>(k)], b + offsets[static_cast<std::size_t>(k) + 1]);
}

Index ShardPlan::shard_size(int k) const
{
    if (k < 0 || k >= m) throw Error(ErrorCode::IndexOutOfRange, "shard id out of range");
    return offsets[static_cast<std::size_t>(k) + 1] - offsets[static_cast<std::size_t>(k)];
}

ShardPlan make_shard_plan(Index n, int m, std::uint64_t seed, Index min_shard_size)
{
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
    if (n < static_cast<Index>(m) * std::max<Index>(min_shard_size, 1))
        throw Error(ErrorCode::ShardTooSmall, "n = " + std::to_string(n) + " cannot give " + std::to_string(m) +
                                                  " shards of at least " + std::to_string(min_shard_size) +
                                                  " rows");
    ShardPlan plan;
    plan.m = m;
    plan.seed = seed;
    plan.assignment.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) plan.assignment[static_cast<std::size_t>(i)] = i;
    if (m > 1) {
        std::mt19937_64 rng(seed);
        std::shuffle(plan.assignment.begin(), plan.assignment.end(), rng);
    }
    plan.offsets.resize(static_cast<std::size_t>(m) + 1);
    const Index base = n / m;
    const Index extra = n % m;
    plan.offsets[0] = 0;
    for (int k = 0; k < m; ++k)
        plan.offsets[static_cast<std::size_t>(k) + 1] =
            plan.offsets[static_cast<std::size_t>(k)] + base + (k < extra ? 1 : 0);
    return plan;
}

ShardSplit shard_split(const GroupedDesign& design, int m, std::uint64_t seed)
{
    return shard_split(design, m, seed, 2 * design.structure().max_group_size());
}

ShardSplit shard_split(const GroupedDesign& design, int m, std::uint64_t seed, Index min_shard_size)
{
    ShardSplit out;
    out.plan = make_shard_plan(design.n(), m, seed, min_shard_size);
    out.shards.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) out.shards.push_back(design.subset_rows(out.plan.rows(k)));
    return out;
}

GroupedDesign prepare_shard(const GroupedDesign& shard, Loss loss, bool scale_columns)
{
    return standardize(shard, loss, scale_columns);
}

ShardVote local_select(const GroupedDesign& shard, const SolverConfig& config, int shard_id)
{
    const auto start = detail::Clock::now();
    ShardVote vote;
    vote.shard_id = shard_id;
    vote.support = SupportPattern(SupportPattern::Mode::Group, {});
    vote.local_beta = GroupCoefficients(shard.p());
    try {
        const PathFit path = fit_path(shard, config);
        const BicChoice choice = bic_select(path, shard.structure(), shard.n());
        vote.support = choice.support;
        vote.local_beta = path.solutions[choice.index];
        vote.lambda = path.lambdas[choice.index];
        vote.path_index = choice.index;
        vote.bic = path.bic_scores[choice.index];
        vote.flags = path.flags;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::DimensionMismatch) throw;
        vote.failed = true;
        vote.flags.set(Flag::ShardFailed);
    }
    vote.seconds = detail::seconds_since(start);
    return vote;
}

std::vector<int> count_votes(const std::vector<SupportPattern>& votes, Index universe)
{
    std::vector<int> counts(static_cast<std::size_t>(universe), 0);
    for (const auto& v : votes)
        for (Index i : v.selected) {
            if (i < 0 || i >= universe) throw Error(ErrorCode::IndexOutOfRange, "vote index out of range");
            ++counts[static_cast<std::size_t>(i)];
        }
    return counts;
}

SupportPattern majority_vote(const std::vector<SupportPattern>& votes, int m)
{
    if (m < 1 || static_cast<int>(votes.size()) != m)
        throw Error(ErrorCode::InvalidArgument, "majority_vote needs exactly m votes");
    const auto mode = votes.front().mode;
    std::map<Index, int> counts;
    for (const auto& v : votes) {
        if (v.mode != mode) throw Error(ErrorCode::ModeMismatch, "votes mix group and feature modes");
        for (Index i : v.selected) ++counts[i];
    }
    IndexList selected;
    for (const auto& [i, c] : counts)
        if (passes_vote(c, m)) selected.push_back(i);
    return SupportPattern(mode, std::move(selected));
}

Stage2Estimate stage2_local(const GroupedDesign& shard, const SupportPattern& support, Loss loss, int shard_id)
{
    const auto start = detail::Clock::now();
    Stage2Estimate est;
    est.shard_id = shard_id;
    const RefitResult fit = refit(shard, support, loss);
    est.coef = to_original_scale(fit.coef, shard.standardization());
    est.gradient_norm = fit.gradient_norm;
    est.flags = fit.flags;
    est.seconds = detail::seconds_since(start);
    return est;
}

GroupCoefficients average_estimates(const std::vector<GroupCoefficients>& estimates)
{
    if (estimates.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to average");
    const Index p = estimates.front().beta.size();
    for (const auto& e : estimates)
        if (e.beta.size() != p) throw Error(ErrorCode::DimensionMismatch, "estimates differ in length");
    // running mean: exact when all estimates agree
    GroupCoefficients out = estimates.front();
    for (std::size_t k = 1; k < estimates.size(); ++k) {
        const double w = 1.0 / static_cast<double>(k + 1);
        out.beta += (estimates[k].beta - out.beta) * w;
        out.intercept += (estimates[k].intercept - out.intercept) * w;
    }
    return out;
}

namespace detail {

Stage1 run_stage1(const GroupedDesign& design, const DcConfig& config, Index min_shard_size,
                  const SelectFn& select)
{
    config.validate();
    Stage1 s;
    s.started = Clock::now();
    ShardSplit split = shard_split(design, config.m, config.seed, min_shard_size);
    s.plan = std::move(split.plan);
    s.split_seconds = seconds_since(s.started);

    const auto m = static_cast<std::size_t>(config.m);
    const int workers = config.workers > 0 ? config.workers : default_workers();
    std::vector<std::optional<GroupedDesign>> prepared(m);
    s.votes.resize(m);
    parallel_for(m, workers, [&](std::size_t k) {
        const auto start = Clock::now();
        prepared[k] = prepare_shard(split.shards[k], config.solver.loss, config.standardize);
        ShardVote vote = select(*prepared[k], static_cast<int>(k));
        vote.seconds = seconds_since(start);
        s.votes[k] = std::move(vote);
    });
    s.prepared.reserve(m);
    for (auto& p : prepared) s.prepared.push_back(std::move(*p));

    const bool all_failed =
        std::all_of(s.votes.begin(), s.votes.end(), [](const ShardVote& v) { return v.failed; });
    if (all_failed) throw Error(ErrorCode::AllShardsFailed, "every shard failed in stage 1");
    return s;
}

DcResult finish(const DcConfig& config, const Stage1& stage1, SupportPattern support,
                SupportPattern::Mode vote_mode, std::vector<int> vote_counts, double vote_seconds)
{
    const auto m = static_cast<std::size_t>(config.m);
    const int workers = config.workers > 0 ? config.workers : default_workers();

    DcResult r;
    r.plan = stage1.plan;
    r.votes = stage1.votes;
    r.vote_mode = vote_mode;
    r.vote_counts = std::move(vote_counts);
    r.support = std::move(support);
    r.stage2.resize(m);
    parallel_for(m, workers, [&](std::size_t k) {
        try {
            r.stage2[k] = stage2_local(stage1.prepared[k], r.support, config.solver.loss, static_cast<int>(k));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IndexOutOfRange) throw;
            Stage2Estimate bad;
            bad.shard_id = static_cast<int>(k);
            bad.coef = GroupCoefficients(stage1.prepared[k].p());
            bad.failed = true;
            bad.flags.set(Flag::ShardFailed);
            r.stage2[k] = std::move(bad);
        }
    });

    const auto agg_start = Clock::now();
    std::vector<GroupCoefficients> good;
    for (const auto& e : r.stage2)
        if (!e.failed) good.push_back(e.coef);
    if (good.empty()) throw Error(ErrorCode::AllShardsFailed, "every shard failed in stage 2");
    r.beta = average_estimates(good);
    const double avg_seconds = seconds_since(agg_start);

    for (std::size_t k = 0; k < m; ++k) {
        const auto& v = r.votes[k];
        r.flags.merge(v.flags);
        r.flags.merge(r.stage2[k].flags);
        if (v.failed || r.stage2[k].failed) ++r.failed_shards;
        const auto& c = stage1.prepared[k].standardization().constant;
        if (std::any_of(c.begin(), c.end(), [](bool b) { return b; })) r.flags.set(Flag::ConstantColumn);
    }
    if (r.support.empty()) r.flags.set(Flag::EmptyModel);

    auto& t = r.timings;
    t.split = stage1.split_seconds;
    for (std::size_t k = 0; k < m; ++k) {
        t.stage1_max = std::max(t.stage1_max, r.votes[k].seconds);
        t.stage2_max = std::max(t.stage2_max, r.stage2[k].seconds);
    }
    t.aggregation = vote_seconds + avg_seconds;
    t.simulated_total = t.stage1_max + t.aggregation + t.stage2_max;
    t.elapsed = seconds_since(stage1.started);
    return r;
}

} // namespace detail

DcResult run_dc_glasso(const GroupedDesign& design, const DcConfig& config)
{
    if (design.structure().overlapping())
        throw Error(ErrorCode::InvalidArgument, "overlapping structure: use run_dc_oglasso");
    const auto stage1 = detail::run_stage1(
        design, config, 2 * design.structure().max_group_size(),
        [&](const GroupedDesign& shard, int k) { return local_select(shard, config.solver, k); });

    const auto vote_start = detail::Clock::now();
    std::vector<SupportPattern> supports;
    for (const auto& v : stage1.votes) supports.push_back(v.support);
    auto counts = count_votes(supports, design.structure().num_groups());
    auto support = majority_vote(supports, config.m);
    const double vote_seconds = detail::seconds_since(vote_start);
    return detail::finish(config, stage1, std::move(support), SupportPattern::Mode::Group, std::move(counts),
                          vote_seconds);
}

} // namespace dcglasso
