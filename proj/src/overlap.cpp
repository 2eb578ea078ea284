#include "dcglasso/overlap.hpp"

#include <algorithm>
#include <set>

#include "pipeline.hpp"

namespace dcglasso {

std::string_view to_string(OverlapStrategy s)
{
    return s == OverlapStrategy::SelectAndDiscard ? "select-and-discard" : "select-in-groups";
}

OverlapStrategy parse_strategy(std::string_view name)
{
    if (name == "select-and-discard") return OverlapStrategy::SelectAndDiscard;
    if (name == "select-in-groups") return OverlapStrategy::SelectInGroups;
    throw Error(ErrorCode::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

DuplicationMap duplication_map(const GroupStructure& structure)
{
    DuplicationMap map;
    map.original_p = structure.num_features();
    map.block_offsets.push_back(0);
    for (Index j = 0; j < structure.num_groups(); ++j) {
        for (Index f : structure.group(j)) map.column_origin.push_back(f);
        map.block_offsets.push_back(static_cast<Index>(map.column_origin.size()));
    }
    map.expanded_p = static_cast<Index>(map.column_origin.size());
    return map;
}

ExpandedDesign expand_duplicates(const GroupedDesign& design)
{
    const auto& s = design.structure();
    DuplicationMap map = duplication_map(s);
    Matrix x(design.n(), map.expanded_p);
    for (Index c = 0; c < map.expanded_p; ++c) x.col(c) = design.x().col(map.column_origin[static_cast<std::size_t>(c)]);
    std::vector<Index> sizes;
    for (Index j = 0; j < s.num_groups(); ++j) sizes.push_back(s.group_size(j));
    auto expanded = GroupStructure::contiguous(sizes, false).with_weights(s.weights());
    return {GroupedDesign(std::move(x), design.y(), std::move(expanded)), std::move(map)};
}

Vector collapse_duplicates(const Vector& expanded, const DuplicationMap& map)
{
    if (expanded.size() != map.expanded_p)
        throw Error(ErrorCode::DimensionMismatch, "expanded vector has the wrong length");
    Vector beta = Vector::Zero(map.original_p);
    for (Index c = 0; c < map.expanded_p; ++c) beta(map.column_origin[static_cast<std::size_t>(c)]) += expanded(c);
    return beta;
}

GroupCoefficients collapse_duplicates(const GroupCoefficients& expanded, const DuplicationMap& map)
{
    return {collapse_duplicates(expanded.beta, map), expanded.intercept};
}

SupportPattern feature_vote(const std::vector<Vector>& expanded_betas, const DuplicationMap& map, int m,
                            std::vector<int>* counts)
{
    if (m < 1 || static_cast<int>(expanded_betas.size()) != m)
        throw Error(ErrorCode::InvalidArgument, "feature_vote needs exactly m estimates");
    std::vector<int> c(static_cast<std::size_t>(map.original_p), 0);
    for (const auto& e : expanded_betas) {
        const Vector beta = collapse_duplicates(e, map);
        for (Index f = 0; f < beta.size(); ++f)
            if (beta(f) != 0.0) ++c[static_cast<std::size_t>(f)];
    }
    IndexList selected;
    for (Index f = 0; f < map.original_p; ++f)
        if (passes_vote(c[static_cast<std::size_t>(f)], m)) selected.push_back(f);
    if (counts) *counts = std::move(c);
    return SupportPattern(SupportPattern::Mode::Feature, std::move(selected));
}

SupportPattern security_check(const SupportPattern& features, const GroupStructure& structure)
{
    if (features.mode != SupportPattern::Mode::Feature)
        throw Error(ErrorCode::ModeMismatch, "security_check needs a feature-mode support");
    std::set<Index> keep;
    for (Index j = 0; j < structure.num_groups(); ++j) {
        const auto& g = structure.group(j);
        if (std::all_of(g.begin(), g.end(), [&](Index f) { return features.contains(f); }))
            keep.insert(g.begin(), g.end());
    }
    return SupportPattern(SupportPattern::Mode::Feature, IndexList(keep.begin(), keep.end()));
}

std::vector<DcResult> run_dc_oglasso(const GroupedDesign& design, const DcConfig& config,
                                     const std::vector<OverlapStrategy>& strategies)
{
    const auto& s = design.structure();
    const DuplicationMap map = duplication_map(s);
    // Duplicates share their source column's statistics, so expanding a
    // standardized shard equals standardizing each expanded column.
    const auto stage1 = detail::run_stage1(design, config, 2 * s.max_group_size(),
                                           [&](const GroupedDesign& shard, int k) {
                                               const auto ex = expand_duplicates(shard);
                                               return local_select(ex.design, config.solver, k);
                                           });

    std::vector<DcResult> out;
    for (OverlapStrategy strategy : strategies) {
        const auto vote_start = detail::Clock::now();
        SupportPattern support;
        std::vector<int> counts;
        SupportPattern::Mode mode;
        if (strategy == OverlapStrategy::SelectAndDiscard) {
            std::vector<Vector> betas;
            for (const auto& v : stage1.votes) betas.push_back(v.local_beta.beta);
            support = security_check(feature_vote(betas, map, config.m, &counts), s);
            mode = SupportPattern::Mode::Feature;
        } else {
            std::vector<SupportPattern> supports;
            for (const auto& v : stage1.votes) supports.push_back(v.support);
            counts = count_votes(supports, s.num_groups());
            const auto groups = majority_vote(supports, config.m);
            support = SupportPattern(SupportPattern::Mode::Feature, features_of(groups, s));
            mode = SupportPattern::Mode::Group;
        }
        const double vote_seconds = detail::seconds_since(vote_start);
        out.push_back(detail::finish(config, stage1, std::move(support), mode, std::move(counts), vote_seconds));
    }
    return out;
}

DcResult run_dc_oglasso(const GroupedDesign& design, const DcConfig& config, OverlapStrategy strategy)
{
    return std::move(run_dc_oglasso(design, config, std::vector<OverlapStrategy>{strategy}).front());
}

} // namespace dcglasso
