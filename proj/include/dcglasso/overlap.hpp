#pragma once
#include <vector>

#include "dcglasso/dc.hpp"

namespace dcglasso {

enum class OverlapStrategy {
    SelectAndDiscard,   ///< per-feature vote, then keep only features of fully selected groups
    SelectInGroups,     ///< per-group vote on the duplicated blocks, support = union of voted groups
};

std::string_view to_string(OverlapStrategy s);
OverlapStrategy parse_strategy(std::string_view name);

/// Column bookkeeping for the duplicated (latent) design: block j holds a
/// private copy of group j's columns.
struct DuplicationMap
{
    Index original_p = 0;
    Index expanded_p = 0;
    IndexList column_origin;    ///< expanded column -> original feature
    IndexList block_offsets;    ///< q + 1 boundaries; block j = [offsets[j], offsets[j+1])
};

DuplicationMap duplication_map(const GroupStructure& structure);

struct ExpandedDesign
{
    GroupedDesign design;       ///< non-overlapping contiguous blocks
    DuplicationMap map;
};

/// Works for any structure; a non-overlapping one expands to a column permutation.
/// A standardization record on the input is not carried over.
ExpandedDesign expand_duplicates(const GroupedDesign& design);

/// beta[f] = sum of expanded entries whose origin is f.
Vector collapse_duplicates(const Vector& expanded, const DuplicationMap& map);
GroupCoefficients collapse_duplicates(const GroupCoefficients& expanded, const DuplicationMap& map);

/// Feature f gets shard k's vote iff the collapsed estimate of shard k is
/// nonzero at f; selected iff votes >= m/2. Optional per-feature counts.
SupportPattern feature_vote(const std::vector<Vector>& expanded_betas, const DuplicationMap& map, int m,
                            std::vector<int>* counts = nullptr);

/// Keeps feature f iff some group containing f has all of its features in the set.
SupportPattern security_check(const SupportPattern& features, const GroupStructure& structure);

/// DC pipeline for overlapping groups via duplication. Any structure is accepted.
DcResult run_dc_oglasso(const GroupedDesign& design, const DcConfig& config,
                        OverlapStrategy strategy = OverlapStrategy::SelectAndDiscard);

/// Several strategies sharing one stage 1 (results in the order given).
std::vector<DcResult> run_dc_oglasso(const GroupedDesign& design, const DcConfig& config,
                                     const std::vector<OverlapStrategy>& strategies);

} // namespace dcglasso
