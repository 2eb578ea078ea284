#include "dcglasso/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace dcglasso {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::OverlapInNonOverlapMode: return "OverlapInNonOverlapMode";
    case ErrorCode::UncoveredFeature: return "UncoveredFeature";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateIndex: return "DuplicateIndex";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::NonFiniteEncountered: return "NonFiniteEncountered";
    case ErrorCode::AllPathsFailed: return "AllPathsFailed";
    case ErrorCode::ShardTooSmall: return "ShardTooSmall";
    case ErrorCode::AllShardsFailed: return "AllShardsFailed";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

std::string_view to_string(Loss loss)
{
    return loss == Loss::Squared ? "squared" : "logistic";
}

Loss parse_loss(std::string_view name)
{
    if (name == "squared") return Loss::Squared;
    if (name == "logistic") return Loss::Logistic;
    throw Error(ErrorCode::InvalidArgument, "unknown loss '" + std::string(name) + "'");
}

namespace {
constexpr std::pair<Flag, const char*> kFlagNames[] = {
    {Flag::NotConverged, "NotConverged"},
    {Flag::SeparableData, "SeparableData"},
    {Flag::RankDeficient, "RankDeficient"},
    {Flag::ZeroResponse, "ZeroResponse"},
    {Flag::ConstantColumn, "ConstantColumn"},
    {Flag::ShardFailed, "ShardFailed"},
    {Flag::EmptyModel, "EmptyModel"},
    {Flag::GroupsResampled, "GroupsResampled"},
};
} // namespace

std::vector<std::string> FlagSet::names() const
{
    std::vector<std::string> out;
    for (auto [flag, name] : kFlagNames)
        if (has(flag)) out.emplace_back(name);
    return out;
}

FlagSet FlagSet::from_names(const std::vector<std::string>& names)
{
    FlagSet out;
    for (const auto& n : names) {
        bool found = false;
        for (auto [flag, name] : kFlagNames) {
            if (n == name) {
                out.set(flag);
                found = true;
            }
        }
        if (!found) throw Error(ErrorCode::ParseError, "unknown flag '" + n + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// GroupStructure

GroupStructure GroupStructure::validate(std::vector<IndexList> groups, Index p, bool overlapping)
{
    if (p < 1) throw Error(ErrorCode::InvalidArgument, "p must be at least 1");
    if (groups.empty()) throw Error(ErrorCode::EmptyGroup, "no groups given");

    std::vector<int> seen(static_cast<std::size_t>(p), 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& members = groups[g];
        if (members.empty())
            throw Error(ErrorCode::EmptyGroup, "group " + std::to_string(g) + " is empty");
        std::sort(members.begin(), members.end());
        for (std::size_t j = 0; j < members.size(); ++j) {
            const Index f = members[j];
            if (f < 0 || f >= p)
                throw Error(ErrorCode::IndexOutOfRange,
                            "feature " + std::to_string(f) + " in group " + std::to_string(g));
            if (j > 0 && members[j - 1] == f)
                throw Error(ErrorCode::DuplicateIndex,
                            "feature " + std::to_string(f) + " repeated in group " + std::to_string(g));
            auto& count = seen[static_cast<std::size_t>(f)];
            if (count > 0 && !overlapping)
                throw Error(ErrorCode::OverlapInNonOverlapMode,
                            "feature " + std::to_string(f) + " appears in more than one group");
            ++count;
        }
    }
    for (Index f = 0; f < p; ++f)
        if (seen[static_cast<std::size_t>(f)] == 0)
            throw Error(ErrorCode::UncoveredFeature,
                        "feature " + std::to_string(f) + " belongs to no group");

    GroupStructure s;
    s.p_ = p;
    s.overlapping_ = overlapping;
    s.groups_ = std::move(groups);
    s.weights_.reserve(s.groups_.size());
    for (const auto& g : s.groups_) s.weights_.push_back(std::sqrt(static_cast<double>(g.size())));
    s.owner_.assign(static_cast<std::size_t>(p), -1);
    if (!overlapping)
        for (std::size_t g = 0; g < s.groups_.size(); ++g)
            for (Index f : s.groups_[g]) s.owner_[static_cast<std::size_t>(f)] = static_cast<Index>(g);
    return s;
}

GroupStructure GroupStructure::contiguous(const std::vector<Index>& sizes, bool overlapping)
{
    std::vector<IndexList> groups;
    Index start = 0;
    for (Index d : sizes) {
        IndexList g(static_cast<std::size_t>(std::max<Index>(d, 0)));
        std::iota(g.begin(), g.end(), start);
        start += d;
        groups.push_back(std::move(g));
    }
    return validate(std::move(groups), start, overlapping);
}

GroupStructure GroupStructure::with_weights(std::vector<double> weights) const
{
    if (weights.size() != groups_.size())
        throw Error(ErrorCode::DimensionMismatch, "one weight per group required");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw Error(ErrorCode::InvalidArgument, "group weights must be positive and finite");
    GroupStructure s = *this;
    s.weights_ = std::move(weights);
    return s;
}

GroupStructure GroupStructure::unweighted() const
{
    return with_weights(std::vector<double>(groups_.size(), 1.0));
}

Index GroupStructure::max_group_size() const noexcept
{
    Index m = 0;
    for (const auto& g : groups_) m = std::max<Index>(m, static_cast<Index>(g.size()));
    return m;
}

// ---------------------------------------------------------------------------
// GroupedDesign

GroupedDesign::GroupedDesign(Matrix x, Vector y, GroupStructure structure)
    : x_(std::move(x)), y_(std::move(y)), structure_(std::move(structure))
{
    if (x_.rows() < 1 || x_.cols() < 1)
        throw Error(ErrorCode::InvalidArgument, "design needs n >= 1 and p >= 1");
    if (y_.size() != x_.rows())
        throw Error(ErrorCode::DimensionMismatch, "response length differs from row count");
    if (structure_.num_features() != x_.cols())
        throw Error(ErrorCode::DimensionMismatch, "group structure does not match column count");
    if (!x_.allFinite() || !y_.allFinite())
        throw Error(ErrorCode::NonFiniteInput, "design contains NaN or Inf");
}

GroupedDesign GroupedDesign::subset_rows(const IndexList& rows) const
{
    Matrix xs(static_cast<Index>(rows.size()), x_.cols());
    Vector ys(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        xs.row(static_cast<Index>(r)) = x_.row(rows[r]);
        ys(static_cast<Index>(r)) = y_(rows[r]);
    }
    return GroupedDesign(std::move(xs), std::move(ys), structure_);
}

GroupedDesign standardize(const GroupedDesign& design, Loss loss, bool scale_columns)
{
    GroupedDesign out = design;
    Matrix& x = out.x_;
    const Index n = x.rows();
    Standardization t;
    t.applied = true;
    t.center.resize(x.cols());
    t.scale.resize(x.cols());
    t.constant.assign(static_cast<std::size_t>(x.cols()), false);

    for (Index j = 0; j < x.cols(); ++j) {
        auto col = x.col(j);
        const double mean = col.mean();
        col.array() -= mean;
        const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
        // Relative threshold: rounding leaves ~1e-16*|mean| behind in constant columns.
        const bool is_constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
        t.center(j) = mean;
        if (is_constant) {
            col.setZero();
            t.scale(j) = 1.0;
            t.constant[static_cast<std::size_t>(j)] = true;
        } else if (scale_columns) {
            col /= sd;
            t.scale(j) = sd;
        } else {
            t.scale(j) = 1.0;
        }
    }
    if (loss == Loss::Squared) {
        t.y_center = out.y_.mean();
        out.y_.array() -= t.y_center;
    }
    out.transform_ = std::move(t);
    return out;
}

GroupCoefficients to_original_scale(const GroupCoefficients& coef, const Standardization& t)
{
    if (!t.applied) return coef;
    GroupCoefficients out;
    out.beta = coef.beta.cwiseQuotient(t.scale);
    out.intercept = t.y_center + coef.intercept - t.center.dot(out.beta);
    return out;
}

GroupCoefficients to_standardized_scale(const GroupCoefficients& coef, const Standardization& t)
{
    if (!t.applied) return coef;
    GroupCoefficients out;
    out.beta = coef.beta.cwiseProduct(t.scale);
    for (std::size_t j = 0; j < t.constant.size(); ++j)
        if (t.constant[j]) out.beta(static_cast<Index>(j)) = 0.0;
    out.intercept = coef.intercept - t.y_center + t.center.dot(coef.beta);
    return out;
}

Vector predict(const Matrix& x, const GroupCoefficients& coef)
{
    Vector eta = x * coef.beta;
    eta.array() += coef.intercept;
    return eta;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Coefficients and supports

Vector GroupCoefficients::group(const GroupStructure& s, Index i) const
{
    const auto& idx = s.group(i);
    Vector out(static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out(static_cast<Index>(j)) = beta(idx[j]);
    return out;
}

bool GroupCoefficients::group_nonzero(const GroupStructure& s, Index i) const
{
    for (Index f : s.group(i))
        if (beta(f) != 0.0) return true;
    return false;
}

SupportPattern::SupportPattern(Mode m, IndexList sel) : mode(m), selected(std::move(sel))
{
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
}

bool SupportPattern::contains(Index i) const
{
    return std::binary_search(selected.begin(), selected.end(), i);
}

SupportPattern group_support(const GroupCoefficients& coef, const GroupStructure& s)
{
    IndexList sel;
    for (Index i = 0; i < s.num_groups(); ++i)
        if (coef.group_nonzero(s, i)) sel.push_back(i);
    return {SupportPattern::Mode::Group, std::move(sel)};
}

SupportPattern feature_support(const Vector& beta)
{
    IndexList sel;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) sel.push_back(j);
    return {SupportPattern::Mode::Feature, std::move(sel)};
}

IndexList features_of(const SupportPattern& groups, const GroupStructure& s)
{
    if (groups.mode != SupportPattern::Mode::Group)
        throw Error(ErrorCode::ModeMismatch, "expected a group-mode support");
    IndexList out;
    for (Index g : groups.selected) {
        if (g < 0 || g >= s.num_groups())
            throw Error(ErrorCode::IndexOutOfRange, "group index " + std::to_string(g));
        out.insert(out.end(), s.group(g).begin(), s.group(g).end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace dcglasso
