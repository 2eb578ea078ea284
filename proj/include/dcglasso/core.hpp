#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcglasso/error.hpp"

namespace dcglasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

enum class Loss { Squared, Logistic };
enum class WeightsMode { SqrtSize, Unweighted };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view name);

/// Non-fatal conditions attached to fits and shard results.
enum class Flag : std::uint32_t {
    NotConverged = 1u << 0,
    SeparableData = 1u << 1,
    RankDeficient = 1u << 2,
    ZeroResponse = 1u << 3,
    ConstantColumn = 1u << 4,
    ShardFailed = 1u << 5,
    EmptyModel = 1u << 6,
    GroupsResampled = 1u << 7,
};

class FlagSet
{
public:
    constexpr FlagSet() = default;

    void set(Flag f) noexcept { bits_ |= static_cast<std::uint32_t>(f); }
    bool has(Flag f) const noexcept { return (bits_ & static_cast<std::uint32_t>(f)) != 0; }
    bool empty() const noexcept { return bits_ == 0; }
    void merge(FlagSet other) noexcept { bits_ |= other.bits_; }
    std::uint32_t bits() const noexcept { return bits_; }

    std::vector<std::string> names() const;
    static FlagSet from_names(const std::vector<std::string>& names);

    friend bool operator==(FlagSet, FlagSet) = default;

private:
    std::uint32_t bits_ = 0;
};

/**
 * Feature groups over p columns, with a positive penalty weight per group.
 *
 * Non-overlapping structures are partitions of [0, p). Overlapping
 * structures only need to cover [0, p). Index lists are stored sorted, so
 * two structures built from the same memberships in different orders
 * compare equal.
 */
class GroupStructure
{
public:
    GroupStructure() = default;

    /// Validates memberships and assigns default weights sqrt(d_i).
    static GroupStructure validate(std::vector<IndexList> groups, Index p, bool overlapping);

    /// Contiguous groups of the given sizes, in order.
    static GroupStructure contiguous(const std::vector<Index>& sizes, bool overlapping = false);

    GroupStructure with_weights(std::vector<double> weights) const;
    GroupStructure unweighted() const;

    Index num_groups() const noexcept { return static_cast<Index>(groups_.size()); }
    Index num_features() const noexcept { return p_; }
    bool overlapping() const noexcept { return overlapping_; }
    const IndexList& group(Index i) const { return groups_[static_cast<std::size_t>(i)]; }
    const std::vector<IndexList>& groups() const noexcept { return groups_; }
    Index group_size(Index i) const { return static_cast<Index>(group(i).size()); }
    Index max_group_size() const noexcept;
    double weight(Index i) const { return weights_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Group owning feature f. Only meaningful for non-overlapping structures.
    Index group_of(Index f) const { return owner_[static_cast<std::size_t>(f)]; }

    friend bool operator==(const GroupStructure&, const GroupStructure&) = default;

private:
    std::vector<IndexList> groups_;
    std::vector<double> weights_;
    IndexList owner_;
    Index p_ = 0;
    bool overlapping_ = false;
};

/// Affine column transform applied by standardize().
struct Standardization
{
    bool applied = false;
    Vector center;                  ///< column means (empty if not applied)
    Vector scale;                   ///< column sds; 1 for constant columns
    std::vector<bool> constant;     ///< flagged constant columns
    double y_center = 0.0;          ///< subtracted from y (squared loss only)
};

class GroupedDesign
{
public:
    GroupedDesign(Matrix x, Vector y, GroupStructure structure);

    const Matrix& x() const noexcept { return x_; }
    const Vector& y() const noexcept { return y_; }
    const GroupStructure& structure() const noexcept { return structure_; }
    const Standardization& standardization() const noexcept { return transform_; }
    bool standardized() const noexcept { return transform_.applied; }
    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }

    /// Rows selected by index, with the same structure. No transform is carried.
    GroupedDesign subset_rows(const IndexList& rows) const;

private:
    friend GroupedDesign standardize(const GroupedDesign&, Loss, bool);

    Matrix x_;
    Vector y_;
    GroupStructure structure_;
    Standardization transform_;
};

struct GroupCoefficients
{
    Vector beta;
    double intercept = 0.0;

    GroupCoefficients() = default;
    explicit GroupCoefficients(Index p) : beta(Vector::Zero(p)) {}
    GroupCoefficients(Vector b, double b0) : beta(std::move(b)), intercept(b0) {}

    /// Entries of group i, in the group's index order.
    Vector group(const GroupStructure& s, Index i) const;
    bool group_nonzero(const GroupStructure& s, Index i) const;
};

struct SupportPattern
{
    enum class Mode { Group, Feature };

    Mode mode = Mode::Group;
    IndexList selected;

    SupportPattern() = default;
    SupportPattern(Mode m, IndexList sel);

    bool contains(Index i) const;
    std::size_t size() const noexcept { return selected.size(); }
    bool empty() const noexcept { return selected.empty(); }

    friend bool operator==(const SupportPattern&, const SupportPattern&) = default;
};

/// Groups with a nonzero block in `coef`.
SupportPattern group_support(const GroupCoefficients& coef, const GroupStructure& s);
/// Features with a nonzero coefficient.
SupportPattern feature_support(const Vector& beta);
/// Union of features of the selected groups.
IndexList features_of(const SupportPattern& groups, const GroupStructure& s);

/**
 * Centers and scales each column to unit (population) standard deviation.
 * For squared loss the response is centered as well. Constant columns are
 * left at zero with scale 1 and flagged. With `scale_columns` false, columns
 * are only centered.
 */
GroupedDesign standardize(const GroupedDesign& design, Loss loss = Loss::Squared,
                          bool scale_columns = true);

/// Maps standardized-scale coefficients back to the raw column scale.
GroupCoefficients to_original_scale(const GroupCoefficients& coef, const Standardization& t);
/// Inverse of to_original_scale.
GroupCoefficients to_standardized_scale(const GroupCoefficients& coef, const Standardization& t);

Vector predict(const Matrix& x, const GroupCoefficients& coef);

/// printf("%.17g"): enough digits to round-trip any double.
std::string format_double(double v);

} // namespace dcglasso
