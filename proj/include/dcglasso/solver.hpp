#pragma once
#include <optional>
#include <vector>

#include "dcglasso/core.hpp"

namespace dcglasso {

/// Which fit supplies the RSS (or deviance) in the BIC along a path.
enum class BicFit {
    Penalized,  ///< the group-lasso solution itself
    Refit,      ///< unpenalized refit on that solution's support
};

std::string_view to_string(BicFit f);
BicFit parse_bic_fit(std::string_view name);

/**
 * Group-lasso solver settings.
 *
 * The objective is ||Y - X b||^2 + lambda * sum_i w_i ||b_i||_2 with no 1/2
 * or 1/n factor, so every gradient and KKT constant carries a factor of 2.
 * The logistic loss uses the binomial deviance in place of the RSS.
 *
 * `tol` bounds the per-sweep change max_i gamma_i * ||delta b_i||_inf, i.e.
 * the coefficient change measured in gradient units.
 */
struct SolverConfig
{
    Loss loss = Loss::Squared;
    int path_length = 100;
    /// Unset: 1e-3 when n >= p, 5e-2 otherwise.
    std::optional<double> lambda_min_ratio;
    int max_iter = 3000;
    double tol = 1e-8;
    WeightsMode weights_mode = WeightsMode::SqrtSize;
    /// Stop the path after the first point with df >= n. Every later point
    /// would be saturated too and scores +inf under BIC.
    bool stop_at_saturation = true;
    BicFit bic_fit = BicFit::Refit;
    /// Record the objective after every sweep (tests only; costs one pass per sweep).
    bool trace_objective = false;

    void validate() const;
    double min_ratio_for(Index n, Index p) const;
};

struct FitResult
{
    GroupCoefficients coef;
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
    std::vector<double> objective_trace;
};

struct PathFit
{
    Loss loss = Loss::Squared;
    std::vector<double> lambdas;
    std::vector<GroupCoefficients> solutions;
    std::vector<double> objective_values;
    std::vector<double> losses;      ///< RSS or deviance entering the BIC (see BicFit)
    std::vector<double> bic_scores;
    std::vector<int> iterations;
    std::vector<bool> converged;
    std::vector<bool> failed;
    std::vector<Index> df;
    FlagSet flags;

    std::size_t size() const noexcept { return lambdas.size(); }
};

struct BicChoice
{
    std::size_t index = 0;
    SupportPattern support;
};

struct RefitResult
{
    GroupCoefficients coef;
    FlagSet flags;
    double gradient_norm = 0.0;
};

/// Smallest lambda whose solution is identically zero.
/// Returns 0 (and does not throw) when the null-model gradient vanishes.
double lambda_max(const GroupedDesign& design, const SolverConfig& config = {});

std::vector<double> lambda_path(double lmax, const SolverConfig& config, Index n = 1, Index p = 0);

FitResult fit_glasso(const GroupedDesign& design, double lambda, const SolverConfig& config = {},
                     const GroupCoefficients* warm_start = nullptr);

/// Penalized objective at `coef`.
double objective(const GroupedDesign& design, const GroupCoefficients& coef, double lambda,
                 const SolverConfig& config = {});

/// Loss part only: RSS for squared loss, deviance for logistic.
double loss_value(const GroupedDesign& design, const GroupCoefficients& coef, Loss loss);

/// Largest violation of the group-lasso optimality conditions. For logistic
/// loss the unpenalized intercept's stationarity is included.
double kkt_residual(const GroupedDesign& design, const GroupCoefficients& coef, double lambda,
                    const SolverConfig& config = {});

PathFit fit_path(const GroupedDesign& design, const SolverConfig& config = {});

/// BIC = n log(RSS/n) + df log(n) (deviance + df log(n) for logistic),
/// df = nonzero coefficient count. Saturated fits (df >= n) score +inf.
double bic_score(double loss_value, Index df, Index n, Loss loss);

/// Argmin of BIC along the path, recomputed for sample size n.
/// Ties go to the larger lambda.
BicChoice bic_select(const PathFit& path, const GroupStructure& structure, Index n);

/// Unpenalized refit on the columns named by `support`. Group-mode supports
/// are expanded to their member features.
RefitResult refit(const GroupedDesign& design, const SupportPattern& support, Loss loss);

/// Gradient of the unpenalized loss restricted to the support columns
/// (and intercept for logistic), infinity norm.
double refit_gradient_norm(const GroupedDesign& design, const IndexList& columns,
                           const GroupCoefficients& coef, Loss loss);

} // namespace dcglasso
