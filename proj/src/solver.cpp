#include "dcglasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dcglasso {

std::string_view to_string(BicFit f)
{
    return f == BicFit::Penalized ? "penalized" : "refit";
}

BicFit parse_bic_fit(std::string_view name)
{
    if (name == "penalized") return BicFit::Penalized;
    if (name == "refit") return BicFit::Refit;
    throw Error(ErrorCode::InvalidArgument, "unknown bic fit '" + std::string(name) + "'");
}

void SolverConfig::validate() const
{
    if (path_length < 1) throw Error(ErrorCode::InvalidArgument, "path_length must be >= 1");
    if (lambda_min_ratio && !(*lambda_min_ratio > 0.0 && *lambda_min_ratio < 1.0))
        throw Error(ErrorCode::InvalidArgument, "lambda_min_ratio must lie in (0, 1)");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
}

double SolverConfig::min_ratio_for(Index n, Index p) const
{
    if (lambda_min_ratio) return *lambda_min_ratio;
    return n >= p ? 1e-3 : 5e-2;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack when comparing ||U|| against lambda*w. Keeps the top of the
// path exactly zero despite summation-order differences in X^T r.
constexpr double kThresholdSlack = 1e-12;

double sigmoid(double eta)
{
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) - y*eta, summed and doubled.
double deviance(const Vector& y, const Vector& eta)
{
    double acc = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        const double e = eta(i);
        acc += std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))) - y(i) * e;
    }
    return 2.0 * acc;
}

void check_labels(const Vector& y)
{
    for (Index i = 0; i < y.size(); ++i)
        if (y(i) != 0.0 && y(i) != 1.0)
            throw Error(ErrorCode::InvalidArgument, "logistic loss needs 0/1 labels");
}

double null_intercept(const Vector& y)
{
    const double ybar = std::clamp(y.mean(), 1e-10, 1.0 - 1e-10);
    return std::log(ybar / (1.0 - ybar));
}

double power_iteration_top_eigenvalue(const Matrix& gram)
{
    const Index d = gram.rows();
    if (d == 1) return gram(0, 0);
    Vector v(d);
    for (Index j = 0; j < d; ++j) v(j) = 1.0 + 0.1 * static_cast<double>(j);
    v.normalize();
    double est = 0.0;
    for (int step = 0; step < 20; ++step) {
        Vector w = gram * v;
        const double next = v.dot(w);
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        v = w / nrm;
        const bool done = step > 0 && std::abs(next - est) <= 1e-6 * std::abs(next);
        est = next;
        if (done) break;
    }
    return est;
}

/**
 * Groupwise majorization descent on a partition of the columns.
 *
 * Groups are laid out as contiguous column blocks; a permuted copy of X is
 * made only when the structure is not already block-contiguous. Each group
 * update majorizes the loss by a quadratic with curvature gamma_i (top
 * eigenvalue of 2 X_i^T X_i, quartered for the deviance) and applies the
 * closed-form group soft-threshold. Sweeps alternate between the strong set
 * and the active set; a full gradient pass certifies the excluded groups.
 */
class GmdSolver
{
public:
    GmdSolver(const GroupedDesign& design, const SolverConfig& config)
        : config_(config), y_(design.y()), n_(design.n())
    {
        config_.validate();
        const auto& s = design.structure();
        const Index q = s.num_groups();
        Index total = 0;
        for (Index i = 0; i < q; ++i) total += s.group_size(i);
        if (total != design.p())
            throw Error(ErrorCode::InvalidArgument,
                        "solver needs a partition of the columns; expand overlapping groups first");
        if (config_.loss == Loss::Logistic) check_labels(y_);

        offsets_.resize(static_cast<std::size_t>(q) + 1, 0);
        column_of_.reserve(static_cast<std::size_t>(design.p()));
        bool identity = true;
        for (Index i = 0; i < q; ++i) {
            offsets_[static_cast<std::size_t>(i) + 1] = offsets_[static_cast<std::size_t>(i)] + s.group_size(i);
            for (Index f : s.group(i)) {
                if (f != static_cast<Index>(column_of_.size())) identity = false;
                column_of_.push_back(f);
            }
        }
        if (identity) {
            x_ = &design.x();
        } else {
            owned_.resize(design.n(), design.p());
            for (std::size_t c = 0; c < column_of_.size(); ++c)
                owned_.col(static_cast<Index>(c)) = design.x().col(column_of_[c]);
            x_ = &owned_;
        }

        weights_.resize(static_cast<std::size_t>(q));
        gamma_.resize(static_cast<std::size_t>(q));
        const double curvature = config_.loss == Loss::Logistic ? 0.25 : 1.0;
        for (Index i = 0; i < q; ++i) {
            weights_[static_cast<std::size_t>(i)] =
                config_.weights_mode == WeightsMode::Unweighted ? 1.0 : s.weight(i);
            const auto block = block_of(i);
            const Matrix gram = block.transpose() * block;
            gamma_[static_cast<std::size_t>(i)] = 2.0 * curvature * power_iteration_top_eigenvalue(gram);
        }
        gamma0_ = 2.0 * 0.25 * static_cast<double>(n_);

        beta_ = Vector::Zero(design.p());
        ever_active_.assign(static_cast<std::size_t>(q), 0);
        grad_norms_.resize(q);
        reset(nullptr);
    }

    Index num_groups() const { return static_cast<Index>(weights_.size()); }

    void reset(const GroupCoefficients* warm)
    {
        beta_.setZero();
        intercept_ = config_.loss == Loss::Logistic ? null_intercept(y_) : 0.0;
        std::fill(ever_active_.begin(), ever_active_.end(), 0);
        if (warm) {
            if (warm->beta.size() != beta_.size())
                throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong length");
            for (std::size_t c = 0; c < column_of_.size(); ++c)
                beta_(static_cast<Index>(c)) = warm->beta(column_of_[c]);
            if (config_.loss == Loss::Logistic) intercept_ = warm->intercept;
            for (Index i = 0; i < num_groups(); ++i)
                if (!beta_.segment(offset(i), size(i)).isZero(0.0)) ever_active_[static_cast<std::size_t>(i)] = 1;
        }
        refresh_residual();
        refresh_gradient_norms();
    }

    double lambda_max() const
    {
        // Only meaningful straight after reset(nullptr).
        double lmax = 0.0;
        for (Index i = 0; i < num_groups(); ++i)
            lmax = std::max(lmax, grad_norms_(i) / weights_[static_cast<std::size_t>(i)]);
        if (!std::isfinite(lmax) || !grad_norms_.allFinite())
            throw Error(ErrorCode::NonFiniteEncountered, "null-model gradient overflows");
        return lmax;
    }

    FitResult solve(double lambda, double lambda_prev)
    {
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
        FitResult out;
        refresh_residual();

        const Index q = num_groups();
        std::vector<char> in_strong(static_cast<std::size_t>(q), 0);
        IndexList strong;
        const double cut = 2.0 * lambda - lambda_prev;
        for (Index i = 0; i < q; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (gamma_[ui] <= 0.0) continue;
            if (ever_active_[ui] || grad_norms_(i) >= weights_[ui] * cut) {
                in_strong[ui] = 1;
                strong.push_back(i);
            }
        }

        int iters = 0;
        bool converged = false;
        IndexList active;
        while (true) {
            bool strong_done = false;
            while (iters < config_.max_iter) {
                const double delta = sweep(strong, lambda, out);
                ++iters;
                collect_active(strong, active);
                if (delta < config_.tol) {
                    strong_done = true;
                    break;
                }
                while (iters < config_.max_iter) {
                    const double da = sweep(active, lambda, out);
                    ++iters;
                    if (da < config_.tol) break;
                }
            }
            refresh_gradient_norms();
            if (!strong_done) break;

            bool added = false;
            for (Index i = 0; i < q; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                if (in_strong[ui] || gamma_[ui] <= 0.0) continue;
                if (grad_norms_(i) > lambda * weights_[ui] * (1.0 + kThresholdSlack)) {
                    in_strong[ui] = 1;
                    strong.push_back(i);
                    added = true;
                }
            }
            if (!added) {
                converged = true;
                break;
            }
            std::sort(strong.begin(), strong.end());
        }

        if (!beta_.allFinite() || !std::isfinite(intercept_))
            throw Error(ErrorCode::NonFiniteEncountered, "coefficients diverged");
        out.coef = coefficients();
        out.iterations = iters;
        out.converged = converged;
        out.objective = current_objective(lambda);
        return out;
    }

    GroupCoefficients coefficients() const
    {
        GroupCoefficients c(static_cast<Index>(column_of_.size()));
        for (std::size_t k = 0; k < column_of_.size(); ++k) c.beta(column_of_[k]) = beta_(static_cast<Index>(k));
        c.intercept = intercept_;
        return c;
    }

    double current_loss() const
    {
        return config_.loss == Loss::Squared ? resid_.squaredNorm() : deviance(y_, eta_);
    }

    double current_objective(double lambda) const
    {
        double pen = 0.0;
        for (Index i = 0; i < num_groups(); ++i)
            pen += weights_[static_cast<std::size_t>(i)] * beta_.segment(offset(i), size(i)).norm();
        return current_loss() + lambda * pen;
    }

private:
    Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
    Index size(Index i) const { return offsets_[static_cast<std::size_t>(i) + 1] - offset(i); }
    Eigen::Block<const Matrix, Eigen::Dynamic, Eigen::Dynamic, true> block_of(Index i) const
    {
        return x_->middleCols(offset(i), size(i));
    }

    void refresh_residual()
    {
        if (config_.loss == Loss::Squared) {
            resid_ = y_;
            for (Index i = 0; i < num_groups(); ++i) {
                const auto b = beta_.segment(offset(i), size(i));
                if (!b.isZero(0.0)) resid_.noalias() -= block_of(i) * b;
            }
        } else {
            eta_ = Vector::Constant(n_, intercept_);
            for (Index i = 0; i < num_groups(); ++i) {
                const auto b = beta_.segment(offset(i), size(i));
                if (!b.isZero(0.0)) eta_.noalias() += block_of(i) * b;
            }
            refresh_mu();
        }
    }

    void refresh_mu()
    {
        resid_.resize(n_);
        for (Index k = 0; k < n_; ++k) resid_(k) = y_(k) - sigmoid(eta_(k));
    }

    void refresh_gradient_norms()
    {
        grad_ = x_->transpose() * resid_;
        for (Index i = 0; i < num_groups(); ++i) grad_norms_(i) = 2.0 * grad_.segment(offset(i), size(i)).norm();
    }

    void collect_active(const IndexList& set, IndexList& active)
    {
        active.clear();
        for (Index i : set) {
            if (!beta_.segment(offset(i), size(i)).isZero(0.0)) {
                active.push_back(i);
                ever_active_[static_cast<std::size_t>(i)] = 1;
            }
        }
    }

    // One GMD pass over `set`; returns max gamma_i * ||delta b_i||_inf.
    double sweep(const IndexList& set, double lambda, FitResult& out)
    {
        double delta = 0.0;
        for (Index i : set) {
            const auto ui = static_cast<std::size_t>(i);
            const double gamma = gamma_[ui];
            const Index d = size(i);
            auto b = beta_.segment(offset(i), d);
            const auto xi = block_of(i);
            u_.noalias() = xi.transpose() * resid_;
            u_ *= 2.0;
            u_.noalias() += gamma * b;
            const double unorm = u_.norm();
            const double thr = lambda * weights_[ui];
            if (unorm <= thr * (1.0 + kThresholdSlack)) {
                next_.setZero(d);
            } else {
                next_ = u_ * ((1.0 - thr / unorm) / gamma);
            }
            diff_ = next_ - b;
            const double change = diff_.cwiseAbs().maxCoeff();
            if (change == 0.0) continue;
            delta = std::max(delta, gamma * change);
            b = next_;
            if (config_.loss == Loss::Squared) {
                resid_.noalias() -= xi * diff_;
            } else {
                eta_.noalias() += xi * diff_;
                refresh_mu();
            }
        }
        if (config_.loss == Loss::Logistic) {
            const double step = 2.0 * resid_.sum() / gamma0_;
            if (step != 0.0) {
                intercept_ += step;
                eta_.array() += step;
                refresh_mu();
                delta = std::max(delta, gamma0_ * std::abs(step));
            }
        }
        if (config_.trace_objective) out.objective_trace.push_back(current_objective(lambda));
        return delta;
    }

    SolverConfig config_;
    const Vector& y_;
    Index n_;
    const Matrix* x_ = nullptr;
    Matrix owned_;
    IndexList column_of_;
    IndexList offsets_;
    std::vector<double> weights_;
    std::vector<double> gamma_;
    double gamma0_ = 0.0;

    Vector beta_;
    double intercept_ = 0.0;
    Vector resid_;
    Vector eta_;
    Vector grad_;
    Vector grad_norms_;
    std::vector<char> ever_active_;
    Vector u_, next_, diff_;
};

double penalty(const GroupedDesign& design, const GroupCoefficients& coef, const SolverConfig& config)
{
    const auto& s = design.structure();
    double pen = 0.0;
    for (Index i = 0; i < s.num_groups(); ++i) {
        const double w = config.weights_mode == WeightsMode::Unweighted ? 1.0 : s.weight(i);
        pen += w * coef.group(s, i).norm();
    }
    return pen;
}

Vector loss_residual(const GroupedDesign& design, const GroupCoefficients& coef, Loss loss)
{
    if (loss == Loss::Squared) {
        Vector r = design.y() - design.x() * coef.beta;
        return r;
    }
    Vector eta = predict(design.x(), coef);
    Vector r(design.n());
    for (Index k = 0; k < design.n(); ++k) r(k) = design.y()(k) - sigmoid(eta(k));
    return r;
}

} // namespace

double lambda_max(const GroupedDesign& design, const SolverConfig& config)
{
    GmdSolver solver(design, config);
    return solver.lambda_max();
}

std::vector<double> lambda_path(double lmax, const SolverConfig& config, Index n, Index p)
{
    config.validate();
    if (!(lmax > 0.0) || !std::isfinite(lmax))
        throw Error(ErrorCode::InvalidArgument, "lambda_max must be positive");
    const int L = config.path_length;
    std::vector<double> out(static_cast<std::size_t>(L));
    if (L == 1) {
        out[0] = lmax;
        return out;
    }
    const double ratio = config.min_ratio_for(n, p);
    for (int k = 0; k < L; ++k)
        out[static_cast<std::size_t>(k)] = lmax * std::pow(ratio, static_cast<double>(k) / (L - 1));
    out[0] = lmax;
    return out;
}

FitResult fit_glasso(const GroupedDesign& design, double lambda, const SolverConfig& config,
                     const GroupCoefficients* warm_start)
{
    GmdSolver solver(design, config);
    const double lmax = solver.lambda_max();
    if (warm_start) solver.reset(warm_start);
    return solver.solve(lambda, warm_start ? lambda : std::max(lambda, lmax));
}

double loss_value(const GroupedDesign& design, const GroupCoefficients& coef, Loss loss)
{
    if (loss == Loss::Squared) return loss_residual(design, coef, loss).squaredNorm();
    return deviance(design.y(), predict(design.x(), coef));
}

double objective(const GroupedDesign& design, const GroupCoefficients& coef, double lambda,
                 const SolverConfig& config)
{
    return loss_value(design, coef, config.loss) + lambda * penalty(design, coef, config);
}

double kkt_residual(const GroupedDesign& design, const GroupCoefficients& coef, double lambda,
                    const SolverConfig& config)
{
    const auto& s = design.structure();
    const Vector r = loss_residual(design, coef, config.loss);
    double worst = 0.0;
    for (Index i = 0; i < s.num_groups(); ++i) {
        const auto& idx = s.group(i);
        const double w = config.weights_mode == WeightsMode::Unweighted ? 1.0 : s.weight(i);
        Vector g(static_cast<Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) g(static_cast<Index>(j)) = 2.0 * design.x().col(idx[j]).dot(r);
        const Vector b = coef.group(s, i);
        const double bn = b.norm();
        if (bn > 0.0) {
            worst = std::max(worst, (g - lambda * w * b / bn).cwiseAbs().maxCoeff());
        } else {
            worst = std::max(worst, std::max(0.0, g.norm() - lambda * w));
        }
    }
    if (config.loss == Loss::Logistic) worst = std::max(worst, std::abs(2.0 * r.sum()));
    return worst;
}

PathFit fit_path(const GroupedDesign& design, const SolverConfig& config)
{
    GmdSolver solver(design, config);
    PathFit path;
    const Index n = design.n();
    const double lmax = solver.lambda_max();

    auto record = [&](double lambda, const FitResult& fit, bool failed) {
        path.lambdas.push_back(lambda);
        path.solutions.push_back(fit.coef);
        path.objective_values.push_back(fit.objective);
        path.iterations.push_back(fit.iterations);
        path.converged.push_back(fit.converged);
        path.failed.push_back(failed);
        Index df = 0;
        for (Index j = 0; j < fit.coef.beta.size(); ++j) df += fit.coef.beta(j) != 0.0 ? 1 : 0;
        path.df.push_back(df);
        if (!fit.converged) path.flags.set(Flag::NotConverged);
    };

    if (!(lmax > 0.0)) {
        path.flags.set(Flag::ZeroResponse);
        record(0.0, solver.solve(0.0, 0.0), false);
    } else {
        const auto lambdas = lambda_path(lmax, config, n, design.p());
        double prev = lmax;
        for (double lambda : lambdas) {
            try {
                record(lambda, solver.solve(lambda, prev), false);
                prev = lambda;
                if (config.stop_at_saturation && path.df.back() >= n) break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NonFiniteEncountered) throw;
                FitResult bad;
                bad.coef = GroupCoefficients(design.p());
                bad.converged = false;
                bad.objective = std::numeric_limits<double>::quiet_NaN();
                record(lambda, bad, true);
                if (!path.solutions.empty()) {
                    // Restart from the last good solution.
                    const GroupCoefficients* good = nullptr;
                    for (std::size_t k = path.solutions.size(); k-- > 0;)
                        if (!path.failed[k]) {
                            good = &path.solutions[k];
                            break;
                        }
                    solver.reset(good);
                }
            }
        }
    }

    path.loss = config.loss;
    SupportPattern last_support;
    double last_refit = kInf;
    for (std::size_t k = 0; k < path.size(); ++k) {
        double loss = kInf;
        if (!path.failed[k] && config.bic_fit == BicFit::Penalized) {
            loss = loss_value(design, path.solutions[k], config.loss);
        } else if (!path.failed[k]) {
            auto support = group_support(path.solutions[k], design.structure());
            if (k == 0 || support != last_support) {
                last_refit = loss_value(design, refit(design, support, config.loss).coef, config.loss);
                last_support = std::move(support);
            }
            loss = last_refit;
        }
        path.losses.push_back(loss);
        path.bic_scores.push_back(path.failed[k] ? kInf : bic_score(loss, path.df[k], n, config.loss));
    }
    return path;
}

double bic_score(double loss_value, Index df, Index n, Loss loss)
{
    if (df >= n) return kInf;
    const double dn = static_cast<double>(n);
    const double penalty = static_cast<double>(df) * std::log(dn);
    if (loss == Loss::Squared) return dn * std::log(loss_value / dn) + penalty;
    return loss_value + penalty;
}

BicChoice bic_select(const PathFit& path, const GroupStructure& structure, Index n)
{
    if (path.size() == 0) throw Error(ErrorCode::AllPathsFailed, "empty path");
    std::size_t best = path.size();
    double best_score = kInf;
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path.failed[k]) continue;
        const double score = bic_score(path.losses[k], path.df[k], n, path.loss);
        if (std::isnan(score)) continue;
        if (best == path.size() || score < best_score) {
            best = k;
            best_score = score;
        }
    }
    if (best == path.size()) throw Error(ErrorCode::AllPathsFailed, "every path point failed");
    return {best, group_support(path.solutions[best], structure)};
}

RefitResult refit(const GroupedDesign& design, const SupportPattern& support, Loss loss)
{
    const IndexList cols = support.mode == SupportPattern::Mode::Group
                               ? features_of(support, design.structure())
                               : support.selected;
    for (Index c : cols)
        if (c < 0 || c >= design.p()) throw Error(ErrorCode::IndexOutOfRange, "support column out of range");

    RefitResult out;
    out.coef = GroupCoefficients(design.p());
    const Vector& y = design.y();
    const Index n = design.n();
    const Index k = static_cast<Index>(cols.size());
    Matrix xm(n, k);
    for (Index j = 0; j < k; ++j) xm.col(j) = design.x().col(cols[static_cast<std::size_t>(j)]);

    if (loss == Loss::Squared) {
        if (k == 0) {
            out.coef.intercept = y.mean();
            out.flags.set(Flag::EmptyModel);
        } else {
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xm);
            if (cod.rank() < k) out.flags.set(Flag::RankDeficient);
            const Vector b = cod.solve(y);
            for (Index j = 0; j < k; ++j) out.coef.beta(cols[static_cast<std::size_t>(j)]) = b(j);
        }
    } else {
        check_labels(y);
        if (k == 0) out.flags.set(Flag::EmptyModel);
        Matrix a(n, k + 1);
        a.col(0).setOnes();
        a.rightCols(k) = xm;
        Vector theta = Vector::Zero(k + 1);
        theta(0) = null_intercept(y);
        auto loglik = [&](const Vector& th) { return -0.5 * deviance(y, a * th); };
        bool converged = false;
        for (int step = 0; step < 50; ++step) {
            const Vector eta = a * theta;
            Vector mu(n), w(n);
            for (Index i = 0; i < n; ++i) {
                mu(i) = sigmoid(eta(i));
                w(i) = mu(i) * (1.0 - mu(i));
            }
            const Vector g = a.transpose() * (y - mu);
            if (g.cwiseAbs().maxCoeff() <= 1e-8) {
                converged = true;
                break;
            }
            Matrix h = a.transpose() * w.asDiagonal() * a;
            h.diagonal().array() += 1e-8;
            const Vector dir = h.ldlt().solve(g);
            const double base = loglik(theta);
            double t = 1.0;
            for (int halve = 0; halve < 30; ++halve, t *= 0.5)
                if (loglik(theta + t * dir) >= base) break;
            theta += t * dir;
        }
        // Separation drives the gradient to zero through ever larger
        // coefficients, so a saturated linear predictor counts as well.
        if (!converged || (k > 0 && (a * theta).cwiseAbs().minCoeff() > 15.0))
            out.flags.set(Flag::SeparableData);
        if (!theta.allFinite()) throw Error(ErrorCode::NonFiniteEncountered, "logistic refit diverged");
        out.coef.intercept = theta(0);
        for (Index j = 0; j < k; ++j) out.coef.beta(cols[static_cast<std::size_t>(j)]) = theta(j + 1);
    }
    out.gradient_norm = refit_gradient_norm(design, cols, out.coef, loss);
    return out;
}

double refit_gradient_norm(const GroupedDesign& design, const IndexList& columns,
                           const GroupCoefficients& coef, Loss loss)
{
    Vector r;
    if (loss == Loss::Squared) {
        r = design.y() - predict(design.x(), coef);
    } else {
        r = loss_residual(design, coef, loss);
    }
    double worst = loss == Loss::Logistic ? std::abs(2.0 * r.sum()) : 0.0;
    for (Index c : columns) worst = std::max(worst, std::abs(2.0 * design.x().col(c).dot(r)));
    return worst;
}

} // namespace dcglasso
