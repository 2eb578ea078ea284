#include <doctest.h>

#include <random>

#include "dcglasso/solver.hpp"
#include "support.hpp"

using namespace dcglasso;
using testsupport::random_design;

TEST_SUITE("solver")
{
    TEST_CASE("lambda_max: orthogonal response gives 0")
    {
        Matrix x(4, 2);
        x << 1, 1, -1, 1, 1, -1, -1, -1;
        Vector y(4);
        y << 1, -1, -1, 1;    // orthogonal to both columns
        const GroupedDesign d(x, y, GroupStructure::contiguous({2}));
        CHECK(lambda_max(d) == 0.0);
        const auto path = fit_path(d);
        CHECK(path.flags.has(Flag::ZeroResponse));
        CHECK(path.solutions.front().beta.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("lambda_max: closed form 2*||(3,4)|| / w")
    {
        Matrix x = Matrix::Identity(2, 2);
        Vector y(2);
        y << 3, 4;
        const auto s = GroupStructure::contiguous({2}).unweighted();
        CHECK(lambda_max(GroupedDesign(x, y, s)) == doctest::Approx(10.0).epsilon(1e-14));
    }

    TEST_CASE("lambda_max brackets the all-zero solution")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto d = standardize(random_design(20, 3, 2, seed, 2));
            const double v = lambda_max(d);
            REQUIRE(v > 0.0);
            CHECK(fit_glasso(d, v * (1 + 1e-6)).coef.beta.cwiseAbs().maxCoeff() == 0.0);
            CHECK(fit_glasso(d, v * (1 - 1e-2)).coef.beta.cwiseAbs().maxCoeff() > 0.0);
        }
    }

    TEST_CASE("lambda_path is log-spaced")
    {
        SolverConfig c;
        c.path_length = 3;
        c.lambda_min_ratio = 0.01;
        const auto l = lambda_path(1.0, c);
        REQUIRE(l.size() == 3);
        CHECK(l[0] == 1.0);
        CHECK(l[1] == doctest::Approx(0.1).epsilon(1e-14));
        CHECK(l[2] == doctest::Approx(0.01).epsilon(1e-14));

        c.path_length = 1;
        CHECK(lambda_path(7.0, c) == std::vector<double>{7.0});

        c.path_length = 5;
        const auto g = lambda_path(10.0, c);
        for (std::size_t k = 1; k < g.size(); ++k)
            CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(10.0, -0.5)).epsilon(1e-12));
    }

    TEST_CASE("auto lambda_min_ratio depends on n vs p")
    {
        SolverConfig c;
        CHECK(c.min_ratio_for(100, 10) == 1e-3);
        CHECK(c.min_ratio_for(10, 100) == 5e-2);
        c.lambda_min_ratio = 0.2;
        CHECK(c.min_ratio_for(10, 100) == 0.2);
    }

    TEST_CASE("config validation")
    {
        SolverConfig c;
        c.path_length = 0;
        CHECK_THROWS_AS(c.validate(), Error);
        c = {};
        c.lambda_min_ratio = 1.0;
        CHECK_THROWS_AS(c.validate(), Error);
        c = {};
        c.tol = 0.0;
        CHECK_THROWS_AS(c.validate(), Error);
        c = {};
        c.max_iter = 0;
        CHECK_THROWS_AS(c.validate(), Error);
    }

    TEST_CASE("lambda above lambda_max gives the zero vector")
    {
        const auto d = standardize(random_design(30, 4, 3, 4, 2));
        const auto fit = fit_glasso(d, 2.0 * lambda_max(d));
        CHECK(fit.coef.beta.cwiseAbs().maxCoeff() == 0.0);
        CHECK(kkt_residual(d, fit.coef, 2.0 * lambda_max(d)) <= 1e-12);
    }

    TEST_CASE("lambda = 0 on a full-rank design is least squares")
    {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto d = standardize(random_design(40, 3, 2, seed, 3));
            SolverConfig c;
            c.tol = 1e-12;
            c.max_iter = 100000;
            const auto fit = fit_glasso(d, 0.0, c);
            const Vector ols = testsupport::normal_equations(d.x(), d.y());
            CHECK((fit.coef.beta - ols).cwiseAbs().maxCoeff() <= 1e-6);
            CHECK(kkt_residual(d, GroupCoefficients(ols, 0.0), 0.0) <= 1e-8);
        }
    }

    TEST_CASE("fit matches the proximal-gradient oracle")
    {
        const auto d = standardize(random_design(30, 2, 3, 21, 1));
        const double lambda = 0.3 * lambda_max(d);
        const auto fit = fit_glasso(d, lambda);
        CHECK(kkt_residual(d, fit.coef, lambda) <= 1e-6);
        const Vector oracle = testsupport::ista_oracle(d.x(), d.y(), d.structure(), lambda);
        const double jo = testsupport::glasso_objective(d.x(), d.y(), d.structure(), oracle, lambda);
        const double jf = testsupport::glasso_objective(d.x(), d.y(), d.structure(), fit.coef.beta, lambda);
        CHECK(std::abs(jf - jo) <= 1e-8 * std::max(1.0, jo));
        CHECK(objective(d, fit.coef, lambda) == doctest::Approx(jf).epsilon(1e-12));
    }

    TEST_CASE("objective never increases across sweeps (property)")
    {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const auto d = standardize(random_design(25, 5, 2, rng(), 3));
            SolverConfig c;
            c.trace_objective = true;
            const double lambda = 0.05 * lambda_max(d) * (1 + trial);
            const auto fit = fit_glasso(d, lambda, c);
            for (std::size_t k = 1; k < fit.objective_trace.size(); ++k)
                CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] * (1 + 1e-13));
        }
    }

    TEST_CASE("converged fits satisfy KKT within 10*tol (property)")
    {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 40; ++trial) {
            const auto d = standardize(random_design(30, 4, 3, rng(), 2));
            SolverConfig c;
            const double lambda = u(rng) * lambda_max(d);
            const auto fit = fit_glasso(d, lambda, c);
            REQUIRE(fit.converged);
            CHECK(kkt_residual(d, fit.coef, lambda) <= 10 * c.tol);
        }
    }

    TEST_CASE("warm and cold starts agree")
    {
        const auto d = standardize(random_design(50, 6, 2, 8, 3));
        SolverConfig c;
        c.path_length = 15;
        c.lambda_min_ratio = 0.01;
        const auto path = fit_path(d, c);
        for (std::size_t k = 0; k < path.size(); ++k) {
            const auto cold = fit_glasso(d, path.lambdas[k], c);
            CHECK(std::abs(cold.objective - path.objective_values[k]) <= 1e-6);
        }
    }

    TEST_CASE("path invariants")
    {
        const auto d = standardize(random_design(50, 6, 2, 9, 2));
        const auto path = fit_path(d);
        for (std::size_t k = 1; k < path.size(); ++k) CHECK(path.lambdas[k] < path.lambdas[k - 1]);
        CHECK(path.lambdas[0] == lambda_max(d));
        CHECK(path.solutions[0].beta.cwiseAbs().maxCoeff() == 0.0);
        for (double v : path.objective_values) CHECK(std::isfinite(v));

        SolverConfig one;
        one.path_length = 1;
        const auto single = fit_path(d, one);
        REQUIRE(single.size() == 1);
        CHECK(single.solutions[0].beta.cwiseAbs().maxCoeff() == 0.0);
        CHECK(bic_select(single, d.structure(), d.n()).index == 0);
    }

    TEST_CASE("saturated path stops early")
    {
        const auto d = standardize(random_design(8, 6, 2, 10, 3));
        SolverConfig c;
        c.lambda_min_ratio = 1e-4;
        const auto path = fit_path(d, c);
        CHECK(path.df.back() >= d.n());
        for (std::size_t k = 0; k + 1 < path.size(); ++k) CHECK(path.df[k] < d.n());
        CHECK(std::isinf(path.bic_scores.back()));
    }

    TEST_CASE("permuting group order permutes the solution blocks")
    {
        const auto d = standardize(random_design(40, 4, 3, 12, 2));
        const IndexList order{2, 0, 3, 1};
        Matrix xp(d.n(), d.p());
        std::vector<Index> sizes;
        IndexList new_col;
        for (Index g : order)
            for (Index f : d.structure().group(g)) new_col.push_back(f);
        for (Index j = 0; j < d.p(); ++j) xp.col(j) = d.x().col(new_col[static_cast<std::size_t>(j)]);
        const GroupedDesign dp(xp, d.y(), GroupStructure::contiguous({3, 3, 3, 3}));
        SolverConfig c;
        c.path_length = 20;
        c.tol = 1e-12;
        const auto a = fit_path(d, c), b = fit_path(dp, c);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            const auto sa = group_support(a.solutions[k], d.structure());
            const auto sb = group_support(b.solutions[k], dp.structure());
            IndexList mapped;
            for (Index g : sb.selected) mapped.push_back(order[static_cast<std::size_t>(g)]);
            std::sort(mapped.begin(), mapped.end());
            CHECK(mapped == sa.selected);
            for (Index j = 0; j < d.p(); ++j)
                CHECK(std::abs(b.solutions[k].beta(j) - a.solutions[k].beta(new_col[static_cast<std::size_t>(j)])) <=
                      1e-8);
        }
    }

    TEST_CASE("BIC ties go to the larger lambda")
    {
        PathFit p;
        p.lambdas = {2.0, 1.0};
        p.solutions = {GroupCoefficients(2), GroupCoefficients(2)};
        p.losses = {5.0, 5.0};
        p.df = {0, 0};
        p.failed = {false, false};
        p.converged = {true, true};
        const auto s = GroupStructure::contiguous({2});
        CHECK(bic_select(p, s, 10).index == 0);

        p.losses = {5.0, 1.0};
        p.df = {0, 1};
        p.solutions[1].beta(0) = 1.0;
        const auto choice = bic_select(p, s, 10);
        CHECK(choice.index == 1);
        CHECK(choice.support.selected == IndexList{0});

        p.failed = {true, true};
        CHECK_THROWS_AS(bic_select(p, s, 10), Error);
        CHECK(std::isinf(bic_score(1.0, 10, 10, Loss::Squared)));
        CHECK(bic_score(20.0, 2, 10, Loss::Squared) == doctest::Approx(10 * std::log(2.0) + 2 * std::log(10.0)));
    }

    TEST_CASE("refit: identity design returns y")
    {
        Vector y(3);
        y << 1.5, -2, 7;
        const GroupedDesign d(Matrix::Identity(3, 3), y, GroupStructure::contiguous({1, 2}));
        const auto r = refit(d, SupportPattern(SupportPattern::Mode::Group, {0, 1}), Loss::Squared);
        CHECK((r.coef.beta - y).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK(r.flags.empty());
    }

    TEST_CASE("refit: empty support is intercept only")
    {
        const auto d = random_design(20, 2, 2, 3);
        const auto r = refit(d, SupportPattern(), Loss::Squared);
        CHECK(r.coef.beta.cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.coef.intercept == doctest::Approx(d.y().mean()).epsilon(1e-14));
        CHECK(r.flags.has(Flag::EmptyModel));
    }

    TEST_CASE("refit matches the normal equations")
    {
        const auto d = random_design(100, 3, 3, 17, 3);
        const auto r = refit(d, SupportPattern(SupportPattern::Mode::Group, {0, 1, 2}), Loss::Squared);
        const Vector oracle = testsupport::normal_equations(d.x(), d.y());
        CHECK((r.coef.beta - oracle).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(r.gradient_norm <= 1e-8);
    }

    TEST_CASE("rank-deficient refit is flagged")
    {
        Matrix x = Matrix::Ones(10, 2);
        x.col(1) *= 2.0;
        const GroupedDesign d(x, Vector::LinSpaced(10, 0, 1), GroupStructure::contiguous({2}));
        const auto r = refit(d, SupportPattern(SupportPattern::Mode::Group, {0}), Loss::Squared);
        CHECK(r.flags.has(Flag::RankDeficient));
        CHECK(r.coef.beta.allFinite());
    }

    TEST_CASE("nested supports have monotone RSS (property)")
    {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 30; ++trial) {
            const auto d = standardize(random_design(40, 6, 2, rng(), 3));
            IndexList b;
            for (Index g = 0; g < 6; ++g)
                if (rng() % 2) b.push_back(g);
            IndexList a;
            for (Index g : b)
                if (rng() % 2) a.push_back(g);
            const double ra = loss_value(d, refit(d, {SupportPattern::Mode::Group, a}, Loss::Squared).coef,
                                         Loss::Squared);
            const double rb = loss_value(d, refit(d, {SupportPattern::Mode::Group, b}, Loss::Squared).coef,
                                         Loss::Squared);
            CHECK(rb <= ra + 1e-10);
        }
    }

    TEST_CASE("logistic loss: path, KKT and refit")
    {
        std::mt19937_64 rng(41);
        const Index n = 200;
        Matrix x = testsupport::gaussian_matrix(n, 6, rng);
        Vector y(n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Index i = 0; i < n; ++i) {
            const double eta = 1.5 * x(i, 0) - x(i, 1) + 0.3;
            y(i) = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        }
        const auto d = standardize(GroupedDesign(x, y, GroupStructure::contiguous({2, 2, 2})), Loss::Logistic);
        SolverConfig c;
        c.loss = Loss::Logistic;
        c.path_length = 20;
        const double lmax = lambda_max(d, c);
        REQUIRE(lmax > 0.0);
        CHECK(fit_glasso(d, lmax * (1 + 1e-6), c).coef.beta.cwiseAbs().maxCoeff() == 0.0);
        const double lambda = 0.2 * lmax;
        const auto fit = fit_glasso(d, lambda, c);
        CHECK(kkt_residual(d, fit.coef, lambda, c) <= 1e-6);
        const auto path = fit_path(d, c);
        const auto choice = bic_select(path, d.structure(), n);
        CHECK(choice.support.contains(0));
        const auto r = refit(d, choice.support, Loss::Logistic);
        CHECK(r.gradient_norm <= 1e-6);
        CHECK_FALSE(r.flags.has(Flag::SeparableData));
    }

    TEST_CASE("separable logistic data is flagged, not fatal")
    {
        Matrix x(6, 1);
        x << -3, -2, -1, 1, 2, 3;
        Vector y(6);
        y << 0, 0, 0, 1, 1, 1;
        const GroupedDesign d(x, y, GroupStructure::contiguous({1}));
        const auto r = refit(d, SupportPattern(SupportPattern::Mode::Group, {0}), Loss::Logistic);
        CHECK(r.flags.has(Flag::SeparableData));
        CHECK(r.coef.beta.allFinite());
    }
}
