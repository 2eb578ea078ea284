// Shared fixtures and independent oracles for the test binaries.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "dcglasso/core.hpp"
#include "dcglasso/solver.hpp"

namespace testsupport {

using dcglasso::GroupCoefficients;
using dcglasso::GroupedDesign;
using dcglasso::GroupStructure;
using dcglasso::Index;
using dcglasso::IndexList;
using dcglasso::Matrix;
using dcglasso::Vector;

inline Matrix gaussian_matrix(Index n, Index p, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    Matrix x(n, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) x(i, j) = z(rng);
    return x;
}

inline Vector gaussian_vector(Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = z(rng);
    return v;
}

/// q equal contiguous groups over p = q * d columns, y = X b + noise with
/// the first `active` groups carrying signal.
inline GroupedDesign random_design(Index n, Index q, Index d, std::uint64_t seed, Index active = 1,
                                   double noise = 1.0)
{
    std::mt19937_64 rng(seed);
    const Index p = q * d;
    Matrix x = gaussian_matrix(n, p, rng);
    Vector b = Vector::Zero(p);
    std::normal_distribution<double> z;
    for (Index j = 0; j < std::min(active, q) * d; ++j) b(j) = 2.0 + z(rng);
    Vector y = x * b + noise * gaussian_vector(n, rng);
    return GroupedDesign(std::move(x), std::move(y), GroupStructure::contiguous(std::vector<Index>(q, d)));
}

/// Least squares through the normal equations in long double.
inline Vector normal_equations(const Matrix& x, const Vector& y)
{
    using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const LMatrix xl = x.cast<long double>();
    const LVector yl = y.cast<long double>();
    const LMatrix g = xl.transpose() * xl;
    const LVector rhs = xl.transpose() * yl;
    return g.llt().solve(rhs).cast<double>();
}

/// Neumaier-compensated mean.
inline double compensated_mean(const std::vector<double>& v)
{
    double sum = 0.0, c = 0.0;
    for (double x : v) {
        const double t = sum + x;
        c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return (sum + c) / static_cast<double>(v.size());
}

/// J(b) = ||y - Xb||^2 + lambda * sum w_i ||b_i|| computed in long double.
inline double glasso_objective(const Matrix& x, const Vector& y, const GroupStructure& s, const Vector& b,
                               double lambda)
{
    long double rss = 0.0L;
    const Vector r = y - x * b;
    for (Index i = 0; i < r.size(); ++i) rss += static_cast<long double>(r(i)) * r(i);
    long double pen = 0.0L;
    for (Index g = 0; g < s.num_groups(); ++g) {
        long double sq = 0.0L;
        for (Index f : s.group(g)) sq += static_cast<long double>(b(f)) * b(f);
        pen += static_cast<long double>(s.weight(g)) * std::sqrt(sq);
    }
    return static_cast<double>(rss + lambda * pen);
}

/**
 * Proximal gradient (ISTA) on the group-lasso objective, step 1/L with
 * L = 2 sigma_max(X)^2. Stops early once an iteration leaves the iterate
 * unchanged to within 1e-15.
 */
inline Vector ista_oracle(const Matrix& x, const Vector& y, const GroupStructure& s, double lambda,
                          long iterations = 1000000)
{
    const double sigma = Eigen::JacobiSVD<Matrix>(x).singularValues()(0);
    const double step = 1.0 / (2.0 * sigma * sigma);
    const Matrix gram = x.transpose() * x;
    const Vector xty = x.transpose() * y;
    Vector b = Vector::Zero(x.cols());
    Vector next(x.cols());
    for (long it = 0; it < iterations; ++it) {
        const Vector u = b - step * 2.0 * (gram * b - xty);
        for (Index g = 0; g < s.num_groups(); ++g) {
            double norm = 0.0;
            for (Index f : s.group(g)) norm += u(f) * u(f);
            norm = std::sqrt(norm);
            const double shrink = norm > 0.0 ? std::max(0.0, 1.0 - step * lambda * s.weight(g) / norm) : 0.0;
            for (Index f : s.group(g)) next(f) = shrink * u(f);
        }
        const double change = (next - b).cwiseAbs().maxCoeff();
        b = next;
        if (change <= 1e-15 * std::max(1.0, b.cwiseAbs().maxCoeff())) break;
    }
    return b;
}

inline std::vector<double> column(const Matrix& x, Index j)
{
    return {x.col(j).data(), x.col(j).data() + x.rows()};
}

inline double sample_correlation(const Vector& a, const Vector& b)
{
    const double ma = a.mean(), mb = b.mean();
    const Vector da = a.array() - ma, db = b.array() - mb;
    return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

} // namespace testsupport
