#include "dcglasso/simgen.hpp"

#include <algorithm>
#include <cmath>

namespace dcglasso {

namespace {

double population_sd(const Vector& v)
{
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    // splitmix64 finalizer applied over the inputs
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
}

ScenarioSpec ScenarioSpec::preset(int scenario, Index n, std::uint64_t seed)
{
    ScenarioSpec s;
    s.n = n;
    s.seed = seed;
    switch (scenario) {
    case 1: s.p = 300; s.q = 100; s.s = 10; s.rho = 0.5; break;
    case 2: s.p = 300; s.q = 100; s.s = 20; s.rho = 0.5; break;
    case 3: s.p = 3000; s.q = 1000; s.s = 10; s.rho = 0.5; break;
    case 4: s.p = 3000; s.q = 1000; s.s = 20; s.rho = 0.5; break;
    case 5: s.p = 3000; s.q = 1000; s.s = 10; s.rho = 0.0; break;
    case 6: s.p = 3000; s.q = 1000; s.s = 20; s.rho = 0.0; break;
    default: throw Error(ErrorCode::InvalidArgument, "scenario must be 1..6");
    }
    return s;
}

void ScenarioSpec::validate() const
{
    if (q < 1 || p != 3 * q) throw Error(ErrorCode::InvalidArgument, "scenario needs p = 3q, q >= 1");
    if (s < 1 || s > q || q % s != 0)
        throw Error(ErrorCode::InvalidArgument, "sparsity stride s must divide q");
    if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in [0, 1)");
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
    if (!(snr > 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be positive");
}

IndexList GroundTruth::active_features() const
{
    IndexList out;
    for (Index j = 0; j < beta_true.size(); ++j)
        if (beta_true(j) != 0.0) out.push_back(j);
    return out;
}

Matrix gen_equicorrelated(Index n, Index q, double rho, std::mt19937_64& rng)
{
    if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in [0, 1)");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double shared = std::sqrt(rho);
    const double own = std::sqrt(1.0 - rho);
    Matrix z(n, q);
    for (Index i = 0; i < n; ++i) {
        const double g = normal(rng);
        for (Index j = 0; j < q; ++j) z(i, j) = shared * g + own * normal(rng);
    }
    return z;
}

SimulatedData gen_scenario(const ScenarioSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const Index n = spec.n;
    const Index q = spec.q;

    Matrix x(n, spec.p);
    FlagSet flags;
    for (int attempt = 0;; ++attempt) {
        const Matrix z = gen_equicorrelated(n, q, spec.rho, rng);
        bool degenerate = false;
        for (Index i = 0; i < q && !degenerate; ++i) {
            const Vector zi = z.col(i);
            const Vector z2 = zi.array().square();
            const Vector z3 = zi.array().cube();
            const double n2 = z2.norm();
            const double n3 = z3.norm();
            if (!(n2 > 0.0) || !(n3 > 0.0) || !std::isfinite(n2) || !std::isfinite(n3)) {
                degenerate = true;
                break;
            }
            x.col(3 * i) = zi;
            x.col(3 * i + 1) = z2 / n2;
            x.col(3 * i + 2) = z3 / n3;
        }
        if (!degenerate) break;
        if (attempt >= 10) throw Error(ErrorCode::DegenerateColumn, "could not draw non-degenerate Z");
        flags.set(Flag::GroupsResampled);
    }

    GroundTruth truth;
    truth.flags = flags;
    truth.t.resize(q);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < q; ++i) {
        const bool u = coin(rng);
        const double v = normal(rng);
        truth.t(i) = (u ? -1.0 : 1.0) * (3.0 + v);
    }
    truth.beta_true = Vector::Zero(spec.p);
    for (Index one_based = spec.s; one_based <= q; one_based += spec.s) {
        const Index i = one_based - 1;
        truth.active_groups.push_back(i);
        const double t = truth.t(i);
        truth.beta_true(3 * i) = 2.0 / 3.0 * t;
        truth.beta_true(3 * i + 1) = -t;
        truth.beta_true(3 * i + 2) = 1.0 / 3.0 * t;
    }

    const Vector signal = x * truth.beta_true;
    Vector eps(n);
    for (Index i = 0; i < n; ++i) eps(i) = normal(rng);
    const double sd_signal = population_sd(signal);
    truth.noise_scale = spec.snr_mode == SnrMode::SdRatio ? sd_signal / spec.snr
                                                          : sd_signal / std::sqrt(spec.snr);
    truth.noise = truth.noise_scale * eps;
    Vector y = signal + truth.noise;

    std::vector<Index> sizes(static_cast<std::size_t>(q), 3);
    auto structure = GroupStructure::contiguous(sizes);
    return {GroupedDesign(std::move(x), std::move(y), std::move(structure)), std::move(truth)};
}

std::vector<IndexList> overlap_chain_groups(Index p)
{
    if (p < 10 || p % 5 != 0) throw Error(ErrorCode::InvalidArgument, "overlap chain needs p >= 10, p % 5 == 0");
    std::vector<IndexList> groups;
    for (Index start = 0; start + 10 <= p; start += 5) {
        IndexList g(10);
        for (Index j = 0; j < 10; ++j) g[static_cast<std::size_t>(j)] = start + j;
        groups.push_back(std::move(g));
    }
    return groups;
}

SimulatedData gen_overlap_scenario(Index p, Index n, std::uint64_t seed)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    auto groups = overlap_chain_groups(p);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick(0.1);
    std::normal_distribution<double> normal(0.0, 1.0);

    GroundTruth truth;
    for (int attempt = 0; truth.active_groups.empty(); ++attempt) {
        if (attempt > 0) truth.flags.set(Flag::GroupsResampled);
        for (std::size_t g = 0; g < groups.size(); ++g)
            if (pick(rng)) truth.active_groups.push_back(static_cast<Index>(g));
    }
    std::vector<bool> in_support(static_cast<std::size_t>(p), false);
    for (Index g : truth.active_groups)
        for (Index f : groups[static_cast<std::size_t>(g)]) in_support[static_cast<std::size_t>(f)] = true;
    truth.beta_true = Vector::Zero(p);
    for (Index f = 0; f < p; ++f)
        if (in_support[static_cast<std::size_t>(f)]) truth.beta_true(f) = normal(rng);

    Matrix x(n, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < n; ++i) x(i, j) = normal(rng);
    truth.noise_scale = 0.01;
    truth.noise.resize(n);
    for (Index i = 0; i < n; ++i) truth.noise(i) = truth.noise_scale * normal(rng);
    Vector y = x * truth.beta_true + truth.noise;

    auto structure = GroupStructure::validate(std::move(groups), p, true);
    return {GroupedDesign(std::move(x), std::move(y), std::move(structure)), std::move(truth)};
}

} // namespace dcglasso
