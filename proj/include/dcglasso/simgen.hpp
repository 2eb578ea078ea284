#pragma once
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "dcglasso/core.hpp"

namespace dcglasso {

enum class SnrMode {
    SdRatio,        ///< sd(signal) / (k sd(eps)) = snr
    VarianceRatio,  ///< var(signal) / var(k eps) = snr
};

/// Parameters of the cubic-expansion simulation model.
struct ScenarioSpec
{
    Index p = 300;
    Index q = 100;
    Index s = 10;       ///< groups whose 1-based index is a multiple of s are active
    double rho = 0.5;   ///< equicorrelation between the Z_i
    Index n = 1000;
    std::uint64_t seed = 0;
    double snr = 3.0;
    SnrMode snr_mode = SnrMode::SdRatio;

    /// Presets 1..6.
    static ScenarioSpec preset(int scenario, Index n, std::uint64_t seed);
    void validate() const;
};

struct GroundTruth
{
    Vector beta_true;
    IndexList active_groups;
    double noise_scale = 0.0;
    Vector t;               ///< per-group signed magnitudes (all groups drawn, active ones used)
    Vector noise;           ///< realized k * eps
    FlagSet flags;

    /// Feature-level support of beta_true.
    IndexList active_features() const;
};

struct SimulatedData
{
    GroupedDesign design;
    GroundTruth truth;
};

/// n x q matrix with i.i.d. rows from N(0, Sigma), Sigma_jj = 1, Sigma_jk = rho.
Matrix gen_equicorrelated(Index n, Index q, double rho, std::mt19937_64& rng);

SimulatedData gen_scenario(const ScenarioSpec& spec);

/// Chain of 10-feature groups with stride 5 over p features; each group is
/// active with probability 0.1; Y = X beta + 0.01 eps.
SimulatedData gen_overlap_scenario(Index p, Index n, std::uint64_t seed);

/// Groups of the overlap chain over p features.
std::vector<IndexList> overlap_chain_groups(Index p);

/// Deterministic 64-bit seed mixing.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace dcglasso
