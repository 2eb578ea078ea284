#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcglasso/bench.hpp"
#include "dcglasso/dc.hpp"
#include "dcglasso/overlap.hpp"
#include "dcglasso/simgen.hpp"

namespace dcglasso {

inline constexpr const char* kToolName = "dcglasso";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// ---- datasets -------------------------------------------------------------

struct Dataset
{
    GroupedDesign design;
    std::optional<Vector> beta_true;
    std::optional<std::uint64_t> seed;
};

/// CSV with header y,x0,...,x{p-1}; 17 significant digits.
std::string dataset_csv(const GroupedDesign& design);
/// Companion JSON: groups, overlapping, beta_true, seed and generator details.
Json dataset_json(const SimulatedData& data, std::uint64_t seed, const Json& generator);

/// Writes prefix.csv and prefix.json.
void write_dataset(const std::string& prefix, const SimulatedData& data, std::uint64_t seed, const Json& generator);

/**
 * Reads a dataset. Groups come from `groups_path` if given, else from the
 * sibling file with the .json extension. Without either, every column is
 * its own group.
 */
Dataset read_dataset(const std::string& csv_path, const std::optional<std::string>& groups_path = {});
Dataset parse_dataset(const std::string& csv_text, const std::optional<Json>& meta);

// ---- run configuration ----------------------------------------------------

struct RunConfig
{
    DcConfig dc;
    OverlapStrategy strategy = OverlapStrategy::SelectAndDiscard;
};

/// Effective configuration (worker count is not echoed; it never changes results).
Json config_to_json(const RunConfig& config);
/// Applies the keys present in `j` over `base`; unknown keys are rejected.
RunConfig config_from_json(const Json& j, RunConfig base = {});

// ---- result files ---------------------------------------------------------

struct ResultFile
{
    std::string tool = kToolName;
    std::string version = kToolVersion;
    bool overlap = false;
    RunConfig config;
    Index n = 0;
    Index p = 0;
    DcResult result;
    IndexList support_groups;       ///< groups whose features are all selected
    IndexList support_features;
};

Json result_to_json(const ResultFile& r);
ResultFile result_from_json(const Json& j);
/// Pretty-printed JSON text with a trailing newline.
std::string dump_json(const Json& j);

/// Runs the DC pipeline matching the structure (plain or overlapping).
ResultFile run_fit(const GroupedDesign& design, const RunConfig& config);

// ---- benchmark grids --------------------------------------------------------

struct VoteMcSpec
{
    double p = 0.9;
    std::vector<int> ms{1, 5, 15, 25};
    int reps = 1000;
    std::uint64_t seed = 0;
};

struct GridFile
{
    std::optional<BenchGrid> grid;
    std::optional<VoteMcSpec> vote_mc;
};

GridFile grid_from_json(const Json& j);

// ---- consistency check ----------------------------------------------------

struct CheckReport
{
    struct Shard
    {
        int id = 0;
        bool failed = false;
        double kkt = 0.0;
        double gradient_norm = 0.0;
    };
    std::vector<Shard> shards;
    double average_error = 0.0;     ///< max |beta - mean(stage-2 estimates)|
    double support_error = 0.0;     ///< max |beta| outside the support
    bool ok = true;
    std::vector<std::string> violations;
};

/// Recomputes the shards from the echoed config and verifies the stage-1
/// KKT certificates, the stage-2 stationarity and the final average.
CheckReport check_result(const GroupedDesign& design, const ResultFile& result, double tol = 1e-6);

} // namespace dcglasso
