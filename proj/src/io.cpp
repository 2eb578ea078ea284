#include "dcglasso/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dcglasso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void parse_error(const std::string& what)
{
    throw Error(ErrorCode::ParseError, what);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) parse_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "write to '" + path + "' failed");
}

Json parse_json_text(const std::string& text, const std::string& what)
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        parse_error(what + ": " + e.what());
    }
}

// Non-finite doubles are written as null and read back as NaN.
Json num(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

double get_num(const Json& j)
{
    if (j.is_null()) return kNaN;
    if (!j.is_number()) parse_error("expected a number");
    return j.get<double>();
}

Json vec(const Vector& v)
{
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

Vector get_vec(const Json& j)
{
    if (!j.is_array()) parse_error("expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = get_num(j[i]);
    return v;
}

Json index_list(const IndexList& l)
{
    Json a = Json::array();
    for (Index i : l) a.push_back(i);
    return a;
}

IndexList get_index_list(const Json& j)
{
    if (!j.is_array()) parse_error("expected an array of indices");
    IndexList out;
    for (const auto& e : j) {
        if (!e.is_number_integer()) parse_error("expected an integer index");
        out.push_back(e.get<Index>());
    }
    return out;
}

template <class T>
T get_field(const Json& j, const char* key)
{
    if (!j.contains(key)) parse_error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        parse_error(std::string("field '") + key + "' has the wrong type");
    }
}

const Json& get_obj(const Json& j, const char* key)
{
    if (!j.contains(key)) parse_error(std::string("missing field '") + key + "'");
    return j.at(key);
}

Json flags_json(FlagSet f)
{
    Json a = Json::array();
    for (const auto& n : f.names()) a.push_back(n);
    return a;
}

FlagSet get_flags(const Json& j)
{
    return FlagSet::from_names(j.get<std::vector<std::string>>());
}

std::string_view trim_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::size_t line)
{
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        parse_error("line " + std::to_string(line) + ": '" + std::string(field) + "' is not a number");
    if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteInput, "line " + std::to_string(line) + ": non-finite value");
    return v;
}

} // namespace

// ---- datasets -------------------------------------------------------------

std::string dataset_csv(const GroupedDesign& design)
{
    std::string out = "y";
    for (Index j = 0; j < design.p(); ++j) out += ",x" + std::to_string(j);
    out += '\n';
    for (Index i = 0; i < design.n(); ++i) {
        out += format_double(design.y()(i));
        for (Index j = 0; j < design.p(); ++j) {
            out += ',';
            out += format_double(design.x()(i, j));
        }
        out += '\n';
    }
    return out;
}

Json dataset_json(const SimulatedData& data, std::uint64_t seed, const Json& generator)
{
    const auto& s = data.design.structure();
    Json j;
    Json groups = Json::array();
    for (const auto& g : s.groups()) groups.push_back(index_list(g));
    j["groups"] = std::move(groups);
    j["overlapping"] = s.overlapping();
    j["beta_true"] = vec(data.truth.beta_true);
    j["seed"] = seed;
    j["generator"] = generator;
    j["active_groups"] = index_list(data.truth.active_groups);
    j["noise_scale"] = num(data.truth.noise_scale);
    j["flags"] = flags_json(data.truth.flags);
    return j;
}

void write_dataset(const std::string& prefix, const SimulatedData& data, std::uint64_t seed, const Json& generator)
{
    write_file(prefix + ".csv", dataset_csv(data.design));
    write_file(prefix + ".json", dump_json(dataset_json(data, seed, generator)));
}

Dataset parse_dataset(const std::string& csv_text, const std::optional<Json>& meta)
{
    std::string_view text(csv_text);
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        const auto line = trim_cr(text.substr(start, pos - start));
        if (!line.empty()) lines.push_back(line);
        start = pos + 1;
    }
    if (lines.empty()) parse_error("empty CSV");

    const auto header = split_commas(lines[0]);
    if (header.size() < 2 || header[0] != "y") parse_error("CSV header must start with y and name at least one x column");
    const Index p = static_cast<Index>(header.size()) - 1;
    for (Index j = 0; j < p; ++j)
        if (header[static_cast<std::size_t>(j) + 1] != "x" + std::to_string(j))
            parse_error("CSV header column " + std::to_string(j + 1) + " must be x" + std::to_string(j));
    const Index n = static_cast<Index>(lines.size()) - 1;
    if (n < 1) parse_error("CSV has no data rows");

    Matrix x(n, p);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        const auto fields = split_commas(lines[static_cast<std::size_t>(i) + 1]);
        if (static_cast<Index>(fields.size()) != p + 1)
            parse_error("line " + std::to_string(i + 2) + ": expected " + std::to_string(p + 1) + " fields");
        y(i) = parse_double(fields[0], static_cast<std::size_t>(i) + 2);
        for (Index j = 0; j < p; ++j) x(i, j) = parse_double(fields[static_cast<std::size_t>(j) + 1], static_cast<std::size_t>(i) + 2);
    }

    std::optional<Vector> beta_true;
    std::optional<std::uint64_t> seed;
    GroupStructure structure;
    if (meta) {
        if (!meta->is_object()) parse_error("group file must be a JSON object");
        std::vector<IndexList> groups;
        const auto& g = get_obj(*meta, "groups");
        if (!g.is_array()) parse_error("'groups' must be an array of index arrays");
        for (const auto& e : g) groups.push_back(get_index_list(e));
        const bool overlapping = meta->contains("overlapping") ? get_field<bool>(*meta, "overlapping") : false;
        structure = GroupStructure::validate(std::move(groups), p, overlapping);
        if (meta->contains("beta_true") && !meta->at("beta_true").is_null()) {
            Vector b = get_vec(meta->at("beta_true"));
            if (b.size() != p) throw Error(ErrorCode::DimensionMismatch, "beta_true length differs from the column count");
            beta_true = std::move(b);
        }
        if (meta->contains("seed") && !meta->at("seed").is_null()) seed = get_field<std::uint64_t>(*meta, "seed");
    } else {
        structure = GroupStructure::contiguous(std::vector<Index>(static_cast<std::size_t>(p), 1));
    }
    return {GroupedDesign(std::move(x), std::move(y), std::move(structure)), std::move(beta_true), seed};
}

Dataset read_dataset(const std::string& csv_path, const std::optional<std::string>& groups_path)
{
    std::optional<Json> meta;
    std::string meta_path;
    if (groups_path) {
        meta_path = *groups_path;
    } else {
        const auto sibling = std::filesystem::path(csv_path).replace_extension(".json");
        if (std::filesystem::exists(sibling)) meta_path = sibling.string();
    }
    if (!meta_path.empty()) meta = parse_json_text(read_file(meta_path), meta_path);
    return parse_dataset(read_file(csv_path), meta);
}

// ---- run configuration ----------------------------------------------------

Json config_to_json(const RunConfig& c)
{
    const auto& s = c.dc.solver;
    Json j;
    j["m"] = c.dc.m;
    j["seed"] = c.dc.seed;
    j["loss"] = std::string(to_string(s.loss));
    j["path_length"] = s.path_length;
    j["lambda_min_ratio"] = s.lambda_min_ratio ? Json(*s.lambda_min_ratio) : Json(nullptr);
    j["tol"] = s.tol;
    j["max_iter"] = s.max_iter;
    j["weights"] = s.weights_mode == WeightsMode::Unweighted ? "unweighted" : "sqrt_size";
    j["bic_fit"] = std::string(to_string(s.bic_fit));
    j["stop_at_saturation"] = s.stop_at_saturation;
    j["standardize"] = c.dc.standardize;
    j["strategy"] = std::string(to_string(c.strategy));
    return j;
}

RunConfig config_from_json(const Json& j, RunConfig base)
{
    if (!j.is_object()) parse_error("config must be a JSON object");
    static const std::set<std::string> known{"m", "seed", "loss", "path_length", "lambda_min_ratio", "tol",
                                             "max_iter", "weights", "bic_fit", "stop_at_saturation",
                                             "standardize", "strategy"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) parse_error("unknown config key '" + key + "'");
    auto& s = base.dc.solver;
    if (j.contains("m")) base.dc.m = get_field<int>(j, "m");
    if (j.contains("seed")) base.dc.seed = get_field<std::uint64_t>(j, "seed");
    if (j.contains("loss")) s.loss = parse_loss(get_field<std::string>(j, "loss"));
    if (j.contains("path_length")) s.path_length = get_field<int>(j, "path_length");
    if (j.contains("lambda_min_ratio")) {
        if (j.at("lambda_min_ratio").is_null())
            s.lambda_min_ratio.reset();
        else
            s.lambda_min_ratio = get_field<double>(j, "lambda_min_ratio");
    }
    if (j.contains("tol")) s.tol = get_field<double>(j, "tol");
    if (j.contains("max_iter")) s.max_iter = get_field<int>(j, "max_iter");
    if (j.contains("weights")) {
        const auto w = get_field<std::string>(j, "weights");
        if (w == "sqrt_size")
            s.weights_mode = WeightsMode::SqrtSize;
        else if (w == "unweighted")
            s.weights_mode = WeightsMode::Unweighted;
        else
            parse_error("weights must be sqrt_size or unweighted");
    }
    if (j.contains("bic_fit")) s.bic_fit = parse_bic_fit(get_field<std::string>(j, "bic_fit"));
    if (j.contains("stop_at_saturation")) s.stop_at_saturation = get_field<bool>(j, "stop_at_saturation");
    if (j.contains("standardize")) base.dc.standardize = get_field<bool>(j, "standardize");
    if (j.contains("strategy")) base.strategy = parse_strategy(get_field<std::string>(j, "strategy"));
    return base;
}

// ---- result files ---------------------------------------------------------

namespace {

std::string_view mode_name(SupportPattern::Mode m)
{
    return m == SupportPattern::Mode::Group ? "group" : "feature";
}

SupportPattern::Mode parse_mode(const std::string& s)
{
    if (s == "group") return SupportPattern::Mode::Group;
    if (s == "feature") return SupportPattern::Mode::Feature;
    parse_error("mode must be group or feature");
}

IndexList covered_groups(const SupportPattern& features, const GroupStructure& s)
{
    IndexList out;
    for (Index j = 0; j < s.num_groups(); ++j) {
        const auto& g = s.group(j);
        if (std::all_of(g.begin(), g.end(), [&](Index f) { return features.contains(f); })) out.push_back(j);
    }
    return out;
}

} // namespace

ResultFile run_fit(const GroupedDesign& design, const RunConfig& config)
{
    ResultFile r;
    r.overlap = design.structure().overlapping();
    r.config = config;
    r.n = design.n();
    r.p = design.p();
    r.result = r.overlap ? run_dc_oglasso(design, config.dc, config.strategy) : run_dc_glasso(design, config.dc);
    const auto& s = design.structure();
    if (r.result.support.mode == SupportPattern::Mode::Group) {
        r.support_groups = r.result.support.selected;
        r.support_features = features_of(r.result.support, s);
    } else {
        r.support_features = r.result.support.selected;
        r.support_groups = covered_groups(r.result.support, s);
    }
    return r;
}

Json result_to_json(const ResultFile& r)
{
    const auto& res = r.result;
    Json j;
    j["tool"] = r.tool;
    j["version"] = r.version;
    j["mode"] = r.overlap ? "overlap" : "group";
    j["n"] = r.n;
    j["p"] = r.p;

    Json support;
    support["mode"] = std::string(mode_name(res.support.mode));
    support["groups"] = index_list(r.support_groups);
    support["features"] = index_list(r.support_features);
    j["support"] = std::move(support);
    j["beta"] = vec(res.beta.beta);
    j["intercept"] = num(res.beta.intercept);
    j["vote_mode"] = std::string(mode_name(res.vote_mode));
    j["vote_counts"] = res.vote_counts;
    j["flags"] = flags_json(res.flags);
    j["failed_shards"] = res.failed_shards;

    Json shards = Json::array();
    for (std::size_t k = 0; k < res.votes.size(); ++k) {
        const auto& v = res.votes[k];
        const auto& e = res.stage2[k];
        Json s;
        s["id"] = v.shard_id;
        s["rows"] = res.plan.shard_size(v.shard_id);
        s["failed"] = v.failed;
        s["support"] = index_list(v.support.selected);
        s["lambda"] = num(v.lambda);
        s["path_index"] = v.path_index;
        s["bic"] = num(v.bic);
        s["local_beta"] = vec(v.local_beta.beta);
        s["local_intercept"] = num(v.local_beta.intercept);
        s["flags"] = flags_json(v.flags);
        Json s2;
        s2["failed"] = e.failed;
        s2["beta"] = vec(e.coef.beta);
        s2["intercept"] = num(e.coef.intercept);
        s2["gradient_norm"] = num(e.gradient_norm);
        s2["flags"] = flags_json(e.flags);
        s["stage2"] = std::move(s2);
        shards.push_back(std::move(s));
    }
    j["shards"] = std::move(shards);
    j["config"] = config_to_json(r.config);

    const auto& t = res.timings;
    Json timings;
    timings["split"] = t.split;
    timings["stage1_max"] = t.stage1_max;
    timings["stage2_max"] = t.stage2_max;
    timings["aggregation"] = t.aggregation;
    timings["simulated_total"] = t.simulated_total;
    timings["elapsed"] = t.elapsed;
    Json per = Json::array();
    for (std::size_t k = 0; k < res.votes.size(); ++k)
        per.push_back(Json{{"stage1", res.votes[k].seconds}, {"stage2", res.stage2[k].seconds}});
    timings["shards"] = std::move(per);
    j["timings"] = std::move(timings);
    return j;
}

ResultFile result_from_json(const Json& j)
{
    if (!j.is_object()) parse_error("result must be a JSON object");
    ResultFile r;
    try {
        r.tool = get_field<std::string>(j, "tool");
        r.version = get_field<std::string>(j, "version");
        const auto mode = get_field<std::string>(j, "mode");
        if (mode != "group" && mode != "overlap") parse_error("mode must be group or overlap");
        r.overlap = mode == "overlap";
        r.n = get_field<Index>(j, "n");
        r.p = get_field<Index>(j, "p");
        r.config = config_from_json(get_obj(j, "config"));

        auto& res = r.result;
        const auto& support = get_obj(j, "support");
        r.support_groups = get_index_list(get_obj(support, "groups"));
        r.support_features = get_index_list(get_obj(support, "features"));
        const auto smode = parse_mode(get_field<std::string>(support, "mode"));
        res.support = SupportPattern(smode, smode == SupportPattern::Mode::Group ? r.support_groups
                                                                                : r.support_features);
        res.beta = GroupCoefficients(get_vec(get_obj(j, "beta")), get_num(get_obj(j, "intercept")));
        res.vote_mode = parse_mode(get_field<std::string>(j, "vote_mode"));
        res.vote_counts = get_field<std::vector<int>>(j, "vote_counts");
        res.flags = get_flags(get_obj(j, "flags"));
        res.failed_shards = get_field<int>(j, "failed_shards");
        res.plan = make_shard_plan(r.n, r.config.dc.m, r.config.dc.seed);

        const auto& timings = get_obj(j, "timings");
        const auto& per = get_obj(timings, "shards");
        const auto& shards = get_obj(j, "shards");
        if (!shards.is_array() || static_cast<int>(shards.size()) != r.config.dc.m || per.size() != shards.size())
            parse_error("shard list does not match m");
        for (std::size_t k = 0; k < shards.size(); ++k) {
            const auto& s = shards[k];
            ShardVote v;
            v.shard_id = get_field<int>(s, "id");
            v.failed = get_field<bool>(s, "failed");
            v.support = SupportPattern(SupportPattern::Mode::Group, get_index_list(get_obj(s, "support")));
            v.lambda = get_num(get_obj(s, "lambda"));
            v.path_index = get_field<std::size_t>(s, "path_index");
            v.bic = get_num(get_obj(s, "bic"));
            v.local_beta = GroupCoefficients(get_vec(get_obj(s, "local_beta")), get_num(get_obj(s, "local_intercept")));
            v.flags = get_flags(get_obj(s, "flags"));
            v.seconds = get_field<double>(per[k], "stage1");
            const auto& s2 = get_obj(s, "stage2");
            Stage2Estimate e;
            e.shard_id = v.shard_id;
            e.failed = get_field<bool>(s2, "failed");
            e.coef = GroupCoefficients(get_vec(get_obj(s2, "beta")), get_num(get_obj(s2, "intercept")));
            e.gradient_norm = get_num(get_obj(s2, "gradient_norm"));
            e.flags = get_flags(get_obj(s2, "flags"));
            e.seconds = get_field<double>(per[k], "stage2");
            if (get_field<Index>(s, "rows") != res.plan.shard_size(v.shard_id))
                parse_error("shard row count does not match the recorded seed");
            res.votes.push_back(std::move(v));
            res.stage2.push_back(std::move(e));
        }
        auto& t = res.timings;
        t.split = get_field<double>(timings, "split");
        t.stage1_max = get_field<double>(timings, "stage1_max");
        t.stage2_max = get_field<double>(timings, "stage2_max");
        t.aggregation = get_field<double>(timings, "aggregation");
        t.simulated_total = get_field<double>(timings, "simulated_total");
        t.elapsed = get_field<double>(timings, "elapsed");
    } catch (const nlohmann::json::exception& e) {
        parse_error(std::string("malformed result file: ") + e.what());
    }
    return r;
}

std::string dump_json(const Json& j)
{
    return j.dump(2) + "\n";
}

// ---- benchmark grids --------------------------------------------------------

namespace {

BenchCell cell_from_json(const Json& c)
{
    static const std::set<std::string> known{"generator", "scenario", "p", "n", "subset_size", "m", "subset_sizes",
                                             "methods", "strategies", "solver", "standardize"};
    if (!c.is_object()) parse_error("grid cell must be an object");
    for (const auto& [key, value] : c.items())
        if (!known.count(key)) parse_error("unknown cell key '" + key + "'");
    BenchCell cell;
    if (c.contains("generator")) {
        const auto g = get_field<std::string>(c, "generator");
        if (g == "scenario")
            cell.generator = BenchCell::Generator::Scenario;
        else if (g == "overlap")
            cell.generator = BenchCell::Generator::Overlap;
        else
            parse_error("generator must be scenario or overlap");
    }
    if (c.contains("scenario")) cell.scenario = get_field<int>(c, "scenario");
    if (c.contains("p")) cell.p = get_field<Index>(c, "p");
    if (c.contains("n")) cell.n_values = get_index_list(c.at("n"));
    if (c.contains("subset_size")) cell.subset_size = get_field<Index>(c, "subset_size");
    if (c.contains("m")) cell.m = get_field<int>(c, "m");
    if (c.contains("subset_sizes")) cell.subset_sizes = get_index_list(c.at("subset_sizes"));
    if (c.contains("methods")) {
        cell.methods.clear();
        for (const auto& m : get_field<std::vector<std::string>>(c, "methods"))
            cell.methods.push_back(parse_bench_method(m));
    }
    if (c.contains("strategies")) {
        cell.strategies.clear();
        for (const auto& s : get_field<std::vector<std::string>>(c, "strategies"))
            cell.strategies.push_back(parse_strategy(s));
    }
    if (c.contains("solver")) {
        const auto& s = c.at("solver");
        if (!s.is_object()) parse_error("cell solver must be an object");
        for (const char* key : {"m", "seed", "standardize", "strategy"})
            if (s.contains(key)) parse_error(std::string("'") + key + "' is not a solver setting");
        RunConfig rc;
        rc.dc.solver = cell.solver;
        cell.solver = config_from_json(s, rc).dc.solver;
    }
    if (c.contains("standardize")) cell.standardize = get_field<bool>(c, "standardize");
    return cell;
}

} // namespace

GridFile grid_from_json(const Json& j)
{
    if (!j.is_object()) parse_error("grid must be a JSON object");
    static const std::set<std::string> known{"cells", "reps", "seed", "parallel", "vote_mc"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) parse_error("unknown grid key '" + key + "'");
    GridFile out;
    try {
        if (j.contains("cells")) {
            BenchGrid g;
            const auto& cells = j.at("cells");
            if (!cells.is_array()) parse_error("'cells' must be an array");
            for (const auto& c : cells) g.cells.push_back(cell_from_json(c));
            if (j.contains("reps")) g.reps = get_field<int>(j, "reps");
            if (j.contains("seed")) g.seed = get_field<std::uint64_t>(j, "seed");
            if (j.contains("parallel")) g.parallel = get_field<bool>(j, "parallel");
            g.validate();
            out.grid = std::move(g);
        }
        if (j.contains("vote_mc")) {
            const auto& v = j.at("vote_mc");
            if (!v.is_object()) parse_error("'vote_mc' must be an object");
            VoteMcSpec spec;
            if (v.contains("P")) spec.p = get_field<double>(v, "P");
            if (v.contains("m")) spec.ms = get_field<std::vector<int>>(v, "m");
            if (v.contains("reps")) spec.reps = get_field<int>(v, "reps");
            if (v.contains("seed")) spec.seed = get_field<std::uint64_t>(v, "seed");
            if (!(spec.p > 0.0 && spec.p <= 1.0) || spec.reps < 1 || spec.ms.empty())
                throw Error(ErrorCode::InvalidArgument, "vote_mc needs 0 < P <= 1, reps >= 1 and a non-empty m list");
            out.vote_mc = spec;
        }
    } catch (const nlohmann::json::exception& e) {
        parse_error(std::string("malformed grid: ") + e.what());
    }
    if (!out.grid && !out.vote_mc) parse_error("grid needs 'cells' or 'vote_mc'");
    if (out.grid && out.vote_mc) parse_error("a grid file holds either 'cells' or 'vote_mc', not both");
    return out;
}

// ---- consistency check ----------------------------------------------------

CheckReport check_result(const GroupedDesign& design, const ResultFile& file, double tol)
{
    if (design.n() != file.n || design.p() != file.p)
        throw Error(ErrorCode::DimensionMismatch, "result does not belong to this dataset");
    if (design.structure().overlapping() != file.overlap)
        throw Error(ErrorCode::ModeMismatch, "result mode does not match the group structure");
    const auto& res = file.result;
    const auto& cfg = file.config.dc;
    CheckReport report;
    auto violate = [&](std::string msg) {
        report.ok = false;
        report.violations.push_back(std::move(msg));
    };

    const auto split = shard_split(design, cfg.m, cfg.seed, 1);
    const IndexList support_cols = res.support.mode == SupportPattern::Mode::Group
                                       ? features_of(res.support, design.structure())
                                       : res.support.selected;
    std::vector<GroupCoefficients> good;
    for (int k = 0; k < cfg.m; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const auto& vote = res.votes[uk];
        const auto& est = res.stage2[uk];
        CheckReport::Shard s;
        s.id = k;
        s.failed = vote.failed || est.failed;
        const auto prepared = prepare_shard(split.shards[uk], cfg.solver.loss, cfg.standardize);
        if (!vote.failed) {
            if (file.overlap) {
                const auto ex = expand_duplicates(prepared);
                s.kkt = kkt_residual(ex.design, vote.local_beta, vote.lambda, cfg.solver);
            } else {
                s.kkt = kkt_residual(prepared, vote.local_beta, vote.lambda, cfg.solver);
            }
            if (!(s.kkt <= tol))
                violate("shard " + std::to_string(k) + ": stage-1 KKT residual " + format_double(s.kkt));
        }
        if (!est.failed) {
            const auto local = to_standardized_scale(est.coef, prepared.standardization());
            s.gradient_norm = refit_gradient_norm(prepared, support_cols, local, cfg.solver.loss);
            if (!(s.gradient_norm <= tol))
                violate("shard " + std::to_string(k) + ": refit gradient norm " + format_double(s.gradient_norm));
            good.push_back(est.coef);
        }
        report.shards.push_back(s);
    }

    if (good.empty()) {
        violate("no usable stage-2 estimate");
        return report;
    }
    const auto mean = average_estimates(good);
    if (mean.beta.size() != res.beta.beta.size()) {
        violate("beta length differs from the stage-2 estimates");
        return report;
    }
    const double scale = 1.0 + mean.beta.cwiseAbs().maxCoeff() + std::abs(mean.intercept);
    report.average_error = std::max((mean.beta - res.beta.beta).cwiseAbs().maxCoeff(),
                                    std::abs(mean.intercept - res.beta.intercept));
    if (!(report.average_error <= 1e-12 * scale))
        violate("beta differs from the average of the stage-2 estimates by " + format_double(report.average_error));
    std::vector<bool> in_support(static_cast<std::size_t>(design.p()), false);
    for (Index c : support_cols) in_support[static_cast<std::size_t>(c)] = true;
    for (Index f = 0; f < design.p(); ++f)
        if (!in_support[static_cast<std::size_t>(f)])
            report.support_error = std::max(report.support_error, std::abs(res.beta.beta(f)));
    if (report.support_error != 0.0) violate("beta is nonzero outside the support");
    return report;
}

} // namespace dcglasso
