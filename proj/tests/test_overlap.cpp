#include <doctest.h>

#include <random>

#include "dcglasso/overlap.hpp"
#include "dcglasso/simgen.hpp"
#include "support.hpp"

using namespace dcglasso;

namespace {

const GroupStructure& pair_structure()
{
    static const auto s = GroupStructure::validate({{0, 1}, {1, 2}}, 3, true);
    return s;
}

SupportPattern features(IndexList f)
{
    return {SupportPattern::Mode::Feature, std::move(f)};
}

bool union_of_complete_groups(const SupportPattern& set, const GroupStructure& s)
{
    for (Index f : set.selected) {
        bool covered = false;
        for (const auto& g : s.groups()) {
            if (std::find(g.begin(), g.end(), f) == g.end()) continue;
            covered = std::all_of(g.begin(), g.end(), [&](Index h) { return set.contains(h); });
            if (covered) break;
        }
        if (!covered) return false;
    }
    return true;
}

GroupStructure random_overlapping(Index p, std::mt19937_64& rng)
{
    std::vector<IndexList> groups;
    for (Index f = 0; f < p; ++f) groups.push_back({f});
    for (int extra = 0; extra < 4; ++extra) {
        IndexList g;
        for (Index f = 0; f < p; ++f)
            if (rng() % 3 == 0) g.push_back(f);
        if (!g.empty()) groups.push_back(g);
    }
    std::shuffle(groups.begin(), groups.end(), rng);
    return GroupStructure::validate(groups, p, true);
}

} // namespace

TEST_SUITE("overlap")
{
    TEST_CASE("expansion of [[0,1],[1,2]]")
    {
        const auto map = duplication_map(pair_structure());
        CHECK(map.expanded_p == 4);
        CHECK(map.column_origin == IndexList{0, 1, 1, 2});
        CHECK(map.block_offsets == IndexList{0, 2, 4});

        Matrix x(2, 3);
        x << 1, 2, 3, 4, 5, 6;
        const auto e = expand_duplicates(GroupedDesign(x, Vector::Zero(2), pair_structure()));
        CHECK_FALSE(e.design.structure().overlapping());
        CHECK(e.design.x().col(2) == x.col(1));
        CHECK(e.design.x().col(3) == x.col(2));
    }

    TEST_CASE("non-overlapping expansion is a column permutation")
    {
        const auto s = GroupStructure::validate({{2, 0}, {1}}, 3, false);
        const auto map = duplication_map(s);
        CHECK(map.expanded_p == 3);
        CHECK(map.column_origin == IndexList{0, 2, 1});
    }

    TEST_CASE("chain structure at p=1000 expands to 10 * q columns")
    {
        const auto groups = overlap_chain_groups(1000);
        CHECK(groups.size() == 199);
        const auto s = GroupStructure::validate(groups, 1000, true);
        CHECK(duplication_map(s).expanded_p == 10 * 199);
    }

    TEST_CASE("collapse sums duplicate copies")
    {
        const auto map = duplication_map(pair_structure());
        Vector e(4);
        e << 1, 2, 3, 4;
        const Vector b = collapse_duplicates(e, map);
        CHECK(b == (Vector(3) << 1, 5, 4).finished());
        CHECK(collapse_duplicates(Vector::Zero(4), map).cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS_AS(collapse_duplicates(Vector::Zero(3), map), Error);
    }

    TEST_CASE("collapse matches a scatter-add oracle (property)")
    {
        std::mt19937_64 rng(21);
        for (int trial = 0; trial < 50; ++trial) {
            const Index p = 2 + static_cast<Index>(rng() % 15);
            const auto s = random_overlapping(p, rng);
            const auto map = duplication_map(s);
            const Vector e = testsupport::gaussian_vector(map.expanded_p, rng);
            std::vector<long double> acc(static_cast<std::size_t>(p), 0.0L);
            Index col = 0;
            for (const auto& g : s.groups())
                for (Index f : g) acc[static_cast<std::size_t>(f)] += e(col++);
            const Vector b = collapse_duplicates(e, map);
            for (Index f = 0; f < p; ++f)
                CHECK(std::abs(b(f) - static_cast<double>(acc[static_cast<std::size_t>(f)])) <= 1e-14);
        }
    }

    TEST_CASE("collapse of a single-group expansion reproduces the vector")
    {
        std::mt19937_64 rng(22);
        for (int trial = 0; trial < 50; ++trial) {
            const Index p = 3 + static_cast<Index>(rng() % 10);
            const auto s = random_overlapping(p, rng);
            const auto map = duplication_map(s);
            const Index g = static_cast<Index>(rng() % static_cast<std::uint64_t>(s.num_groups()));
            Vector beta = Vector::Zero(p);
            Vector expanded = Vector::Zero(map.expanded_p);
            Index at = map.block_offsets[static_cast<std::size_t>(g)];
            for (Index f : s.group(g)) {
                beta(f) = testsupport::gaussian_vector(1, rng)(0);
                expanded(at++) = beta(f);
            }
            CHECK(collapse_duplicates(expanded, map) == beta);
        }
    }

    TEST_CASE("feature vote")
    {
        const auto map = duplication_map(pair_structure());
        Vector one(4), none = Vector::Zero(4);
        one << 0, 0, 0, 1.0;
        std::vector<int> counts;
        CHECK(feature_vote({one, none}, map, 2, &counts).selected == IndexList{2});
        CHECK(counts == std::vector<int>{0, 0, 1});
        CHECK(feature_vote({none, none}, map, 2).empty());

        // equal and opposite copies cancel in the collapsed sum
        Vector cancel(4);
        cancel << 0, 1, -1, 0;
        CHECK(feature_vote({cancel}, map, 1).empty());
    }

    TEST_CASE("feature vote equals an independent recount on a seeded 3-shard run")
    {
        const auto data = gen_overlap_scenario(100, 300, 5);
        const auto split = shard_split(data.design, 3, 9);
        std::vector<Vector> betas;
        DuplicationMap map;
        SolverConfig c;
        c.path_length = 20;
        for (int k = 0; k < 3; ++k) {
            auto shard = prepare_shard(split.shards[static_cast<std::size_t>(k)], Loss::Squared, true);
            auto e = expand_duplicates(shard);
            map = e.map;
            betas.push_back(local_select(e.design, c, k).local_beta.beta);
        }
        std::vector<int> counts;
        const auto voted = feature_vote(betas, map, 3, &counts);
        IndexList expected;
        for (Index f = 0; f < 100; ++f) {
            int c2 = 0;
            for (const auto& b : betas) {
                double sum = 0.0;
                for (Index j = 0; j < map.expanded_p; ++j)
                    if (map.column_origin[static_cast<std::size_t>(j)] == f) sum += b(j);
                c2 += sum != 0.0 ? 1 : 0;
            }
            CHECK(counts[static_cast<std::size_t>(f)] == c2);
            if (2 * c2 >= 3) expected.push_back(f);
        }
        CHECK(voted.selected == expected);
    }

    TEST_CASE("security check examples")
    {
        const auto& s = pair_structure();
        CHECK(security_check(features({0, 1}), s).selected == IndexList{0, 1});
        CHECK(security_check(features({0, 2}), s).empty());
        CHECK(security_check(features({0, 1, 2}), s).selected == IndexList{0, 1, 2});
        CHECK_THROWS_AS(security_check(SupportPattern(SupportPattern::Mode::Group, {0}), s), Error);
    }

    TEST_CASE("security check: complete groups, idempotent, monotone (property)")
    {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 200; ++trial) {
            const Index p = 2 + static_cast<Index>(rng() % 12);
            const auto s = random_overlapping(p, rng);
            IndexList a, b;
            for (Index f = 0; f < p; ++f) {
                const bool in_a = rng() % 2 == 0;
                if (in_a) a.push_back(f);
                if (in_a || rng() % 3 == 0) b.push_back(f);
            }
            const auto ca = security_check(features(a), s);
            const auto cb = security_check(features(b), s);
            CHECK(union_of_complete_groups(ca, s));
            CHECK(security_check(ca, s) == ca);
            for (Index f : ca.selected) CHECK(cb.contains(f));
        }
    }

    TEST_CASE("non-overlapping structure matches the plain pipeline")
    {
        const auto d = testsupport::random_design(400, 8, 3, 31, 3);
        DcConfig c;
        c.solver.path_length = 20;
        c.solver.lambda_min_ratio = 0.01;
        c.m = 4;
        c.seed = 2;
        const auto plain = run_dc_glasso(d, c);
        for (auto strategy : {OverlapStrategy::SelectAndDiscard, OverlapStrategy::SelectInGroups}) {
            const auto ov = run_dc_oglasso(d, c, strategy);
            CHECK(ov.support == SupportPattern(SupportPattern::Mode::Feature, features_of(plain.support, d.structure())));
            CHECK((ov.beta.beta - plain.beta.beta).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }

    TEST_CASE("m = 1 at lambda_max gives the empty model")
    {
        const auto data = gen_overlap_scenario(50, 100, 3);
        DcConfig c;
        c.solver.path_length = 1;
        const auto r = run_dc_oglasso(data.design, c);
        CHECK(r.support.empty());
        CHECK(r.flags.has(Flag::EmptyModel));
        CHECK(r.beta.beta.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("overlap result invariants and local KKT certificates")
    {
        const auto data = gen_overlap_scenario(100, 400, 8);
        DcConfig c;
        c.solver.path_length = 30;
        c.m = 2;
        c.seed = 4;
        const auto both =
            run_dc_oglasso(data.design, c, {OverlapStrategy::SelectAndDiscard, OverlapStrategy::SelectInGroups});
        REQUIRE(both.size() == 2);
        const auto& s = data.design.structure();
        for (const auto& r : both) {
            CHECK(r.support.mode == SupportPattern::Mode::Feature);
            CHECK(union_of_complete_groups(r.support, s));
            for (Index f = 0; f < data.design.p(); ++f)
                if (!r.support.contains(f)) CHECK(r.beta.beta(f) == 0.0);
        }
        CHECK(both[0].votes[0].local_beta.beta == both[1].votes[0].local_beta.beta);
        CHECK(run_dc_oglasso(data.design, c, OverlapStrategy::SelectInGroups).support == both[1].support);

        const auto split = shard_split(data.design, 2, 4);
        for (int k = 0; k < 2; ++k) {
            const auto e = expand_duplicates(prepare_shard(split.shards[static_cast<std::size_t>(k)], Loss::Squared, true));
            const auto& v = both[0].votes[static_cast<std::size_t>(k)];
            CHECK(kkt_residual(e.design, v.local_beta, v.lambda) <= 1e-6);
        }
    }
}
