#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "medtree/analytics.hpp"

using namespace medtree;

namespace
{
Snapshot uniform_snapshot(int radius, const SeedManifest& m)
{
    Snapshot s;
    s.domain = Domain::dense(Ball(VertexId::root(), radius));
    Spin plus = Spin::initial(m, VertexId::root());
    s.spins.assign(s.domain->size(), plus);
    return s;
}

std::vector<VertexId> parse_all(std::initializer_list<const char*> words)
{
    std::vector<VertexId> out;
    for (const char* w : words)
        out.push_back(VertexId::parse(w));
    return out;
}
}  // namespace

TEST_CASE("constant configuration forms one agreement cluster")
{
    SeedManifest m(1);
    auto s = uniform_snapshot(3, m);
    auto report = agreement_clusters(s);
    REQUIRE(report.clusters.size() == 1);
    CHECK(report.clusters[0].size() == 22);
    CHECK(report.clusters[0].boundary_contact == 12);
    CHECK(report.clusters[0].truncated);
    CHECK(disagreement_components(s).clusters.empty());
    CHECK(neighbor_agreement(s).rate() == 1.0);
    CHECK(neighbor_agreement(s).interior == 10);
}

TEST_CASE("an isolated root makes a star of disagreement")
{
    SeedManifest m(2);
    auto s = uniform_snapshot(3, m);
    s.spins[0] = Spin::initial(m, VertexId::parse("1"));
    auto agree = agreement_clusters(s);
    CHECK(agree.clusters.size() == 4);
    auto dis = disagreement_components(s);
    REQUIRE(dis.clusters.size() == 1);
    CHECK(dis.clusters[0].size() == 4);
    CHECK(dis.clusters[0].max_degree == 3);
    CHECK_FALSE(dis.clusters[0].simple_path);
    auto rate = neighbor_agreement(s);
    CHECK(rate.interior == 10);
    CHECK(rate.agreeing == 9);

    // A mask hides the root from both analyses.
    s.mask.assign(s.domain->size(), true);
    s.mask[0] = false;
    CHECK(disagreement_components(s).clusters.empty());
    CHECK(agreement_clusters(s).clusters.size() == 3);
}

TEST_CASE("simple path recognition")
{
    CHECK(is_simple_path(parse_all({"0", "", "1"})));
    CHECK(is_simple_path(parse_all({"00", "0", "", "2", "21"})));
    CHECK(is_simple_path(parse_all({"1"})));
    CHECK_FALSE(is_simple_path(parse_all({"0", "1", "2", ""})));
    CHECK_FALSE(is_simple_path(parse_all({"0", "1"})));
    CHECK_FALSE(is_simple_path({}));
}

TEST_CASE("triple points of a full ball")
{
    auto domain = Domain::dense(Ball(VertexId::root(), 3));
    std::vector<std::int8_t> plus(domain->size(), 1);
    auto tp = triple_points(*domain, plus, 1);
    REQUIRE(tp.size() == 10);
    for (VertexId v : tp)
        CHECK(v.depth() <= 2);
    CHECK(triple_points(*domain, plus, -1).empty());

    // Cutting subtree "0" leaves the root with two boundary branches.
    auto cut = plus;
    cut[domain->index_of(VertexId::parse("0"))] = -1;
    auto tp2 = triple_points(*domain, cut, 1);
    CHECK(std::find(tp2.begin(), tp2.end(), VertexId::root()) == tp2.end());
    CHECK(std::find(tp2.begin(), tp2.end(), VertexId::parse("1"))
          != tp2.end());

    auto clusters = sign_clusters(*domain, cut, 1);
    // Main part plus the subtrees below "00" and "01".
    REQUIRE(clusters.size() == 3);
    int rooted = 0;
    for (const auto& c : clusters)
    {
        if (c.min_distance == 0)
            ++rooted;
        else
        {
            CHECK(c.members.size() == 3);
            CHECK(c.min_distance == 2);
        }
    }
    CHECK(rooted == 1);
}

TEST_CASE("chain membership")
{
    auto domain = Domain::dense(Ball(VertexId::root(), 8));
    std::vector<std::int8_t> plus(domain->size(), 1);
    CHECK(chain_membership(*domain, plus, VertexId::root(), 8));
    CHECK_FALSE(chain_membership(*domain, plus, VertexId::root(), 9));
    CHECK(chain_membership(*domain, plus, VertexId::root(), 0));

    auto spins = plus;
    spins[domain->index_of(VertexId::parse("0"))] = -1;
    spins[domain->index_of(VertexId::parse("1"))] = -1;
    CHECK_FALSE(chain_membership(*domain, spins, VertexId::root(), 1));
    spins[domain->index_of(VertexId::parse("1"))] = 1;
    CHECK(chain_membership(*domain, spins, VertexId::root(), 8));
    CHECK_THROWS_AS(chain_membership(*domain, plus, VertexId::parse("000000000"), 1),
                    std::invalid_argument);
}

TEST_CASE("median flips never raise disagreement")
{
    for (int r = 0; r < 10; ++r)
    {
        auto traj = run_median(SeedManifest::replica(3, r),
                               Ball(VertexId::root(), 8),
                               BoundaryCondition::frozen_initial(), 10);
        auto audit = energy_audit(traj);
        CHECK(audit.flips == traj.flips.size());
        CHECK(audit.violations == 0);
    }
}

TEST_CASE("energy audit flags an uphill flip")
{
    auto traj = run_median(SeedManifest(4), Ball(VertexId::root(), 2),
                           BoundaryCondition::frozen_initial(), 0);
    MedianFlipRecord f{0, 0.5, 0, 1, {0, 0, 0}};
    traj.flips.push_back(f);
    auto audit = energy_audit(traj);
    CHECK(audit.flips == 1);
    CHECK(audit.violations == 1);
}

TEST_CASE("trace equals the threshold symmetric difference")
{
    for (int r = 0; r < 20; ++r)
    {
        SeedManifest m = SeedManifest::replica(5, r);
        VertexId x = VertexId::root();
        auto t = trace(m, x, 6, 9);
        auto pair = threshold_pair(m, x, 6, 9);
        CHECK(t.members == pair.symmetric_difference);
        CHECK(std::binary_search(t.members.begin(), t.members.end(), x));
    }
}

TEST_CASE("resampling difference")
{
    SeedManifest m(6);
    VertexId x = VertexId::root();
    auto same = resampling_difference(m, 0.5, 5, x, 8, false, 1, 1);
    CHECK(same.members.empty());
    for (int r = 0; r < 10; ++r)
    {
        auto d = resampling_difference(SeedManifest::replica(6, r), 0.5, 5, x,
                                       8);
        REQUIRE(!d.members.empty());
        CHECK(std::binary_search(d.members.begin(), d.members.end(), x));
        for (VertexId v : d.members)
            CHECK(distance(x, v) <= 8);
    }
}

TEST_CASE("mass transport rules")
{
    auto id = mass_transport_audit(identity_rule(), 2, 50, 1, 7);
    CHECK(id.mass_out == 1.0);
    CHECK(id.mass_in == 1.0);
    CHECK(id.overlap());
    CHECK(id.miss_frequency() == 0);

    auto larger = mass_transport_audit(larger_neighbor_rule(), 1, 2000, 1, 7);
    CHECK(larger.mass_out == doctest::Approx(1.5).epsilon(0.1));
    CHECK(larger.mass_in == doctest::Approx(1.5).epsilon(0.1));
    CHECK(larger.overlap());

    auto nearest = mass_transport_audit(nearest_threshold_rule(0.5), 3, 300,
                                        1, 7);
    CHECK(nearest.mass_out <= 1.0);
    CHECK(nearest.overlap());

    // A window of zero leaves every vertex with a large label undecided.
    auto blind = mass_transport_audit(nearest_threshold_rule(0.5), 0, 200, 0,
                                      7);
    CHECK(blind.miss_frequency() == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("cluster CSV")
{
    SeedManifest m(8);
    auto s = uniform_snapshot(1, m);
    std::ostringstream out;
    write_cluster_csv_header(out);
    write_cluster_csv(out, agreement_clusters(s), "agreement");
    CHECK(out.str()
          == "kind,cluster,size,boundary_contact,truncated,max_degree,"
             "simple_path,members\nagreement,0,4,3,1,0,1, 0 1 2\n");
}
