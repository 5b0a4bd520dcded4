#include <doctest.h>

#include <map>
#include <queue>
#include <stdexcept>
#include <set>

#include "medtree/topology.hpp"

using namespace medtree;

TEST_CASE("addresses round-trip through codes")
{
    for (std::uint64_t c = 0; c < 5000; ++c)
    {
        VertexId v = VertexId::from_code(c);
        CHECK(VertexId::parse(v.address()) == v);
        CHECK(v.code() == c);
    }
    CHECK(VertexId::root().depth() == 0);
    CHECK(VertexId::parse("2").depth() == 1);
    CHECK(VertexId::parse("0110").depth() == 4);
}

TEST_CASE("malformed addresses are rejected")
{
    CHECK_THROWS_AS(VertexId::parse("3"), std::invalid_argument);
    CHECK_THROWS_AS(VertexId::parse("02"), std::invalid_argument);
    CHECK_THROWS_AS(VertexId::parse("0x"), std::invalid_argument);
}

TEST_CASE("every vertex has three neighbors and adjacency is symmetric")
{
    for (std::uint64_t c = 0; c < 2000; ++c)
    {
        VertexId v = VertexId::from_code(c);
        auto nb = neighbors(v);
        std::set<VertexId> distinct(nb.begin(), nb.end());
        CHECK(distinct.size() == 3);
        for (VertexId w : nb)
        {
            auto back = neighbors(w);
            CHECK(std::find(back.begin(), back.end(), v) != back.end());
        }
    }
}

TEST_CASE("distance agrees with breadth-first search")
{
    VertexId src = VertexId::parse("01");
    std::map<VertexId, int> dist{{src, 0}};
    std::queue<VertexId> q;
    q.push(src);
    while (!q.empty())
    {
        VertexId v = q.front();
        q.pop();
        if (dist[v] == 6)
            continue;
        for (VertexId w : neighbors(v))
            if (dist.emplace(w, dist[v] + 1).second)
                q.push(w);
    }
    for (auto [v, d] : dist)
    {
        CHECK(distance(src, v) == d);
        auto path = path_between(src, v);
        CHECK(path.size() == std::size_t(d) + 1);
        CHECK(path.front() == src);
        CHECK(path.back() == v);
    }
}

TEST_CASE("ball sizes and rings")
{
    CHECK(Ball::ball_size(0) == 1);
    CHECK(Ball::ball_size(1) == 4);
    CHECK(Ball::ball_size(2) == 10);
    CHECK(Ball::ball_size(3) == 22);
    for (int R = 0; R <= 6; ++R)
    {
        Ball b(VertexId::root(), R);
        auto vs = b.vertices();
        CHECK(vs.size() == Ball::ball_size(R));
        for (std::size_t i = 0; i < vs.size(); ++i)
            CHECK(vs[i].code() == i);
        CHECK(b.outer_ring().size() == 3u << R);
    }
    Ball off(VertexId::parse("010"), 3);
    auto vs = off.vertices();
    CHECK(vs.size() == Ball::ball_size(3));
    for (VertexId v : vs)
    {
        CHECK(off.contains(v));
        CHECK(off.is_boundary(v) == (distance(off.center(), v) == 3));
    }
    for (VertexId v : off.outer_ring())
        CHECK(distance(off.center(), v) == 4);
}
