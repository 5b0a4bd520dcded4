#include "medtree/topology.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace medtree
{
namespace
{
// First code of level d (d >= 1).
constexpr std::uint64_t level_offset(int d)
{
    return 3 * (std::uint64_t{1} << (d - 1)) - 2;
}
}  // namespace

VertexId VertexId::parse(std::string_view address)
{
    if (address.empty())
        return root();
    if (static_cast<int>(address.size()) > max_depth)
        throw std::invalid_argument("vertex address too deep: "
                                    + std::string(address));
    char first = address.front();
    if (first < '0' || first > '2')
        throw std::invalid_argument("malformed vertex address '"
                                    + std::string(address)
                                    + "': first letter must be 0, 1 or 2");
    int d = static_cast<int>(address.size());
    std::uint64_t index = static_cast<std::uint64_t>(first - '0');
    for (char c : address.substr(1))
    {
        if (c != '0' && c != '1')
            throw std::invalid_argument("malformed vertex address '"
                                        + std::string(address)
                                        + "': letters after the first "
                                          "must be 0 or 1");
        index = 2 * index + static_cast<std::uint64_t>(c - '0');
    }
    return from_code(level_offset(d) + index);
}

int VertexId::depth() const
{
    // floor((c + 2) / 3) lies in [2^(d-1), 2^d) on level d.
    return std::bit_width((code_ + 2) / 3);
}

std::string VertexId::address() const
{
    int d = depth();
    if (d == 0)
        return {};
    std::uint64_t index = code_ - level_offset(d);
    std::string word(static_cast<std::size_t>(d), '0');
    for (int i = d - 1; i >= 1; --i)
    {
        word[static_cast<std::size_t>(i)] = static_cast<char>('0' + (index & 1));
        index >>= 1;
    }
    word[0] = static_cast<char>('0' + index);
    return word;
}

VertexId VertexId::parent() const
{
    int d = depth();
    if (d == 0)
        throw std::logic_error("the root has no parent");
    if (d == 1)
        return root();
    std::uint64_t index = code_ - level_offset(d);
    return from_code(level_offset(d - 1) + (index >> 1));
}

VertexId VertexId::child(int letter) const
{
    int d = depth();
    if (d >= max_depth)
        throw std::out_of_range("vertex depth limit exceeded");
    if (d == 0)
    {
        if (letter < 0 || letter > 2)
            throw std::invalid_argument("root child letter must be 0, 1 or 2");
        return from_code(1 + static_cast<std::uint64_t>(letter));
    }
    if (letter < 0 || letter > 1)
        throw std::invalid_argument("child letter must be 0 or 1");
    std::uint64_t index = code_ - level_offset(d);
    return from_code(level_offset(d + 1) + 2 * index
                     + static_cast<std::uint64_t>(letter));
}

bool address_less(VertexId a, VertexId b)
{
    if (a == b)
        return false;
    return a.address() < b.address();
}

std::array<VertexId, 3> neighbors(VertexId v)
{
    if (v.is_root())
        return {v.child(0), v.child(1), v.child(2)};
    return {v.parent(), v.child(0), v.child(1)};
}

int distance(VertexId u, VertexId v)
{
    int du = u.depth();
    int dv = v.depth();
    int steps = 0;
    while (du > dv)
    {
        u = u.parent();
        --du;
        ++steps;
    }
    while (dv > du)
    {
        v = v.parent();
        --dv;
        ++steps;
    }
    while (u != v)
    {
        u = u.parent();
        v = v.parent();
        steps += 2;
    }
    return steps;
}

std::vector<VertexId> path_between(VertexId u, VertexId v)
{
    std::vector<VertexId> up;
    std::vector<VertexId> down;
    int du = u.depth();
    int dv = v.depth();
    while (du > dv)
    {
        up.push_back(u);
        u = u.parent();
        --du;
    }
    while (dv > du)
    {
        down.push_back(v);
        v = v.parent();
        --dv;
    }
    while (u != v)
    {
        up.push_back(u);
        down.push_back(v);
        u = u.parent();
        v = v.parent();
    }
    up.push_back(u);
    up.insert(up.end(), down.rbegin(), down.rend());
    return up;
}

//---------------------------------------------------------------------------//
Ball::Ball(VertexId center, int radius) : center_(center), radius_(radius)
{
    if (radius < 0)
        throw std::invalid_argument("ball radius must be nonnegative");
    if (center.depth() + radius + 1 > VertexId::max_depth)
        throw std::out_of_range("ball exceeds the addressable depth");
}

std::uint64_t Ball::ball_size(int radius)
{
    if (radius == 0)
        return 1;
    return 3 * (std::uint64_t{1} << radius) - 2;
}

bool Ball::contains(VertexId v) const
{
    if (center_.is_root())
        return v.depth() <= radius_;
    return distance(center_, v) <= radius_;
}

bool Ball::is_boundary(VertexId v) const
{
    return distance(center_, v) == radius_;
}

std::vector<VertexId> Ball::vertices() const
{
    std::vector<VertexId> out;
    out.reserve(size());
    if (center_.is_root())
    {
        for (std::uint64_t c = 0; c < size(); ++c)
            out.push_back(VertexId::from_code(c));
        return out;
    }
    // BFS; the previous vertex on the way out is never re-entered.
    out.push_back(center_);
    std::vector<VertexId> from{center_};
    std::size_t level_begin = 0;
    for (int r = 1; r <= radius_; ++r)
    {
        std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
        {
            VertexId x = out[i];
            VertexId back = from[i];
            for (VertexId y : neighbors(x))
            {
                if (y == back && x != center_)
                    continue;
                out.push_back(y);
                from.push_back(x);
            }
        }
        level_begin = level_end;
    }
    return out;
}

std::vector<VertexId> Ball::outer_ring() const
{
    std::vector<VertexId> ring;
    Ball bigger(center_, radius_ + 1);
    for (VertexId v : bigger.vertices())
        if (!contains(v))
            ring.push_back(v);
    return ring;
}

}  // namespace medtree
