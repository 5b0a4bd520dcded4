#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace medtree
{

//---------------------------------------------------------------------------//
/*!
 * Vertex of the infinite 3-regular tree.
 *
 * The canonical address is a word: empty for the root, first letter in
 * {0,1,2} picks one of the root's subtrees and every later letter in {0,1}
 * picks a child. Internally the word is stored as its breadth-first code:
 * level d >= 1 starts at 3*2^(d-1) - 2 and, within a level, vertices are
 * ordered by (first letter, remaining letters read as a binary number).
 * The ball of radius R around the root is exactly the code range
 * [0, 3*2^R - 2).
 */
class VertexId
{
  public:
    static constexpr int max_depth = 60;

    constexpr VertexId() = default;
    static constexpr VertexId root() { return VertexId{}; }
    static constexpr VertexId from_code(std::uint64_t code)
    {
        VertexId v;
        v.code_ = code;
        return v;
    }

    // Throws std::invalid_argument on a malformed word.
    static VertexId parse(std::string_view address);

    std::string address() const;
    std::uint64_t code() const { return code_; }
    int depth() const;
    bool is_root() const { return code_ == 0; }

    VertexId parent() const;
    VertexId child(int letter) const;

    friend constexpr bool operator==(VertexId, VertexId) = default;
    friend constexpr auto operator<=>(VertexId, VertexId) = default;

  private:
    std::uint64_t code_ = 0;
};

// Lexicographic order of the address words ("" < "0" < "00" < "01" < "1").
bool address_less(VertexId a, VertexId b);

std::array<VertexId, 3> neighbors(VertexId v);
int distance(VertexId u, VertexId v);
// Self-avoiding path from u to v, both endpoints included.
std::vector<VertexId> path_between(VertexId u, VertexId v);

//---------------------------------------------------------------------------//
/*!
 * Closed ball {v : dist(center, v) <= radius}.
 */
class Ball
{
  public:
    Ball(VertexId center, int radius);

    VertexId center() const { return center_; }
    int radius() const { return radius_; }

    bool contains(VertexId v) const;
    bool is_boundary(VertexId v) const;
    std::uint64_t size() const { return ball_size(radius_); }

    // Breadth-first enumeration from the center. For a root-centered ball
    // the i-th entry has code i.
    std::vector<VertexId> vertices() const;
    // Vertices at distance exactly radius + 1.
    std::vector<VertexId> outer_ring() const;

    static std::uint64_t ball_size(int radius);

  private:
    VertexId center_;
    int radius_;
};

struct VertexHash
{
    std::size_t operator()(VertexId v) const noexcept
    {
        return static_cast<std::size_t>(v.code() * 0x9E3779B97F4A7C15ull);
    }
};

}  // namespace medtree
