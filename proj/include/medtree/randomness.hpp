#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "medtree/topology.hpp"

namespace medtree
{

inline constexpr const char* generator_version = "splitmix-chain-1";

//---------------------------------------------------------------------------//
// A value in (0, 1) with 64 bits of ordering precision. Comparisons use the
// raw word; value() is the nearest double.
struct UnitScalar
{
    std::uint64_t raw = 0;

    double value() const
    {
        return (static_cast<double>(raw >> 11) + 0.5) * 0x1p-53;
    }
    friend constexpr auto operator<=>(UnitScalar, UnitScalar) = default;
};

enum class StreamKind : std::uint8_t
{
    initial_spin = 1,
    clock = 2,
    tie_break = 3,
    resample_spin = 4,
    resample_clock = 5,
};

struct StreamLabel
{
    StreamKind kind = StreamKind::initial_spin;
    std::uint32_t generation = 0;

    std::string to_string() const;
};

//---------------------------------------------------------------------------//
/*!
 * Full description of the randomness of one experiment.
 *
 * Every draw is a pure function of (master_seed, vertex, label, index).
 * Per-vertex overrides swap a vertex's spin or clock stream for a resample
 * generation k >= 1 without touching any other vertex.
 */
struct SeedManifest
{
    std::uint64_t master_seed = 0;
    std::map<VertexId, std::uint32_t> spin_generation;
    std::map<VertexId, std::uint32_t> clock_generation;

    explicit SeedManifest(std::uint64_t seed = 0) : master_seed(seed) {}

    StreamLabel spin_label(VertexId v) const;
    StreamLabel clock_label(VertexId v) const;

    SeedManifest with_resampled_spin(VertexId v, std::uint32_t k) const;
    SeedManifest with_resampled_clock(VertexId v, std::uint32_t k) const;

    // Replica r of a batch seeded by `seed`.
    static SeedManifest replica(std::uint64_t seed, std::uint64_t r);
};

std::uint64_t draw_bits(std::uint64_t master_seed, VertexId v,
                        StreamLabel label, std::uint64_t index);
UnitScalar draw_unit(std::uint64_t master_seed, VertexId v, StreamLabel label,
                     std::uint64_t index);

UnitScalar initial_uniform(const SeedManifest& manifest, VertexId v);
UnitScalar tie_break(const SeedManifest& manifest, VertexId v);

//---------------------------------------------------------------------------//
/*!
 * Lazily extended ring times of one vertex's rate-1 Poisson clock.
 *
 * Ring n is the running sum of the first n exponential increments, so
 * extending the horizon never changes earlier rings.
 */
class ClockStream
{
  public:
    ClockStream(const SeedManifest& manifest, VertexId v);

    // Time of ring i (0-based), generating as needed.
    double ring(std::size_t i);
    // All rings in [0, horizon].
    std::vector<double> rings_until(double horizon);
    // Number of rings in [0, horizon].
    std::size_t count_until(double horizon);
    // Number of rings strictly before t.
    std::size_t count_before(double t);

    VertexId vertex() const { return vertex_; }

  private:
    void extend();

    std::uint64_t seed_;
    VertexId vertex_;
    StreamLabel label_;
    std::vector<double> times_;
};

std::vector<double> rings(const SeedManifest& manifest, VertexId v,
                          double horizon);

//---------------------------------------------------------------------------//
// Allocation-free cursor used by the event loop: yields successive rings.
class RingCursor
{
  public:
    RingCursor() = default;
    RingCursor(std::uint64_t seed, VertexId v, StreamLabel label)
        : seed_(seed), vertex_(v), label_(label)
    {
    }

    double next();

  private:
    std::uint64_t seed_ = 0;
    VertexId vertex_;
    StreamLabel label_{StreamKind::clock, 0};
    std::uint64_t index_ = 0;
    double time_ = 0;
};

RingCursor ring_cursor(const SeedManifest& manifest, VertexId v);

}  // namespace medtree
