#include <algorithm>
#include "medtree/randomness.hpp"

#include <cmath>
#include <stdexcept>

namespace medtree
{
namespace
{
constexpr std::uint64_t mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t absorb(std::uint64_t h, std::uint64_t word)
{
    return mix(h + 0x9E3779B97F4A7C15ull + word);
}

std::uint64_t label_word(StreamLabel label)
{
    return (static_cast<std::uint64_t>(label.kind) << 32) | label.generation;
}

double exponential_increment(std::uint64_t seed, VertexId v, StreamLabel label,
                             std::uint64_t index)
{
    return -std::log(draw_unit(seed, v, label, index).value());
}
}  // namespace

std::string StreamLabel::to_string() const
{
    switch (kind)
    {
    case StreamKind::initial_spin:
        return "InitialSpin";
    case StreamKind::clock:
        return "Clock";
    case StreamKind::tie_break:
        return "TieBreak";
    case StreamKind::resample_spin:
        return "ResampleSpin(" + std::to_string(generation) + ")";
    case StreamKind::resample_clock:
        return "ResampleClock(" + std::to_string(generation) + ")";
    }
    return "?";
}

StreamLabel SeedManifest::spin_label(VertexId v) const
{
    auto it = spin_generation.find(v);
    if (it == spin_generation.end() || it->second == 0)
        return {StreamKind::initial_spin, 0};
    return {StreamKind::resample_spin, it->second};
}

StreamLabel SeedManifest::clock_label(VertexId v) const
{
    auto it = clock_generation.find(v);
    if (it == clock_generation.end() || it->second == 0)
        return {StreamKind::clock, 0};
    return {StreamKind::resample_clock, it->second};
}

SeedManifest SeedManifest::with_resampled_spin(VertexId v,
                                               std::uint32_t k) const
{
    SeedManifest m = *this;
    m.spin_generation[v] = k;
    return m;
}

SeedManifest SeedManifest::with_resampled_clock(VertexId v,
                                                std::uint32_t k) const
{
    SeedManifest m = *this;
    m.clock_generation[v] = k;
    return m;
}

SeedManifest SeedManifest::replica(std::uint64_t seed, std::uint64_t r)
{
    return SeedManifest{absorb(absorb(0x5EEDull, seed), r)};
}

std::uint64_t draw_bits(std::uint64_t master_seed, VertexId v,
                        StreamLabel label, std::uint64_t index)
{
    std::uint64_t h = absorb(0x6D656474726565ull, master_seed);
    h = absorb(h, v.code());
    h = absorb(h, label_word(label));
    return absorb(h, index);
}

UnitScalar draw_unit(std::uint64_t master_seed, VertexId v, StreamLabel label,
                     std::uint64_t index)
{
    return UnitScalar{draw_bits(master_seed, v, label, index)};
}

UnitScalar initial_uniform(const SeedManifest& manifest, VertexId v)
{
    return draw_unit(manifest.master_seed, v, manifest.spin_label(v), 0);
}

UnitScalar tie_break(const SeedManifest& manifest, VertexId v)
{
    return draw_unit(manifest.master_seed, v, {StreamKind::tie_break, 0}, 0);
}

//---------------------------------------------------------------------------//
ClockStream::ClockStream(const SeedManifest& manifest, VertexId v)
    : seed_(manifest.master_seed), vertex_(v), label_(manifest.clock_label(v))
{
}

void ClockStream::extend()
{
    double last = times_.empty() ? 0.0 : times_.back();
    double t = last
               + exponential_increment(seed_, vertex_, label_, times_.size());
    if (!(t > last))
        t = std::nextafter(last, INFINITY);
    times_.push_back(t);
}

double ClockStream::ring(std::size_t i)
{
    while (times_.size() <= i)
        extend();
    return times_[i];
}

std::vector<double> ClockStream::rings_until(double horizon)
{
    std::size_t n = count_until(horizon);
    return {times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::size_t ClockStream::count_until(double horizon)
{
    if (horizon < 0)
        throw std::invalid_argument("horizon must be nonnegative");
    while (times_.empty() || times_.back() <= horizon)
        extend();
    std::size_t n = times_.size();
    while (n > 0 && times_[n - 1] > horizon)
        --n;
    return n;
}

std::size_t ClockStream::count_before(double t)
{
    while (times_.empty() || times_.back() < t)
        extend();
    return static_cast<std::size_t>(
        std::lower_bound(times_.begin(), times_.end(), t) - times_.begin());
}

std::vector<double> rings(const SeedManifest& manifest, VertexId v,
                          double horizon)
{
    ClockStream stream(manifest, v);
    return stream.rings_until(horizon);
}

double RingCursor::next()
{
    double t = time_ + exponential_increment(seed_, vertex_, label_, index_);
    if (!(t > time_))
        t = std::nextafter(time_, INFINITY);
    ++index_;
    time_ = t;
    return t;
}

RingCursor ring_cursor(const SeedManifest& manifest, VertexId v)
{
    return RingCursor(manifest.master_seed, v, manifest.clock_label(v));
}

}  // namespace medtree
