#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "medtree/randomness.hpp"
#include "medtree/topology.hpp"

namespace medtree
{

//---------------------------------------------------------------------------//
/*!
 * Continuous spin of the median process.
 *
 * The median update only ever copies values, so every spin is a copy of
 * some vertex's initial uniform and carries that vertex as its origin.
 * Equality is origin identity. The two sentinels sit strictly below / above
 * every realizable value.
 */
struct Spin
{
    enum class Tier : std::uint8_t
    {
        low = 0,
        value = 1,
        high = 2
    };

    Tier tier = Tier::value;
    UnitScalar value;
    VertexId origin;

    static Spin low() { return Spin{Tier::low, {}, {}}; }
    static Spin high() { return Spin{Tier::high, {}, {}}; }
    static Spin initial(const SeedManifest& manifest, VertexId origin)
    {
        return Spin{Tier::value, initial_uniform(manifest, origin), origin};
    }

    bool is_sentinel() const { return tier != Tier::value; }
    // -0.0 and 1.0 stand in for the sentinels when printed.
    double as_double() const;

    friend bool operator==(const Spin& a, const Spin& b)
    {
        return a.tier == b.tier && a.value == b.value && a.origin == b.origin;
    }
};

// Total order: tier, then value, then origin address.
bool spin_less(const Spin& a, const Spin& b);
inline bool spin_leq(const Spin& a, const Spin& b)
{
    return !spin_less(b, a);
}

// The projection pi_p: +1 where the value is <= p.
int project(const Spin& s, double p);

Spin median_update(const Spin& current, const Spin& n1, const Spin& n2,
                   const Spin& n3);
int discrete_update(int current, int n1, int n2, int n3);

//---------------------------------------------------------------------------//
struct BoundaryCondition
{
    enum class Kind
    {
        free,
        frozen_initial,
        frozen_low,
        frozen_high,
        frozen_discrete
    };

    Kind kind = Kind::frozen_initial;
    int sign = -1;  // frozen_discrete only

    static BoundaryCondition free() { return {Kind::free}; }
    static BoundaryCondition frozen_initial() { return {Kind::frozen_initial}; }
    static BoundaryCondition frozen_low() { return {Kind::frozen_low}; }
    static BoundaryCondition frozen_high() { return {Kind::frozen_high}; }
    static BoundaryCondition frozen_discrete(int s);

    std::string to_string() const;
    static BoundaryCondition parse(const std::string& text);
};

class BudgetExceeded : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//---------------------------------------------------------------------------//
/*!
 * Set of evolving vertices plus the fixed sites adjacent to them.
 *
 * A dense domain evolves every vertex of a ball. A light-cone domain keeps
 * only the ball vertices that can influence a target by a given horizon;
 * every other neighbor is an external site that keeps its initial spin (or
 * the boundary value, when it lies outside the ball).
 */
class Domain
{
  public:
    static constexpr std::uint32_t npos
        = std::numeric_limits<std::uint32_t>::max();

    struct External
    {
        VertexId vertex;
        bool in_ball = false;
    };

    static std::shared_ptr<const Domain> dense(const Ball& ball);
    // The ball minus `cut` and every vertex separated from the center by it;
    // `cut` becomes an external site.
    static std::shared_ptr<const Domain> without_branch(const Ball& ball,
                                                        VertexId cut);
    static std::shared_ptr<const Domain> light_cone(const SeedManifest& manifest,
                                                    const Ball& ball,
                                                    VertexId target,
                                                    double horizon);

    const Ball& ball() const { return ball_; }
    std::uint32_t size() const
    {
        return static_cast<std::uint32_t>(vertices_.size());
    }
    VertexId vertex(std::uint32_t i) const { return vertices_[i]; }
    const std::vector<VertexId>& vertices() const { return vertices_; }
    std::uint32_t index_of(VertexId v) const;

    // Entry k of neighbors(i): < size() is an evolving vertex, otherwise
    // size() + j refers to externals()[j].
    const std::array<std::uint32_t, 3>& neighbor_refs(std::uint32_t i) const
    {
        return adjacency_[i];
    }
    const std::vector<External>& externals() const { return externals_; }

    // Rings of vertex i later than this are irrelevant (infinity if dense).
    double deadline(std::uint32_t i) const
    {
        return deadlines_.empty() ? std::numeric_limits<double>::infinity()
                                  : deadlines_[i];
    }
    bool is_dense() const { return deadlines_.empty(); }

  private:
    explicit Domain(const Ball& ball) : ball_(ball) {}
    void wire();

    Ball ball_;
    std::vector<VertexId> vertices_;
    std::vector<std::array<std::uint32_t, 3>> adjacency_;
    std::vector<External> externals_;
    std::vector<double> deadlines_;
    std::unordered_map<VertexId, std::uint32_t, VertexHash> index_;
};

//---------------------------------------------------------------------------//
struct Event
{
    double time;
    std::uint32_t vertex;
};

/*!
 * Global time-ordered merge of the clocks of every evolving vertex.
 *
 * Rings at or before start_time are skipped. Equal ring times (a floating
 * point accident) are ordered by vertex address.
 */
class EventSource
{
  public:
    EventSource(std::shared_ptr<const Domain> domain,
                const SeedManifest& manifest, double start_time = 0);

    // Pops the next event with time <= horizon; false when exhausted.
    bool next(double horizon, Event& out);
    double peek_time() const;

  private:
    struct Entry
    {
        double time;
        std::uint32_t vertex;
    };
    bool before(const Entry& a, const Entry& b) const;
    void sift_down(std::size_t i);
    void sift_up(std::size_t i);

    std::shared_ptr<const Domain> domain_;
    std::vector<RingCursor> cursors_;
    std::vector<Entry> heap_;
};

//---------------------------------------------------------------------------//
struct RunOptions
{
    bool record_flips = true;
    std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
};

// Flip log entry; spins are slot indices into the trajectory's slot table.
struct MedianFlipRecord
{
    std::uint32_t vertex;
    double time;
    std::uint32_t old_slot;
    std::uint32_t new_slot;
    std::array<std::uint32_t, 3> neighbor_slots;
};

struct MedianFlip
{
    VertexId vertex;
    double time;
    Spin old_spin;
    Spin new_spin;
    std::array<Spin, 3> neighbors;
};

/*!
 * Slot table: every value a median run can hold. Slots [0, n) are the
 * initial spins of the evolving vertices, then one per external site,
 * then the low and high sentinels.
 */
struct SlotTable
{
    std::vector<Spin> spins;
    std::uint32_t evolving = 0;
    std::uint32_t low_slot() const { return evolving_plus_externals; }
    std::uint32_t high_slot() const { return evolving_plus_externals + 1; }
    std::uint32_t evolving_plus_externals = 0;
};

/*!
 * Median process state on a domain, advanced one event at a time.
 */
class MedianState
{
  public:
    MedianState(std::shared_ptr<const Domain> domain,
                const SeedManifest& manifest, BoundaryCondition bc);
    // Same initial spins but a custom configuration of slots.
    MedianState(std::shared_ptr<const Domain> domain,
                std::shared_ptr<const SlotTable> slots, BoundaryCondition bc,
                std::vector<std::uint32_t> current);

    // Applies the update of vertex i at time t; returns true on a flip.
    bool apply(const Event& e, std::vector<MedianFlipRecord>* log);

    const Domain& domain() const { return *domain_; }
    const std::shared_ptr<const Domain>& domain_ptr() const { return domain_; }
    const SlotTable& slots() const { return *slots_; }
    const std::shared_ptr<const SlotTable>& slots_ptr() const
    {
        return slots_;
    }
    BoundaryCondition boundary() const { return bc_; }

    std::uint32_t slot(std::uint32_t i) const { return current_[i]; }
    const Spin& spin(std::uint32_t i) const
    {
        return slots_->spins[current_[i]];
    }
    const std::vector<std::uint32_t>& current() const { return current_; }
    // Spin read by an evolving vertex through its k-th neighbor reference.
    std::uint32_t neighbor_slot(std::uint32_t i, int k) const;
    bool slot_less(std::uint32_t a, std::uint32_t b) const;

  private:
    void build_refs();

    std::shared_ptr<const Domain> domain_;
    std::shared_ptr<const SlotTable> slots_;
    BoundaryCondition bc_;
    std::vector<std::uint32_t> current_;
    std::vector<std::array<std::uint32_t, 3>> refs_;
};

struct MedianTrajectory
{
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const SlotTable> slots;
    BoundaryCondition bc;
    double start_time = 0;
    double horizon = 0;
    std::vector<std::uint32_t> initial_slots;
    std::vector<std::uint32_t> final_slots;
    std::vector<MedianFlipRecord> flips;
    std::uint64_t events = 0;

    const Spin& final_spin(std::uint32_t i) const
    {
        return slots->spins[final_slots[i]];
    }
    const Spin& final_spin(VertexId v) const;
    MedianFlip flip(std::size_t k) const;
};

/*!
 * Driver: one median state fed by one event source.
 */
class MedianRun
{
  public:
    MedianRun(std::shared_ptr<const Domain> domain,
              const SeedManifest& manifest, BoundaryCondition bc,
              RunOptions options = {});
    // Resume from the end of an earlier trajectory with the same manifest.
    MedianRun(const MedianTrajectory& earlier, const SeedManifest& manifest,
              RunOptions options = {});

    void advance_to(double t);
    double time() const { return time_; }
    const MedianState& state() const { return state_; }
    MedianTrajectory finish() &&;

  private:
    MedianState state_;
    EventSource source_;
    RunOptions options_;
    double start_time_;
    double time_;
    std::vector<std::uint32_t> initial_;
    std::vector<MedianFlipRecord> flips_;
    std::uint64_t events_ = 0;
};

MedianTrajectory run_median(const SeedManifest& manifest, const Ball& ball,
                            BoundaryCondition bc, double horizon,
                            RunOptions options = {});

//---------------------------------------------------------------------------//
struct DiscreteFlipRecord
{
    std::uint32_t vertex;
    double time;
    std::int8_t old_spin;
    std::int8_t new_spin;
    std::array<std::int8_t, 3> neighbors;

    friend bool operator==(const DiscreteFlipRecord&,
                           const DiscreteFlipRecord&) = default;
};

struct DiscreteTrajectory
{
    std::shared_ptr<const Domain> domain;
    BoundaryCondition bc;
    double horizon = 0;
    std::vector<std::int8_t> initial;
    std::vector<std::int8_t> final_spins;
    std::vector<DiscreteFlipRecord> flips;
    std::uint64_t events = 0;
};

/*!
 * Direct implementation of the energy rule for +-1 spins.
 */
class MajorityState
{
  public:
    // external_spins: one per domain external site.
    MajorityState(std::shared_ptr<const Domain> domain,
                  std::vector<std::int8_t> initial,
                  std::vector<std::int8_t> external_spins);

    bool apply(const Event& e, std::vector<DiscreteFlipRecord>* log);
    std::int8_t spin(std::uint32_t i) const { return spins_[i]; }
    const std::vector<std::int8_t>& spins() const { return spins_; }
    std::int8_t neighbor_spin(std::uint32_t i, int k) const;
    void set_spin(std::uint32_t i, std::int8_t s) { spins_[i] = s; }

  private:
    std::shared_ptr<const Domain> domain_;
    std::vector<std::int8_t> spins_;
    std::vector<std::int8_t> external_;
};

// Initial +-1 spins 2*1{U <= p} - 1 of the evolving vertices and of the
// external sites (boundary per bc).
std::vector<std::int8_t> projected_initial(const Domain& domain,
                                           const SeedManifest& manifest,
                                           double p);
std::vector<std::int8_t> projected_externals(const Domain& domain,
                                             const SeedManifest& manifest,
                                             BoundaryCondition bc, double p);

DiscreteTrajectory run_majority(std::shared_ptr<const Domain> domain,
                                const SeedManifest& clocks,
                                std::vector<std::int8_t> initial,
                                std::vector<std::int8_t> external_spins,
                                BoundaryCondition bc, double horizon,
                                RunOptions options = {});
DiscreteTrajectory run_majority(const SeedManifest& manifest,
                                const Ball& ball, BoundaryCondition bc,
                                double p, double horizon,
                                RunOptions options = {});

// Discrete mode through the shared path: project a median trajectory.
DiscreteTrajectory project(const MedianTrajectory& trajectory, double p);
std::vector<int> project(const std::vector<Spin>& config, double p);
DiscreteTrajectory run_discrete(const SeedManifest& manifest, const Ball& ball,
                                BoundaryCondition bc, double p, double horizon,
                                RunOptions options = {});

//---------------------------------------------------------------------------//
struct CommutationReport
{
    bool ok = true;
    std::size_t compared_flips = 0;
    std::optional<VertexId> vertex;
    double time = 0;
    std::string detail;
};

// Projected median trajectory vs. the direct majority run from pi_p(U(0)).
// `discrete_clocks`, when given, drives the majority side (negative control).
CommutationReport check_commutation(
    const SeedManifest& manifest, const Ball& ball, double p, double horizon,
    const SeedManifest* discrete_clocks = nullptr);

struct OrderReport
{
    bool ok = true;
    std::uint64_t events_checked = 0;
    std::optional<VertexId> vertex;
    double time = 0;
};

// Two majority runs driven by the same clocks, lower <= upper at every event.
OrderReport check_attractiveness(const SeedManifest& manifest,
                                 const Ball& ball, BoundaryCondition bc,
                                 std::vector<std::int8_t> lower,
                                 std::vector<std::int8_t> upper,
                                 double horizon);

std::string format_time(double t);
void write_flip_csv(std::ostream& out, const MedianTrajectory& trajectory);

}  // namespace medtree
