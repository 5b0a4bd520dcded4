#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "medtree/engine.hpp"

namespace medtree
{

//---------------------------------------------------------------------------//
/*!
 * Exact infinite-tree median process values by backward recursion.
 *
 * U_v(t) is U_v(0) if v has not rung by t; otherwise it is the median of
 * the neighbors' values just before v's last ring. Values are memoized on
 * (vertex, ring count), so the recursion visits the influence DAG once.
 * Cost grows exponentially in t.
 */
class BackwardOracle
{
  public:
    BackwardOracle(SeedManifest manifest, std::size_t budget = 5'000'000);

    // Throws BudgetExceeded when the memo outgrows the budget.
    Spin state(VertexId v, double t);

    // Queried targets plus every vertex whose ring the recursion evaluated.
    const std::unordered_set<VertexId, VertexHash>& visited() const
    {
        return visited_;
    }
    std::size_t memo_size() const { return memo_.size(); }

  private:
    struct Key
    {
        std::uint64_t code;
        std::uint64_t rings;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash
    {
        std::size_t operator()(const Key& k) const noexcept
        {
            return static_cast<std::size_t>(k.code * 0x9E3779B97F4A7C15ull
                                            ^ (k.rings + 0x632BE59BD9B4E019ull));
        }
    };

    Spin after_rings(VertexId v, std::size_t k);
    ClockStream& clock(VertexId v);
    // Rings of w that an update of `reader` at time s has already seen.
    std::size_t rings_seen(VertexId w, VertexId reader, double s);

    SeedManifest manifest_;
    std::size_t budget_;
    std::unordered_map<VertexId, ClockStream, VertexHash> clocks_;
    std::unordered_map<Key, Spin, KeyHash> memo_;
    std::unordered_set<VertexId, VertexHash> visited_;
};

Spin backward_state(const SeedManifest& manifest, VertexId v, double t,
                    std::size_t budget = 5'000'000);

struct InfluenceSet
{
    VertexId target;
    double horizon = 0;
    std::vector<VertexId> members;  // sorted by code
    int max_depth = 0;              // max distance from the target

    std::size_t size() const { return members.size(); }
};

InfluenceSet influence_set(const SeedManifest& manifest, VertexId v, double T,
                           std::size_t budget = 5'000'000);

//---------------------------------------------------------------------------//
// Chronological paths

// Number of vertices of the longest chronological path for [0, T] that
// starts at v (forward) or ends at v (backward); 0 if v never rings.
int longest_chronological_from(const SeedManifest& manifest, VertexId v,
                               double T);
int longest_chronological_to(const SeedManifest& manifest, VertexId v,
                             double T);

// (5 e^{4T} / 4) (4/5)^k
double chronological_tail_bound(double T, int k);
// sum_k 4^{k-1} P(Gamma_k <= T) = (e^{3T} - 1) / 3
double chronological_path_count_bound(double T);

struct TailCheck
{
    double T = 0;
    int k = 0;
    std::uint64_t replicas = 0;
    std::uint64_t hits = 0;
    double frequency = 0;
    double sigma = 0;
    double bound = 0;
    bool vacuous = false;
    bool passed = false;
};

TailCheck tail_check(double T, int k, std::uint64_t replicas,
                     std::uint64_t seed);

//---------------------------------------------------------------------------//
// Sandwich certification

struct Certificate
{
    enum class Verdict
    {
        certified,
        undetermined
    };

    VertexId vertex;
    double horizon = 0;
    int radius_used = 0;
    Verdict verdict = Verdict::undetermined;
    std::optional<Spin> spin;
    // Vertices of ball(vertex, first scheduled radius) where the low and
    // high runs still disagree at the horizon, for the last radius tried.
    std::size_t bracket_gap = 0;
    std::vector<std::size_t> gaps;  // one per radius tried

    bool certified() const { return verdict == Verdict::certified; }
};

Certificate sandwich_certify(const SeedManifest& manifest, VertexId v,
                             double T, const std::vector<int>& radius_schedule);

// Certification at T and 2T with the same radius; fixated when both are
// certified with equal spins.
struct FixationCertificate
{
    enum class Status
    {
        fixated,       // certified at T and 2T with equal spins
        proxy_failed,  // certified at both, spins differ
        undetermined   // no radius certified both horizons
    };

    Status status = Status::undetermined;
    int radius_used = 0;
    std::optional<Spin> at_T;
    std::optional<Spin> at_2T;
};

FixationCertificate certify_fixation(const SeedManifest& manifest, VertexId v,
                                     double T,
                                     const std::vector<int>& radius_schedule);

// Discrete analogue at density p: majority runs with the boundary frozen at
// -1 and +1, certified at T and 2T. Spins are 0 when undetermined.
struct DiscreteFixation
{
    FixationCertificate::Status status
        = FixationCertificate::Status::undetermined;
    int at_T = 0;
    int at_2T = 0;
};

DiscreteFixation certify_discrete_fixation(const SeedManifest& manifest,
                                           VertexId v, double p, double T,
                                           int radius);

// Bracket of a whole root-centered ball at two horizons (T1 < T2).
struct RegionBracket
{
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<const SlotTable> slots;
    std::vector<std::uint32_t> low_T1, high_T1, low_T2, high_T2;

    bool certified(std::uint32_t i) const
    {
        return low_T1[i] == high_T1[i] && low_T2[i] == high_T2[i];
    }
    // Certified at both horizons with the same value.
    bool fixated(std::uint32_t i) const
    {
        return certified(i) && low_T1[i] == low_T2[i];
    }
};

RegionBracket bracket_region(const SeedManifest& manifest, int radius,
                             double T1, double T2);

// FrozenLow <= FrozenInitial <= FrozenHigh at every event.
struct BracketAudit
{
    std::uint64_t events = 0;
    std::uint64_t violations = 0;
};

BracketAudit audit_bracketing(const SeedManifest& manifest, const Ball& ball,
                              double T);

void write_certificate_csv_header(std::ostream& out);
void write_certificate_csv_row(std::ostream& out, const Certificate& c);

}  // namespace medtree
