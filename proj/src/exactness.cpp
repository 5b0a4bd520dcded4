#include "medtree/exactness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>

namespace medtree
{

BackwardOracle::BackwardOracle(SeedManifest manifest, std::size_t budget)
    : manifest_(std::move(manifest)), budget_(budget)
{
}

ClockStream& BackwardOracle::clock(VertexId v)
{
    auto it = clocks_.find(v);
    if (it == clocks_.end())
        it = clocks_.emplace(v, ClockStream(manifest_, v)).first;
    return it->second;
}

std::size_t BackwardOracle::rings_seen(VertexId w, VertexId reader, double s)
{
    ClockStream& c = clock(w);
    std::size_t k = c.count_before(s);
    // The event loop orders equal times by address.
    if (c.ring(k) == s && address_less(w, reader))
        ++k;
    return k;
}

Spin BackwardOracle::state(VertexId v, double t)
{
    if (t < 0)
        throw std::invalid_argument("time must be nonnegative");
    visited_.insert(v);
    return after_rings(v, clock(v).count_until(t));
}

Spin BackwardOracle::after_rings(VertexId v, std::size_t k)
{
    if (k == 0)
        return Spin::initial(manifest_, v);
    visited_.insert(v);
    Key key{v.code(), k};
    if (auto it = memo_.find(key); it != memo_.end())
        return it->second;
    if (memo_.size() >= budget_)
        throw BudgetExceeded("backward recursion exceeded "
                             + std::to_string(budget_) + " states");

    double s = clock(v).ring(k - 1);
    Spin current = after_rings(v, k - 1);
    std::array<Spin, 3> n;
    std::array<VertexId, 3> nb;
    try
    {
        nb = neighbors(v);
    }
    catch (const std::out_of_range&)
    {
        throw BudgetExceeded("backward recursion reached maximum depth");
    }
    for (int j = 0; j < 3; ++j)
        n[j] = after_rings(nb[j], rings_seen(nb[j], v, s));
    Spin result = median_update(current, n[0], n[1], n[2]);
    memo_.emplace(key, result);
    return result;
}

Spin backward_state(const SeedManifest& manifest, VertexId v, double t,
                    std::size_t budget)
{
    BackwardOracle oracle(manifest, budget);
    return oracle.state(v, t);
}

InfluenceSet influence_set(const SeedManifest& manifest, VertexId v, double T,
                           std::size_t budget)
{
    BackwardOracle oracle(manifest, budget);
    oracle.state(v, T);
    InfluenceSet out;
    out.target = v;
    out.horizon = T;
    out.members.assign(oracle.visited().begin(), oracle.visited().end());
    std::sort(out.members.begin(), out.members.end());
    for (VertexId w : out.members)
        out.max_depth = std::max(out.max_depth, distance(v, w));
    return out;
}

//---------------------------------------------------------------------------//
namespace
{
struct PathState
{
    double time;
    VertexId vertex;
    int length;
};

int longest_chronological(const SeedManifest& manifest, VertexId v, double T,
                          bool forward)
{
    std::unordered_map<VertexId, ClockStream, VertexHash> clocks;
    auto clock = [&](VertexId w) -> ClockStream& {
        auto it = clocks.find(w);
        if (it == clocks.end())
            it = clocks.emplace(w, ClockStream(manifest, w)).first;
        return it->second;
    };
    // Next ring of w strictly after t (forward) or before t (backward),
    // inside [0, T]; negative when there is none.
    auto adjacent_ring = [&](VertexId w, double t) -> double {
        ClockStream& c = clock(w);
        if (forward)
        {
            double r = c.ring(c.count_until(t));
            return r <= T ? r : -1.0;
        }
        std::size_t k = c.count_before(t);
        return k == 0 ? -1.0 : c.ring(k - 1);
    };

    auto later = [forward](const PathState& a, const PathState& b) {
        return forward ? a.time > b.time : a.time < b.time;
    };
    std::priority_queue<PathState, std::vector<PathState>, decltype(later)>
        queue(later);

    double start = forward ? adjacent_ring(v, 0.0)
                           : adjacent_ring(v, std::nextafter(T, INFINITY));
    if (start < 0)
        return 0;
    queue.push({start, v, 1});

    std::unordered_map<VertexId, int, VertexHash> best;
    int longest = 0;
    while (!queue.empty())
    {
        PathState s = queue.top();
        queue.pop();
        int& b = best[s.vertex];
        if (s.length <= b)
            continue;
        b = s.length;
        longest = std::max(longest, s.length);
        for (VertexId w : neighbors(s.vertex))
        {
            double r = adjacent_ring(w, s.time);
            if (r >= 0)
                queue.push({r, w, s.length + 1});
        }
    }
    return longest;
}
}  // namespace

int longest_chronological_from(const SeedManifest& manifest, VertexId v,
                               double T)
{
    return longest_chronological(manifest, v, T, true);
}

int longest_chronological_to(const SeedManifest& manifest, VertexId v,
                             double T)
{
    return longest_chronological(manifest, v, T, false);
}

double chronological_tail_bound(double T, int k)
{
    return 1.25 * std::exp(4 * T) * std::pow(0.8, k);
}

double chronological_path_count_bound(double T)
{
    return std::expm1(3 * T) / 3;
}

TailCheck tail_check(double T, int k, std::uint64_t replicas,
                     std::uint64_t seed)
{
    TailCheck out;
    out.T = T;
    out.k = k;
    out.replicas = replicas;
    out.bound = chronological_tail_bound(T, k);
    out.vacuous = out.bound >= 1;
    VertexId o = VertexId::root();
    for (std::uint64_t r = 0; r < replicas; ++r)
    {
        SeedManifest m = SeedManifest::replica(seed, r);
        if (longest_chronological_from(m, o, T) >= k
            || longest_chronological_to(m, o, T) >= k)
            ++out.hits;
    }
    if (replicas > 0)
    {
        out.frequency = double(out.hits) / double(replicas);
        out.sigma = std::sqrt(out.frequency * (1 - out.frequency)
                              / double(replicas));
    }
    out.passed = !out.vacuous && out.frequency <= out.bound + 3 * out.sigma;
    return out;
}

//---------------------------------------------------------------------------//
namespace
{
std::vector<std::uint32_t> gap_indices(const Domain& domain, VertexId center,
                                       int radius)
{
    std::vector<std::uint32_t> out;
    for (VertexId w : Ball(center, radius).vertices())
        out.push_back(domain.index_of(w));
    return out;
}

std::size_t count_gap(const MedianState& low, const MedianState& high,
                      const std::vector<std::uint32_t>& region)
{
    std::size_t gap = 0;
    for (std::uint32_t i : region)
        if (!(low.spin(i) == high.spin(i)))
            ++gap;
    return gap;
}

void check_schedule(const std::vector<int>& schedule)
{
    if (schedule.empty())
        throw std::invalid_argument("empty radius schedule");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1])
            throw std::invalid_argument("radius schedule must increase");
}
}  // namespace

Certificate sandwich_certify(const SeedManifest& manifest, VertexId v,
                             double T, const std::vector<int>& radius_schedule)
{
    check_schedule(radius_schedule);
    Certificate c;
    c.vertex = v;
    c.horizon = T;
    RunOptions quiet{false};
    for (int R : radius_schedule)
    {
        auto domain = Domain::dense(Ball(v, R));
        MedianRun low(domain, manifest, BoundaryCondition::frozen_low(), quiet);
        MedianRun high(domain, manifest, BoundaryCondition::frozen_high(),
                       quiet);
        low.advance_to(T);
        high.advance_to(T);
        auto region = gap_indices(*domain, v, radius_schedule.front());
        c.radius_used = R;
        c.bracket_gap = count_gap(low.state(), high.state(), region);
        c.gaps.push_back(c.bracket_gap);
        std::uint32_t i = domain->index_of(v);
        if (low.state().spin(i) == high.state().spin(i))
        {
            c.verdict = Certificate::Verdict::certified;
            c.spin = low.state().spin(i);
            return c;
        }
    }
    return c;
}

FixationCertificate certify_fixation(const SeedManifest& manifest, VertexId v,
                                     double T,
                                     const std::vector<int>& radius_schedule)
{
    check_schedule(radius_schedule);
    FixationCertificate c;
    RunOptions quiet{false};
    for (int R : radius_schedule)
    {
        auto domain = Domain::dense(Ball(v, R));
        std::uint32_t i = domain->index_of(v);
        MedianRun low(domain, manifest, BoundaryCondition::frozen_low(), quiet);
        MedianRun high(domain, manifest, BoundaryCondition::frozen_high(),
                       quiet);
        low.advance_to(T);
        high.advance_to(T);
        if (!(low.state().spin(i) == high.state().spin(i)))
            continue;
        Spin at_T = low.state().spin(i);
        low.advance_to(2 * T);
        high.advance_to(2 * T);
        if (!(low.state().spin(i) == high.state().spin(i)))
            continue;
        c.radius_used = R;
        c.at_T = at_T;
        c.at_2T = low.state().spin(i);
        c.status = *c.at_T == *c.at_2T
                       ? FixationCertificate::Status::fixated
                       : FixationCertificate::Status::proxy_failed;
        return c;
    }
    return c;
}

DiscreteFixation certify_discrete_fixation(const SeedManifest& manifest,
                                           VertexId v, double p, double T,
                                           int radius)
{
    auto domain = Domain::dense(Ball(v, radius));
    std::uint32_t i = domain->index_of(v);
    auto initial = projected_initial(*domain, manifest, p);
    auto bc_low = BoundaryCondition::frozen_discrete(-1);
    auto bc_high = BoundaryCondition::frozen_discrete(+1);
    MajorityState low(domain, initial,
                      projected_externals(*domain, manifest, bc_low, p));
    MajorityState high(domain, initial,
                       projected_externals(*domain, manifest, bc_high, p));
    EventSource source(domain, manifest);
    DiscreteFixation out;
    Event e;
    auto advance = [&](double h) {
        while (source.next(h, e))
        {
            low.apply(e, nullptr);
            high.apply(e, nullptr);
        }
        return low.spin(i) == high.spin(i) ? int(low.spin(i)) : 0;
    };
    out.at_T = advance(T);
    out.at_2T = advance(2 * T);
    if (out.at_T != 0 && out.at_2T != 0)
        out.status = out.at_T == out.at_2T
                         ? FixationCertificate::Status::fixated
                         : FixationCertificate::Status::proxy_failed;
    return out;
}

RegionBracket bracket_region(const SeedManifest& manifest, int radius,
                             double T1, double T2)
{
    if (!(T1 < T2))
        throw std::invalid_argument("bracket_region needs T1 < T2");
    RegionBracket out;
    out.domain = Domain::dense(Ball(VertexId::root(), radius));
    auto run = [&](BoundaryCondition bc, std::vector<std::uint32_t>& at_T1,
                   std::vector<std::uint32_t>& at_T2) {
        MedianRun r(out.domain, manifest, bc, RunOptions{false});
        r.advance_to(T1);
        at_T1 = r.state().current();
        r.advance_to(T2);
        at_T2 = r.state().current();
        return r.state().slots_ptr();
    };
    // Both runs build the same slot table; only the sentinel each refers to
    // differs, and sentinels never compare equal across the two.
    out.slots = run(BoundaryCondition::frozen_low(), out.low_T1, out.low_T2);
    run(BoundaryCondition::frozen_high(), out.high_T1, out.high_T2);
    return out;
}

BracketAudit audit_bracketing(const SeedManifest& manifest, const Ball& ball,
                              double T)
{
    auto domain = Domain::dense(ball);
    MedianState low(domain, manifest, BoundaryCondition::frozen_low());
    MedianState mid(domain, manifest, BoundaryCondition::frozen_initial());
    MedianState high(domain, manifest, BoundaryCondition::frozen_high());
    BracketAudit out;
    auto ordered = [&](std::uint32_t i) {
        return spin_leq(low.spin(i), mid.spin(i))
               && spin_leq(mid.spin(i), high.spin(i));
    };
    for (std::uint32_t i = 0; i < domain->size(); ++i)
        if (!ordered(i))
            ++out.violations;
    EventSource source(domain, manifest);
    Event e;
    while (source.next(T, e))
    {
        low.apply(e, nullptr);
        mid.apply(e, nullptr);
        high.apply(e, nullptr);
        ++out.events;
        if (!ordered(e.vertex))
            ++out.violations;
    }
    return out;
}

void write_certificate_csv_header(std::ostream& out)
{
    out << "vertex_address,horizon,radius_used,verdict,value,origin,"
           "bracket_gap\n";
}

void write_certificate_csv_row(std::ostream& out, const Certificate& c)
{
    out << c.vertex.address() << ',' << format_time(c.horizon) << ','
        << c.radius_used << ','
        << (c.certified() ? "certified" : "undetermined") << ',';
    if (c.spin)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", c.spin->as_double());
        out << buf << ',' << c.spin->origin.address();
    }
    else
        out << ',';
    out << ',' << c.bracket_gap << '\n';
}

}  // namespace medtree
