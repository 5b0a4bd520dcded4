#include "medtree/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace medtree
{

namespace
{
class UnionFind
{
  public:
    explicit UnionFind(std::size_t n) : parent_(n)
    {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }
    std::uint32_t find(std::uint32_t i)
    {
        while (parent_[i] != i)
        {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void join(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent_[std::max(a, b)] = std::min(a, b);
    }

  private:
    std::vector<std::uint32_t> parent_;
};

std::vector<VertexId> sorted_vertices(const Domain& d,
                                      const std::vector<std::uint32_t>& idx)
{
    std::vector<VertexId> out;
    out.reserve(idx.size());
    for (std::uint32_t i : idx)
        out.push_back(d.vertex(i));
    std::sort(out.begin(), out.end());
    return out;
}

// Groups vertices by union-find root, in order of first appearance.
std::vector<std::vector<std::uint32_t>>
groups(UnionFind& uf, const std::vector<bool>& include)
{
    std::vector<std::vector<std::uint32_t>> out;
    std::unordered_map<std::uint32_t, std::size_t> slot;
    for (std::uint32_t i = 0; i < include.size(); ++i)
    {
        if (!include[i])
            continue;
        auto [it, fresh] = slot.emplace(uf.find(i), out.size());
        if (fresh)
            out.emplace_back();
        out[it->second].push_back(i);
    }
    return out;
}

bool has_outside_neighbor(const Snapshot& s, std::uint32_t i)
{
    const Domain& d = *s.domain;
    for (std::uint32_t r : d.neighbor_refs(i))
        if (r >= d.size() || !s.analyzed(r))
            return true;
    return false;
}
}  // namespace

Snapshot snapshot(const MedianTrajectory& trajectory)
{
    Snapshot s;
    s.domain = trajectory.domain;
    s.spins.reserve(trajectory.final_slots.size());
    for (std::uint32_t slot : trajectory.final_slots)
        s.spins.push_back(trajectory.slots->spins[slot]);
    return s;
}

Snapshot snapshot(const MedianState& state)
{
    Snapshot s;
    s.domain = state.domain_ptr();
    for (std::uint32_t i = 0; i < state.domain().size(); ++i)
        s.spins.push_back(state.spin(i));
    return s;
}

Snapshot fixated_snapshot(const RegionBracket& bracket)
{
    Snapshot s;
    s.domain = bracket.domain;
    std::uint32_t n = bracket.domain->size();
    s.mask.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        s.spins.push_back(bracket.slots->spins[bracket.low_T2[i]]);
        s.mask[i] = bracket.fixated(i);
    }
    s.pre_fixation = false;
    return s;
}

ClusterReport agreement_clusters(const Snapshot& s)
{
    const Domain& d = *s.domain;
    UnionFind uf(d.size());
    std::vector<bool> include(d.size());
    for (std::uint32_t i = 0; i < d.size(); ++i)
    {
        include[i] = s.analyzed(i);
        if (!include[i])
            continue;
        for (std::uint32_t j : d.neighbor_refs(i))
            if (j < i && s.analyzed(j) && s.spins[i] == s.spins[j])
                uf.join(i, j);
    }
    ClusterReport report;
    report.pre_fixation = s.pre_fixation;
    for (const auto& g : groups(uf, include))
    {
        Cluster c;
        for (std::uint32_t i : g)
        {
            if (d.ball().is_boundary(d.vertex(i)))
                ++c.boundary_contact;
            c.truncated = c.truncated || has_outside_neighbor(s, i);
        }
        c.members = sorted_vertices(d, g);
        report.clusters.push_back(std::move(c));
    }
    return report;
}

ClusterReport disagreement_components(const Snapshot& s)
{
    const Domain& d = *s.domain;
    UnionFind uf(d.size());
    std::vector<int> degree(d.size(), 0);
    for (std::uint32_t i = 0; i < d.size(); ++i)
    {
        if (!s.analyzed(i))
            continue;
        for (std::uint32_t j : d.neighbor_refs(i))
        {
            if (j >= d.size() || !s.analyzed(j) || s.spins[i] == s.spins[j])
                continue;
            ++degree[i];
            if (j < i)
                uf.join(i, j);
        }
    }
    std::vector<bool> include(d.size());
    for (std::uint32_t i = 0; i < d.size(); ++i)
        include[i] = degree[i] > 0;

    ClusterReport report;
    report.pre_fixation = s.pre_fixation;
    for (const auto& g : groups(uf, include))
    {
        Cluster c;
        for (std::uint32_t i : g)
        {
            if (d.ball().is_boundary(d.vertex(i)))
                ++c.boundary_contact;
            c.truncated = c.truncated || has_outside_neighbor(s, i);
            c.max_degree = std::max(c.max_degree, degree[i]);
        }
        c.members = sorted_vertices(d, g);
        c.simple_path = is_simple_path(c.members);
        report.clusters.push_back(std::move(c));
    }
    return report;
}

AgreementRate neighbor_agreement(const Snapshot& s)
{
    const Domain& d = *s.domain;
    AgreementRate out;
    for (std::uint32_t i = 0; i < d.size(); ++i)
    {
        if (!s.analyzed(i) || has_outside_neighbor(s, i))
            continue;
        ++out.interior;
        for (std::uint32_t j : d.neighbor_refs(i))
        {
            if (s.spins[i] == s.spins[j])
            {
                ++out.agreeing;
                break;
            }
        }
    }
    return out;
}

bool is_simple_path(const std::vector<VertexId>& component)
{
    if (component.empty())
        return false;
    std::unordered_set<VertexId, VertexHash> set(component.begin(),
                                                 component.end());
    std::size_t edges = 0;
    for (VertexId v : component)
    {
        int degree = 0;
        for (VertexId w : neighbors(v))
            degree += set.count(w) ? 1 : 0;
        if (degree > 2)
            return false;
        edges += static_cast<std::size_t>(degree);
    }
    edges /= 2;
    // A vertex set of a tree is connected iff it spans |V| - 1 edges.
    return edges + 1 == component.size();
}

void write_cluster_csv_header(std::ostream& out)
{
    out << "kind,cluster,size,boundary_contact,truncated,max_degree,"
           "simple_path,members\n";
}

void write_cluster_csv(std::ostream& out, const ClusterReport& report,
                       const std::string& kind)
{
    for (std::size_t k = 0; k < report.clusters.size(); ++k)
    {
        const Cluster& c = report.clusters[k];
        out << kind << ',' << k << ',' << c.size() << ','
            << c.boundary_contact << ',' << (c.truncated ? 1 : 0) << ','
            << c.max_degree << ',' << (c.simple_path ? 1 : 0) << ',';
        for (std::size_t m = 0; m < c.members.size(); ++m)
            out << (m ? " " : "") << c.members[m].address();
        out << '\n';
    }
}

//---------------------------------------------------------------------------//
TraceSet trace(const MedianTrajectory& trajectory, VertexId source)
{
    const Domain& d = *trajectory.domain;
    const auto& spins = trajectory.slots->spins;
    auto carries = [&](std::uint32_t slot) {
        const Spin& s = spins[slot];
        return !s.is_sentinel() && s.origin == source;
    };
    std::unordered_set<VertexId, VertexHash> members;
    for (std::uint32_t i = 0; i < d.size(); ++i)
        if (carries(trajectory.initial_slots[i]))
            members.insert(d.vertex(i));
    for (const auto& f : trajectory.flips)
        if (carries(f.new_slot))
            members.insert(d.vertex(f.vertex));

    TraceSet out;
    out.source = source;
    out.horizon = trajectory.horizon;
    out.members.assign(members.begin(), members.end());
    std::sort(out.members.begin(), out.members.end());
    for (VertexId v : out.members)
        out.touches_boundary = out.touches_boundary || d.ball().is_boundary(v);
    return out;
}

TraceSet trace(const SeedManifest& manifest, VertexId source, double T,
               int radius)
{
    auto traj = run_median(manifest, Ball(source, radius),
                           BoundaryCondition::frozen_initial(), T);
    return trace(traj, source);
}

namespace
{
// Replays two flip logs on the same domain and returns every vertex where
// the spins differ at some time.
std::vector<VertexId> ever_differ(const DiscreteTrajectory& a,
                                  const DiscreteTrajectory& b)
{
    const Domain& d = *a.domain;
    std::vector<std::int8_t> sa = a.initial, sb = b.initial;
    std::vector<bool> differ(d.size());
    for (std::uint32_t i = 0; i < d.size(); ++i)
        differ[i] = sa[i] != sb[i];

    std::size_t ia = 0, ib = 0;
    std::vector<std::uint32_t> touched;
    while (ia < a.flips.size() || ib < b.flips.size())
    {
        double t = std::min(
            ia < a.flips.size() ? a.flips[ia].time : INFINITY,
            ib < b.flips.size() ? b.flips[ib].time : INFINITY);
        touched.clear();
        for (; ia < a.flips.size() && a.flips[ia].time == t; ++ia)
        {
            sa[a.flips[ia].vertex] = a.flips[ia].new_spin;
            touched.push_back(a.flips[ia].vertex);
        }
        for (; ib < b.flips.size() && b.flips[ib].time == t; ++ib)
        {
            sb[b.flips[ib].vertex] = b.flips[ib].new_spin;
            touched.push_back(b.flips[ib].vertex);
        }
        for (std::uint32_t i : touched)
            if (sa[i] != sb[i])
                differ[i] = true;
    }
    std::vector<VertexId> out;
    for (std::uint32_t i = 0; i < d.size(); ++i)
        if (differ[i])
            out.push_back(d.vertex(i));
    std::sort(out.begin(), out.end());
    return out;
}
}  // namespace

ThresholdPair threshold_pair(const SeedManifest& manifest, VertexId x,
                             double T, int radius)
{
    auto domain = Domain::dense(Ball(x, radius));
    Spin level = Spin::initial(manifest, x);
    auto threshold = [&](bool weak) {
        auto side = [&](VertexId v) -> std::int8_t {
            Spin s = Spin::initial(manifest, v);
            bool plus = weak ? spin_leq(s, level) : spin_less(s, level);
            return plus ? 1 : -1;
        };
        std::vector<std::int8_t> initial, external;
        for (VertexId v : domain->vertices())
            initial.push_back(side(v));
        for (const auto& e : domain->externals())
            external.push_back(side(e.vertex));
        return run_majority(domain, manifest, std::move(initial),
                            std::move(external),
                            BoundaryCondition::frozen_initial(), T);
    };
    ThresholdPair out;
    out.upper = threshold(true);
    out.lower = threshold(false);
    out.symmetric_difference = ever_differ(out.upper, out.lower);
    return out;
}

ResamplingDifference resampling_difference(const SeedManifest& manifest,
                                           double p, double T,
                                           VertexId target, int radius,
                                           bool resample_clock,
                                           int forced_upper, int forced_lower)
{
    auto domain = Domain::dense(Ball(target, radius));
    auto bc = BoundaryCondition::frozen_initial();
    auto initial = projected_initial(*domain, manifest, p);
    auto external = projected_externals(*domain, manifest, bc, p);
    std::uint32_t t = domain->index_of(target);

    auto upper_init = initial;
    upper_init[t] = static_cast<std::int8_t>(forced_upper);
    auto lower_init = initial;
    lower_init[t] = static_cast<std::int8_t>(forced_lower);
    SeedManifest lower_clocks
        = resample_clock
              ? manifest.with_resampled_clock(
                    target, manifest.clock_generation.count(target)
                                ? manifest.clock_generation.at(target) + 1
                                : 1)
              : manifest;

    auto a = run_majority(domain, manifest, upper_init, external, bc, T);
    auto b = run_majority(domain, lower_clocks, lower_init, external, bc, T);
    ResamplingDifference out;
    out.members = ever_differ(a, b);
    for (VertexId v : out.members)
        out.touches_boundary
            = out.touches_boundary || domain->ball().is_boundary(v);
    return out;
}

//---------------------------------------------------------------------------//
namespace
{
bool reaches(const Domain& d, const std::vector<std::int8_t>& spins,
             std::uint32_t i, std::uint32_t from, int remaining)
{
    if (remaining <= 0)
        return true;
    for (std::uint32_t j : d.neighbor_refs(i))
        if (j != from && j < d.size() && spins[j] == spins[i]
            && reaches(d, spins, j, i, remaining - 1))
            return true;
    return false;
}
}  // namespace

bool chain_membership(const Domain& domain,
                      const std::vector<std::int8_t>& spins, VertexId v,
                      int depth)
{
    std::uint32_t i = domain.index_of(v);
    if (i == Domain::npos)
        throw std::invalid_argument("chain_membership: vertex not evolving");
    if (depth <= 0)
        return true;
    int branches = 0;
    for (std::uint32_t j : domain.neighbor_refs(i))
        if (j < domain.size() && spins[j] == spins[i]
            && reaches(domain, spins, j, i, depth - 1))
            ++branches;
    return branches >= 2;
}

std::vector<SignCluster> sign_clusters(const Domain& domain,
                                       const std::vector<std::int8_t>& spins,
                                       int sign)
{
    std::uint32_t n = domain.size();
    std::vector<SignCluster> out;
    std::vector<bool> seen(n);
    std::vector<std::uint32_t> parent(n, Domain::npos);
    std::vector<std::size_t> below(n);
    VertexId center = domain.ball().center();
    for (std::uint32_t s = 0; s < n; ++s)
    {
        if (seen[s] || spins[s] != sign)
            continue;
        SignCluster c;
        // BFS order: parents precede children.
        std::vector<std::uint32_t>& order = c.members;
        order.push_back(s);
        seen[s] = true;
        parent[s] = Domain::npos;
        for (std::size_t k = 0; k < order.size(); ++k)
        {
            std::uint32_t i = order[k];
            for (std::uint32_t j : domain.neighbor_refs(i))
            {
                if (j >= n || seen[j] || spins[j] != sign)
                    continue;
                seen[j] = true;
                parent[j] = i;
                order.push_back(j);
            }
        }
        c.min_distance = std::numeric_limits<int>::max();
        for (std::uint32_t i : order)
        {
            bool b = domain.ball().is_boundary(domain.vertex(i));
            below[i] = b ? 1 : 0;
            c.boundary_contact += below[i];
            c.min_distance
                = std::min(c.min_distance, distance(center, domain.vertex(i)));
        }
        for (std::size_t k = order.size(); k-- > 1;)
            below[parent[order[k]]] += below[order[k]];
        std::size_t total = below[s];
        std::vector<int> pieces(n, 0);
        for (std::uint32_t i : order)
        {
            if (parent[i] != Domain::npos)
            {
                if (below[i] > 0)
                    ++pieces[parent[i]];
                if (total - below[i] > 0)
                    ++pieces[i];
            }
        }
        for (std::uint32_t i : order)
            if (pieces[i] >= 3)
                c.triple_points.push_back(i);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<VertexId> triple_points(const Domain& domain,
                                    const std::vector<std::int8_t>& spins,
                                    int sign)
{
    std::vector<std::uint32_t> idx;
    for (const auto& c : sign_clusters(domain, spins, sign))
        idx.insert(idx.end(), c.triple_points.begin(), c.triple_points.end());
    return sorted_vertices(domain, idx);
}

//---------------------------------------------------------------------------//
EnergyAudit energy_audit(const MedianTrajectory& trajectory)
{
    EnergyAudit out;
    for (const auto& f : trajectory.flips)
    {
        int before = 0, after = 0;
        for (std::uint32_t n : f.neighbor_slots)
        {
            before += n != f.old_slot;
            after += n != f.new_slot;
        }
        ++out.flips;
        if (after > before)
            ++out.violations;
    }
    return out;
}

//---------------------------------------------------------------------------//
LabelSource::LabelSource(const SeedManifest& manifest, double t)
    : manifest_(manifest), t_(t), oracle_(manifest)
{
}

const Spin& LabelSource::state(VertexId v)
{
    auto it = states_.find(v);
    if (it == states_.end())
        it = states_.emplace(v, oracle_.state(v, t_)).first;
    return it->second;
}

double LabelSource::tie_break(VertexId v) const
{
    return ::medtree::tie_break(manifest_, v).value();
}

TransportRule identity_rule()
{
    return {"identity", [](VertexId x, LabelSource&, int) {
                return TransportDecision{true, {{x, 1.0}}};
            }};
}

TransportRule larger_neighbor_rule()
{
    return {"larger_neighbor", [](VertexId x, LabelSource& labels, int) {
                TransportDecision d;
                Spin ux = labels.initial(x);
                for (VertexId y : neighbors(x))
                    if (spin_less(ux, labels.initial(y)))
                        d.mass.emplace_back(y, 1.0);
                return d;
            }};
}

TransportRule nearest_threshold_rule(double level)
{
    return {"nearest_threshold", [level](VertexId x, LabelSource& labels,
                                         int w) {
                // Sphere by sphere: (vertex, the neighbor it was reached from).
                std::vector<std::pair<VertexId, std::optional<VertexId>>>
                    sphere{{x, std::nullopt}}, next;
                for (int r = 0; r <= w; ++r)
                {
                    std::optional<VertexId> best;
                    double best_xi = 2;
                    for (const auto& [v, from] : sphere)
                    {
                        if (project(labels.state(v), level) != 1)
                            continue;
                        double xi = labels.tie_break(v);
                        if (xi < best_xi)
                        {
                            best_xi = xi;
                            best = v;
                        }
                    }
                    if (best)
                        return TransportDecision{true, {{*best, 1.0}}};
                    next.clear();
                    for (const auto& [v, from] : sphere)
                        for (VertexId u : neighbors(v))
                            if (!from || u != *from)
                                next.emplace_back(u, v);
                    sphere.swap(next);
                }
                return TransportDecision{false, {}};
            }};
}

bool TransportAudit::overlap() const
{
    return std::abs(mass_out - mass_in) <= 3 * (mass_out_se + mass_in_se);
}

TransportAudit mass_transport_audit(const TransportRule& rule, int window,
                                    std::uint64_t replicas, double t,
                                    std::uint64_t seed)
{
    TransportAudit out;
    out.rule = rule.name;
    out.replicas = replicas;
    VertexId o = VertexId::root();
    auto nearby = Ball(o, window).vertices();
    double s_out = 0, ss_out = 0, s_in = 0, ss_in = 0;
    for (std::uint64_t r = 0; r < replicas; ++r)
    {
        LabelSource labels(SeedManifest::replica(seed, r), t);
        double m_out = 0, m_in = 0;
        for (VertexId x : nearby)
        {
            TransportDecision d = rule.send(x, labels, window);
            ++out.evaluations;
            if (!d.decided)
                ++out.undecided;
            for (const auto& [y, m] : d.mass)
            {
                if (x == o)
                    m_out += m;
                if (y == o)
                    m_in += m;
            }
        }
        s_out += m_out;
        ss_out += m_out * m_out;
        s_in += m_in;
        ss_in += m_in * m_in;
    }
    if (replicas > 0)
    {
        double n = double(replicas);
        auto se = [n](double s, double ss) {
            double mean = s / n;
            double var = std::max(0.0, ss / n - mean * mean);
            return n > 1 ? std::sqrt(var * n / (n - 1) / n) : 0.0;
        };
        out.mass_out = s_out / n;
        out.mass_in = s_in / n;
        out.mass_out_se = se(s_out, ss_out);
        out.mass_in_se = se(s_in, ss_in);
    }
    return out;
}

}  // namespace medtree
