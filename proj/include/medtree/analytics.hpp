#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medtree/exactness.hpp"

namespace medtree
{

//---------------------------------------------------------------------------//
/*!
 * Median-process configuration on the evolving vertices of a domain,
 * optionally restricted to an analyzed subset.
 */
struct Snapshot
{
    std::shared_ptr<const Domain> domain;
    std::vector<Spin> spins;
    // Analyzed vertices; empty means all.
    std::vector<bool> mask;
    // True unless the analyzed subset is certified as fixated.
    bool pre_fixation = true;

    bool analyzed(std::uint32_t i) const { return mask.empty() || mask[i]; }
};

Snapshot snapshot(const MedianTrajectory& trajectory);
Snapshot snapshot(const MedianState& state);
// Fixated vertices of a bracketed region, valued at T2.
Snapshot fixated_snapshot(const RegionBracket& bracket);

struct Cluster
{
    std::vector<VertexId> members;  // sorted by code
    std::size_t boundary_contact = 0;
    // Some member has a neighbor outside the analyzed set.
    bool truncated = false;
    int max_degree = 0;  // disagreement components only
    bool simple_path = true;

    std::size_t size() const { return members.size(); }
};

struct ClusterReport
{
    std::vector<Cluster> clusters;
    bool pre_fixation = true;
};

// Maximal connected sets of analyzed vertices with equal spins.
ClusterReport agreement_clusters(const Snapshot& s);
// Components with at least one edge of the graph of disagreeing edges
// between analyzed vertices.
ClusterReport disagreement_components(const Snapshot& s);

// Among analyzed vertices whose neighbors are all analyzed evolving
// vertices: how many agree with at least one neighbor.
struct AgreementRate
{
    std::uint64_t interior = 0;
    std::uint64_t agreeing = 0;
    double rate() const
    {
        return interior == 0 ? 1.0 : double(agreeing) / double(interior);
    }
};
AgreementRate neighbor_agreement(const Snapshot& s);

// A connected vertex set of the tree that induces a path.
bool is_simple_path(const std::vector<VertexId>& component);

void write_cluster_csv_header(std::ostream& out);
void write_cluster_csv(std::ostream& out, const ClusterReport& report,
                       const std::string& kind);

//---------------------------------------------------------------------------//
struct TraceSet
{
    VertexId source;
    double horizon = 0;
    std::vector<VertexId> members;  // sorted by code
    bool touches_boundary = false;

    std::size_t size() const { return members.size(); }
};

// Vertices that carried the source's initial value at some time <= horizon.
TraceSet trace(const MedianTrajectory& trajectory, VertexId source);
TraceSet trace(const SeedManifest& manifest, VertexId source, double T,
               int radius);

/*!
 * Majority runs from the two threshold projections of U(0) at level
 * U_x(0): tau+ puts +1 where U <= U_x(0), tau- where U < U_x(0). The
 * symmetric difference collects every vertex where the two ever differ.
 */
struct ThresholdPair
{
    DiscreteTrajectory upper;  // tau+
    DiscreteTrajectory lower;  // tau-
    std::vector<VertexId> symmetric_difference;  // sorted by code
};

ThresholdPair threshold_pair(const SeedManifest& manifest, VertexId x,
                             double T, int radius);

struct ResamplingDifference
{
    std::vector<VertexId> members;  // sorted by code
    bool touches_boundary = false;
};

/*!
 * Two majority runs (FrozenInitial, density p) that share all randomness
 * except that the target starts at +1 in one and -1 in the other; with
 * `resample_clock` the second run also uses a fresh clock at the target.
 */
ResamplingDifference resampling_difference(const SeedManifest& manifest,
                                           double p, double T,
                                           VertexId target, int radius,
                                           bool resample_clock = false,
                                           int forced_upper = +1,
                                           int forced_lower = -1);

//---------------------------------------------------------------------------//
// Discrete-configuration structure (spins of the evolving vertices).

// v lies on a monochromatic simple path of evolving vertices whose two ends
// are at distance >= depth from v.
bool chain_membership(const Domain& domain, const std::vector<std::int8_t>& spins,
                      VertexId v, int depth);

struct SignCluster
{
    std::vector<std::uint32_t> members;  // domain indices
    std::vector<std::uint32_t> triple_points;
    std::size_t boundary_contact = 0;
    int min_distance = 0;  // closest member to the ball center
};

// Clusters of the given sign; a triple point is a member whose removal
// leaves at least three pieces containing a ball-boundary vertex.
std::vector<SignCluster> sign_clusters(const Domain& domain,
                                       const std::vector<std::int8_t>& spins,
                                       int sign);
std::vector<VertexId> triple_points(const Domain& domain,
                                    const std::vector<std::int8_t>& spins,
                                    int sign);

//---------------------------------------------------------------------------//
struct EnergyAudit
{
    std::uint64_t flips = 0;
    std::uint64_t violations = 0;
};

// Flips where the number of disagreeing neighbors strictly increased.
EnergyAudit energy_audit(const MedianTrajectory& trajectory);

//---------------------------------------------------------------------------//
// Mass transport

/*!
 * Lazily computed vertex labels of one sample: initial uniforms, the exact
 * median-process state at a fixed time, and tie-break variables.
 */
class LabelSource
{
  public:
    LabelSource(const SeedManifest& manifest, double t);

    const SeedManifest& manifest() const { return manifest_; }
    Spin initial(VertexId v) const { return Spin::initial(manifest_, v); }
    const Spin& state(VertexId v);
    double tie_break(VertexId v) const;

  private:
    SeedManifest manifest_;
    double t_;
    BackwardOracle oracle_;
    std::unordered_map<VertexId, Spin, VertexHash> states_;
};

struct TransportDecision
{
    bool decided = true;
    std::vector<std::pair<VertexId, double>> mass;
};

// A transport rule sends mass from x using labels within radius w of x.
struct TransportRule
{
    std::string name;
    std::function<TransportDecision(VertexId x, LabelSource& labels, int w)>
        send;
};

TransportRule identity_rule();
// Unit mass to each neighbor with a larger initial uniform.
TransportRule larger_neighbor_rule();
// Unit mass to the nearest vertex whose state is <= level, ties broken by
// the smaller tie-break variable; undecided if none within the window.
TransportRule nearest_threshold_rule(double level);

struct TransportAudit
{
    std::string rule;
    std::uint64_t replicas = 0;
    double mass_out = 0;
    double mass_out_se = 0;
    double mass_in = 0;
    double mass_in_se = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t undecided = 0;
    double miss_frequency() const
    {
        return evaluations == 0 ? 0 : double(undecided) / double(evaluations);
    }
    // The 3-standard-error intervals overlap.
    bool overlap() const;
};

TransportAudit mass_transport_audit(const TransportRule& rule, int window,
                                    std::uint64_t replicas, double t,
                                    std::uint64_t seed);

}  // namespace medtree
