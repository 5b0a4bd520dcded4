#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "medtree/analytics.hpp"

namespace medtree
{

// Batches smaller than this refuse to report.
inline constexpr std::uint64_t default_min_replicas = 1000;

class InsufficientReplicas : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

void require_replicas(std::uint64_t n, std::uint64_t min_replicas);

//---------------------------------------------------------------------------//
struct EstimateWithCI
{
    double estimate = 0;
    std::uint64_t replicas = 0;
    double ci = 0;  // 95% halfwidth
    // Interval obtained by counting undetermined replicas as 0 and as 1.
    double lower = 0;
    double upper = 0;
    double undetermined_fraction = 0;
    double boundary_fraction = 0;

    bool overlaps(const EstimateWithCI& other) const;
};

// hits among `determined` replicas, with `undetermined` more unresolved.
EstimateWithCI bernoulli_estimate(std::uint64_t hits, std::uint64_t determined,
                                  std::uint64_t undetermined = 0);

//---------------------------------------------------------------------------//
struct ThetaSample
{
    std::uint64_t replica = 0;
    FixationCertificate::Status status
        = FixationCertificate::Status::undetermined;
    double value = 0;  // at 2T when determined
    int radius_used = 0;
};

/*!
 * Empirical CDF of root values. Undetermined replicas carry no value; the
 * point estimate is the CDF of the determined values and the interval
 * counts each undetermined replica as below and as above p.
 */
class ThetaCurve
{
  public:
    ThetaCurve() = default;
    ThetaCurve(std::vector<double> values, std::uint64_t undetermined,
               std::uint64_t proxy_failed);
    static ThetaCurve from_samples(const std::vector<ThetaSample>& samples);

    double cdf(double p) const;
    double ci(double p) const;
    double cdf_lower(double p) const;
    double cdf_upper(double p) const;
    // (theta(p) + theta(1-p) - 1) over its standard error.
    double symmetry_z(double p) const;

    const std::vector<double>& values() const { return values_; }
    std::uint64_t determined() const { return values_.size(); }
    std::uint64_t undetermined() const { return undetermined_; }
    std::uint64_t proxy_failed() const { return proxy_failed_; }
    std::uint64_t replicas() const { return determined() + undetermined_; }
    // Fraction of replicas undetermined or failing the fixation proxy.
    double error_budget() const;

  private:
    std::size_t count_le(double p) const;

    std::vector<double> values_;
    std::uint64_t undetermined_ = 0;
    std::uint64_t proxy_failed_ = 0;
};

// p = 0.02, 0.04, ..., 0.98
std::vector<double> default_grid();

struct ThetaConfig
{
    std::uint64_t replicas = 10000;
    double horizon = 6;
    std::vector<int> radius_schedule{8, 11, 14};
    std::uint64_t seed = 1;
    std::uint64_t min_replicas = default_min_replicas;
    // The batch fails when more replicas than this are undetermined.
    double max_undetermined = 0.25;
};

class UndeterminedExcess : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

std::vector<ThetaSample> theta_samples(const ThetaConfig& config);
ThetaCurve theta_curve(const ThetaConfig& config);

struct PcBracket
{
    double lower = 0;
    double upper = 1;
};

// lower: largest p with theta(p) <= eps; upper: smallest p with
// theta(p) >= 2 eps. Throws std::domain_error on a curve that is constant
// over the default grid.
PcBracket pc_bracket(const ThetaCurve& curve, double epsilon);

struct ContinuityCheck
{
    double max_increment = 0;
    double at = 0;  // left end of the largest increment
};

ContinuityCheck continuity_check(const ThetaCurve& curve, double h);

// Independent discrete runs at density p, fixation proxy at T and 2T.
EstimateWithCI discrete_theta(double p, std::uint64_t replicas, double T,
                              int radius, std::uint64_t seed,
                              std::uint64_t min_replicas
                              = default_min_replicas);

void write_theta_csv(std::ostream& out, const ThetaCurve& curve,
                     const std::vector<double>& grid);
void write_theta_samples_csv(std::ostream& out,
                             const std::vector<ThetaSample>& samples);

//---------------------------------------------------------------------------//
struct AlphaConfig
{
    double p = 0.3;
    std::vector<int> distances{2, 4, 6, 8};
    std::uint64_t replicas = 20000;
    double horizon = 4;  // fixation proxy at horizon and 2 * horizon
    int radius = 10;     // certification radius around each vertex
    std::uint64_t seed = 1;
    std::uint64_t min_replicas = default_min_replicas;
};

struct AlphaEstimate
{
    int distance = 0;
    double alpha = 0;
    double ci = 0;
    double p_a = 0;
    double p_b = 0;
    double p_ab = 0;
    std::uint64_t determined = 0;
    std::uint64_t undetermined = 0;
    std::uint64_t proxy_failed = 0;
};

// A = {sigma_o = +1}, B = {sigma_x = +1}, x at the given distance along the
// 0-ray; spins are the certified values at 2 * horizon (or the initial
// spins when horizon is 0).
std::vector<AlphaEstimate> alpha_estimate(const AlphaConfig& config);

void write_alpha_csv(std::ostream& out,
                     const std::vector<AlphaEstimate>& estimates);

//---------------------------------------------------------------------------//
struct ChainConfig
{
    double p = 0.5;
    int depth = 8;
    std::vector<double> times{1, 2, 4, 8, 16, 32};
    std::uint64_t replicas = 1000;
    int radius = 14;
    std::uint64_t seed = 1;
    std::uint64_t min_replicas = default_min_replicas;
};

struct ChainCurve
{
    std::vector<double> times;
    // Fraction of replicas where o was a chain member at some grid time <= t.
    std::vector<EstimateWithCI> cumulative;
    // Fraction where o is a chain member at t.
    std::vector<EstimateWithCI> instantaneous;
};

ChainCurve chain_time_cdf(const ChainConfig& config);
void write_chain_csv(std::ostream& out, const ChainCurve& curve);

//---------------------------------------------------------------------------//
struct NeverFlipConfig
{
    double q = 0.5;
    std::vector<double> times{16, 32};
    std::uint64_t replicas = 2000;
    int radius = 12;
    std::uint64_t seed = 1;
    std::uint64_t min_replicas = default_min_replicas;
};

/*!
 * P(sigma_o(0) = +1 and o does not flip in [0, T]) with the root's neighbor
 * "0" frozen at -1. Only the component of o in the ball minus that neighbor
 * evolves; the rest of its boundary keeps its initial spins.
 */
std::vector<EstimateWithCI> never_flip_probability(const NeverFlipConfig& c);

void write_estimate_csv_header(std::ostream& out, const std::string& key);
void write_estimate_csv_row(std::ostream& out, double key,
                            const EstimateWithCI& e);

}  // namespace medtree
