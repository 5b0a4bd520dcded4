#include "medtree/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace medtree
{

namespace
{
constexpr double z95 = 1.96;

std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

using Status = FixationCertificate::Status;
}  // namespace

void require_replicas(std::uint64_t n, std::uint64_t min_replicas)
{
    if (n < min_replicas)
        throw InsufficientReplicas("batch of " + std::to_string(n)
                                   + " replicas is below the minimum of "
                                   + std::to_string(min_replicas));
}

bool EstimateWithCI::overlaps(const EstimateWithCI& other) const
{
    return std::abs(estimate - other.estimate) <= ci + other.ci;
}

EstimateWithCI bernoulli_estimate(std::uint64_t hits, std::uint64_t determined,
                                  std::uint64_t undetermined)
{
    EstimateWithCI e;
    e.replicas = determined + undetermined;
    if (determined > 0)
    {
        e.estimate = double(hits) / double(determined);
        e.ci = z95
               * std::sqrt(e.estimate * (1 - e.estimate) / double(determined));
    }
    if (e.replicas > 0)
    {
        double n = double(e.replicas);
        e.lower = double(hits) / n;
        e.upper = double(hits + undetermined) / n;
        e.undetermined_fraction = double(undetermined) / n;
    }
    return e;
}

//---------------------------------------------------------------------------//
ThetaCurve::ThetaCurve(std::vector<double> values, std::uint64_t undetermined,
                       std::uint64_t proxy_failed)
    : values_(std::move(values)), undetermined_(undetermined),
      proxy_failed_(proxy_failed)
{
    std::sort(values_.begin(), values_.end());
}

ThetaCurve ThetaCurve::from_samples(const std::vector<ThetaSample>& samples)
{
    std::vector<double> values;
    std::uint64_t undetermined = 0, proxy_failed = 0;
    for (const auto& s : samples)
    {
        if (s.status == Status::undetermined)
        {
            ++undetermined;
            continue;
        }
        if (s.status == Status::proxy_failed)
            ++proxy_failed;
        values.push_back(s.value);
    }
    return ThetaCurve(std::move(values), undetermined, proxy_failed);
}

std::size_t ThetaCurve::count_le(double p) const
{
    return static_cast<std::size_t>(
        std::upper_bound(values_.begin(), values_.end(), p) - values_.begin());
}

double ThetaCurve::cdf(double p) const
{
    return values_.empty() ? 0.0 : double(count_le(p)) / double(values_.size());
}

double ThetaCurve::ci(double p) const
{
    if (values_.empty())
        return 0;
    double f = cdf(p);
    return z95 * std::sqrt(f * (1 - f) / double(values_.size()));
}

double ThetaCurve::cdf_lower(double p) const
{
    return replicas() == 0 ? 0.0 : double(count_le(p)) / double(replicas());
}

double ThetaCurve::cdf_upper(double p) const
{
    return replicas() == 0
               ? 1.0
               : double(count_le(p) + undetermined_) / double(replicas());
}

double ThetaCurve::symmetry_z(double p) const
{
    if (values_.empty())
        return 0;
    // X = 1{v <= p} + 1{v <= 1-p} - 1 takes the values 1, 0, -1.
    double lo = std::min(p, 1 - p), hi = std::max(p, 1 - p);
    double n = double(values_.size());
    double above = double(values_.size() - count_le(hi));
    double below = double(count_le(lo));
    double mean = (below - above) / n;
    double var = (below + above) / n - mean * mean;
    if (var <= 0)
        return mean == 0 ? 0 : std::copysign(INFINITY, mean);
    return mean / std::sqrt(var / n);
}

double ThetaCurve::error_budget() const
{
    return replicas() == 0
               ? 0.0
               : double(undetermined_ + proxy_failed_) / double(replicas());
}

std::vector<double> default_grid()
{
    std::vector<double> grid;
    for (int k = 1; k <= 49; ++k)
        grid.push_back(k / 50.0);
    return grid;
}

std::vector<ThetaSample> theta_samples(const ThetaConfig& config)
{
    std::vector<ThetaSample> out;
    out.reserve(config.replicas);
    VertexId o = VertexId::root();
    for (std::uint64_t r = 0; r < config.replicas; ++r)
    {
        auto c = certify_fixation(SeedManifest::replica(config.seed, r), o,
                                  config.horizon, config.radius_schedule);
        ThetaSample s;
        s.replica = r;
        s.status = c.status;
        s.radius_used = c.radius_used;
        if (c.at_2T)
            s.value = c.at_2T->as_double();
        out.push_back(s);
    }
    return out;
}

ThetaCurve theta_curve(const ThetaConfig& config)
{
    require_replicas(config.replicas, config.min_replicas);
    ThetaCurve curve = ThetaCurve::from_samples(theta_samples(config));
    double undetermined = double(curve.undetermined()) / double(curve.replicas());
    if (undetermined > config.max_undetermined)
        throw UndeterminedExcess("undetermined fraction " + num(undetermined)
                                 + " exceeds " + num(config.max_undetermined));
    return curve;
}

PcBracket pc_bracket(const ThetaCurve& curve, double epsilon)
{
    auto grid = default_grid();
    if (curve.determined() == 0
        || curve.cdf(grid.front()) == curve.cdf(grid.back()))
        throw std::domain_error("degenerate theta curve");
    const auto& v = curve.values();
    double n = double(v.size());
    PcBracket b;
    // cdf(p) <= eps exactly for p below the k-th smallest value.
    auto k = static_cast<std::size_t>(std::floor(epsilon * n));
    b.lower = k < v.size() ? v[k] : 1.0;
    // cdf(p) >= 2 eps from the m-th smallest value on.
    auto m = static_cast<std::size_t>(std::ceil(2 * epsilon * n));
    b.upper = m == 0 ? 0.0 : v[std::min(m, v.size()) - 1];
    return b;
}

ContinuityCheck continuity_check(const ThetaCurve& curve, double h)
{
    if (!(h > 0))
        throw std::invalid_argument("grid step must be positive");
    ContinuityCheck out;
    auto steps = static_cast<int>(std::floor(1 / h + 1e-9));
    for (int k = 0; k < steps; ++k)
    {
        double p = k * h;
        double inc = curve.cdf(std::min(1.0, p + h)) - curve.cdf(p);
        if (inc > out.max_increment)
        {
            out.max_increment = inc;
            out.at = p;
        }
    }
    return out;
}

EstimateWithCI discrete_theta(double p, std::uint64_t replicas, double T,
                              int radius, std::uint64_t seed,
                              std::uint64_t min_replicas)
{
    require_replicas(replicas, min_replicas);
    std::uint64_t hits = 0, determined = 0;
    for (std::uint64_t r = 0; r < replicas; ++r)
    {
        auto c = certify_discrete_fixation(SeedManifest::replica(seed, r),
                                           VertexId::root(), p, T, radius);
        if (c.status == Status::undetermined)
            continue;
        ++determined;
        hits += c.at_2T > 0;
    }
    return bernoulli_estimate(hits, determined, replicas - determined);
}

void write_theta_csv(std::ostream& out, const ThetaCurve& curve,
                     const std::vector<double>& grid)
{
    double n = double(std::max<std::uint64_t>(1, curve.replicas()));
    out << "p,theta,ci,theta_lower,theta_upper,undetermined_fraction,"
           "proxy_failure_fraction\n";
    for (double p : grid)
        out << num(p) << ',' << num(curve.cdf(p)) << ',' << num(curve.ci(p))
            << ',' << num(curve.cdf_lower(p)) << ','
            << num(curve.cdf_upper(p)) << ','
            << num(double(curve.undetermined()) / n) << ','
            << num(double(curve.proxy_failed()) / n) << '\n';
}

void write_theta_samples_csv(std::ostream& out,
                             const std::vector<ThetaSample>& samples)
{
    out << "replica,status,value,radius_used\n";
    for (const auto& s : samples)
    {
        const char* status = s.status == Status::fixated        ? "fixated"
                             : s.status == Status::proxy_failed ? "proxy_failed"
                                                                : "undetermined";
        out << s.replica << ',' << status << ','
            << (s.status == Status::undetermined ? "" : num(s.value)) << ','
            << s.radius_used << '\n';
    }
}

//---------------------------------------------------------------------------//
std::vector<AlphaEstimate> alpha_estimate(const AlphaConfig& config)
{
    require_replicas(config.replicas, config.min_replicas);
    VertexId o = VertexId::root();
    std::vector<VertexId> xs;
    for (int d : config.distances)
    {
        if (d < 1)
            throw std::invalid_argument("alpha distances must be >= 1");
        xs.push_back(VertexId::parse(std::string(static_cast<std::size_t>(d),
                                                 '0')));
    }
    // Per replica: spin (0 = undetermined) and proxy failure, for o and xs.
    std::size_t k = xs.size();
    std::vector<std::int8_t> spin_o(config.replicas);
    std::vector<std::vector<std::int8_t>> spin_x(
        k, std::vector<std::int8_t>(config.replicas));
    std::vector<bool> failed_o(config.replicas);
    std::vector<std::vector<bool>> failed_x(k,
                                            std::vector<bool>(config.replicas));
    auto sample = [&](const SeedManifest& m, VertexId v, bool& failed) {
        if (config.horizon <= 0)
            return static_cast<std::int8_t>(
                project(Spin::initial(m, v), config.p));
        auto c = certify_discrete_fixation(m, v, config.p, config.horizon,
                                           config.radius);
        failed = c.status == Status::proxy_failed;
        return static_cast<std::int8_t>(
            c.status == Status::undetermined ? 0 : c.at_2T);
    };
    for (std::uint64_t r = 0; r < config.replicas; ++r)
    {
        SeedManifest m = SeedManifest::replica(config.seed, r);
        bool f = false;
        spin_o[r] = sample(m, o, f);
        failed_o[r] = f;
        for (std::size_t j = 0; j < k; ++j)
        {
            f = false;
            spin_x[j][r] = sample(m, xs[j], f);
            failed_x[j][r] = f;
        }
    }

    std::vector<AlphaEstimate> out;
    for (std::size_t j = 0; j < k; ++j)
    {
        AlphaEstimate e;
        e.distance = config.distances[j];
        std::vector<std::pair<double, double>> ab;
        for (std::uint64_t r = 0; r < config.replicas; ++r)
        {
            if (spin_o[r] == 0 || spin_x[j][r] == 0)
            {
                ++e.undetermined;
                continue;
            }
            e.proxy_failed += failed_o[r] || failed_x[j][r];
            ab.emplace_back(spin_o[r] > 0, spin_x[j][r] > 0);
        }
        e.determined = ab.size();
        if (!ab.empty())
        {
            double n = double(ab.size());
            for (auto [a, b] : ab)
            {
                e.p_a += a;
                e.p_b += b;
                e.p_ab += a * b;
            }
            e.p_a /= n;
            e.p_b /= n;
            e.p_ab /= n;
            double cov = e.p_ab - e.p_a * e.p_b;
            e.alpha = std::abs(cov);
            double m2 = 0;
            for (auto [a, b] : ab)
            {
                double z = (a - e.p_a) * (b - e.p_b);
                m2 += z * z;
            }
            double var = std::max(0.0, m2 / n - cov * cov);
            e.ci = z95 * std::sqrt(var / n);
        }
        out.push_back(e);
    }
    return out;
}

void write_alpha_csv(std::ostream& out,
                     const std::vector<AlphaEstimate>& estimates)
{
    out << "distance,alpha,ci,p_a,p_b,p_ab,determined,undetermined,"
           "proxy_failed\n";
    for (const auto& e : estimates)
        out << e.distance << ',' << num(e.alpha) << ',' << num(e.ci) << ','
            << num(e.p_a) << ',' << num(e.p_b) << ',' << num(e.p_ab) << ','
            << e.determined << ',' << e.undetermined << ',' << e.proxy_failed
            << '\n';
}

//---------------------------------------------------------------------------//
ChainCurve chain_time_cdf(const ChainConfig& config)
{
    require_replicas(config.replicas, config.min_replicas);
    if (!std::is_sorted(config.times.begin(), config.times.end()))
        throw std::invalid_argument("chain time grid must be sorted");
    VertexId o = VertexId::root();
    auto domain = Domain::dense(Ball(o, config.radius));
    auto bc = BoundaryCondition::frozen_initial();
    std::size_t k = config.times.size();
    std::vector<std::uint64_t> cumulative(k), instantaneous(k);
    for (std::uint64_t r = 0; r < config.replicas; ++r)
    {
        SeedManifest m = SeedManifest::replica(config.seed, r);
        MajorityState state(domain, projected_initial(*domain, m, config.p),
                            projected_externals(*domain, m, bc, config.p));
        EventSource source(domain, m);
        Event e;
        bool ever = false;
        for (std::size_t j = 0; j < k; ++j)
        {
            while (source.next(config.times[j], e))
                state.apply(e, nullptr);
            bool member
                = chain_membership(*domain, state.spins(), o, config.depth);
            ever = ever || member;
            instantaneous[j] += member;
            cumulative[j] += ever;
        }
    }
    ChainCurve out;
    out.times = config.times;
    for (std::size_t j = 0; j < k; ++j)
    {
        out.cumulative.push_back(
            bernoulli_estimate(cumulative[j], config.replicas));
        out.instantaneous.push_back(
            bernoulli_estimate(instantaneous[j], config.replicas));
    }
    return out;
}

void write_chain_csv(std::ostream& out, const ChainCurve& curve)
{
    out << "time,cumulative,cumulative_ci,instantaneous,instantaneous_ci\n";
    for (std::size_t j = 0; j < curve.times.size(); ++j)
        out << num(curve.times[j]) << ',' << num(curve.cumulative[j].estimate)
            << ',' << num(curve.cumulative[j].ci) << ','
            << num(curve.instantaneous[j].estimate) << ','
            << num(curve.instantaneous[j].ci) << '\n';
}

//---------------------------------------------------------------------------//
std::vector<EstimateWithCI> never_flip_probability(const NeverFlipConfig& c)
{
    require_replicas(c.replicas, c.min_replicas);
    if (c.times.empty())
        throw std::invalid_argument("never_flip needs at least one time");
    VertexId o = VertexId::root();
    VertexId frozen = VertexId::parse("0");
    auto domain = Domain::without_branch(Ball(o, c.radius), frozen);
    std::uint32_t io = domain->index_of(o);
    std::size_t frozen_slot = 0;
    for (; frozen_slot < domain->externals().size(); ++frozen_slot)
        if (domain->externals()[frozen_slot].vertex == frozen)
            break;
    auto bc = BoundaryCondition::frozen_initial();
    double last = *std::max_element(c.times.begin(), c.times.end());

    std::vector<std::uint64_t> hits(c.times.size());
    for (std::uint64_t r = 0; r < c.replicas; ++r)
    {
        SeedManifest m = SeedManifest::replica(c.seed, r);
        auto initial = projected_initial(*domain, m, c.q);
        if (initial[io] != 1)
            continue;
        auto external = projected_externals(*domain, m, bc, c.q);
        external[frozen_slot] = -1;
        MajorityState state(domain, std::move(initial), std::move(external));
        EventSource source(domain, m);
        Event e;
        double first_flip = INFINITY;
        while (source.next(last, e))
        {
            if (state.apply(e, nullptr) && e.vertex == io)
            {
                first_flip = e.time;
                break;
            }
        }
        for (std::size_t j = 0; j < c.times.size(); ++j)
            hits[j] += first_flip > c.times[j];
    }
    std::vector<EstimateWithCI> out;
    for (auto h : hits)
        out.push_back(bernoulli_estimate(h, c.replicas));
    return out;
}

void write_estimate_csv_header(std::ostream& out, const std::string& key)
{
    out << key << ",estimate,ci,lower,upper,replicas,undetermined_fraction\n";
}

void write_estimate_csv_row(std::ostream& out, double key,
                            const EstimateWithCI& e)
{
    out << num(key) << ',' << num(e.estimate) << ',' << num(e.ci) << ','
        << num(e.lower) << ',' << num(e.upper) << ',' << e.replicas << ','
        << num(e.undetermined_fraction) << '\n';
}

}  // namespace medtree
