// Acceptance suite. Each criterion prints one PASS/FAIL line; sub-checks
// are printed indented above it.
//
//   medtree_acceptance [--criterion LIST] [--seed S]
//
// LIST is a comma-separated set of criterion numbers (default: all).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medtree/cli.hpp"
#include "medtree/estimators.hpp"

using namespace medtree;
namespace fs = std::filesystem;

namespace
{
std::uint64_t master_seed = 20240601;

// Lower edge of the consensus window.
const double window_edge = (2 - std::sqrt(3.0)) / 4;

// Target for the chain-time CDF at t = 32, measured once at p = 1/2,
// D = 8, R = 14 (1.000 on 1000 replicas).
constexpr double chain_cdf_target = 0.9;

struct Outcome
{
    bool passed = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& text)
    {
        passed = passed && ok;
        lines.push_back(std::string(ok ? "ok   " : "FAIL ") + text);
    }
};

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string g(double x)
{
    return fmt("%.6g", x);
}

VertexId o = VertexId::root();

//---------------------------------------------------------------------------//
Outcome commutation()
{
    Outcome out;
    std::uint64_t checks = 0, bad = 0, flips = 0;
    for (int r = 0; r < 100; ++r)
    {
        SeedManifest m = SeedManifest::replica(master_seed, std::uint64_t(r));
        for (int k = 1; k <= 9; ++k)
        {
            auto rep = check_commutation(m, Ball(o, 8), k / 10.0, 4);
            ++checks;
            bad += !rep.ok;
            flips += rep.compared_flips;
        }
    }
    out.check(bad == 0, std::to_string(checks) + " trajectories, "
                            + std::to_string(flips) + " flips compared, "
                            + std::to_string(bad) + " discrepancies");
    return out;
}

Outcome oracle()
{
    Outcome out;
    int bad = 0;
    for (int r = 0; r < 50; ++r)
    {
        SeedManifest m = SeedManifest::replica(master_seed, std::uint64_t(r));
        auto domain = Domain::light_cone(m, Ball(o, 24), o, 2);
        MedianRun run(domain, m, BoundaryCondition::frozen_initial(),
                      {false});
        run.advance_to(2);
        bad += !(run.state().spin(domain->index_of(o))
                 == backward_state(m, o, 2));
    }
    out.check(bad == 0, "50 seeds, T=2, R=24: " + std::to_string(bad)
                            + " mismatches");
    return out;
}

Outcome sandwich()
{
    Outcome out;
    std::uint64_t events = 0, violations = 0;
    for (int r = 0; r < 100; ++r)
    {
        auto a = audit_bracketing(
            SeedManifest::replica(master_seed, std::uint64_t(r)), Ball(o, 12),
            32);
        events += a.events;
        violations += a.violations;
    }
    out.check(violations == 0,
              "bracketing, 100 runs R=12 T=32: " + std::to_string(events)
                  + " events, " + std::to_string(violations) + " violations");
    int certified = 0, bad = 0;
    for (int r = 0; r < 50; ++r)
    {
        SeedManifest m = SeedManifest::replica(master_seed + 1,
                                               std::uint64_t(r));
        for (double T : {1.0, 2.0, 3.0})
        {
            auto c = sandwich_certify(m, o, T, {6, 9, 12});
            if (!c.certified())
                continue;
            ++certified;
            bad += !(*c.spin == backward_state(m, o, T));
        }
    }
    out.check(bad == 0 && certified > 0,
              "certificates vs backward recursion, T in {1,2,3}: "
                  + std::to_string(certified) + " certified, "
                  + std::to_string(bad) + " wrong");
    return out;
}

Outcome energy()
{
    Outcome out;
    std::uint64_t flips = 0, violations = 0, runs = 0;
    while (flips < 1'000'000)
    {
        auto traj = run_median(SeedManifest::replica(master_seed, runs++),
                               Ball(o, 10), BoundaryCondition::frozen_initial(),
                               32);
        auto a = energy_audit(traj);
        flips += a.flips;
        violations += a.violations;
    }
    out.check(violations == 0, std::to_string(flips) + " flips in "
                                   + std::to_string(runs) + " runs, "
                                   + std::to_string(violations)
                                   + " violations");
    return out;
}

Outcome tail()
{
    Outcome out;
    for (auto [T, k] : {std::pair{1.0, 20}, std::pair{0.5, 15}})
    {
        auto tc = tail_check(T, k, 10000, master_seed);
        out.check(!tc.vacuous && tc.frequency <= tc.bound,
                  "T=" + g(T) + " k=" + std::to_string(k) + ": frequency "
                      + g(tc.frequency) + " <= bound " + g(tc.bound));
    }
    return out;
}

//---------------------------------------------------------------------------//
ThetaCurve& theta_batch()
{
    static ThetaCurve curve = [] {
        ThetaConfig c;
        c.replicas = 10000;
        c.horizon = 6;
        c.radius_schedule = {8, 11, 14};
        c.seed = master_seed;
        c.max_undetermined = 1;
        return theta_curve(c);
    }();
    return curve;
}

Outcome theta_anchors()
{
    Outcome out;
    const ThetaCurve& c = theta_batch();
    double n = double(c.replicas());
    double und = double(c.undetermined()) / n;
    double proxy = double(c.proxy_failed()) / n;
    out.lines.push_back("     N=" + std::to_string(c.replicas())
                        + " T*=6 (proxy at 12), undetermined " + g(und)
                        + ", proxy failures " + g(proxy));

    double t5 = c.cdf(0.5);
    out.check(std::abs(t5 - 0.5) <= 0.02,
              "theta(0.5) = " + g(t5) + " within 0.5 +- 0.02");

    double worst = 0, at = 0;
    for (double p : default_grid())
    {
        double z = std::abs(c.symmetry_z(p));
        if (z > worst)
        {
            worst = z;
            at = p;
        }
    }
    out.check(worst <= 3, "symmetry: max |z| = " + g(worst) + " at p="
                              + g(at) + " (<= 3)");

    double below = c.cdf(window_edge);
    out.check(below <= c.error_budget(),
              "mass below (2-sqrt 3)/4 = " + g(below) + " <= budget "
                  + g(c.error_budget()));
    out.check(c.error_budget() <= 0.02,
              "error budget " + g(c.error_budget()) + " <= 0.02");

    auto b = pc_bracket(c, 0.01);
    out.check(b.upper < 0.5, "p_c bracket [" + g(b.lower) + ", " + g(b.upper)
                                 + "], upper < 0.5");
    return out;
}

Outcome continuity()
{
    Outcome out;
    const ThetaCurve& curve = theta_batch();
    std::string large;
    for (int k = 0; k < 50; ++k)
    {
        double inc = curve.cdf((k + 1) * 0.02) - curve.cdf(k * 0.02);
        if (inc > 0.04)
            large += " " + g(k * 0.02) + ":" + fmt("%.4f", inc);
    }
    out.lines.push_back("     increments above 0.04 (bin start:size):" + large);
    auto cc = continuity_check(curve, 0.02);
    out.check(cc.max_increment <= 0.05,
              "max increment " + g(cc.max_increment) + " on [" + g(cc.at)
                  + ", " + g(cc.at + 0.02) + "] <= 0.05");
    return out;
}

Outcome trace_identity()
{
    Outcome out;
    int bad = 0;
    double total = 0;
    for (int r = 0; r < 200; ++r)
    {
        SeedManifest m = SeedManifest::replica(master_seed, std::uint64_t(r));
        auto t = trace(m, o, 16, 12);
        auto pair = threshold_pair(m, o, 16, 12);
        bad += t.members != pair.symmetric_difference;
        total += double(t.size());
    }
    out.check(bad == 0, "200 runs T=16 R=12: " + std::to_string(bad)
                            + " mismatches, mean trace size "
                            + g(total / 200));
    return out;
}

Outcome structure()
{
    Outcome out;
    const int replicas = 2000;
    std::uint64_t interior = 0, agreeing = 0, components = 0, simple = 0;
    std::uint64_t settled = 0;
    std::map<int, std::uint64_t> bins;  // b -> clusters with size in [2^b, 2^{b+1})
    for (int r = 0; r < replicas; ++r)
    {
        auto br = bracket_region(
            SeedManifest::replica(master_seed, std::uint64_t(r)), 14, 6, 12);
        auto s = fixated_snapshot(br);
        for (bool b : s.mask)
            settled += b;
        auto a = neighbor_agreement(s);
        interior += a.interior;
        agreeing += a.agreeing;
        for (const auto& c : disagreement_components(s).clusters)
        {
            ++components;
            simple += c.simple_path;
        }
        for (const auto& c : agreement_clusters(s).clusters)
        {
            if (c.truncated)
                continue;
            int b = 0;
            while ((std::size_t(2) << b) <= c.size())
                ++b;
            ++bins[b];
        }
    }
    out.lines.push_back("     " + std::to_string(replicas)
                        + " regions R=14 fixated at 6 and 12, "
                        + g(double(settled) / replicas)
                        + " fixated vertices per region");
    out.check(interior > 0 && agreeing == interior,
              "agreement: " + std::to_string(agreeing) + "/"
                  + std::to_string(interior) + " interior vertices");
    out.check(components > 0 && simple == components,
              "simple paths: " + std::to_string(simple) + "/"
                  + std::to_string(components) + " disagreement components");
    std::string hist;
    bool decreasing = !bins.empty();
    std::uint64_t prev = 0;
    int prev_b = -1;
    for (auto [b, count] : bins)
    {
        hist += " [" + std::to_string(1 << b) + "," + std::to_string(2 << b)
                + "):" + std::to_string(count);
        // Bins must be consecutive and strictly decreasing while the earlier
        // bin still holds enough clusters to resolve the order.
        if (prev_b >= 0 && prev >= 10 && (b != prev_b + 1 || count >= prev))
            decreasing = false;
        prev = count;
        prev_b = b;
    }
    out.check(decreasing, "complete agreement clusters by size:" + hist);
    return out;
}

Outcome chains_and_ends()
{
    Outcome out;
    ChainConfig cc;
    cc.p = 0.5;
    cc.depth = 8;
    cc.radius = 14;
    cc.replicas = 1000;
    cc.seed = master_seed;
    auto curve = chain_time_cdf(cc);
    bool monotone = true;
    std::string cdf;
    for (std::size_t j = 0; j < curve.times.size(); ++j)
    {
        cdf += " " + g(curve.cumulative[j].estimate);
        if (j > 0
            && curve.cumulative[j].estimate < curve.cumulative[j - 1].estimate)
            monotone = false;
    }
    out.check(monotone, "chain time CDF at t=1..32 nondecreasing:" + cdf);
    out.check(curve.cumulative.back().estimate >= chain_cdf_target,
              "CDF(32) = " + g(curve.cumulative.back().estimate)
                  + " >= " + g(chain_cdf_target));

    double prev = -1;
    bool nondecreasing = true;
    for (int R : {10, 12, 14})
    {
        std::uint64_t spanning = 0, with_triple = 0;
        for (int r = 0; r < 200; ++r)
        {
            auto traj = run_majority(
                SeedManifest::replica(master_seed, std::uint64_t(r)),
                Ball(o, R), BoundaryCondition::frozen_initial(), 0.45, 64,
                {false});
            for (const auto& c : sign_clusters(*traj.domain, traj.final_spins, 1))
            {
                if (c.boundary_contact == 0 || c.min_distance > R / 2)
                    continue;
                ++spanning;
                with_triple += !c.triple_points.empty();
            }
        }
        double frac = spanning ? double(with_triple) / double(spanning) : 0;
        out.lines.push_back("     R=" + std::to_string(R) + ": "
                            + std::to_string(with_triple) + "/"
                            + std::to_string(spanning)
                            + " spanning + clusters with a triple point");
        nondecreasing = nondecreasing && frac >= prev;
        prev = frac;
    }
    out.check(prev >= 0.9, "triple-point fraction at R=14 = " + g(prev)
                               + " >= 0.9");
    out.check(nondecreasing, "triple-point fraction nondecreasing in R");
    return out;
}

Outcome mixing()
{
    Outcome out;
    AlphaConfig ac;
    ac.p = 0.3;
    ac.distances = {2, 4, 6, 8};
    ac.replicas = 20000;
    ac.seed = master_seed;
    auto est = alpha_estimate(ac);
    bool within = true;
    for (std::size_t j = 0; j < est.size(); ++j)
    {
        out.lines.push_back("     d=" + std::to_string(est[j].distance)
                            + ": alpha " + g(est[j].alpha) + " +- "
                            + g(est[j].ci) + " (undetermined "
                            + std::to_string(est[j].undetermined) + ")");
        if (j > 0 && est[j].alpha > est[j - 1].alpha + est[j].ci + est[j - 1].ci)
            within = false;
    }
    out.check(within, "alpha non-increasing within CIs");
    out.check(est.back().alpha <= est.front().alpha / 2,
              "alpha(8) = " + g(est.back().alpha) + " <= alpha(2)/2 = "
                  + g(est.front().alpha / 2));
    return out;
}

Outcome transport()
{
    Outcome out;
    const int N = 20000, W = 4;
    auto id = mass_transport_audit(identity_rule(), W, N, 1, master_seed);
    out.check(id.mass_out == 1 && id.mass_in == 1,
              "identity: out " + g(id.mass_out) + ", in " + g(id.mass_in));
    auto nb = mass_transport_audit(larger_neighbor_rule(), W, N, 1,
                                   master_seed);
    out.check(std::abs(nb.mass_out - 1.5) <= 1.96 * nb.mass_out_se
                  && std::abs(nb.mass_in - 1.5) <= 1.96 * nb.mass_in_se,
              "neighbor rank: out " + g(nb.mass_out) + " +- "
                  + g(1.96 * nb.mass_out_se) + ", in " + g(nb.mass_in)
                  + " +- " + g(1.96 * nb.mass_in_se) + " cover 1.5");
    auto near = mass_transport_audit(nearest_threshold_rule(0.5), W, N, 1,
                                     master_seed);
    out.check(near.overlap(), "nearest vertex: out " + g(near.mass_out)
                                  + " +- " + g(3 * near.mass_out_se) + ", in "
                                  + g(near.mass_in) + " +- "
                                  + g(3 * near.mass_in_se) + " overlap");
    out.check(near.miss_frequency() < 0.01,
              "nearest vertex truncation miss " + g(near.miss_frequency())
                  + " < 0.01");
    return out;
}

Outcome never_flip()
{
    Outcome out;
    NeverFlipConfig c;
    c.q = 0.5;
    c.times = {16, 32};
    c.replicas = 2000;
    c.radius = 12;
    c.seed = master_seed;
    auto e = never_flip_probability(c);
    out.check(e[0].estimate >= 0.01 && e[1].estimate >= 0.01,
              "q=0.5: T=16 " + g(e[0].estimate) + " +- " + g(e[0].ci)
                  + ", T=32 " + g(e[1].estimate) + " +- " + g(e[1].ci)
                  + ", both >= 0.01");
    out.check(e[0].overlaps(e[1]), "T=16 and T=32 within joint CI");
    c.q = 0;
    auto zero = never_flip_probability(c);
    out.check(zero[0].estimate == 0 && zero[1].estimate == 0,
              "q=0: " + g(zero[0].estimate) + ", " + g(zero[1].estimate));
    return out;
}

//---------------------------------------------------------------------------//
std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism()
{
    Outcome out;
    const std::vector<std::string> configs{
        "kind=simulate\nradius=8\nhorizon=8\nreplicas=2",
        "kind=simulate\nmode=discrete\nradius=8\nhorizon=8\nreplicas=2",
        "kind=commutation\nradius=8\nhorizon=4",
        "kind=theta\nreplicas=1000\nhorizon=3\nradius=10",
        "kind=alpha\nreplicas=1000",
        "kind=trace\nreplicas=50",
        "kind=resample\nreplicas=50\nhorizon=16",
        "kind=chains\nreplicas=1000\nradius=10",
        "kind=audit\nreplicas=5\nradius=8\nhorizon=8\nwindow=2",
        "kind=tailcheck\nreplicas=2000",
        "kind=neverflip\nreplicas=1000\nradius=10",
    };
    auto root = fs::temp_directory_path() / "medtree_acceptance_determinism";
    for (const auto& text : configs)
    {
        auto config = parse_config(text + "\nseed=" + std::to_string(master_seed));
        std::string kind = to_string(config.kind);
        auto a = root / (kind + "_a"), b = root / (kind + "_b");
        fs::remove_all(a);
        fs::remove_all(b);
        auto ra = run_experiment(config, a);
        auto rb = run_experiment(config, b);
        std::size_t csvs = 0, differ = 0;
        for (const auto& f : ra.files)
        {
            if (f.extension() != ".csv")
                continue;
            ++csvs;
            differ += slurp(f) != slurp(b / f.filename());
        }
        out.check(ra.exit_code == 0 && rb.exit_code == 0 && csvs > 0
                      && differ == 0,
                  kind + ": " + std::to_string(csvs) + " CSV files, "
                      + std::to_string(differ) + " differ (exit "
                      + std::to_string(ra.exit_code) + ")");
    }
    fs::remove_all(root);
    return out;
}

const std::map<int, std::pair<std::string, std::function<Outcome()>>>&
criteria()
{
    static const std::map<int, std::pair<std::string, std::function<Outcome()>>>
        table{
            {1, {"coupling commutation", commutation}},
            {2, {"oracle equivalence", oracle}},
            {3, {"sandwich soundness", sandwich}},
            {4, {"energy monotonicity", energy}},
            {5, {"chronological tail", tail}},
            {6, {"theta anchors", theta_anchors}},
            {7, {"continuity surrogate", continuity}},
            {8, {"trace identity", trace_identity}},
            {9, {"structure at fixation", structure}},
            {10, {"chains and ends", chains_and_ends}},
            {11, {"mixing", mixing}},
            {12, {"mass transport", transport}},
            {13, {"never-flip", never_flip}},
            {14, {"determinism", determinism}},
        };
    return table;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"medtree acceptance suite"};
    std::vector<int> selected;
    app.add_option("-c,--criterion", selected, "criteria to run")
        ->delimiter(',')
        ->check(CLI::Range(1, 14));
    app.add_option("--seed", master_seed, "master seed");
    CLI11_PARSE(app, argc, argv);
    if (selected.empty())
        for (const auto& [k, _] : criteria())
            selected.push_back(k);

    int failures = 0;
    for (int k : selected)
    {
        const auto& [name, run] = criteria().at(k);
        auto start = std::chrono::steady_clock::now();
        Outcome result;
        try
        {
            result = run();
        }
        catch (const std::exception& e)
        {
            result.check(false, std::string("error: ") + e.what());
        }
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        for (const auto& line : result.lines)
            std::printf("  %s\n", line.c_str());
        std::printf("criterion %d (%s): %s [%.1fs]\n", k, name.c_str(),
                    result.passed ? "PASS" : "FAIL", secs);
        std::fflush(stdout);
        failures += !result.passed;
    }
    return failures == 0 ? 0 : 1;
}
