#include "medtree/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "medtree/estimators.hpp"
#include "medtree/version.hpp"

namespace medtree
{

using nlohmann::json;

//---------------------------------------------------------------------------//
// Kinds
//---------------------------------------------------------------------------//
const std::vector<std::string>& experiment_kinds()
{
    static const std::vector<std::string> kinds{
        "simulate", "commutation", "theta",  "alpha",     "trace",
        "resample", "chains",      "audit",  "tailcheck", "neverflip"};
    return kinds;
}

std::string to_string(ExperimentKind kind)
{
    return experiment_kinds()[static_cast<std::size_t>(kind)];
}

std::optional<ExperimentKind> parse_kind(const std::string& text)
{
    const auto& kinds = experiment_kinds();
    for (std::size_t i = 0; i < kinds.size(); ++i)
        if (kinds[i] == text)
            return static_cast<ExperimentKind>(i);
    return std::nullopt;
}

//---------------------------------------------------------------------------//
// Parsing
//---------------------------------------------------------------------------//
ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& e : errors)
              msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors))
{
}

namespace
{
std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template<class T>
std::optional<T> parse_number(const std::string& s)
{
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        return std::nullopt;
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(value))
            return std::nullopt;
    return value;
}

template<class T>
std::optional<std::vector<T>> parse_list(const std::string& s)
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        auto v = parse_number<T>(trim(item));
        if (!v)
            return std::nullopt;
        out.push_back(*v);
    }
    if (out.empty())
        return std::nullopt;
    return out;
}

// Returns an error message, or nothing on success.
using Setter = std::function<std::optional<std::string>(ExperimentConfig&,
                                                         const std::string&)>;

std::string got(const std::string& v)
{
    return ", got '" + v + "'";
}

Setter integer(std::function<void(ExperimentConfig&, long long)> set,
               long long lo, long long hi)
{
    return [=](ExperimentConfig& c,
               const std::string& v) -> std::optional<std::string> {
        auto n = parse_number<long long>(v);
        if (!n)
            return "expected an integer" + got(v);
        if (*n < lo || *n > hi)
            return "out of range: must be in [" + std::to_string(lo) + ", "
                   + std::to_string(hi) + "]" + got(v);
        set(c, *n);
        return std::nullopt;
    };
}

Setter real(std::function<void(ExperimentConfig&, double)> set, double lo,
            double hi, bool open_lo = false)
{
    return [=](ExperimentConfig& c,
               const std::string& v) -> std::optional<std::string> {
        auto x = parse_number<double>(v);
        if (!x)
            return "expected a number" + got(v);
        if (*x < lo || *x > hi || (open_lo && *x == lo))
            return std::string("out of range: must be in ") + (open_lo ? "(" : "[")
                   + std::to_string(lo) + ", " + std::to_string(hi) + "]"
                   + got(v);
        set(c, *x);
        return std::nullopt;
    };
}

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table{
        {"kind",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto k = parse_kind(v);
             if (!k)
                 return "unknown experiment kind" + got(v);
             c.kind = *k;
             return std::nullopt;
         }},
        {"seed",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto n = parse_number<std::uint64_t>(v);
             if (!n)
                 return "expected a nonnegative 64-bit integer" + got(v);
             c.seed = *n;
             return std::nullopt;
         }},
        {"replicas",
         integer([](auto& c, long long n) { c.replicas = std::uint64_t(n); },
                 1, 100'000'000)},
        {"radius", integer([](auto& c, long long n) { c.radius = int(n); }, 0,
                           24)},
        {"horizon",
         real([](auto& c, double x) { c.horizon = x; }, 0, 1e6)},
        {"p", real([](auto& c, double x) { c.p = x; }, 0, 1)},
        {"p_grid",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto l = parse_list<double>(v);
             if (!l)
                 return "expected a comma-separated list of numbers" + got(v);
             for (double x : *l)
                 if (x < 0 || x > 1)
                     return "out of range: every p must be in [0, 1]" + got(v);
             c.p_grid = *l;
             return std::nullopt;
         }},
        {"depth", integer([](auto& c, long long n) { c.depth = int(n); }, 0,
                          40)},
        {"distances",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto l = parse_list<int>(v);
             if (!l)
                 return "expected a comma-separated list of integers" + got(v);
             for (int x : *l)
                 if (x < 1 || x > 40)
                     return "out of range: distances must be in [1, 40]"
                            + got(v);
             c.distances = *l;
             return std::nullopt;
         }},
        {"window", integer([](auto& c, long long n) { c.window = int(n); }, 0,
                           10)},
        {"epsilon",
         real([](auto& c, double x) { c.epsilon = x; }, 0, 0.5, true)},
        {"k", integer([](auto& c, long long n) { c.k = int(n); }, 1, 100000)},
        {"schedule",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto l = parse_list<int>(v);
             if (!l)
                 return "expected a comma-separated list of integers" + got(v);
             for (std::size_t i = 0; i < l->size(); ++i)
                 if ((*l)[i] < 0 || (*l)[i] > 22
                     || (i > 0 && (*l)[i] <= (*l)[i - 1]))
                     return "out of range: radii must increase within [0, 22]"
                            + got(v);
             c.schedule = *l;
             return std::nullopt;
         }},
        {"times",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             auto l = parse_list<double>(v);
             if (!l)
                 return "expected a comma-separated list of numbers" + got(v);
             for (std::size_t i = 0; i < l->size(); ++i)
                 if ((*l)[i] < 0 || (i > 0 && (*l)[i] < (*l)[i - 1]))
                     return "out of range: times must be nonnegative and "
                            "sorted"
                            + got(v);
             c.times = *l;
             return std::nullopt;
         }},
        {"boundary",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             try
             {
                 BoundaryCondition::parse(v);
             }
             catch (const std::exception&)
             {
                 return "unknown boundary condition" + got(v);
             }
             c.boundary = v;
             return std::nullopt;
         }},
        {"mode",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             if (v != "median" && v != "discrete")
                 return "expected 'median' or 'discrete'" + got(v);
             c.mode = v;
             return std::nullopt;
         }},
        {"resample_clock",
         [](ExperimentConfig& c,
            const std::string& v) -> std::optional<std::string> {
             if (v == "true" || v == "1")
                 c.resample_clock = true;
             else if (v == "false" || v == "0")
                 c.resample_clock = false;
             else
                 return "expected true or false" + got(v);
             return std::nullopt;
         }},
        {"max_undetermined",
         real([](auto& c, double x) { c.max_undetermined = x; }, 0, 1)},
    };
    return table;
}
}  // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters())
            k.push_back(name);
        return k;
    }();
    return keys;
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig config;
    std::vector<std::string> errors;
    std::map<std::string, int> first_line;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty())
            continue;
        std::string where = "line " + std::to_string(line_no) + ": ";
        auto eq = line.find('=');
        if (eq == std::string::npos)
        {
            errors.push_back(where + "expected key=value, got '" + line + "'");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end())
        {
            errors.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (auto [prev, fresh] = first_line.emplace(key, line_no); !fresh)
        {
            errors.push_back(where + "duplicate key '" + key
                             + "' (first set on line "
                             + std::to_string(prev->second) + ")");
            continue;
        }
        if (auto err = it->second(config, value))
        {
            errors.push_back(where + "key '" + key + "': " + *err);
            continue;
        }
        config.explicit_keys.insert(key);
    }
    if (!errors.empty())
        throw ConfigError(std::move(errors));
    return config;
}

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value)
{
    auto it = setters().find(key);
    if (it == setters().end())
        throw ConfigError({"override: unknown key '" + key + "'"});
    if (auto err = it->second(config, value))
        throw ConfigError({"override: key '" + key + "': " + *err});
    config.explicit_keys.insert(key);
}

std::filesystem::path default_output_dir()
{
    if (const char* env = std::getenv(output_dir_env); env && *env)
        return env;
    return "medtree-out";
}

//---------------------------------------------------------------------------//
// Running
//---------------------------------------------------------------------------//
namespace
{
std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

class InvariantViolation : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Fills unset keys with the defaults of the experiment kind.
ExperimentConfig resolve(ExperimentConfig c)
{
    auto def = [&](const char* key, auto& field, auto value) {
        if (!c.has(key))
            field = value;
    };
    switch (c.kind)
    {
    case ExperimentKind::simulate:
        break;
    case ExperimentKind::commutation:
        def("replicas", c.replicas, 100);
        def("p_grid", c.p_grid,
            std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
        break;
    case ExperimentKind::theta:
        def("replicas", c.replicas, 10000);
        def("horizon", c.horizon, 6.0);
        if (!c.has("schedule"))
        {
            int r = c.has("radius") ? c.radius : 14;
            c.schedule.clear();
            for (int d : {6, 3, 0})
                if (r - d > 0)
                    c.schedule.push_back(r - d);
        }
        c.radius = c.schedule.back();
        break;
    case ExperimentKind::alpha:
        def("replicas", c.replicas, 20000);
        def("p", c.p, 0.3);
        def("distances", c.distances, std::vector<int>{2, 4, 6, 8});
        def("horizon", c.horizon, 4.0);
        def("radius", c.radius, 10);
        break;
    case ExperimentKind::trace:
        def("replicas", c.replicas, 200);
        def("horizon", c.horizon, 16.0);
        def("radius", c.radius, 12);
        break;
    case ExperimentKind::resample:
        def("replicas", c.replicas, 200);
        def("horizon", c.horizon, 32.0);
        def("radius", c.radius, 12);
        break;
    case ExperimentKind::chains:
        def("replicas", c.replicas, 1000);
        def("times", c.times,
            std::vector<double>{1, 2, 4, 8, 16, 32});
        def("radius", c.radius, 14);
        break;
    case ExperimentKind::audit:
        def("replicas", c.replicas, 20);
        def("horizon", c.horizon, 8.0);
        break;
    case ExperimentKind::tailcheck:
        def("replicas", c.replicas, 10000);
        def("horizon", c.horizon, 1.0);
        break;
    case ExperimentKind::neverflip:
        def("replicas", c.replicas, 2000);
        def("times", c.times, std::vector<double>{16, 32});
        def("radius", c.radius, 12);
        break;
    }
    return c;
}

json config_json(const ExperimentConfig& c)
{
    return json{{"kind", to_string(c.kind)},
                {"seed", c.seed},
                {"replicas", c.replicas},
                {"radius", c.radius},
                {"horizon", c.horizon},
                {"p", c.p},
                {"p_grid", c.p_grid},
                {"depth", c.depth},
                {"distances", c.distances},
                {"window", c.window},
                {"epsilon", c.epsilon},
                {"k", c.k},
                {"schedule", c.schedule},
                {"times", c.times},
                {"boundary", c.boundary},
                {"mode", c.mode},
                {"resample_clock", c.resample_clock},
                {"max_undetermined", c.max_undetermined}};
}

json seed_manifest_json(const ExperimentConfig& c)
{
    return json{{"master_seed", c.seed},
                {"replicas", c.replicas},
                {"generator", generator_version},
                {"replica_derivation",
                 "replica r draws from SeedManifest::replica(master_seed, r) "
                 "with no per-vertex overrides"}};
}

// Owns the output files of one run; every file starts with a metadata
// comment carrying the artifact version and seed manifest.
class Outputs
{
  public:
    Outputs(std::filesystem::path dir, const ExperimentConfig& c)
        : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw std::runtime_error("cannot create output directory "
                                     + dir_.string() + ": " + ec.message());
        preamble_ = std::string("# ") + artifact_name + ' ' + artifact_version
                    + " generator=" + generator_version
                    + " kind=" + to_string(c.kind)
                    + " master_seed=" + std::to_string(c.seed)
                    + " replicas=" + std::to_string(c.replicas) + '\n';
    }

    std::ofstream& open(const std::string& name)
    {
        auto path = dir_ / name;
        streams_.emplace_back(path);
        if (!streams_.back())
            throw std::runtime_error("cannot open " + path.string());
        files_.push_back(path);
        streams_.back() << preamble_;
        return streams_.back();
    }

    void close_all()
    {
        for (std::size_t i = 0; i < streams_.size(); ++i)
        {
            streams_[i].close();
            if (streams_[i].fail())
                throw std::runtime_error("failed writing "
                                         + files_[i].string());
        }
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::vector<std::filesystem::path>& files() { return files_; }

  private:
    std::filesystem::path dir_;
    std::string preamble_;
    std::vector<std::ofstream> streams_;
    std::vector<std::filesystem::path> files_;
};

struct KindResult
{
    json results = json::object();
    std::string summary;
    bool violated = false;
};

VertexId origin() { return VertexId::root(); }

KindResult run_simulate(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto bc = BoundaryCondition::parse(c.boundary);
    bool discrete = c.mode == "discrete";
    std::uint64_t flips = 0, events = 0, violations = 0;
    for (std::uint64_t k = 0; k < c.replicas; ++k)
    {
        SeedManifest m = SeedManifest::replica(c.seed, k);
        Ball ball(origin(), c.radius);
        std::string tag = "_" + std::to_string(k) + ".csv";
        if (discrete)
        {
            auto traj = run_discrete(m, ball, bc, c.p, c.horizon);
            auto& f = out.open("discrete_flips" + tag);
            f << "vertex_address,time,old_spin,new_spin\n";
            for (const auto& fl : traj.flips)
                f << traj.domain->vertex(fl.vertex).address() << ','
                  << format_time(fl.time) << ',' << int(fl.old_spin) << ','
                  << int(fl.new_spin) << '\n';
            auto& fin = out.open("final" + tag);
            fin << "vertex_address,spin\n";
            for (std::uint32_t i = 0; i < traj.domain->size(); ++i)
                fin << traj.domain->vertex(i).address() << ','
                    << int(traj.final_spins[i]) << '\n';
            flips += traj.flips.size();
            events += traj.events;
        }
        else
        {
            auto traj = run_median(m, ball, bc, c.horizon);
            write_flip_csv(out.open("flips" + tag), traj);
            auto& fin = out.open("final" + tag);
            fin << "vertex_address,value,origin\n";
            for (std::uint32_t i = 0; i < traj.domain->size(); ++i)
            {
                const Spin& s = traj.final_spin(i);
                fin << traj.domain->vertex(i).address() << ','
                    << num(s.as_double()) << ','
                    << (s.is_sentinel() ? std::string(s.tier == Spin::Tier::low
                                                          ? "low"
                                                          : "high")
                                        : s.origin.address())
                    << '\n';
            }
            auto audit = energy_audit(traj);
            violations += audit.violations;
            flips += traj.flips.size();
            events += traj.events;
        }
    }
    r.results = {{"events", events},
                 {"flips", flips},
                 {"energy_violations", violations}};
    r.violated = violations > 0;
    r.summary = "events=" + std::to_string(events) + " flips="
                + std::to_string(flips)
                + " energy_violations=" + std::to_string(violations);
    return r;
}

KindResult run_commutation(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto& f = out.open("commutation.csv");
    f << "replica,p,ok,compared_flips,vertex_address,time\n";
    std::uint64_t checks = 0, violations = 0;
    for (std::uint64_t k = 0; k < c.replicas; ++k)
    {
        SeedManifest m = SeedManifest::replica(c.seed, k);
        for (double p : c.p_grid)
        {
            auto rep = check_commutation(m, Ball(origin(), c.radius), p,
                                         c.horizon);
            ++checks;
            violations += !rep.ok;
            f << k << ',' << num(p) << ',' << (rep.ok ? 1 : 0) << ','
              << rep.compared_flips << ','
              << (rep.vertex ? rep.vertex->address() : std::string()) << ','
              << (rep.vertex ? format_time(rep.time) : std::string()) << '\n';
        }
    }
    r.results = {{"checks", checks}, {"violations", violations}};
    r.violated = violations > 0;
    r.summary = "checks=" + std::to_string(checks)
                + " violations=" + std::to_string(violations);
    return r;
}

KindResult run_theta(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    ThetaConfig tc;
    tc.replicas = c.replicas;
    tc.horizon = c.horizon;
    tc.radius_schedule = c.schedule;
    tc.seed = c.seed;
    tc.max_undetermined = c.max_undetermined;
    require_replicas(tc.replicas, tc.min_replicas);
    auto samples = theta_samples(tc);
    ThetaCurve curve = ThetaCurve::from_samples(samples);
    double undetermined
        = double(curve.undetermined()) / double(curve.replicas());
    if (undetermined > tc.max_undetermined)
        throw UndeterminedExcess("undetermined fraction " + num(undetermined)
                                 + " exceeds max_undetermined="
                                 + num(tc.max_undetermined));
    auto grid = default_grid();
    write_theta_csv(out.open("theta.csv"), curve, grid);
    write_theta_samples_csv(out.open("theta_samples.csv"), samples);

    constexpr double window_edge = 0.066987298107780677;  // (2 - sqrt 3) / 4
    double outside = curve.cdf(std::nextafter(window_edge, 0.0))
                     + (1 - curve.cdf(1 - window_edge));
    double max_z = 0;
    for (double p : grid)
        max_z = std::max(max_z, std::abs(curve.symmetry_z(p)));
    auto cont = continuity_check(curve, 0.02);
    json bracket;
    try
    {
        auto b = pc_bracket(curve, c.epsilon);
        bracket = {{"epsilon", c.epsilon}, {"lower", b.lower},
                   {"upper", b.upper}};
    }
    catch (const std::domain_error& e)
    {
        bracket = {{"epsilon", c.epsilon}, {"error", e.what()}};
    }
    r.results = {{"determined", curve.determined()},
                 {"undetermined", curve.undetermined()},
                 {"proxy_failed", curve.proxy_failed()},
                 {"error_budget", curve.error_budget()},
                 {"theta_half", curve.cdf(0.5)},
                 {"theta_half_ci", curve.ci(0.5)},
                 {"mass_outside_window", outside},
                 {"max_symmetry_z", max_z},
                 {"pc_bracket", bracket},
                 {"max_increment_h002", cont.max_increment},
                 {"max_increment_at", cont.at}};
    // The limit lies in [p_c, 1 - p_c] and p_c >= window_edge; mass outside
    // the window beyond the error budget contradicts that.
    r.violated = outside > curve.error_budget();
    r.summary = "theta(0.5)=" + num(curve.cdf(0.5))
                + " budget=" + num(curve.error_budget())
                + " outside_window=" + num(outside);
    return r;
}

KindResult run_alpha(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    AlphaConfig ac;
    ac.p = c.p;
    ac.distances = c.distances;
    ac.replicas = c.replicas;
    ac.horizon = c.horizon;
    ac.radius = c.radius;
    ac.seed = c.seed;
    auto est = alpha_estimate(ac);
    write_alpha_csv(out.open("alpha.csv"), est);
    json rows = json::array();
    for (const auto& e : est)
        rows.push_back({{"distance", e.distance},
                        {"alpha", e.alpha},
                        {"ci", e.ci}});
    r.results = {{"alpha", rows}};
    r.summary = "alpha at " + std::to_string(est.size()) + " distances";
    return r;
}

KindResult run_trace(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto& f = out.open("trace.csv");
    f << "replica,trace_size,difference_size,equal,touches_boundary\n";
    std::uint64_t mismatches = 0, touching = 0;
    for (std::uint64_t k = 0; k < c.replicas; ++k)
    {
        SeedManifest m = SeedManifest::replica(c.seed, k);
        auto tr = trace(m, origin(), c.horizon, c.radius);
        auto tp = threshold_pair(m, origin(), c.horizon, c.radius);
        bool equal = tr.members == tp.symmetric_difference;
        mismatches += !equal;
        touching += tr.touches_boundary;
        f << k << ',' << tr.size() << ',' << tp.symmetric_difference.size()
          << ',' << (equal ? 1 : 0) << ',' << (tr.touches_boundary ? 1 : 0)
          << '\n';
    }
    r.results = {{"mismatches", mismatches}, {"touching_boundary", touching}};
    r.violated = mismatches > 0;
    r.summary = "trace mismatches=" + std::to_string(mismatches);
    return r;
}

KindResult run_resample(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto& f = out.open("resample.csv");
    f << "replica,size,touches_boundary\n";
    std::uint64_t touching = 0, total = 0;
    for (std::uint64_t k = 0; k < c.replicas; ++k)
    {
        auto d = resampling_difference(SeedManifest::replica(c.seed, k), c.p,
                                       c.horizon, origin(), c.radius,
                                       c.resample_clock);
        touching += d.touches_boundary;
        total += d.members.size();
        f << k << ',' << d.members.size() << ','
          << (d.touches_boundary ? 1 : 0) << '\n';
    }
    r.results = {{"mean_size", double(total) / double(c.replicas)},
                 {"touching_boundary", touching}};
    r.summary = "mean difference size=" + num(double(total) / double(c.replicas));
    return r;
}

KindResult run_chains(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    ChainConfig cc;
    cc.p = c.p;
    cc.depth = c.depth;
    cc.times = c.times;
    cc.replicas = c.replicas;
    cc.radius = c.radius;
    cc.seed = c.seed;
    auto curve = chain_time_cdf(cc);
    write_chain_csv(out.open("chains.csv"), curve);
    r.results = {{"final_cumulative", curve.cumulative.back().estimate}};
    r.summary = "chain cdf at t=" + num(curve.times.back()) + ": "
                + num(curve.cumulative.back().estimate);
    return r;
}

KindResult run_audit(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto& f = out.open("audit.csv");
    f << "check,count,violations\n";
    EnergyAudit energy;
    BracketAudit bracket;
    for (std::uint64_t k = 0; k < c.replicas; ++k)
    {
        SeedManifest m = SeedManifest::replica(c.seed, k);
        Ball ball(origin(), c.radius);
        auto e = energy_audit(
            run_median(m, ball, BoundaryCondition::frozen_initial(), c.horizon));
        energy.flips += e.flips;
        energy.violations += e.violations;
        auto b = audit_bracketing(m, ball, c.horizon);
        bracket.events += b.events;
        bracket.violations += b.violations;
    }
    f << "energy," << energy.flips << ',' << energy.violations << '\n';
    f << "bracketing," << bracket.events << ',' << bracket.violations << '\n';
    auto& t = out.open("transport.csv");
    t << "rule,replicas,mass_out,mass_out_se,mass_in,mass_in_se,"
         "miss_frequency,overlap\n";
    bool transport_ok = true;
    json rules = json::array();
    for (const auto& rule : {identity_rule(), larger_neighbor_rule(),
                             nearest_threshold_rule(0.5)})
    {
        auto a = mass_transport_audit(rule, c.window, c.replicas, 1.0, c.seed);
        bool ok = a.overlap()
                  && (rule.name != "identity"
                      || (a.mass_out == 1 && a.mass_in == 1));
        transport_ok = transport_ok && ok;
        t << a.rule << ',' << a.replicas << ',' << num(a.mass_out) << ','
          << num(a.mass_out_se) << ',' << num(a.mass_in) << ','
          << num(a.mass_in_se) << ',' << num(a.miss_frequency()) << ','
          << (a.overlap() ? 1 : 0) << '\n';
        rules.push_back({{"rule", a.rule},
                         {"mass_out", a.mass_out},
                         {"mass_in", a.mass_in},
                         {"miss_frequency", a.miss_frequency()},
                         {"ok", ok}});
    }
    r.results = {{"energy_flips", energy.flips},
                 {"energy_violations", energy.violations},
                 {"bracketing_events", bracket.events},
                 {"bracketing_violations", bracket.violations},
                 {"transport", rules}};
    r.violated = energy.violations > 0 || bracket.violations > 0
                 || !transport_ok;
    r.summary = "energy_violations=" + std::to_string(energy.violations)
                + " bracketing_violations="
                + std::to_string(bracket.violations)
                + " transport=" + (transport_ok ? "ok" : "FAILED");
    return r;
}

KindResult run_tailcheck(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    auto tc = tail_check(c.horizon, c.k, c.replicas, c.seed);
    auto& f = out.open("tailcheck.csv");
    f << "T,k,replicas,hits,frequency,bound,vacuous,passed\n";
    f << num(tc.T) << ',' << tc.k << ',' << tc.replicas << ',' << tc.hits
      << ',' << num(tc.frequency) << ',' << num(tc.bound) << ','
      << (tc.vacuous ? 1 : 0) << ',' << (tc.passed ? 1 : 0) << '\n';
    r.results = {{"frequency", tc.frequency},
                 {"bound", tc.bound},
                 {"vacuous", tc.vacuous},
                 {"passed", tc.passed}};
    r.violated = !tc.vacuous && !tc.passed;
    r.summary = "frequency=" + num(tc.frequency) + " bound=" + num(tc.bound)
                + (tc.vacuous ? " (vacuous)" : "");
    return r;
}

KindResult run_neverflip(const ExperimentConfig& c, Outputs& out)
{
    KindResult r;
    NeverFlipConfig nc;
    nc.q = c.p;
    nc.times = c.times;
    nc.replicas = c.replicas;
    nc.radius = c.radius;
    nc.seed = c.seed;
    auto est = never_flip_probability(nc);
    auto& f = out.open("neverflip.csv");
    write_estimate_csv_header(f, "time");
    json rows = json::array();
    for (std::size_t j = 0; j < est.size(); ++j)
    {
        write_estimate_csv_row(f, nc.times[j], est[j]);
        rows.push_back({{"time", nc.times[j]},
                        {"estimate", est[j].estimate},
                        {"ci", est[j].ci}});
    }
    r.results = {{"estimates", rows}};
    r.summary = "never-flip estimates at " + std::to_string(est.size())
                + " times";
    return r;
}
}  // namespace

RunResult run_experiment(const ExperimentConfig& raw,
                         const std::filesystem::path& out_dir)
{
    auto start = std::chrono::steady_clock::now();
    ExperimentConfig c = resolve(raw);
    RunResult result;
    json manifest{{"artifact",
                   {{"name", artifact_name}, {"version", artifact_version}}},
                  {"kind", to_string(c.kind)},
                  {"config", config_json(c)},
                  {"seed_manifest", seed_manifest_json(c)}};
    std::optional<Outputs> out;
    try
    {
        out.emplace(out_dir, c);
        KindResult k;
        switch (c.kind)
        {
        case ExperimentKind::simulate: k = run_simulate(c, *out); break;
        case ExperimentKind::commutation: k = run_commutation(c, *out); break;
        case ExperimentKind::theta: k = run_theta(c, *out); break;
        case ExperimentKind::alpha: k = run_alpha(c, *out); break;
        case ExperimentKind::trace: k = run_trace(c, *out); break;
        case ExperimentKind::resample: k = run_resample(c, *out); break;
        case ExperimentKind::chains: k = run_chains(c, *out); break;
        case ExperimentKind::audit: k = run_audit(c, *out); break;
        case ExperimentKind::tailcheck: k = run_tailcheck(c, *out); break;
        case ExperimentKind::neverflip: k = run_neverflip(c, *out); break;
        }
        out->close_all();
        result.exit_code = k.violated ? 2 : 0;
        result.summary = k.summary;
        manifest["results"] = k.results;
        manifest["invariants_hold"] = !k.violated;
    }
    catch (const std::exception& e)
    {
        result.exit_code = 1;
        result.summary = std::string("error: ") + e.what();
        manifest["error"] = e.what();
    }
    manifest["exit_code"] = result.exit_code;
    if (out)
    {
        std::vector<std::string> names;
        for (const auto& p : out->files())
            names.push_back(p.filename().string());
        manifest["outputs"] = names;
        manifest["wall_time_seconds"]
            = std::chrono::duration<double>(std::chrono::steady_clock::now()
                                            - start)
                  .count();
        auto path = out->dir() / "manifest.json";
        std::ofstream f(path);
        f << manifest.dump(2) << '\n';
        if (!f)
        {
            result.exit_code = 1;
            result.summary = "error: failed writing " + path.string();
        }
        else
            out->files().push_back(path);
        result.files = out->files();
    }
    return result;
}

}  // namespace medtree
