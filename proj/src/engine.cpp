#include "medtree/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <queue>

namespace medtree
{

//---------------------------------------------------------------------------//
// Spins
//---------------------------------------------------------------------------//
double Spin::as_double() const
{
    switch (tier)
    {
    case Tier::low:
        return -0.0;
    case Tier::high:
        return 1.0;
    case Tier::value:
        break;
    }
    return value.value();
}

bool spin_less(const Spin& a, const Spin& b)
{
    if (a.tier != b.tier)
        return a.tier < b.tier;
    if (a.value.raw != b.value.raw)
        return a.value.raw < b.value.raw;
    return address_less(a.origin, b.origin);
}

int project(const Spin& s, double p)
{
    switch (s.tier)
    {
    case Spin::Tier::low:
        return +1;
    case Spin::Tier::high:
        return -1;
    case Spin::Tier::value:
        break;
    }
    return s.value.value() <= p ? +1 : -1;
}

Spin median_update(const Spin& /*current*/, const Spin& n1, const Spin& n2,
                   const Spin& n3)
{
    if (spin_less(n1, n2))
    {
        if (spin_less(n2, n3))
            return n2;
        return spin_less(n1, n3) ? n3 : n1;
    }
    if (spin_less(n1, n3))
        return n1;
    return spin_less(n2, n3) ? n3 : n2;
}

int discrete_update(int current, int n1, int n2, int n3)
{
    int energy = -current * (n1 + n2 + n3);
    if (energy > 0)
        return -current;
    return current;
}

//---------------------------------------------------------------------------//
// Boundary conditions
//---------------------------------------------------------------------------//
BoundaryCondition BoundaryCondition::frozen_discrete(int s)
{
    if (s != 1 && s != -1)
        throw std::invalid_argument("discrete boundary spin must be +1 or -1");
    return {Kind::frozen_discrete, s};
}

std::string BoundaryCondition::to_string() const
{
    switch (kind)
    {
    case Kind::free:
        return "free";
    case Kind::frozen_initial:
        return "frozen_initial";
    case Kind::frozen_low:
        return "frozen_low";
    case Kind::frozen_high:
        return "frozen_high";
    case Kind::frozen_discrete:
        return sign > 0 ? "frozen_plus" : "frozen_minus";
    }
    return "?";
}

BoundaryCondition BoundaryCondition::parse(const std::string& text)
{
    if (text == "free")
        return free();
    if (text == "frozen_initial" || text == "initial")
        return frozen_initial();
    if (text == "frozen_low" || text == "low")
        return frozen_low();
    if (text == "frozen_high" || text == "high")
        return frozen_high();
    if (text == "frozen_plus")
        return frozen_discrete(+1);
    if (text == "frozen_minus")
        return frozen_discrete(-1);
    throw std::invalid_argument("unknown boundary condition '" + text + "'");
}

//---------------------------------------------------------------------------//
// Domain
//---------------------------------------------------------------------------//
std::shared_ptr<const Domain> Domain::dense(const Ball& ball)
{
    std::shared_ptr<Domain> d(new Domain(ball));
    d->vertices_ = ball.vertices();
    d->wire();
    return d;
}

std::shared_ptr<const Domain> Domain::without_branch(const Ball& ball,
                                                     VertexId cut)
{
    if (!ball.contains(cut) || cut == ball.center())
        throw std::invalid_argument("cut must be a non-center ball vertex");
    std::shared_ptr<Domain> d(new Domain(ball));
    for (VertexId v : ball.vertices())
    {
        auto path = path_between(ball.center(), v);
        if (std::find(path.begin(), path.end(), cut) == path.end())
            d->vertices_.push_back(v);
    }
    d->deadlines_.assign(d->vertices_.size(),
                         std::numeric_limits<double>::infinity());
    d->wire();
    return d;
}

std::uint32_t Domain::index_of(VertexId v) const
{
    if (is_dense() && ball_.center().is_root())
        return v.code() < vertices_.size() ? static_cast<std::uint32_t>(v.code())
                                           : npos;
    auto it = index_.find(v);
    return it == index_.end() ? npos : it->second;
}

void Domain::wire()
{
    const std::uint32_t n = size();
    bool rooted_dense = is_dense() && ball_.center().is_root();
    if (!rooted_dense)
    {
        index_.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
            index_.emplace(vertices_[i], i);
    }
    adjacency_.resize(n);
    std::unordered_map<VertexId, std::uint32_t, VertexHash> external_index;
    if (rooted_dense)
    {
        // Outer ring codes follow the ball codes contiguously.
        std::uint64_t ring_end = Ball::ball_size(ball_.radius() + 1);
        externals_.reserve(ring_end - n);
        for (std::uint64_t c = n; c < ring_end; ++c)
            externals_.push_back({VertexId::from_code(c), false});
    }
    for (std::uint32_t i = 0; i < n; ++i)
    {
        auto nb = neighbors(vertices_[i]);
        for (int k = 0; k < 3; ++k)
        {
            VertexId w = nb[static_cast<std::size_t>(k)];
            std::uint32_t j = index_of(w);
            if (j != npos)
            {
                adjacency_[i][static_cast<std::size_t>(k)] = j;
                continue;
            }
            if (rooted_dense)
            {
                adjacency_[i][static_cast<std::size_t>(k)]
                    = static_cast<std::uint32_t>(w.code());
                continue;
            }
            auto [it, inserted] = external_index.emplace(
                w, static_cast<std::uint32_t>(externals_.size()));
            if (inserted)
                externals_.push_back({w, ball_.contains(w)});
            adjacency_[i][static_cast<std::size_t>(k)] = n + it->second;
        }
    }
}

std::shared_ptr<const Domain> Domain::light_cone(const SeedManifest& manifest,
                                                 const Ball& ball,
                                                 VertexId target,
                                                 double horizon)
{
    if (!ball.contains(target))
        throw std::invalid_argument("light cone target outside the ball");
    // deadline(w) = latest time a change at w can still reach the target by
    // the horizon; computed in decreasing order like a max-plus Dijkstra.
    std::unordered_map<VertexId, double, VertexHash> best;
    std::unordered_map<VertexId, double, VertexHash> settled;
    std::priority_queue<std::pair<double, std::uint64_t>> queue;
    best[target] = horizon;
    queue.emplace(horizon, target.code());
    std::vector<std::pair<VertexId, double>> evolving;
    while (!queue.empty())
    {
        auto [deadline, code] = queue.top();
        queue.pop();
        VertexId u = VertexId::from_code(code);
        if (settled.count(u) || deadline < best[u])
            continue;
        settled.emplace(u, deadline);
        ClockStream clock(manifest, u);
        std::size_t count = clock.count_until(deadline);
        if (count == 0)
        {
            if (u == target)
                evolving.emplace_back(u, deadline);
            continue;
        }
        evolving.emplace_back(u, deadline);
        double last = clock.ring(count - 1);
        for (VertexId w : neighbors(u))
        {
            if (!ball.contains(w) || settled.count(w))
                continue;
            auto it = best.find(w);
            if (it == best.end() || last > it->second)
            {
                best[w] = last;
                queue.emplace(last, w.code());
            }
        }
    }
    std::sort(evolving.begin(), evolving.end(),
              [](auto& a, auto& b) { return a.first < b.first; });
    std::shared_ptr<Domain> d(new Domain(ball));
    for (auto& [v, t] : evolving)
    {
        d->vertices_.push_back(v);
        d->deadlines_.push_back(t);
    }
    d->wire();
    return d;
}

//---------------------------------------------------------------------------//
// Event source
//---------------------------------------------------------------------------//
EventSource::EventSource(std::shared_ptr<const Domain> domain,
                         const SeedManifest& manifest, double start_time)
    : domain_(std::move(domain))
{
    const std::uint32_t n = domain_->size();
    cursors_.reserve(n);
    heap_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        cursors_.push_back(ring_cursor(manifest, domain_->vertex(i)));
        double t = cursors_.back().next();
        while (t <= start_time)
            t = cursors_.back().next();
        if (t <= domain_->deadline(i))
            heap_.push_back({t, i});
    }
    for (std::size_t i = heap_.size() / 2; i-- > 0;)
        sift_down(i);
}

bool EventSource::before(const Entry& a, const Entry& b) const
{
    if (a.time != b.time)
        return a.time < b.time;
    return address_less(domain_->vertex(a.vertex), domain_->vertex(b.vertex));
}

void EventSource::sift_down(std::size_t i)
{
    const std::size_t n = heap_.size();
    Entry moving = heap_[i];
    while (true)
    {
        std::size_t child = 2 * i + 1;
        if (child >= n)
            break;
        if (child + 1 < n && before(heap_[child + 1], heap_[child]))
            ++child;
        if (!before(heap_[child], moving))
            break;
        heap_[i] = heap_[child];
        i = child;
    }
    heap_[i] = moving;
}

void EventSource::sift_up(std::size_t i)
{
    Entry moving = heap_[i];
    while (i > 0)
    {
        std::size_t parent = (i - 1) / 2;
        if (!before(moving, heap_[parent]))
            break;
        heap_[i] = heap_[parent];
        i = parent;
    }
    heap_[i] = moving;
}

double EventSource::peek_time() const
{
    return heap_.empty() ? std::numeric_limits<double>::infinity()
                         : heap_.front().time;
}

bool EventSource::next(double horizon, Event& out)
{
    if (heap_.empty() || heap_.front().time > horizon)
        return false;
    Entry top = heap_.front();
    out = {top.time, top.vertex};
    double t = cursors_[top.vertex].next();
    if (t <= domain_->deadline(top.vertex))
    {
        heap_.front().time = t;
    }
    else
    {
        heap_.front() = heap_.back();
        heap_.pop_back();
        if (heap_.empty())
            return true;
    }
    sift_down(0);
    return true;
}

//---------------------------------------------------------------------------//
// Median state
//---------------------------------------------------------------------------//
namespace
{
std::shared_ptr<const SlotTable> make_slots(const Domain& domain,
                                            const SeedManifest& manifest)
{
    auto slots = std::make_shared<SlotTable>();
    slots->evolving = domain.size();
    slots->evolving_plus_externals
        = domain.size() + static_cast<std::uint32_t>(domain.externals().size());
    slots->spins.reserve(slots->evolving_plus_externals + 2);
    for (VertexId v : domain.vertices())
        slots->spins.push_back(Spin::initial(manifest, v));
    for (const auto& ext : domain.externals())
        slots->spins.push_back(Spin::initial(manifest, ext.vertex));
    slots->spins.push_back(Spin::low());
    slots->spins.push_back(Spin::high());
    return slots;
}
}  // namespace

MedianState::MedianState(std::shared_ptr<const Domain> domain,
                         const SeedManifest& manifest, BoundaryCondition bc)
    : domain_(std::move(domain)), slots_(make_slots(*domain_, manifest)), bc_(bc)
{
    current_.resize(domain_->size());
    for (std::uint32_t i = 0; i < domain_->size(); ++i)
        current_[i] = i;
    build_refs();
}

MedianState::MedianState(std::shared_ptr<const Domain> domain,
                         std::shared_ptr<const SlotTable> slots,
                         BoundaryCondition bc,
                         std::vector<std::uint32_t> current)
    : domain_(std::move(domain)), slots_(std::move(slots)), bc_(bc),
      current_(std::move(current))
{
    build_refs();
}

void MedianState::build_refs()
{
    if (bc_.kind == BoundaryCondition::Kind::frozen_discrete)
        throw std::invalid_argument(
            "frozen_discrete boundary applies to discrete runs only");
    if (bc_.kind == BoundaryCondition::Kind::free && !domain_->is_dense())
        throw std::invalid_argument("free boundary needs a dense ball domain");
    const std::uint32_t n = domain_->size();
    refs_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        for (std::size_t k = 0; k < 3; ++k)
        {
            std::uint32_t r = domain_->neighbor_refs(i)[k];
            if (r < n)
            {
                refs_[i][k] = r;
                continue;
            }
            const auto& ext = domain_->externals()[r - n];
            if (ext.in_ball)
            {
                refs_[i][k] = r;
                continue;
            }
            switch (bc_.kind)
            {
            case BoundaryCondition::Kind::frozen_initial:
                refs_[i][k] = r;
                break;
            case BoundaryCondition::Kind::frozen_low:
                refs_[i][k] = slots_->low_slot();
                break;
            case BoundaryCondition::Kind::frozen_high:
                refs_[i][k] = slots_->high_slot();
                break;
            default:
                refs_[i][k] = Domain::npos;
                break;
            }
        }
    }
}

std::uint32_t MedianState::neighbor_slot(std::uint32_t i, int k) const
{
    std::uint32_t r = refs_[i][static_cast<std::size_t>(k)];
    if (r == Domain::npos)
        return Domain::npos;
    return r < domain_->size() ? current_[r] : r;
}

bool MedianState::slot_less(std::uint32_t a, std::uint32_t b) const
{
    const Spin& x = slots_->spins[a];
    const Spin& y = slots_->spins[b];
    if (x.tier != y.tier)
        return x.tier < y.tier;
    if (x.value.raw != y.value.raw)
        return x.value.raw < y.value.raw;
    return a != b && address_less(x.origin, y.origin);
}

bool MedianState::apply(const Event& e, std::vector<MedianFlipRecord>* log)
{
    const std::uint32_t i = e.vertex;
    std::array<std::uint32_t, 3> nb{neighbor_slot(i, 0), neighbor_slot(i, 1),
                                    neighbor_slot(i, 2)};
    if (nb[0] == Domain::npos || nb[1] == Domain::npos
        || nb[2] == Domain::npos)
    {
        // Free boundary: missing neighbors copy the first in-ball one.
        std::uint32_t fill = Domain::npos;
        for (auto s : nb)
            if (s != Domain::npos)
            {
                fill = s;
                break;
            }
        if (fill == Domain::npos)
            return false;
        for (auto& s : nb)
            if (s == Domain::npos)
                s = fill;
    }
    std::uint32_t a = nb[0], b = nb[1], c = nb[2];
    std::uint32_t med;
    if (slot_less(a, b))
        med = slot_less(b, c) ? b : (slot_less(a, c) ? c : a);
    else
        med = slot_less(a, c) ? a : (slot_less(b, c) ? c : b);
    std::uint32_t old = current_[i];
    if (med == old)
        return false;
    current_[i] = med;
    if (log)
        log->push_back({i, e.time, old, med, nb});
    return true;
}

//---------------------------------------------------------------------------//
// Median runs
//---------------------------------------------------------------------------//
const Spin& MedianTrajectory::final_spin(VertexId v) const
{
    std::uint32_t i = domain->index_of(v);
    if (i == Domain::npos)
        throw std::out_of_range("vertex " + v.address()
                                + " does not evolve in this trajectory");
    return final_spin(i);
}

MedianFlip MedianTrajectory::flip(std::size_t k) const
{
    const auto& r = flips.at(k);
    const auto& s = slots->spins;
    return {domain->vertex(r.vertex),
            r.time,
            s[r.old_slot],
            s[r.new_slot],
            {s[r.neighbor_slots[0]], s[r.neighbor_slots[1]],
             s[r.neighbor_slots[2]]}};
}

MedianRun::MedianRun(std::shared_ptr<const Domain> domain,
                     const SeedManifest& manifest, BoundaryCondition bc,
                     RunOptions options)
    : state_(domain, manifest, bc), source_(domain, manifest, 0),
      options_(options), start_time_(0), time_(0), initial_(state_.current())
{
}

MedianRun::MedianRun(const MedianTrajectory& earlier,
                     const SeedManifest& manifest, RunOptions options)
    : state_(earlier.domain, earlier.slots, earlier.bc, earlier.final_slots),
      source_(earlier.domain, manifest, earlier.horizon), options_(options),
      start_time_(earlier.horizon), time_(earlier.horizon),
      initial_(earlier.final_slots)
{
}

void MedianRun::advance_to(double t)
{
    if (t < time_)
        throw std::invalid_argument("cannot advance backwards in time");
    Event e;
    auto* log = options_.record_flips ? &flips_ : nullptr;
    while (source_.next(t, e))
    {
        if (++events_ > options_.max_events)
            throw BudgetExceeded("event budget of "
                                 + std::to_string(options_.max_events)
                                 + " exceeded; shrink the horizon or radius");
        state_.apply(e, log);
    }
    time_ = t;
}

MedianTrajectory MedianRun::finish() &&
{
    MedianTrajectory out;
    out.domain = state_.domain_ptr();
    out.slots = state_.slots_ptr();
    out.bc = state_.boundary();
    out.start_time = start_time_;
    out.horizon = time_;
    out.initial_slots = std::move(initial_);
    out.final_slots = state_.current();
    out.flips = std::move(flips_);
    out.events = events_;
    return out;
}

MedianTrajectory run_median(const SeedManifest& manifest, const Ball& ball,
                            BoundaryCondition bc, double horizon,
                            RunOptions options)
{
    if (horizon < 0)
        throw std::invalid_argument("horizon must be nonnegative");
    MedianRun run(Domain::dense(ball), manifest, bc, options);
    run.advance_to(horizon);
    return std::move(run).finish();
}

//---------------------------------------------------------------------------//
// Discrete runs
//---------------------------------------------------------------------------//
MajorityState::MajorityState(std::shared_ptr<const Domain> domain,
                             std::vector<std::int8_t> initial,
                             std::vector<std::int8_t> external_spins)
    : domain_(std::move(domain)), spins_(std::move(initial)),
      external_(std::move(external_spins))
{
    if (spins_.size() != domain_->size()
        || external_.size() != domain_->externals().size())
        throw std::invalid_argument("configuration size does not match domain");
}

std::int8_t MajorityState::neighbor_spin(std::uint32_t i, int k) const
{
    std::uint32_t r = domain_->neighbor_refs(i)[static_cast<std::size_t>(k)];
    const std::uint32_t n = domain_->size();
    return r < n ? spins_[r] : external_[r - n];
}

bool MajorityState::apply(const Event& e, std::vector<DiscreteFlipRecord>* log)
{
    const std::uint32_t i = e.vertex;
    std::array<std::int8_t, 3> nb{neighbor_spin(i, 0), neighbor_spin(i, 1),
                                  neighbor_spin(i, 2)};
    if (nb[0] == 0 || nb[1] == 0 || nb[2] == 0)
    {
        std::int8_t fill = 0;
        for (auto s : nb)
            if (s != 0)
            {
                fill = s;
                break;
            }
        if (fill == 0)
            return false;
        for (auto& s : nb)
            if (s == 0)
                s = fill;
    }
    std::int8_t old = spins_[i];
    auto next = static_cast<std::int8_t>(discrete_update(old, nb[0], nb[1], nb[2]));
    if (next == old)
        return false;
    spins_[i] = next;
    if (log)
        log->push_back({i, e.time, old, next, nb});
    return true;
}

std::vector<std::int8_t> projected_initial(const Domain& domain,
                                           const SeedManifest& manifest,
                                           double p)
{
    std::vector<std::int8_t> out(domain.size());
    for (std::uint32_t i = 0; i < domain.size(); ++i)
        out[i] = static_cast<std::int8_t>(
            project(Spin::initial(manifest, domain.vertex(i)), p));
    return out;
}

std::vector<std::int8_t> projected_externals(const Domain& domain,
                                             const SeedManifest& manifest,
                                             BoundaryCondition bc, double p)
{
    std::vector<std::int8_t> out;
    out.reserve(domain.externals().size());
    for (const auto& ext : domain.externals())
    {
        std::int8_t s = 0;
        if (ext.in_ball)
        {
            s = static_cast<std::int8_t>(
                project(Spin::initial(manifest, ext.vertex), p));
        }
        else
        {
            switch (bc.kind)
            {
            case BoundaryCondition::Kind::frozen_initial:
                s = static_cast<std::int8_t>(
                    project(Spin::initial(manifest, ext.vertex), p));
                break;
            case BoundaryCondition::Kind::frozen_low:
                s = +1;
                break;
            case BoundaryCondition::Kind::frozen_high:
                s = -1;
                break;
            case BoundaryCondition::Kind::frozen_discrete:
                s = static_cast<std::int8_t>(bc.sign);
                break;
            case BoundaryCondition::Kind::free:
                s = 0;
                break;
            }
        }
        out.push_back(s);
    }
    return out;
}

DiscreteTrajectory run_majority(std::shared_ptr<const Domain> domain,
                                const SeedManifest& clocks,
                                std::vector<std::int8_t> initial,
                                std::vector<std::int8_t> external_spins,
                                BoundaryCondition bc, double horizon,
                                RunOptions options)
{
    if (horizon < 0)
        throw std::invalid_argument("horizon must be nonnegative");
    DiscreteTrajectory out;
    out.domain = domain;
    out.bc = bc;
    out.horizon = horizon;
    out.initial = initial;
    MajorityState state(domain, std::move(initial), std::move(external_spins));
    EventSource source(domain, clocks, 0);
    Event e;
    auto* log = options.record_flips ? &out.flips : nullptr;
    while (source.next(horizon, e))
    {
        if (++out.events > options.max_events)
            throw BudgetExceeded("event budget exceeded");
        state.apply(e, log);
    }
    out.final_spins = state.spins();
    return out;
}

DiscreteTrajectory run_majority(const SeedManifest& manifest,
                                const Ball& ball, BoundaryCondition bc,
                                double p, double horizon, RunOptions options)
{
    auto domain = Domain::dense(ball);
    return run_majority(domain, manifest, projected_initial(*domain, manifest, p),
                        projected_externals(*domain, manifest, bc, p), bc,
                        horizon, options);
}

std::vector<int> project(const std::vector<Spin>& config, double p)
{
    std::vector<int> out;
    out.reserve(config.size());
    for (const auto& s : config)
        out.push_back(project(s, p));
    return out;
}

DiscreteTrajectory project(const MedianTrajectory& trajectory, double p)
{
    const auto& s = trajectory.slots->spins;
    auto proj = [&](std::uint32_t slot) {
        return static_cast<std::int8_t>(project(s[slot], p));
    };
    DiscreteTrajectory out;
    out.domain = trajectory.domain;
    out.bc = trajectory.bc;
    out.horizon = trajectory.horizon;
    out.events = trajectory.events;
    for (auto slot : trajectory.initial_slots)
        out.initial.push_back(proj(slot));
    for (auto slot : trajectory.final_slots)
        out.final_spins.push_back(proj(slot));
    for (const auto& f : trajectory.flips)
    {
        std::int8_t a = proj(f.old_slot);
        std::int8_t b = proj(f.new_slot);
        if (a == b)
            continue;
        out.flips.push_back({f.vertex,
                             f.time,
                             a,
                             b,
                             {proj(f.neighbor_slots[0]),
                              proj(f.neighbor_slots[1]),
                              proj(f.neighbor_slots[2])}});
    }
    return out;
}

DiscreteTrajectory run_discrete(const SeedManifest& manifest, const Ball& ball,
                                BoundaryCondition bc, double p, double horizon,
                                RunOptions options)
{
    BoundaryCondition median_bc = bc;
    if (bc.kind == BoundaryCondition::Kind::frozen_discrete)
        median_bc = bc.sign > 0 ? BoundaryCondition::frozen_low()
                                : BoundaryCondition::frozen_high();
    options.record_flips = true;
    auto out = project(run_median(manifest, ball, median_bc, horizon, options), p);
    out.bc = bc;
    return out;
}

//---------------------------------------------------------------------------//
// Checks
//---------------------------------------------------------------------------//
CommutationReport check_commutation(const SeedManifest& manifest,
                                    const Ball& ball, double p, double horizon,
                                    const SeedManifest* discrete_clocks)
{
    auto bc = BoundaryCondition::frozen_initial();
    auto domain = Domain::dense(ball);
    MedianRun median(domain, manifest, bc);
    median.advance_to(horizon);
    auto projected = project(std::move(median).finish(), p);
    auto direct = run_majority(domain, discrete_clocks ? *discrete_clocks : manifest,
                               projected_initial(*domain, manifest, p),
                               projected_externals(*domain, manifest, bc, p), bc,
                               horizon);

    CommutationReport report;
    std::size_t n = std::min(projected.flips.size(), direct.flips.size());
    for (std::size_t k = 0; k < n; ++k)
    {
        const auto& a = projected.flips[k];
        const auto& b = direct.flips[k];
        if (a.vertex != b.vertex || a.time != b.time || a.new_spin != b.new_spin)
        {
            report.ok = false;
            bool a_first = a.time < b.time
                           || (a.time == b.time && a.vertex < b.vertex);
            const auto& first = a_first ? a : b;
            report.vertex = domain->vertex(first.vertex);
            report.time = first.time;
            report.detail = a_first ? "flip only in projected median run"
                                    : "flip only in direct majority run";
            report.compared_flips = k;
            return report;
        }
    }
    report.compared_flips = n;
    if (projected.flips.size() != direct.flips.size())
    {
        report.ok = false;
        bool extra_projected = projected.flips.size() > n;
        const auto& f = extra_projected ? projected.flips[n] : direct.flips[n];
        report.vertex = domain->vertex(f.vertex);
        report.time = f.time;
        report.detail = extra_projected ? "flip only in projected median run"
                                        : "flip only in direct majority run";
    }
    return report;
}

OrderReport check_attractiveness(const SeedManifest& manifest,
                                 const Ball& ball, BoundaryCondition bc,
                                 std::vector<std::int8_t> lower,
                                 std::vector<std::int8_t> upper,
                                 double horizon)
{
    auto domain = Domain::dense(ball);
    for (std::size_t i = 0; i < lower.size() && i < upper.size(); ++i)
        if (lower[i] > upper[i])
            throw std::invalid_argument("initial configurations are not ordered");
    // p = 0.5 only matters for frozen_initial externals.
    auto ext = projected_externals(*domain, manifest, bc, 0.5);
    MajorityState lo(domain, std::move(lower), ext);
    MajorityState hi(domain, std::move(upper), ext);
    EventSource source(domain, manifest, 0);
    OrderReport report;
    Event e;
    while (source.next(horizon, e))
    {
        lo.apply(e, nullptr);
        hi.apply(e, nullptr);
        ++report.events_checked;
        if (lo.spin(e.vertex) > hi.spin(e.vertex))
        {
            report.ok = false;
            report.vertex = domain->vertex(e.vertex);
            report.time = e.time;
            return report;
        }
    }
    return report;
}

//---------------------------------------------------------------------------//
std::string format_time(double t)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", t);
    return buf;
}

namespace
{
std::string origin_text(const Spin& s)
{
    switch (s.tier)
    {
    case Spin::Tier::low:
        return "low";
    case Spin::Tier::high:
        return "high";
    case Spin::Tier::value:
        break;
    }
    return s.origin.address();
}

std::string value_text(const Spin& s)
{
    switch (s.tier)
    {
    case Spin::Tier::low:
        return "0-";
    case Spin::Tier::high:
        return "1+";
    case Spin::Tier::value:
        break;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", s.value.value());
    return buf;
}
}  // namespace

void write_flip_csv(std::ostream& out, const MedianTrajectory& trajectory)
{
    out << "vertex_address,time,old_origin,new_origin,old_value,new_value\n";
    for (std::size_t k = 0; k < trajectory.flips.size(); ++k)
    {
        auto f = trajectory.flip(k);
        out << f.vertex.address() << ',' << format_time(f.time) << ','
            << origin_text(f.old_spin) << ',' << origin_text(f.new_spin) << ','
            << value_text(f.old_spin) << ',' << value_text(f.new_spin) << '\n';
    }
}

}  // namespace medtree
