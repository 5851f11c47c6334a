#include "mfbf/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace mfbf {

VehicleControl waypoint_controller(const VehicleState& s, const Waypoint& wp, std::span<const double> omega_choices,
                                   double v, double zeta, double dt)
{
    if (omega_choices.empty())
        throw std::invalid_argument("waypoint controller needs at least one omega choice");
    const double desired = std::atan2(wp.y - s.py, wp.x - s.px);
    constexpr double tie = 1e-12;
    double best_err = std::numeric_limits<double>::infinity();
    double best_omega = omega_choices.front();
    for (double omega : omega_choices) {
        const double err = std::abs(wrap_angle(desired - (s.theta + omega * dt)));
        if (err < best_err - tie || (std::abs(err - best_err) <= tie && omega > best_omega)) {
            best_err = err;
            best_omega = omega;
        }
    }
    return {v, best_omega, zeta};
}

void NominalSettings::validate() const
{
    if (omega_choices.empty())
        throw ConfigError("nominal controller needs omega choices");
    if (!(dt > 0.0))
        throw ConfigError("dt must be positive");
}

void WaypointPlan::validate() const
{
    if (vehicle1.empty() || vehicle2.empty())
        throw ConfigError("each vehicle needs at least one waypoint");
    for (const auto* list : {&vehicle1, &vehicle2})
        for (const Waypoint& w : *list)
            if (!(w.capture_radius > 0.0))
                throw ConfigError("waypoint capture radius must be positive");
}

namespace {

std::size_t advance(const std::vector<Waypoint>& wps, std::size_t i, const VehicleState& s)
{
    while (i + 1 < wps.size()) {
        const Waypoint& w = wps[i];
        const double d = std::hypot(w.x - s.px, w.y - s.py, w.z - s.pz);
        if (d >= w.capture_radius)
            break;
        ++i;
    }
    return i;
}

} // namespace

NominalFactory waypoint_nominal(WaypointPlan plan, NominalSettings settings)
{
    plan.validate();
    settings.validate();
    auto shared_plan = std::make_shared<const WaypointPlan>(std::move(plan));
    auto shared_settings = std::make_shared<const NominalSettings>(std::move(settings));
    return [shared_plan, shared_settings](const StateVec&) -> Policy {
        auto idx = std::make_shared<std::array<std::size_t, 2>>(std::array<std::size_t, 2>{0, 0});
        return [shared_plan, shared_settings, idx](const StateVec& x) {
            const JointState js = JointState::from_flat(x);
            const NominalSettings& ns = *shared_settings;
            (*idx)[0] = advance(shared_plan->vehicle1, (*idx)[0], js.vehicle1);
            (*idx)[1] = advance(shared_plan->vehicle2, (*idx)[1], js.vehicle2);
            ControlInput u;
            u.vehicle1 = waypoint_controller(js.vehicle1, shared_plan->vehicle1[(*idx)[0]], ns.omega_choices,
                                             ns.speed, ns.zeta, ns.dt);
            u.vehicle2 = waypoint_controller(js.vehicle2, shared_plan->vehicle2[(*idx)[1]], ns.omega_choices,
                                             ns.speed, ns.zeta, ns.dt);
            return u.flat();
        };
    };
}

WaypointPlan crossing_plan(double half_span)
{
    WaypointPlan p;
    p.vehicle1.push_back({half_span, 0.0, 0.0, 50.0});
    p.vehicle2.push_back({-half_span, 0.0, 0.0, 50.0});
    return p;
}

BarrierKind parse_barrier_kind(const std::string& name)
{
    if (name == "none")
        return BarrierKind::none;
    if (name == "exact_straight" || name == "exact-straight")
        return BarrierKind::exact_straight;
    if (name == "exact_turn" || name == "exact-turn")
        return BarrierKind::exact_turn;
    if (name == "learned")
        return BarrierKind::learned;
    throw ConfigError("unknown barrier kind '" + name + "'");
}

std::string to_string(BarrierKind k)
{
    switch (k) {
    case BarrierKind::none: return "none";
    case BarrierKind::exact_straight: return "exact_straight";
    case BarrierKind::exact_turn: return "exact_turn";
    case BarrierKind::learned: return "learned";
    }
    return "?";
}

BarrierPtr make_exact_barrier(BarrierKind kind, std::shared_ptr<const Plant> plant, const SeparationMargin& rho,
                              const ExactBarrierSettings& s, const ControlBounds& bounds)
{
    rho.validate();
    if (s.horizon < 1)
        throw ConfigError("barrier horizon must be >= 1");
    Policy gamma;
    switch (kind) {
    case BarrierKind::exact_straight:
        gamma = gamma_straight(s.speed, s.speed, s.zeta, s.zeta, bounds);
        break;
    case BarrierKind::exact_turn:
        gamma = gamma_turn(s.eta, s.speed, s.omega, bounds);
        break;
    default:
        throw std::invalid_argument("make_exact_barrier needs exact_straight or exact_turn");
    }
    return std::make_shared<RolloutBarrier>(std::move(plant), std::move(gamma), SafetyFn(rho), s.horizon);
}

void EpisodeConfig::validate() const
{
    if (horizon < 1)
        throw ConfigError("episode horizon must be >= 1");
    if (x0.size() != 8)
        throw ConfigError("episode start must be an 8-dimensional joint state");
    plan.validate();
}

EpisodeResult run_episode(const EpisodeConfig& cfg, const FixedWingPair& plant, const NominalSettings& nominal,
                          const BarrierFunction* barrier, double ds)
{
    cfg.validate();
    if (barrier)
        cfg.filter.validate();
    const Policy policy = waypoint_nominal(cfg.plan, nominal)(cfg.x0);
    EpisodeResult r;
    StateVec x = cfg.x0;
    r.min_distance = separation(x);
    if (cfg.record_trajectory) {
        r.trajectory.reserve(static_cast<std::size_t>(cfg.horizon) + 1);
        r.trajectory.push_back(x);
    }
    for (int k = 0; k < cfg.horizon; ++k) {
        ControlVec u = policy(x);
        if (barrier) {
            const FilterResult fr = safety_filter(*barrier, x, u, cfg.filter);
            u = fr.u;
            r.override_count += fr.overridden ? 1 : 0;
            r.infeasible_count += fr.feasible ? 0 : 1;
        }
        x = plant.step(x, u);
        r.min_distance = std::min(r.min_distance, separation(x));
        if (cfg.record_trajectory)
            r.trajectory.push_back(x);
    }
    r.collided = r.min_distance < ds;
    return r;
}

std::pair<double, double> wilson_interval(int successes, int trials, double z)
{
    if (trials <= 0)
        return {0.0, 1.0};
    const double n = trials;
    const double p = successes / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

CollisionTable evaluate_collision_rates(const CollisionStudy& study, const FixedWingPair& plant,
                                        const std::vector<BarrierVariant>& variants)
{
    if (study.episodes < 1)
        throw ConfigError("collision study needs at least one episode");
    if (variants.empty())
        throw ConfigError("collision study needs at least one variant");
    study.sampler.validate();
    if (study.sampler.lower.size() != 8)
        throw ConfigError("collision study sampler must be 8-dimensional");

    const std::size_t n = static_cast<std::size_t>(study.episodes);
    const std::size_t nv = variants.size();
    CollisionTable t;
    t.starts.resize(n);
    t.episodes.resize(n * nv);
    std::vector<std::uint64_t> seeds(n);

    parallel_for(n, study.jobs, [&](std::size_t j) {
        const std::uint64_t seed = derive_seed(study.seed, j);
        Rng rng(seed);
        StateVec x0;
        bool ok = false;
        for (int a = 0; a < study.max_attempts && !ok; ++a) {
            x0 = study.sampler.sample(rng);
            ok = separation(x0) >= study.ds;
            for (const BarrierVariant& v : variants)
                if (ok && v.barrier && v.barrier->value(x0) < 0.0)
                    ok = false;
        }
        if (!ok)
            throw std::runtime_error("no start with nonnegative barriers found for episode " + std::to_string(j));
        t.starts[j] = x0;
        seeds[j] = seed;

        EpisodeConfig cfg;
        cfg.x0 = x0;
        cfg.plan = study.plan;
        cfg.horizon = study.horizon;
        cfg.filter = study.filter;
        for (std::size_t v = 0; v < nv; ++v) {
            const EpisodeResult r = run_episode(cfg, plant, study.nominal, variants[v].barrier.get(), study.ds);
            EpisodeRecord& rec = t.episodes[j * nv + v];
            rec.episode = static_cast<int>(j);
            rec.seed = seed;
            rec.variant = variants[v].name;
            rec.min_distance = r.min_distance;
            rec.collided = r.collided;
            rec.override_count = r.override_count;
            rec.infeasible_count = r.infeasible_count;
        }
    });

    for (std::size_t v = 0; v < nv; ++v) {
        VariantRate rate;
        rate.name = variants[v].name;
        rate.episodes = study.episodes;
        for (std::size_t j = 0; j < n; ++j) {
            const EpisodeRecord& rec = t.episodes[j * nv + v];
            rate.collisions += rec.collided ? 1 : 0;
            rate.infeasible_episodes += rec.infeasible_count > 0 ? 1 : 0;
        }
        rate.rate_pct = 100.0 * rate.collisions / rate.episodes;
        const auto [lo, hi] = wilson_interval(rate.collisions, rate.episodes);
        rate.ci_low_pct = 100.0 * lo;
        rate.ci_high_pct = 100.0 * hi;
        t.rates.push_back(rate);
    }
    return t;
}

void write_rates_csv(const CollisionTable& t, std::ostream& out)
{
    out << "variant,episodes,collisions,rate_pct,ci_low_pct,ci_high_pct,infeasible_episodes\n";
    char buf[256];
    for (const VariantRate& r : t.rates) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.6f,%d\n", r.name.c_str(), r.episodes, r.collisions,
                      r.rate_pct, r.ci_low_pct, r.ci_high_pct, r.infeasible_episodes);
        out << buf;
    }
}

void write_episodes_csv(const CollisionTable& t, std::ostream& out)
{
    out << "episode,seed,variant,min_distance,collided,override_count,infeasible_count\n";
    char buf[256];
    for (const EpisodeRecord& r : t.episodes) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%s,%.17g,%d,%d,%d\n", r.episode,
                      static_cast<unsigned long long>(r.seed), r.variant.c_str(), r.min_distance, r.collided ? 1 : 0,
                      r.override_count, r.infeasible_count);
        out << buf;
    }
}

} // namespace mfbf
