#pragma once

#include "mfbf/barrier.hpp"
#include "mfbf/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mfbf {

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double capture_radius = 50.0;
};

/// Steers toward the waypoint's bearing: picks the omega whose post-step
/// heading error is smallest. Exact ties go to the larger omega.
VehicleControl waypoint_controller(const VehicleState& s, const Waypoint& wp, std::span<const double> omega_choices,
                                   double v, double zeta, double dt);

struct NominalSettings {
    double speed = 15.0;
    double zeta = 0.0;
    std::vector<double> omega_choices{deg_to_rad(-12.0), 0.0, deg_to_rad(12.0)};
    double dt = 0.1;

    void validate() const;
};

/// Per-vehicle waypoint lists. A vehicle advances to its next waypoint once
/// inside the current one's capture radius and holds the last one.
struct WaypointPlan {
    std::vector<Waypoint> vehicle1;
    std::vector<Waypoint> vehicle2;

    void validate() const;
};

/// Fresh waypoint follower per episode, same plan for every start.
NominalFactory waypoint_nominal(WaypointPlan plan, NominalSettings settings);

/// Default experiment layout: vehicle 1 heads for (400, 0), vehicle 2 for (-400, 0).
WaypointPlan crossing_plan(double half_span = 400.0);

enum class BarrierKind { none, exact_straight, exact_turn, learned };

BarrierKind parse_barrier_kind(const std::string& name);
std::string to_string(BarrierKind k);

struct ExactBarrierSettings {
    int horizon = 500;
    double speed = 15.0;
    double omega = deg_to_rad(12.0);
    double eta = 1.0;
    double zeta = 0.0;
};

/// Rollout barrier for exact_straight or exact_turn.
BarrierPtr make_exact_barrier(BarrierKind kind, std::shared_ptr<const Plant> plant, const SeparationMargin& rho,
                              const ExactBarrierSettings& settings, const ControlBounds& bounds = {});

struct EpisodeConfig {
    StateVec x0;
    WaypointPlan plan;
    int horizon = 500;
    FilterConfig filter;
    bool record_trajectory = false;

    void validate() const;
};

struct EpisodeResult {
    double min_distance = 0.0;
    bool collided = false;
    int override_count = 0;
    int infeasible_count = 0;
    std::vector<StateVec> trajectory; ///< x_0..x_T when recorded
};

/// Steps the pair `horizon` times under the nominal controller, filtered by
/// `barrier` when given. collided means min_distance < ds.
EpisodeResult run_episode(const EpisodeConfig& cfg, const FixedWingPair& plant, const NominalSettings& nominal,
                          const BarrierFunction* barrier, double ds);

struct BarrierVariant {
    std::string name;
    BarrierPtr barrier; ///< null for the unfiltered nominal controller
};

struct CollisionStudy {
    int episodes = 1000;
    int horizon = 500;
    SamplerSpec sampler;
    WaypointPlan plan;
    NominalSettings nominal;
    FilterConfig filter;
    double ds = 25.0;
    std::uint64_t seed = 0;
    int max_attempts = 100000; ///< rejection-sampling cap per episode
    int jobs = 1;
};

struct EpisodeRecord {
    int episode = 0;
    std::uint64_t seed = 0;
    std::string variant;
    double min_distance = 0.0;
    bool collided = false;
    int override_count = 0;
    int infeasible_count = 0;
};

struct VariantRate {
    std::string name;
    int episodes = 0;
    int collisions = 0;
    double rate_pct = 0.0;
    double ci_low_pct = 0.0; ///< Wilson 95%
    double ci_high_pct = 0.0;
    int infeasible_episodes = 0;
};

struct CollisionTable {
    std::vector<VariantRate> rates;
    std::vector<EpisodeRecord> episodes;
    std::vector<StateVec> starts;
};

/// Wilson score interval (z = 1.96) as fractions.
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);

/// Every variant runs from the same starts. Episode j draws starts from
/// derive_seed(seed, j) until all barriers in the study are nonnegative.
CollisionTable evaluate_collision_rates(const CollisionStudy& study, const FixedWingPair& plant,
                                        const std::vector<BarrierVariant>& variants);

void write_rates_csv(const CollisionTable& t, std::ostream& out);
void write_episodes_csv(const CollisionTable& t, std::ostream& out);

// Grid sweeps of vehicle 2 around a fixed vehicle 1.

struct GridSpec {
    VehicleState vehicle1{};
    double x_min = -200.0;
    double x_max = 200.0;
    double y_min = -200.0;
    double y_max = 200.0;
    int nx = 81;
    int ny = 81;
    double heading2 = 0.0;
    double z2 = 0.0;

    void validate() const;
    double x_at(int i) const;
    double y_at(int j) const;
    StateVec state_at(int i, int j) const;
};

/// Canonical vehicle-2 headings: left, up, right, down.
double named_heading(const std::string& name);
const std::vector<std::string>& heading_names();

struct GridResult {
    GridSpec spec;
    std::vector<double> h; ///< row-major, index j * nx + i

    double at(int i, int j) const { return h[static_cast<std::size_t>(j) * spec.nx + i]; }
    int unsafe_count() const;
};

GridResult grid_unsafe_set(const BarrierFunction& h, const GridSpec& grid, int jobs = 1);

/// Header x,y,h,unsafe; one row per cell, x fastest.
void write_grid_csv(const GridResult& g, std::ostream& out);

// Named scenarios.

/// Vehicles at (+-separation/2, 0) pointing at each other, each aiming at the
/// other's start.
EpisodeConfig head_on(double separation);

/// Vehicle 1 at (-separation/2, 0) heading +x, vehicle 2 at (separation/2, gap)
/// heading -x; both keep their own lane.
EpisodeConfig pass_left(double gap, double separation = 600.0);

/// pass_left with a 100 m gap.
EpisodeConfig fig2_pass();

/// head_on, pass_left or fig2.
EpisodeConfig scenario(const std::string& name, double separation = 600.0, double gap = 100.0);

} // namespace mfbf
