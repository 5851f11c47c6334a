#include "mfbf/sim.hpp"

#include <numbers>

namespace mfbf {

namespace {

EpisodeConfig base_config(const JointState& s)
{
    EpisodeConfig cfg;
    cfg.x0 = s.flat();
    const NominalSettings ns;
    cfg.filter.actions = make_action_set(ns.omega_choices, ns.speed, ns.zeta);
    return cfg;
}

} // namespace

EpisodeConfig head_on(double separation)
{
    if (!(separation > 0.0))
        throw ConfigError("head_on separation must be positive");
    const double h = 0.5 * separation;
    JointState s;
    s.vehicle1 = {-h, 0.0, 0.0, 0.0};
    s.vehicle2 = {h, 0.0, std::numbers::pi, 0.0};
    EpisodeConfig cfg = base_config(s);
    cfg.plan.vehicle1.push_back({h, 0.0, 0.0, 50.0});
    cfg.plan.vehicle2.push_back({-h, 0.0, 0.0, 50.0});
    return cfg;
}

EpisodeConfig pass_left(double gap, double separation)
{
    if (!(gap >= 0.0) || !(separation > 0.0))
        throw ConfigError("pass_left needs gap >= 0 and separation > 0");
    const double h = 0.5 * separation;
    JointState s;
    s.vehicle1 = {-h, 0.0, 0.0, 0.0};
    s.vehicle2 = {h, gap, std::numbers::pi, 0.0};
    EpisodeConfig cfg = base_config(s);
    // far enough ahead that neither lane waypoint is reached within an episode
    cfg.plan.vehicle1.push_back({h + 2 * separation, 0.0, 0.0, 50.0});
    cfg.plan.vehicle2.push_back({-h - 2 * separation, gap, 0.0, 50.0});
    return cfg;
}

EpisodeConfig fig2_pass() { return pass_left(100.0); }

EpisodeConfig scenario(const std::string& name, double separation, double gap)
{
    if (name == "head_on")
        return head_on(separation);
    if (name == "pass_left")
        return pass_left(gap, separation);
    if (name == "fig2")
        return fig2_pass();
    throw ConfigError("unknown scenario '" + name + "' (head_on, pass_left, fig2)");
}

} // namespace mfbf
