#include "mfbf/dynamics.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace mfbf {

double wrap_angle(double angle)
{
    double r = std::remainder(angle, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi)
        r += 2.0 * std::numbers::pi;
    return r;
}

StateVec JointState::flat() const
{
    StateVec x(8);
    x << vehicle1.px, vehicle1.py, vehicle1.theta, vehicle1.pz,
         vehicle2.px, vehicle2.py, vehicle2.theta, vehicle2.pz;
    return x;
}

JointState JointState::from_flat(const StateVec& x)
{
    if (x.size() != 8)
        throw std::invalid_argument("joint state needs 8 components, got " + std::to_string(x.size()));
    return {{x[0], x[1], x[2], x[3]}, {x[4], x[5], x[6], x[7]}};
}

ControlVec ControlInput::flat() const
{
    ControlVec u(6);
    u << vehicle1.v, vehicle1.omega, vehicle1.zeta, vehicle2.v, vehicle2.omega, vehicle2.zeta;
    return u;
}

ControlInput ControlInput::from_flat(const ControlVec& u)
{
    if (u.size() != 6)
        throw std::invalid_argument("joint control needs 6 components, got " + std::to_string(u.size()));
    return {{u[0], u[1], u[2]}, {u[3], u[4], u[5]}};
}

void ControlBounds::validate() const
{
    if (!(v_min > 0.0))
        throw ConfigError("v_min must be positive");
    if (!(v_max >= v_min))
        throw ConfigError("v_max must be >= v_min");
    if (!(omega_max >= 0.0) || !(zeta_max >= 0.0))
        throw ConfigError("omega_max and zeta_max must be non-negative");
}

bool ControlBounds::contains(const VehicleControl& c) const
{
    return c.v >= v_min && c.v <= v_max && std::abs(c.omega) <= omega_max && std::abs(c.zeta) <= zeta_max;
}

void ControlBounds::check(const VehicleControl& c) const
{
    if (contains(c))
        return;
    std::ostringstream msg;
    msg << "control out of bounds: v=" << c.v << " omega=" << c.omega << " zeta=" << c.zeta
        << " (v in [" << v_min << ", " << v_max << "], |omega| <= " << omega_max
        << ", |zeta| <= " << zeta_max << ")";
    throw BoundsError(msg.str());
}

void PlantParams::validate() const
{
    if (!(dt > 0.0))
        throw ConfigError("dt must be positive");
    bounds.validate();
}

VehicleState step_vehicle(const VehicleState& s, const VehicleControl& c, double dt)
{
    return {s.px + c.v * std::cos(s.theta) * dt,
            s.py + c.v * std::sin(s.theta) * dt,
            wrap_angle(s.theta + c.omega * dt),
            s.pz + c.zeta * dt};
}

JointState step_fw_uav(const JointState& x, const ControlInput& u, const PlantParams& p)
{
    p.bounds.check(u.vehicle1);
    p.bounds.check(u.vehicle2);
    return {step_vehicle(x.vehicle1, u.vehicle1, p.dt), step_vehicle(x.vehicle2, u.vehicle2, p.dt)};
}

DoubleIntegratorState step_double_integrator(const DoubleIntegratorState& x, double u, double dt)
{
    return {x.position + dt * x.velocity, x.velocity + dt * u};
}

FixedWingPair::FixedWingPair(PlantParams params) : params_(params)
{
    params_.validate();
}

StateVec FixedWingPair::step(const StateVec& x, const ControlVec& u) const
{
    return step_fw_uav(JointState::from_flat(x), ControlInput::from_flat(u), params_).flat();
}

DoubleIntegrator::DoubleIntegrator(double dt) : dt_(dt)
{
    if (!(dt > 0.0))
        throw ConfigError("dt must be positive");
}

StateVec DoubleIntegrator::step(const StateVec& x, const ControlVec& u) const
{
    if (x.size() != 2 || u.size() != 1)
        throw std::invalid_argument("double integrator expects a 2-state and scalar control");
    auto next = step_double_integrator({x[0], x[1]}, u[0], dt_);
    StateVec out(2);
    out << next.position, next.velocity;
    return out;
}

ActionSet::ActionSet(std::vector<ControlVec> actions) : actions_(std::move(actions)) {}

std::optional<std::size_t> ActionSet::index_of(const ControlVec& u) const
{
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (actions_[i].size() == u.size() && actions_[i] == u)
            return i;
    }
    return std::nullopt;
}

ActionSet make_action_set(std::span<const double> omega_choices, double v_fixed, double zeta_fixed,
                          const ControlBounds& bounds)
{
    if (omega_choices.empty())
        throw std::invalid_argument("omega choice list is empty");
    for (double w : omega_choices)
        bounds.check({v_fixed, w, zeta_fixed});

    std::vector<ControlVec> actions;
    actions.reserve(omega_choices.size() * omega_choices.size());
    for (double w1 : omega_choices) {
        for (double w2 : omega_choices) {
            ControlInput u{{v_fixed, w1, zeta_fixed}, {v_fixed, w2, zeta_fixed}};
            actions.push_back(u.flat());
        }
    }
    return ActionSet(std::move(actions));
}

ActionSet make_scalar_action_set(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("action list is empty");
    std::vector<ControlVec> actions;
    for (double v : values) {
        ControlVec u(1);
        u << v;
        actions.push_back(u);
    }
    return ActionSet(std::move(actions));
}

} // namespace mfbf
