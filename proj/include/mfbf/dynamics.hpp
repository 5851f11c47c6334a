#pragma once

#include "mfbf/types.hpp"

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace mfbf {

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct VehicleState {
    double px = 0.0;
    double py = 0.0;
    double theta = 0.0;
    double pz = 0.0;
};

/// Two vehicles; flat order is (x1, y1, theta1, z1, x2, y2, theta2, z2).
struct JointState {
    VehicleState vehicle1;
    VehicleState vehicle2;

    StateVec flat() const;
    static JointState from_flat(const StateVec& x);
};

struct VehicleControl {
    double v = 15.0;
    double omega = 0.0;
    double zeta = 0.0;
};

/// Flat order is (v1, omega1, zeta1, v2, omega2, zeta2).
struct ControlInput {
    VehicleControl vehicle1;
    VehicleControl vehicle2;

    ControlVec flat() const;
    static ControlInput from_flat(const ControlVec& u);
};

/// Box constraints on a single vehicle's control. All limits are inclusive.
struct ControlBounds {
    double v_min = 10.0;
    double v_max = 20.0;
    double omega_max = deg_to_rad(12.0);
    double zeta_max = 5.0;

    void validate() const;
    bool contains(const VehicleControl& c) const;
    /// Throws BoundsError naming the violated limit.
    void check(const VehicleControl& c) const;
};

struct PlantParams {
    double dt = 0.1;
    ControlBounds bounds;

    void validate() const;
};

/// Unicycle-with-altitude update; position uses the pre-step heading.
VehicleState step_vehicle(const VehicleState& s, const VehicleControl& c, double dt);

/// Joint fixed-wing step. Out-of-bounds controls are rejected, never clamped.
JointState step_fw_uav(const JointState& x, const ControlInput& u, const PlantParams& p);

struct DoubleIntegratorState {
    double position = 0.0;
    double velocity = 0.0;
};

DoubleIntegratorState step_double_integrator(const DoubleIntegratorState& x, double u, double dt);

/// Black-box discrete-time plant over flat vectors.
class Plant {
public:
    virtual ~Plant() = default;
    virtual int state_dim() const = 0;
    virtual int control_dim() const = 0;
    virtual StateVec step(const StateVec& x, const ControlVec& u) const = 0;
};

class FixedWingPair final : public Plant {
public:
    explicit FixedWingPair(PlantParams params = {});

    int state_dim() const override { return 8; }
    int control_dim() const override { return 6; }
    StateVec step(const StateVec& x, const ControlVec& u) const override;

    const PlantParams& params() const { return params_; }

private:
    PlantParams params_;
};

class DoubleIntegrator final : public Plant {
public:
    explicit DoubleIntegrator(double dt = 0.1);

    int state_dim() const override { return 2; }
    int control_dim() const override { return 1; }
    StateVec step(const StateVec& x, const ControlVec& u) const override;

    double dt() const { return dt_; }

private:
    double dt_;
};

/// Finite set of joint actions in a fixed enumeration order.
class ActionSet {
public:
    ActionSet() = default;
    explicit ActionSet(std::vector<ControlVec> actions);

    std::size_t size() const { return actions_.size(); }
    bool empty() const { return actions_.empty(); }
    const ControlVec& operator[](std::size_t i) const { return actions_[i]; }
    auto begin() const { return actions_.begin(); }
    auto end() const { return actions_.end(); }

    /// Index of an exactly matching action, if any.
    std::optional<std::size_t> index_of(const ControlVec& u) const;

private:
    std::vector<ControlVec> actions_;
};

/// Cartesian product of per-vehicle omega choices with fixed speed and climb
/// rate. Vehicle 1's choice varies slowest.
ActionSet make_action_set(std::span<const double> omega_choices, double v_fixed, double zeta_fixed,
                          const ControlBounds& bounds = {});

/// One-dimensional action set (double integrator).
ActionSet make_scalar_action_set(std::span<const double> values);

} // namespace mfbf
