#pragma once

#include "mfbf/dynamics.hpp"

#include <functional>
#include <limits>
#include <memory>

namespace mfbf {

using SafetyFn = std::function<double(const StateVec&)>;
/// State feedback; also the shape of an evasive maneuver.
using Policy = std::function<ControlVec(const StateVec&)>;

/// 3-D Euclidean distance between the two vehicles of a joint state.
double separation(const StateVec& x);

/// rho(x) = min(clip, d12(x) - ds). An infinite clip disables clipping.
struct SeparationMargin {
    double ds = 25.0;
    double clip = 50.0;

    void validate() const;
    double operator()(const StateVec& x) const;
};

struct RolloutResult {
    double value = 0.0;
    int argmin = 0; ///< first step index attaining the minimum
};

/// min over k = 0..horizon of rho(x_k), x_{k+1} = f(x_k, gamma(x_k)).
RolloutResult rollout_min(const Plant& plant, const Policy& gamma, const SafetyFn& rho,
                          const StateVec& x0, int horizon);

double rollout_barrier(const Plant& plant, const Policy& gamma, const SafetyFn& rho,
                       const StateVec& x0, int horizon);

Policy constant_policy(ControlVec u);

/// Both vehicles fly straight at fixed speed and climb rate.
Policy gamma_straight(double v1, double v2, double zeta1, double zeta2, const ControlBounds& bounds = {});

/// Both vehicles turn at the same rate; vehicle 1 flies at eta * v.
Policy gamma_turn(double eta, double v, double omega, const ControlBounds& bounds = {});

/// Uniform interface over exact and learned barriers. Implementations are
/// immutable and safe to query concurrently.
class BarrierFunction {
public:
    virtual ~BarrierFunction() = default;

    /// h(x)
    virtual double value(const StateVec& x) const = 0;

    /// h evaluated one step ahead under u. delta() is derived from it so the
    /// same next-state prediction feeds both the filter and admissibility.
    virtual double next_value(const StateVec& x, const ControlVec& u) const = 0;

    double delta(const StateVec& x, const ControlVec& u) const { return next_value(x, u) - value(x); }
};

using BarrierPtr = std::shared_ptr<const BarrierFunction>;

/// Exact barrier: worst-case rho along an evasive-maneuver rollout.
class RolloutBarrier final : public BarrierFunction {
public:
    RolloutBarrier(std::shared_ptr<const Plant> plant, Policy gamma, SafetyFn rho, int horizon);

    double value(const StateVec& x) const override;
    double next_value(const StateVec& x, const ControlVec& u) const override;

    RolloutResult rollout(const StateVec& x) const;
    const Plant& plant() const { return *plant_; }
    int horizon() const { return horizon_; }

private:
    std::shared_ptr<const Plant> plant_;
    Policy gamma_;
    SafetyFn rho_;
    int horizon_;
};

/// Pointwise maximum of two barriers over the same state space.
class MaxBarrier final : public BarrierFunction {
public:
    MaxBarrier(BarrierPtr first, BarrierPtr second);

    double value(const StateVec& x) const override;
    double next_value(const StateVec& x, const ControlVec& u) const override;

private:
    BarrierPtr first_;
    BarrierPtr second_;
};

BarrierPtr max_compose(BarrierPtr h1, BarrierPtr h2);

/// delta + lambda * value, from a precomputed next value.
inline double barrier_slack(double next_value, double value, double lambda)
{
    return (next_value - value) + lambda * value;
}

/// u is in K(x): delta(x, u) + lambda * h(x) >= 0.
bool admissible(const BarrierFunction& h, const StateVec& x, const ControlVec& u, double lambda);

enum class InfeasiblePolicy {
    max_slack,   ///< apply the action with the largest barrier slack
    pass_through ///< apply the nominal control unchanged
};

struct FilterConfig {
    double lambda = 1.0;
    ActionSet actions;
    InfeasiblePolicy infeasible = InfeasiblePolicy::max_slack;

    void validate() const;
};

struct FilterResult {
    ControlVec u;
    std::size_t index = 0; ///< position in the action set (size() for pass-through)
    bool overridden = false;
    bool feasible = true;
    double slack = 0.0;
};

/// Admissible action closest to u_nom in squared Euclidean distance. Ties go
/// to the smallest action index. Without any admissible action the result is
/// flagged infeasible and the configured fallback is applied.
FilterResult safety_filter(const BarrierFunction& h, const StateVec& x, const ControlVec& u_nom,
                           const FilterConfig& cfg);

/// The filter wrapped as a state-feedback policy (usable as an evasive maneuver).
Policy filtered_policy(BarrierPtr h, Policy nominal, FilterConfig cfg);

} // namespace mfbf
