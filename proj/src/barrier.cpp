#include "mfbf/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfbf {

double separation(const StateVec& x)
{
    const double dx = x[0] - x[4];
    const double dy = x[1] - x[5];
    const double dz = x[3] - x[7];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void SeparationMargin::validate() const
{
    if (!(ds > 0.0))
        throw ConfigError("safety distance must be positive");
    if (!(clip > 0.0))
        throw ConfigError("clip must be positive");
}

double SeparationMargin::operator()(const StateVec& x) const
{
    return std::min(clip, separation(x) - ds);
}

RolloutResult rollout_min(const Plant& plant, const Policy& gamma, const SafetyFn& rho,
                          const StateVec& x0, int horizon)
{
    if (horizon < 1)
        throw std::invalid_argument("rollout horizon must be >= 1");
    RolloutResult result{rho(x0), 0};
    StateVec x = x0;
    for (int k = 1; k <= horizon; ++k) {
        x = plant.step(x, gamma(x));
        const double r = rho(x);
        if (r < result.value) {
            result.value = r;
            result.argmin = k;
        }
    }
    return result;
}

double rollout_barrier(const Plant& plant, const Policy& gamma, const SafetyFn& rho,
                       const StateVec& x0, int horizon)
{
    return rollout_min(plant, gamma, rho, x0, horizon).value;
}

Policy constant_policy(ControlVec u)
{
    return [u = std::move(u)](const StateVec&) { return u; };
}

Policy gamma_straight(double v1, double v2, double zeta1, double zeta2, const ControlBounds& bounds)
{
    ControlInput u{{v1, 0.0, zeta1}, {v2, 0.0, zeta2}};
    bounds.check(u.vehicle1);
    bounds.check(u.vehicle2);
    return constant_policy(u.flat());
}

Policy gamma_turn(double eta, double v, double omega, const ControlBounds& bounds)
{
    if (!(eta > 0.0 && eta <= 1.0))
        throw BoundsError("gamma_turn needs 0 < eta <= 1");
    ControlInput u{{eta * v, omega, 0.0}, {v, omega, 0.0}};
    bounds.check(u.vehicle1);
    bounds.check(u.vehicle2);
    return constant_policy(u.flat());
}

RolloutBarrier::RolloutBarrier(std::shared_ptr<const Plant> plant, Policy gamma, SafetyFn rho, int horizon)
    : plant_(std::move(plant)), gamma_(std::move(gamma)), rho_(std::move(rho)), horizon_(horizon)
{
    if (!plant_ || !gamma_ || !rho_)
        throw std::invalid_argument("rollout barrier needs a plant, a maneuver and a safety function");
    if (horizon_ < 1)
        throw std::invalid_argument("rollout horizon must be >= 1");
}

RolloutResult RolloutBarrier::rollout(const StateVec& x) const
{
    return rollout_min(*plant_, gamma_, rho_, x, horizon_);
}

double RolloutBarrier::value(const StateVec& x) const
{
    return rollout(x).value;
}

double RolloutBarrier::next_value(const StateVec& x, const ControlVec& u) const
{
    return value(plant_->step(x, u));
}

MaxBarrier::MaxBarrier(BarrierPtr first, BarrierPtr second)
    : first_(std::move(first)), second_(std::move(second))
{
    if (!first_ || !second_)
        throw std::invalid_argument("max composition needs two barriers");
}

double MaxBarrier::value(const StateVec& x) const
{
    return std::max(first_->value(x), second_->value(x));
}

double MaxBarrier::next_value(const StateVec& x, const ControlVec& u) const
{
    return std::max(first_->next_value(x, u), second_->next_value(x, u));
}

BarrierPtr max_compose(BarrierPtr h1, BarrierPtr h2)
{
    return std::make_shared<MaxBarrier>(std::move(h1), std::move(h2));
}

bool admissible(const BarrierFunction& h, const StateVec& x, const ControlVec& u, double lambda)
{
    return barrier_slack(h.next_value(x, u), h.value(x), lambda) >= 0.0;
}

void FilterConfig::validate() const
{
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1]");
    if (actions.empty())
        throw ConfigError("filter action set is empty");
}

FilterResult safety_filter(const BarrierFunction& h, const StateVec& x, const ControlVec& u_nom,
                           const FilterConfig& cfg)
{
    if (cfg.actions.empty())
        throw std::invalid_argument("safety filter needs a non-empty action set");

    const std::size_t n = cfg.actions.size();
    std::vector<double> cost(n);
    for (std::size_t i = 0; i < n; ++i)
        cost[i] = (cfg.actions[i] - u_nom).squaredNorm();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });

    // Walking candidates in cost order means the first admissible one is the
    // constrained argmin; the remaining next-state evaluations are skipped.
    const double hx = h.value(x);
    std::vector<double> slack(n, -std::numeric_limits<double>::infinity());
    for (std::size_t i : order) {
        slack[i] = barrier_slack(h.next_value(x, cfg.actions[i]), hx, cfg.lambda);
        if (slack[i] >= 0.0) {
            const ControlVec& u = cfg.actions[i];
            return {u, i, !(u.size() == u_nom.size() && u == u_nom), true, slack[i]};
        }
    }

    if (cfg.infeasible == InfeasiblePolicy::pass_through)
        return {u_nom, n, false, false, -std::numeric_limits<double>::infinity()};

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (slack[i] > slack[best])
            best = i;
    }
    const ControlVec& u = cfg.actions[best];
    return {u, best, !(u.size() == u_nom.size() && u == u_nom), false, slack[best]};
}

Policy filtered_policy(BarrierPtr h, Policy nominal, FilterConfig cfg)
{
    cfg.validate();
    return [h = std::move(h), nominal = std::move(nominal), cfg = std::move(cfg)](const StateVec& x) {
        return safety_filter(*h, x, nominal(x), cfg).u;
    };
}

} // namespace mfbf
