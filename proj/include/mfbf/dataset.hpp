#pragma once

#include "mfbf/barrier.hpp"
#include "mfbf/encoding.hpp"
#include "mfbf/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace mfbf {

/// Uniform box over initial states.
struct SamplerSpec {
    StateVec lower;
    StateVec upper;
    std::uint64_t seed = 0;

    void validate() const;
    StateVec sample(Rng& rng) const;
    Normalizer normalizer() const;
};

struct RolloutSample {
    StateVec x0;
    double rho_min = 0.0;           ///< min rho over k = 0..T of the generating rollout
    std::optional<double> h_prior;  ///< h(x0) of the barrier being expanded, when recorded

    /// max(h_prior, rho_min) when a prior was recorded, rho_min otherwise.
    double target() const;
};

struct DeltaSample {
    StateVec x0;
    int u_idx = -1;            ///< index of the first applied action
    double rho_min_tail = 0.0; ///< min rho over k = 1..T
};

struct Dataset {
    int state_dim = 0;
    std::vector<RolloutSample> rows;
    std::vector<DeltaSample> deltas; ///< empty, or aligned with rows
};

/// Builds the per-episode control law from the episode's start state; lets
/// nominal controllers carry episode-local state (waypoint index).
using NominalFactory = std::function<Policy(const StateVec& x0)>;

struct GenerateOptions {
    int episodes = 1;
    int horizon = 500;
    /// When set, each step applies safety_filter(barrier, x, nominal(x)).
    BarrierPtr filter_barrier;
    FilterConfig filter;
    /// When set, every row records h_prior = prior->value(x0).
    BarrierPtr prior;
    /// Record one DeltaSample per episode.
    bool record_delta = false;
    /// Delta rows come from a second rollout whose first action is drawn
    /// uniformly from filter.actions; otherwise they reuse the episode's own
    /// first action.
    bool explore_first_action = true;
    int jobs = 1;
};

struct EpisodeTrace {
    double rho_min = 0.0;
    double rho_min_tail = 0.0;
    std::size_t first_action = 0; ///< action-set index of u_0, or actions.size() if not in the set
    int overrides = 0;
    int infeasible = 0;
};

/// One episode of `horizon` steps from x0. With `forced_first`, step 0
/// applies that action-set entry unfiltered.
EpisodeTrace run_rollout(const Plant& plant, const SafetyFn& rho, const Policy& nominal,
                         const BarrierFunction* barrier, const FilterConfig& filter, const StateVec& x0,
                         int horizon, std::optional<std::size_t> forced_first = std::nullopt);

/// N episodes from sampled starts; bit-identical for a fixed sampler seed
/// regardless of `jobs`.
Dataset generate_dataset(const Plant& plant, const SafetyFn& rho, const NominalFactory& nominal,
                         const SamplerSpec& sampler, const GenerateOptions& opts);

/// CSV: x0_0..x0_{n-1},u_idx,rho_min[,rho_min_tail][,h_prior]
void write_dataset_csv(const Dataset& data, std::ostream& out);
Dataset read_dataset_csv(std::istream& in);

} // namespace mfbf
