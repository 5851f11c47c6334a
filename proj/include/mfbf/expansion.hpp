#pragma once

#include "mfbf/dataset.hpp"
#include "mfbf/learned_barrier.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mfbf {

/// Everything the safe-set expansion loop needs besides the barrier itself.
/// Sampler and training seeds are re-derived from `seed` per iteration, so
/// iteration i is reproducible on its own.
struct ExpansionSetup {
    std::shared_ptr<const Plant> plant;
    SafetyFn rho;
    NominalFactory nominal;
    SamplerSpec sampler;
    FilterConfig filter;
    FeatureEncoder encoder;
    TrainConfig train;
    int episodes = 2000;
    int horizon = 500;
    bool record_delta = false;
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const;
};

struct ExpansionResult {
    Dataset data;
    FitResult fit;
    std::optional<FitResult> delta_fit; ///< action-conditioned post-step model, when recorded
};

/// Initial model-free barrier: nominal-only episodes, fit to rho_min.
ExpansionResult fit_initial_barrier(const ExpansionSetup& setup, int episodes);

/// Episodes under safety_filter(h, x, nominal(x)); fit to rho_min.
ExpansionResult expand_safe_set(BarrierPtr h, const ExpansionSetup& setup, int iteration = 1);

/// As expand_safe_set but each target is max(h(x0), rho_min).
ExpansionResult expand_safe_set_with_max(BarrierPtr h, const ExpansionSetup& setup, int iteration = 1);

/// Hybrid learned barrier for a fitted model using the setup's plant and
/// the training config's n_sigma / mc_samples.
BarrierPtr make_learned_barrier(const ExpansionSetup& setup, std::shared_ptr<const MlpRegressor> model);

struct IterationRecord {
    int iteration = 0;
    ExpansionResult result;
    BarrierPtr barrier;
    std::map<std::string, double> metrics;
};

/// Called once per finished iteration; may add entries to `metrics`.
using IterationHook = std::function<void(IterationRecord&)>;

/// h^i = ExpandSafeSetWithMax(h^{i-1}) for i = first_iteration .. first_iteration + count - 1.
std::vector<IterationRecord> iterate_expansion(BarrierPtr h0, int count, const ExpansionSetup& setup,
                                               const IterationHook& hook = {}, int first_iteration = 1);

} // namespace mfbf
