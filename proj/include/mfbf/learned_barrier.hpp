#pragma once

#include "mfbf/barrier.hpp"
#include "mfbf/regressor.hpp"

#include <memory>

namespace mfbf {

/// Barrier backed by a regressor: h(x) = mean(x) - n_sigma * sigma(x).
///
/// Hybrid mode predicts the next value by stepping the plant and querying the
/// same regressor. Model-free mode instead asks an action-conditioned
/// surrogate g(x, u) for the post-step minimum, so delta = g(x, u) - h(x) and
/// admissibility reduces to g(x, u) >= (1 - lambda) h(x).
class LearnedBarrier final : public BarrierFunction {
public:
    LearnedBarrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const Plant> plant, double n_sigma,
                   int mc_samples);
    LearnedBarrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const MlpRegressor> next_model,
                   ActionSet actions, double n_sigma, int mc_samples);

    double value(const StateVec& x) const override;
    double next_value(const StateVec& x, const ControlVec& u) const override;

    Prediction predict(const StateVec& x) const;
    bool model_free() const { return next_model_ != nullptr; }
    double n_sigma() const { return n_sigma_; }
    int mc_samples() const { return mc_samples_; }
    const MlpRegressor& model() const { return *model_; }

private:
    std::shared_ptr<const MlpRegressor> model_;
    std::shared_ptr<const Plant> plant_;
    std::shared_ptr<const MlpRegressor> next_model_;
    ActionSet actions_;
    const DropoutEnsemble* ensemble_ = nullptr;
    const DropoutEnsemble* next_ensemble_ = nullptr;
    double n_sigma_;
    int mc_samples_;
};

BarrierPtr learned_barrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const Plant> plant,
                           double n_sigma, int mc_samples);
BarrierPtr learned_barrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const MlpRegressor> next_model,
                           ActionSet actions, double n_sigma, int mc_samples);

} // namespace mfbf
