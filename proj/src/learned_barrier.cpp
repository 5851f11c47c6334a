#include "mfbf/learned_barrier.hpp"

#include <stdexcept>
#include <string>

namespace mfbf {

namespace {

void check_common(const std::shared_ptr<const MlpRegressor>& model, double n_sigma, int mc_samples)
{
    if (!model)
        throw std::invalid_argument("learned barrier needs a model");
    if (model->encoder().action_count() != 0)
        throw std::invalid_argument("barrier value model must not be action-conditioned");
    if (!(n_sigma >= 0.0))
        throw std::invalid_argument("n_sigma must be >= 0");
    if (mc_samples < 1)
        throw std::invalid_argument("mc_samples must be >= 1");
}

} // namespace

LearnedBarrier::LearnedBarrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const Plant> plant,
                               double n_sigma, int mc_samples)
    : model_(std::move(model)), plant_(std::move(plant)), n_sigma_(n_sigma), mc_samples_(mc_samples)
{
    check_common(model_, n_sigma_, mc_samples_);
    if (!plant_)
        throw std::invalid_argument("hybrid learned barrier needs a plant");
    if (plant_->state_dim() != model_->encoder().state_dim())
        throw std::invalid_argument("model expects " + std::to_string(model_->encoder().state_dim()) +
                                    "-dimensional states, plant has " + std::to_string(plant_->state_dim()));
    ensemble_ = &model_->ensemble(mc_samples_);
}

LearnedBarrier::LearnedBarrier(std::shared_ptr<const MlpRegressor> model,
                               std::shared_ptr<const MlpRegressor> next_model, ActionSet actions, double n_sigma,
                               int mc_samples)
    : model_(std::move(model)), next_model_(std::move(next_model)), actions_(std::move(actions)), n_sigma_(n_sigma),
      mc_samples_(mc_samples)
{
    check_common(model_, n_sigma_, mc_samples_);
    if (!next_model_)
        throw std::invalid_argument("model-free barrier needs a next-value model");
    if (next_model_->encoder().state_dim() != model_->encoder().state_dim())
        throw std::invalid_argument("value and next-value models disagree on state dimension");
    if (next_model_->encoder().action_count() != static_cast<int>(actions_.size()) || actions_.empty())
        throw std::invalid_argument("next-value model is not conditioned on this action set");
    ensemble_ = &model_->ensemble(mc_samples_);
    next_ensemble_ = &next_model_->ensemble(mc_samples_);
}

namespace {

Prediction run(const MlpRegressor& model, const DropoutEnsemble& ens, const StateVec& x, int action)
{
    float features[64];
    const int n = model.encoder().feature_dim();
    Eigen::VectorXf heap;
    float* buf = features;
    if (n > 64) {
        heap.resize(n);
        buf = heap.data();
    }
    model.encoder().encode(x, action, buf);
    const auto r = ens.predict(buf);
    return {r.mean * model.target_scale(), r.sigma * model.target_scale()};
}

} // namespace

Prediction LearnedBarrier::predict(const StateVec& x) const
{
    return run(*model_, *ensemble_, x, -1);
}

double LearnedBarrier::value(const StateVec& x) const
{
    return predict(x).conservative(n_sigma_);
}

double LearnedBarrier::next_value(const StateVec& x, const ControlVec& u) const
{
    if (!next_model_)
        return value(plant_->step(x, u));
    const auto idx = actions_.index_of(u);
    if (!idx)
        throw std::invalid_argument("model-free barrier can only score actions from its action set");
    return run(*next_model_, *next_ensemble_, x, static_cast<int>(*idx)).conservative(n_sigma_);
}

BarrierPtr learned_barrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const Plant> plant,
                           double n_sigma, int mc_samples)
{
    return std::make_shared<LearnedBarrier>(std::move(model), std::move(plant), n_sigma, mc_samples);
}

BarrierPtr learned_barrier(std::shared_ptr<const MlpRegressor> model, std::shared_ptr<const MlpRegressor> next_model,
                           ActionSet actions, double n_sigma, int mc_samples)
{
    return std::make_shared<LearnedBarrier>(std::move(model), std::move(next_model), std::move(actions), n_sigma,
                                            mc_samples);
}

} // namespace mfbf
