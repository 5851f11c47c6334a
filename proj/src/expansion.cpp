#include "mfbf/expansion.hpp"

#include <stdexcept>

namespace mfbf {

void ExpansionSetup::validate() const
{
    if (!plant || !rho || !nominal)
        throw ConfigError("expansion needs a plant, a safety function and a nominal controller");
    sampler.validate();
    filter.validate();
    train.validate();
    if (episodes < 1)
        throw ConfigError("expansion needs at least one episode per iteration");
    if (horizon < 1)
        throw ConfigError("episode horizon must be >= 1");
    if (encoder.state_dim() != plant->state_dim())
        throw ConfigError("encoder state dimension does not match the plant");
}

namespace {

ExpansionResult run_expansion(BarrierPtr filter_barrier, BarrierPtr prior, const ExpansionSetup& setup,
                              int iteration, int episodes)
{
    setup.validate();
    SamplerSpec sampler = setup.sampler;
    sampler.seed = derive_seed(setup.seed, static_cast<std::uint64_t>(iteration), 1);
    TrainConfig train = setup.train;
    train.seed = derive_seed(setup.seed, static_cast<std::uint64_t>(iteration), 2);

    GenerateOptions opts;
    opts.episodes = episodes;
    opts.horizon = setup.horizon;
    opts.filter_barrier = std::move(filter_barrier);
    opts.filter = setup.filter;
    opts.prior = std::move(prior);
    opts.record_delta = setup.record_delta;
    opts.jobs = setup.jobs;

    ExpansionResult out;
    out.data = generate_dataset(*setup.plant, setup.rho, setup.nominal, sampler, opts);

    std::vector<StateVec> xs;
    std::vector<double> ys;
    xs.reserve(out.data.rows.size());
    ys.reserve(out.data.rows.size());
    for (const auto& r : out.data.rows) {
        xs.push_back(r.x0);
        ys.push_back(r.target());
    }
    out.fit = fit_regressor(xs, ys, setup.encoder, train);

    if (setup.record_delta) {
        std::vector<StateVec> dx;
        std::vector<double> dy;
        std::vector<int> da;
        for (const auto& d : out.data.deltas) {
            dx.push_back(d.x0);
            dy.push_back(d.rho_min_tail);
            da.push_back(d.u_idx);
        }
        TrainConfig delta_train = train;
        delta_train.seed = derive_seed(setup.seed, static_cast<std::uint64_t>(iteration), 3);
        out.delta_fit = fit_regressor(dx, dy, setup.encoder.with_actions(static_cast<int>(setup.filter.actions.size())),
                                      delta_train, da);
    }
    return out;
}

} // namespace

ExpansionResult fit_initial_barrier(const ExpansionSetup& setup, int episodes)
{
    return run_expansion(nullptr, nullptr, setup, 0, episodes);
}

ExpansionResult expand_safe_set(BarrierPtr h, const ExpansionSetup& setup, int iteration)
{
    if (!h)
        throw std::invalid_argument("expand_safe_set needs a barrier");
    return run_expansion(std::move(h), nullptr, setup, iteration, setup.episodes);
}

ExpansionResult expand_safe_set_with_max(BarrierPtr h, const ExpansionSetup& setup, int iteration)
{
    if (!h)
        throw std::invalid_argument("expand_safe_set_with_max needs a barrier");
    BarrierPtr prior = h;
    return run_expansion(std::move(h), std::move(prior), setup, iteration, setup.episodes);
}

BarrierPtr make_learned_barrier(const ExpansionSetup& setup, std::shared_ptr<const MlpRegressor> model)
{
    return learned_barrier(std::move(model), setup.plant, setup.train.n_sigma, setup.train.mc_samples);
}

std::vector<IterationRecord> iterate_expansion(BarrierPtr h0, int count, const ExpansionSetup& setup,
                                               const IterationHook& hook, int first_iteration)
{
    if (count < 1)
        throw std::invalid_argument("need at least one expansion");
    if (first_iteration < 1)
        throw std::invalid_argument("iterations are numbered from 1");
    std::vector<IterationRecord> records;
    BarrierPtr current = std::move(h0);
    for (int i = first_iteration; i < first_iteration + count; ++i) {
        IterationRecord rec;
        rec.iteration = i;
        rec.result = expand_safe_set_with_max(current, setup, i);
        rec.barrier = make_learned_barrier(setup, rec.result.fit.model);
        rec.metrics["train_loss"] = rec.result.fit.history.back().train;
        rec.metrics["validation_mse"] = rec.result.fit.validation_mse;
        rec.metrics["over_prediction_pct"] = 100.0 * rec.result.fit.over_prediction_rate;
        if (hook)
            hook(rec);
        current = rec.barrier;
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace mfbf
