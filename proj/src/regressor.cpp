#include "mfbf/regressor.hpp"

#include "mfbf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mfbf {

Optimizer parse_optimizer(const std::string& name)
{
    if (name == "sgd")
        return Optimizer::sgd;
    if (name == "adam")
        return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + name + "'");
}

std::string to_string(Optimizer o)
{
    return o == Optimizer::sgd ? "sgd" : "adam";
}

void TrainConfig::validate() const
{
    if (hidden.empty())
        throw ConfigError("need at least one hidden layer");
    for (int h : hidden) {
        if (h < 1)
            throw ConfigError("hidden layer sizes must be positive");
    }
    if (!(learning_rate > 0.0))
        throw ConfigError("learning rate must be positive");
    if (epochs < 1)
        throw ConfigError("epochs must be >= 1");
    if (batch_size < 1)
        throw ConfigError("batch size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ConfigError("dropout must lie in [0, 1)");
    if (mc_samples < 2)
        throw ConfigError("mc_samples must be >= 2");
    if (!(n_sigma >= 0.0))
        throw ConfigError("n_sigma must be >= 0");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation fraction must lie in [0, 1)");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("momentum must lie in [0, 1)");
    if (!(target_clip > 0.0))
        throw ConfigError("target clip must be positive");
}

MlpRegressor::MlpRegressor(FeatureEncoder encoder, Mlp network, double target_scale)
    : encoder_(std::move(encoder)), network_(std::move(network)), target_scale_(target_scale),
      cache_(std::make_shared<Cache>())
{
    if (encoder_.feature_dim() != network_.input_dim())
        throw std::invalid_argument("encoder produces " + std::to_string(encoder_.feature_dim()) +
                                    " features but network expects " + std::to_string(network_.input_dim()));
    if (!(target_scale_ > 0.0) || !std::isfinite(target_scale_))
        throw std::invalid_argument("target scale must be positive and finite");
}

const DropoutEnsemble& MlpRegressor::ensemble(int mc_samples) const
{
    if (mc_samples < 1)
        throw std::invalid_argument("need at least one Monte-Carlo sample");
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->by_samples[mc_samples];
    if (!slot)
        slot = std::make_shared<const DropoutEnsemble>(network_, mc_samples);
    return *slot;
}

double MlpRegressor::predict(const StateVec& x, int action) const
{
    const auto& ens = [&]() -> const DropoutEnsemble& {
        std::lock_guard lock(cache_->mutex);
        auto& slot = cache_->by_samples[0];
        if (!slot)
            slot = std::make_shared<const DropoutEnsemble>(DropoutEnsemble::identity(network_));
        return *slot;
    }();
    const Eigen::VectorXf f = encoder_.encode(x, action);
    return ens.predict(f.data()).mean * target_scale_;
}

Prediction MlpRegressor::predict_with_uncertainty(const StateVec& x, int mc_samples, int action) const
{
    const Eigen::VectorXf f = encoder_.encode(x, action);
    const auto r = ensemble(mc_samples).predict(f.data());
    return {r.mean * target_scale_, r.sigma * target_scale_};
}

Prediction predict_with_uncertainty(const MlpRegressor& model, const StateVec& x, int mc_samples)
{
    return model.predict_with_uncertainty(x, mc_samples);
}

namespace {

// Minibatch trainer over a feature matrix (features x rows) and scaled targets.
class Trainer {
public:
    Trainer(Mlp& net, const TrainConfig& cfg) : net_(net), cfg_(cfg), rng_(derive_seed(cfg.seed, 0x7a1eULL))
    {
        const std::size_t layers = net_.weights().size();
        m_w_.resize(layers);
        v_w_.resize(layers);
        m_b_.resize(layers);
        v_b_.resize(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            m_w_[l] = Eigen::MatrixXf::Zero(net_.weights()[l].rows(), net_.weights()[l].cols());
            v_w_[l] = m_w_[l];
            m_b_[l] = Eigen::VectorXf::Zero(net_.biases()[l].size());
            v_b_[l] = m_b_[l];
        }
        grad_w_ = m_w_;
        grad_b_ = m_b_;
    }

    // One optimisation step; returns the batch MSE in scaled units.
    double step(const Eigen::MatrixXf& X, const Eigen::RowVectorXf& t)
    {
        const auto& W = net_.weights();
        const auto& B = net_.biases();
        const std::size_t layers = W.size();
        const Eigen::Index n = X.cols();
        const float keep_scale = cfg_.dropout > 0.0 ? 1.0f / (1.0f - static_cast<float>(cfg_.dropout)) : 1.0f;

        pre_.resize(layers);
        act_.resize(layers);
        mask_.resize(layers);
        const Eigen::MatrixXf* input = &X;
        for (std::size_t l = 0; l < layers; ++l) {
            pre_[l].noalias() = W[l] * (*input);
            pre_[l].colwise() += B[l];
            if (l + 1 == layers)
                break;
            act_[l] = pre_[l].cwiseMax(0.0f);
            if (cfg_.dropout > 0.0) {
                fill_mask(mask_[l], act_[l].rows(), n, keep_scale);
                act_[l].array() *= mask_[l].array();
            }
            input = &act_[l];
        }

        const Eigen::RowVectorXf err = pre_.back().row(0) - t;
        const double loss = static_cast<double>(err.squaredNorm()) / static_cast<double>(n);

        Eigen::MatrixXf delta = (2.0f / static_cast<float>(n)) * err;
        for (std::size_t li = layers; li-- > 0;) {
            const Eigen::MatrixXf& in = li == 0 ? X : act_[li - 1];
            grad_w_[li].noalias() = delta * in.transpose();
            grad_b_[li] = delta.rowwise().sum();
            if (li == 0)
                break;
            Eigen::MatrixXf back = W[li].transpose() * delta;
            if (cfg_.dropout > 0.0)
                back.array() *= mask_[li - 1].array();
            back.array() *= (pre_[li - 1].array() > 0.0f).cast<float>();
            delta = std::move(back);
        }
        apply_update();
        return loss;
    }

private:
    void fill_mask(Eigen::MatrixXf& mask, Eigen::Index rows, Eigen::Index cols, float keep_scale)
    {
        mask.resize(rows, cols);
        const auto threshold = static_cast<std::uint32_t>(cfg_.dropout * 65536.0);
        float* p = mask.data();
        const Eigen::Index total = rows * cols;
        Eigen::Index i = 0;
        while (i < total) {
            std::uint64_t bits = rng_.next();
            for (int k = 0; k < 4 && i < total; ++k, ++i) {
                p[i] = (bits & 0xffffu) >= threshold ? keep_scale : 0.0f;
                bits >>= 16;
            }
        }
    }

    void apply_update()
    {
        auto& W = net_.weights();
        auto& B = net_.biases();
        const float lr = static_cast<float>(cfg_.learning_rate);
        ++t_;
        if (cfg_.optimizer == Optimizer::adam) {
            constexpr float b1 = 0.9f;
            constexpr float b2 = 0.999f;
            constexpr float eps = 1e-8f;
            const float c1 = 1.0f - static_cast<float>(std::pow(b1, t_));
            const float c2 = 1.0f - static_cast<float>(std::pow(b2, t_));
            const float step = lr * std::sqrt(c2) / c1;
            for (std::size_t l = 0; l < W.size(); ++l) {
                m_w_[l] = b1 * m_w_[l] + (1.0f - b1) * grad_w_[l];
                v_w_[l] = b2 * v_w_[l] + (1.0f - b2) * grad_w_[l].cwiseAbs2();
                W[l].array() -= step * m_w_[l].array() / (v_w_[l].array().sqrt() + eps);
                m_b_[l] = b1 * m_b_[l] + (1.0f - b1) * grad_b_[l];
                v_b_[l] = b2 * v_b_[l] + (1.0f - b2) * grad_b_[l].cwiseAbs2();
                B[l].array() -= step * m_b_[l].array() / (v_b_[l].array().sqrt() + eps);
            }
        } else {
            const float mu = static_cast<float>(cfg_.momentum);
            for (std::size_t l = 0; l < W.size(); ++l) {
                m_w_[l] = mu * m_w_[l] + grad_w_[l];
                W[l] -= lr * m_w_[l];
                m_b_[l] = mu * m_b_[l] + grad_b_[l];
                B[l] -= lr * m_b_[l];
            }
        }
    }

    Mlp& net_;
    const TrainConfig& cfg_;
    Rng rng_;
    long t_ = 0;
    std::vector<Eigen::MatrixXf> m_w_, v_w_, grad_w_;
    std::vector<Eigen::VectorXf> m_b_, v_b_, grad_b_;
    std::vector<Eigen::MatrixXf> pre_, act_, mask_;
};

double dropout_free_mse(const Mlp& net, const Eigen::MatrixXf& X, const Eigen::RowVectorXf& t)
{
    if (X.cols() == 0)
        return 0.0;
    const auto& W = net.weights();
    const auto& B = net.biases();
    Eigen::MatrixXf a = X;
    for (std::size_t l = 0; l < W.size(); ++l) {
        Eigen::MatrixXf z = W[l] * a;
        z.colwise() += B[l];
        a = l + 1 == W.size() ? z : z.cwiseMax(0.0f);
    }
    return static_cast<double>((a.row(0) - t).squaredNorm()) / static_cast<double>(X.cols());
}

} // namespace

FitResult fit_regressor(std::span<const StateVec> inputs, std::span<const double> targets,
                        const FeatureEncoder& encoder, const TrainConfig& cfg, std::span<const int> actions)
{
    cfg.validate();
    if (inputs.size() != targets.size())
        throw std::invalid_argument("inputs and targets differ in length");
    if (inputs.size() < 2)
        throw std::invalid_argument("need at least 2 samples to fit");
    if (encoder.action_count() > 0 && actions.size() != inputs.size())
        throw std::invalid_argument("action-conditioned encoder needs one action per row");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].allFinite() || !std::isfinite(targets[i]))
            throw std::invalid_argument("non-finite value in training row " + std::to_string(i));
    }

    const std::size_t rows = inputs.size();
    const int features = encoder.feature_dim();
    const double scale = cfg.target_clip;

    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng split_rng(derive_seed(cfg.seed, 0x5b17ULL));
    for (std::size_t i = rows; i > 1; --i)
        std::swap(order[i - 1], order[split_rng.index(i)]);

    std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(rows)));
    n_val = std::min(n_val, rows - 1);
    const std::size_t n_train = rows - n_val;

    auto build = [&](std::size_t begin, std::size_t count, Eigen::MatrixXf& X, Eigen::RowVectorXf& t) {
        X.resize(features, static_cast<Eigen::Index>(count));
        t.resize(static_cast<Eigen::Index>(count));
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t r = order[begin + j];
            const int a = encoder.action_count() > 0 ? actions[r] : -1;
            encoder.encode(inputs[r], a, X.col(static_cast<Eigen::Index>(j)).data());
            t[static_cast<Eigen::Index>(j)] = static_cast<float>(std::clamp(targets[r], -scale, scale) / scale);
        }
    };
    Eigen::MatrixXf X_train, X_val;
    Eigen::RowVectorXf t_train, t_val;
    build(0, n_train, X_train, t_train);
    build(n_train, n_val, X_val, t_val);
    std::vector<double> val_targets(n_val);
    for (std::size_t j = 0; j < n_val; ++j)
        val_targets[j] = std::clamp(targets[order[n_train + j]], -scale, scale);

    std::vector<int> sizes{features};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(1);
    Mlp net(sizes, static_cast<float>(cfg.dropout), derive_seed(cfg.seed, 0x9e7ULL));

    Trainer trainer(net, cfg);
    Rng batch_rng(derive_seed(cfg.seed, 0xba7cULL));
    std::vector<Eigen::Index> perm(n_train);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, static_cast<Eigen::Index>(n_train));

    FitResult result;
    result.history.reserve(cfg.epochs);
    Eigen::MatrixXf Xb(features, batch);
    Eigen::RowVectorXf tb(batch);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[batch_rng.index(i)]);
        double loss_sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < static_cast<Eigen::Index>(n_train); start += batch) {
            const Eigen::Index count = std::min(batch, static_cast<Eigen::Index>(n_train) - start);
            Xb.resize(features, count);
            tb.resize(count);
            for (Eigen::Index j = 0; j < count; ++j) {
                Xb.col(j) = X_train.col(perm[start + j]);
                tb[j] = t_train[perm[start + j]];
            }
            loss_sum += trainer.step(Xb, tb) * static_cast<double>(count);
            seen += count;
        }
        EpochLoss e;
        e.train = loss_sum / static_cast<double>(seen) * scale * scale;
        e.validation = dropout_free_mse(net, X_val, t_val) * scale * scale;
        result.history.push_back(e);
    }

    for (const auto& w : net.weights()) {
        if (!w.allFinite())
            throw std::runtime_error("training diverged (non-finite weights); lower the learning rate");
    }

    auto model = std::make_shared<const MlpRegressor>(encoder, std::move(net), scale);
    result.train_rows = n_train;
    result.validation_rows = n_val;
    result.validation_mse = result.history.back().validation;
    if (n_val > 0) {
        const auto& ens = model->ensemble(cfg.mc_samples);
        std::size_t over = 0;
        for (std::size_t j = 0; j < n_val; ++j) {
            const auto r = ens.predict(X_val.col(static_cast<Eigen::Index>(j)).data());
            const double conservative = (r.mean - cfg.n_sigma * r.sigma) * scale;
            if (conservative > val_targets[j])
                ++over;
        }
        result.over_prediction_rate = static_cast<double>(over) / static_cast<double>(n_val);
    }
    result.model = std::move(model);
    return result;
}

} // namespace mfbf
