#pragma once

#include "mfbf/encoding.hpp"
#include "mfbf/mlp.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace mfbf {

enum class Optimizer { sgd, adam };

Optimizer parse_optimizer(const std::string& name);
std::string to_string(Optimizer o);

struct TrainConfig {
    std::vector<int> hidden{128, 128};
    double learning_rate = 1e-4;
    int epochs = 2000;
    int batch_size = 256;
    double dropout = 0.5;
    int mc_samples = 50;
    double n_sigma = 3.0;
    double validation_fraction = 0.1;
    Optimizer optimizer = Optimizer::adam;
    double momentum = 0.0; ///< SGD only
    double target_clip = 50.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Prediction {
    double mean = 0.0;
    double sigma = 0.0;

    double conservative(double n_sigma) const { return mean - n_sigma * sigma; }
};

/// Network plus the input encoding and output scaling it was trained with.
/// Immutable once built; dropout ensembles are cached per sample count and
/// shared between copies.
class MlpRegressor {
public:
    MlpRegressor(FeatureEncoder encoder, Mlp network, double target_scale);

    const FeatureEncoder& encoder() const { return encoder_; }
    const Mlp& network() const { return network_; }
    double target_scale() const { return target_scale_; }

    /// Dropout disabled.
    double predict(const StateVec& x, int action = -1) const;
    Prediction predict_with_uncertainty(const StateVec& x, int mc_samples, int action = -1) const;

    const DropoutEnsemble& ensemble(int mc_samples) const;

private:
    struct Cache {
        std::mutex mutex;
        std::map<int, std::shared_ptr<const DropoutEnsemble>> by_samples;
    };

    FeatureEncoder encoder_;
    Mlp network_;
    double target_scale_;
    std::shared_ptr<Cache> cache_;
};

Prediction predict_with_uncertainty(const MlpRegressor& model, const StateVec& x, int mc_samples);

struct EpochLoss {
    double train = 0.0;      ///< mean minibatch MSE with dropout active, m^2
    double validation = 0.0; ///< dropout-free MSE on held-out rows, m^2
};

struct FitResult {
    std::shared_ptr<const MlpRegressor> model;
    std::vector<EpochLoss> history;
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    double validation_mse = 0.0;
    /// Fraction of validation rows where mean - n_sigma * sigma exceeds the target.
    double over_prediction_rate = 0.0;
};

/// Fits a regressor to (state[, action]) -> target with minibatch MSE.
/// Targets are clipped to +/- target_clip and scaled by it.
FitResult fit_regressor(std::span<const StateVec> inputs, std::span<const double> targets,
                        const FeatureEncoder& encoder, const TrainConfig& cfg,
                        std::span<const int> actions = {});

} // namespace mfbf
