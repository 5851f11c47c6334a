#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mfbf {

struct McPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd sigma;
};

/// Fully connected ReLU network with a single linear output. Dropout
/// (inverted scaling) is applied to every hidden activation.
class Mlp {
public:
    Mlp() = default;
    /// He-uniform initialisation drawn from `seed`.
    Mlp(std::vector<int> layer_sizes, float dropout, std::uint64_t seed);
    Mlp(std::vector<int> layer_sizes, float dropout, std::uint64_t seed, std::vector<Eigen::MatrixXf> weights,
        std::vector<Eigen::VectorXf> biases);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int hidden_layers() const { return static_cast<int>(sizes_.size()) - 2; }
    float dropout() const { return dropout_; }
    std::uint64_t seed() const { return seed_; }

    const std::vector<Eigen::MatrixXf>& weights() const { return weights_; }
    const std::vector<Eigen::VectorXf>& biases() const { return biases_; }
    std::vector<Eigen::MatrixXf>& weights() { return weights_; }
    std::vector<Eigen::VectorXf>& biases() { return biases_; }

    /// Dropout-free output, one value per column of X.
    Eigen::VectorXf predict(const Eigen::MatrixXf& X) const;
    /// Mean and sample standard deviation over mc_samples dropout masks.
    McPrediction predict_mc(const Eigen::MatrixXf& X, int mc_samples) const;

private:
    void check_shapes() const;

    std::vector<int> sizes_;
    float dropout_ = 0.0f;
    std::uint64_t seed_ = 0;
    std::vector<Eigen::MatrixXf> weights_; // out x in
    std::vector<Eigen::VectorXf> biases_;
};

/// A fixed set of thinned networks, one per Monte-Carlo dropout sample.
/// Masks depend only on (network seed, sample, layer), so every input sees
/// the same masks and the resulting mean/sigma are deterministic functions
/// of the input. Dropped units are removed from the weight matrices.
class DropoutEnsemble {
public:
    DropoutEnsemble(const Mlp& net, int mc_samples);
    /// Single member with every unit kept and no rescaling.
    static DropoutEnsemble identity(const Mlp& net);

    int samples() const { return static_cast<int>(members_.size()); }
    int input_dim() const { return static_cast<int>(first_w_.cols()); }

    struct Output {
        double mean = 0.0;
        double sigma = 0.0;
    };
    Output predict(const float* x) const;
    McPrediction predict(const Eigen::MatrixXf& X) const;

private:
    DropoutEnsemble() = default;

    struct Member {
        std::vector<int> first_kept;          // kept units of hidden layer 1
        std::vector<Eigen::MatrixXf> weights; // compacted, rescaled
        std::vector<Eigen::VectorXf> biases;
    };

    Eigen::MatrixXf first_w_;
    Eigen::VectorXf first_b_;
    bool first_is_output_ = false;
    int max_width_ = 0;
    std::vector<Member> members_;
};

} // namespace mfbf
