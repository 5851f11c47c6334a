#pragma once

#include "mfbf/types.hpp"

#include <Eigen/Core>

#include <vector>

namespace mfbf {

/// Per-dimension affine map of a box onto [-1, 1]. Degenerate dimensions
/// (lower == upper) map to 0 and back to lower.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(Eigen::VectorXd lower, Eigen::VectorXd upper);

    int dim() const { return static_cast<int>(lower_.size()); }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }

    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
    Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const;
    double normalize(int i, double v) const;

private:
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

/// Maps a plant state (and optionally an action index) to network inputs:
/// every state dimension normalized, then (cos, sin) for each angle
/// dimension, then a one-hot action block when action_count > 0.
class FeatureEncoder {
public:
    FeatureEncoder() = default;
    FeatureEncoder(Normalizer normalizer, std::vector<int> angle_dims, bool raw_angles = false,
                   int action_count = 0);

    int state_dim() const { return normalizer_.dim(); }
    int feature_dim() const;
    int action_count() const { return action_count_; }
    bool raw_angles() const { return raw_angles_; }
    const std::vector<int>& angle_dims() const { return angle_dims_; }
    const Normalizer& normalizer() const { return normalizer_; }

    /// Same encoder with an action one-hot block appended.
    FeatureEncoder with_actions(int action_count) const;

    /// Writes feature_dim() floats to out. action is ignored when
    /// action_count() == 0 and must be in range otherwise.
    void encode(const StateVec& x, int action, float* out) const;
    Eigen::VectorXf encode(const StateVec& x, int action = -1) const;

private:
    Normalizer normalizer_;
    std::vector<int> angle_dims_;
    bool raw_angles_ = false;
    int action_count_ = 0;
};

} // namespace mfbf
