#pragma once

#include <Eigen/Core>

#include <stdexcept>

namespace mfbf {

// Bounded-capacity vectors so rollouts never touch the heap. Eight is the
// two-vehicle state size, six the joint control size.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 8, 1>;
using ControlVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 6, 1>;

/// A control outside the plant's admissible box.
class BoundsError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace mfbf
