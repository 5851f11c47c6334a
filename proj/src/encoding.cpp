#include "mfbf/encoding.hpp"

#include <cmath>
#include <string>

namespace mfbf {

Normalizer::Normalizer(Eigen::VectorXd lower, Eigen::VectorXd upper)
    : lower_(std::move(lower)), upper_(std::move(upper))
{
    if (lower_.size() != upper_.size())
        throw std::invalid_argument("normalizer bounds differ in size");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || lower_[i] > upper_[i])
            throw std::invalid_argument("normalizer bound " + std::to_string(i) + " is not a finite lower <= upper pair");
    }
}

double Normalizer::normalize(int i, double v) const
{
    const double span = upper_[i] - lower_[i];
    if (span == 0.0)
        return 0.0;
    return 2.0 * (v - lower_[i]) / span - 1.0;
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& x) const
{
    if (x.size() != lower_.size())
        throw std::invalid_argument("normalize: dimension mismatch");
    Eigen::VectorXd z(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        z[i] = normalize(static_cast<int>(i), x[i]);
    return z;
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& z) const
{
    if (z.size() != lower_.size())
        throw std::invalid_argument("denormalize: dimension mismatch");
    Eigen::VectorXd x(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double span = upper_[i] - lower_[i];
        x[i] = span == 0.0 ? lower_[i] : lower_[i] + 0.5 * (z[i] + 1.0) * span;
    }
    return x;
}

FeatureEncoder::FeatureEncoder(Normalizer normalizer, std::vector<int> angle_dims, bool raw_angles, int action_count)
    : normalizer_(std::move(normalizer)), angle_dims_(std::move(angle_dims)), raw_angles_(raw_angles),
      action_count_(action_count)
{
    for (int d : angle_dims_) {
        if (d < 0 || d >= normalizer_.dim())
            throw std::invalid_argument("angle dimension out of range");
    }
    if (action_count_ < 0)
        throw std::invalid_argument("negative action count");
}

int FeatureEncoder::feature_dim() const
{
    const int angles = raw_angles_ ? 0 : 2 * static_cast<int>(angle_dims_.size());
    return normalizer_.dim() + angles + action_count_;
}

FeatureEncoder FeatureEncoder::with_actions(int action_count) const
{
    return FeatureEncoder(normalizer_, angle_dims_, raw_angles_, action_count);
}

void FeatureEncoder::encode(const StateVec& x, int action, float* out) const
{
    const int n = normalizer_.dim();
    if (x.size() != n)
        throw std::invalid_argument("encode: state has " + std::to_string(x.size()) + " components, expected " +
                                    std::to_string(n));
    int k = 0;
    for (int i = 0; i < n; ++i)
        out[k++] = static_cast<float>(normalizer_.normalize(i, x[i]));
    if (!raw_angles_) {
        for (int d : angle_dims_) {
            out[k++] = static_cast<float>(std::cos(x[d]));
            out[k++] = static_cast<float>(std::sin(x[d]));
        }
    }
    if (action_count_ > 0) {
        if (action < 0 || action >= action_count_)
            throw std::invalid_argument("encode: action index out of range");
        for (int a = 0; a < action_count_; ++a)
            out[k++] = a == action ? 1.0f : 0.0f;
    }
}

Eigen::VectorXf FeatureEncoder::encode(const StateVec& x, int action) const
{
    Eigen::VectorXf out(feature_dim());
    encode(x, action, out.data());
    return out;
}

} // namespace mfbf
