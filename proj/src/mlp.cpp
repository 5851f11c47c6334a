#include "mfbf/mlp.hpp"

#include "mfbf/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfbf {

namespace {

std::vector<int> keep_mask(std::uint64_t seed, int sample, int layer, int width, float dropout)
{
    std::vector<int> kept;
    kept.reserve(width);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(sample), static_cast<std::uint64_t>(layer)));
    for (int u = 0; u < width; ++u) {
        if (dropout <= 0.0f || rng.uniform() >= dropout)
            kept.push_back(u);
    }
    return kept;
}

Eigen::MatrixXf take(const Eigen::MatrixXf& w, const std::vector<int>& rows, const std::vector<int>& cols, float scale)
{
    Eigen::MatrixXf out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out(r, c) = w(rows[r], cols[c]) * scale;
    return out;
}

std::vector<int> all_units(int n)
{
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = i;
    return v;
}

} // namespace

Mlp::Mlp(std::vector<int> layer_sizes, float dropout, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), dropout_(dropout), seed_(seed)
{
    if (sizes_.size() < 2)
        throw std::invalid_argument("network needs at least input and output layers");
    Rng rng(derive_seed(seed_, 0x1a17ULL));
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        const int fan_in = sizes_[l];
        const int fan_out = sizes_[l + 1];
        const bool output = l + 2 == sizes_.size();
        const double limit = output ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
        Eigen::MatrixXf w(fan_out, fan_in);
        for (int c = 0; c < fan_in; ++c)
            for (int r = 0; r < fan_out; ++r)
                w(r, c) = static_cast<float>(rng.uniform(-limit, limit));
        weights_.push_back(std::move(w));
        biases_.push_back(Eigen::VectorXf::Zero(fan_out));
    }
    check_shapes();
}

Mlp::Mlp(std::vector<int> layer_sizes, float dropout, std::uint64_t seed, std::vector<Eigen::MatrixXf> weights,
         std::vector<Eigen::VectorXf> biases)
    : sizes_(std::move(layer_sizes)), dropout_(dropout), seed_(seed), weights_(std::move(weights)),
      biases_(std::move(biases))
{
    check_shapes();
}

void Mlp::check_shapes() const
{
    if (sizes_.size() < 2 || sizes_.back() != 1)
        throw std::invalid_argument("network must end in a single output");
    for (int s : sizes_) {
        if (s < 1)
            throw std::invalid_argument("layer sizes must be positive");
    }
    if (!(dropout_ >= 0.0f && dropout_ < 1.0f))
        throw std::invalid_argument("dropout must lie in [0, 1)");
    if (weights_.size() + 1 != sizes_.size() || biases_.size() != weights_.size())
        throw std::invalid_argument("layer count does not match layer sizes");
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (weights_[l].rows() != sizes_[l + 1] || weights_[l].cols() != sizes_[l] || biases_[l].size() != sizes_[l + 1])
            throw std::invalid_argument("weight shape mismatch in layer " + std::to_string(l));
    }
}

Eigen::VectorXf Mlp::predict(const Eigen::MatrixXf& X) const
{
    const auto ens = DropoutEnsemble::identity(*this);
    return ens.predict(X).mean.cast<float>();
}

McPrediction Mlp::predict_mc(const Eigen::MatrixXf& X, int mc_samples) const
{
    return DropoutEnsemble(*this, mc_samples).predict(X);
}

DropoutEnsemble::DropoutEnsemble(const Mlp& net, int mc_samples)
{
    if (mc_samples < 1)
        throw std::invalid_argument("need at least one Monte-Carlo sample");
    const auto& sizes = net.layer_sizes();
    const int hidden = net.hidden_layers();
    first_w_ = net.weights()[0];
    first_b_ = net.biases()[0];
    first_is_output_ = hidden == 0;
    max_width_ = *std::max_element(sizes.begin(), sizes.end());
    const float scale = net.dropout() > 0.0f ? 1.0f / (1.0f - net.dropout()) : 1.0f;

    members_.resize(mc_samples);
    for (int s = 0; s < mc_samples; ++s) {
        Member& m = members_[s];
        if (hidden == 0)
            continue;
        std::vector<std::vector<int>> kept(hidden);
        for (int l = 0; l < hidden; ++l)
            kept[l] = keep_mask(net.seed(), s, l, sizes[l + 1], net.dropout());
        m.first_kept = kept[0];
        for (int l = 1; l <= hidden; ++l) {
            const bool output = l == hidden;
            const auto rows = output ? std::vector<int>{0} : kept[l];
            m.weights.push_back(take(net.weights()[l], rows, kept[l - 1], scale));
            Eigen::VectorXf b(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r)
                b[r] = net.biases()[l][rows[r]];
            m.biases.push_back(std::move(b));
        }
    }
}

DropoutEnsemble DropoutEnsemble::identity(const Mlp& net)
{
    DropoutEnsemble e;
    const auto& sizes = net.layer_sizes();
    const int hidden = net.hidden_layers();
    e.first_w_ = net.weights()[0];
    e.first_b_ = net.biases()[0];
    e.first_is_output_ = hidden == 0;
    e.max_width_ = *std::max_element(sizes.begin(), sizes.end());
    e.members_.resize(1);
    if (hidden > 0) {
        Member& m = e.members_[0];
        m.first_kept = all_units(sizes[1]);
        for (int l = 1; l <= hidden; ++l) {
            m.weights.push_back(net.weights()[l]);
            m.biases.push_back(net.biases()[l]);
        }
    }
    return e;
}

DropoutEnsemble::Output DropoutEnsemble::predict(const float* x) const
{
    const Eigen::Map<const Eigen::VectorXf> in(x, first_w_.cols());
    Eigen::VectorXf first(first_w_.rows());
    first.noalias() = first_w_ * in;
    first += first_b_;

    const int n = samples();
    if (first_is_output_) {
        return {static_cast<double>(first[0]), 0.0};
    }
    first = first.cwiseMax(0.0f);

    Eigen::VectorXf a(max_width_);
    Eigen::VectorXf z(max_width_);
    std::vector<double> outputs(n);
    for (int s = 0; s < n; ++s) {
        const Member& m = members_[s];
        Eigen::Index width = static_cast<Eigen::Index>(m.first_kept.size());
        for (Eigen::Index i = 0; i < width; ++i)
            a[i] = first[m.first_kept[i]];
        const std::size_t layers = m.weights.size();
        for (std::size_t l = 0; l < layers; ++l) {
            const Eigen::Index rows = m.weights[l].rows();
            z.head(rows).noalias() = m.weights[l] * a.head(width);
            z.head(rows) += m.biases[l];
            if (l + 1 < layers)
                a.head(rows) = z.head(rows).cwiseMax(0.0f);
            width = rows;
        }
        outputs[s] = static_cast<double>(z[0]);
    }

    double sum = 0.0;
    for (double y : outputs)
        sum += y;
    const double mean = sum / n;
    if (n < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double y : outputs)
        ss += (y - mean) * (y - mean);
    return {mean, std::sqrt(ss / (n - 1))};
}

McPrediction DropoutEnsemble::predict(const Eigen::MatrixXf& X) const
{
    if (X.rows() != first_w_.cols())
        throw std::invalid_argument("input has " + std::to_string(X.rows()) + " features, network expects " +
                                    std::to_string(first_w_.cols()));
    McPrediction out{Eigen::VectorXd(X.cols()), Eigen::VectorXd(X.cols())};
    Eigen::VectorXf col(X.rows());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        col = X.col(c);
        const auto r = predict(col.data());
        out.mean[c] = r.mean;
        out.sigma[c] = r.sigma;
    }
    return out;
}

} // namespace mfbf
