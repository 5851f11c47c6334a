#include <doctest.h>

#include <mfbf/checkpoint.hpp>
#include <mfbf/encoding.hpp>
#include <mfbf/mlp.hpp>
#include <mfbf/random.hpp>
#include <mfbf/regressor.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mfbf;

namespace {

// Reference forward pass in double with explicit per-layer unit masks.
double reference_forward(const Mlp& net, const Eigen::VectorXf& x, const std::vector<std::vector<bool>>& keep,
                         double scale)
{
    Eigen::VectorXd a = x.cast<double>();
    const int layers = static_cast<int>(net.weights().size());
    for (int l = 0; l < layers; ++l) {
        Eigen::VectorXd z = net.weights()[l].cast<double>() * a + net.biases()[l].cast<double>();
        if (l + 1 == layers)
            return z[0];
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z[i] = keep.empty() ? std::max(0.0, z[i]) : (keep[l][i] ? std::max(0.0, z[i]) * scale : 0.0);
        a = z;
    }
    return a[0];
}

std::vector<std::vector<bool>> masks_for(const Mlp& net, int sample)
{
    std::vector<std::vector<bool>> keep;
    for (int l = 0; l < net.hidden_layers(); ++l) {
        Rng rng(derive_seed(net.seed(), static_cast<std::uint64_t>(sample), static_cast<std::uint64_t>(l)));
        std::vector<bool> k;
        for (int u = 0; u < net.layer_sizes()[l + 1]; ++u)
            k.push_back(rng.uniform() >= net.dropout());
        keep.push_back(k);
    }
    return keep;
}

FeatureEncoder di_encoder()
{
    Eigen::VectorXd lo(2), hi(2);
    lo << -1, -2;
    hi << 3, 2;
    return FeatureEncoder(Normalizer(lo, hi), {});
}

StateVec di_state(double p, double v)
{
    StateVec x(2);
    x << p, v;
    return x;
}

} // namespace

TEST_CASE("normalizer round trip")
{
    Eigen::VectorXd lo(4), hi(4);
    lo << -200, -200, -std::numbers::pi, 0;
    hi << 200, 200, std::numbers::pi, 0;
    const Normalizer n(lo, hi);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x(4);
        x << rng.uniform(-500, 500), rng.uniform(-200, 200), rng.uniform(-4, 4), 0.0;
        const Eigen::VectorXd back = n.denormalize(n.normalize(x));
        REQUIRE((back - x).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff()));
    }
    Eigen::VectorXd corner(4);
    corner << -200, 200, 0, 0;
    const Eigen::VectorXd z = n.normalize(corner);
    CHECK(z[0] == -1.0);
    CHECK(z[1] == 1.0);
    CHECK(z[2] == 0.0);
    CHECK(z[3] == 0.0); // degenerate dimension
}

TEST_CASE("feature encoder layout")
{
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(8, -200), hi = Eigen::VectorXd::Constant(8, 200);
    lo[2] = lo[6] = -std::numbers::pi;
    hi[2] = hi[6] = std::numbers::pi;
    lo[3] = hi[3] = lo[7] = hi[7] = 0;
    const FeatureEncoder enc(Normalizer(lo, hi), {2, 6});
    CHECK(enc.feature_dim() == 12);
    CHECK(enc.with_actions(9).feature_dim() == 21);
    CHECK(FeatureEncoder(Normalizer(lo, hi), {2, 6}, true).feature_dim() == 8);

    StateVec x(8);
    x << 100, -200, std::numbers::pi / 2, 0, 0, 50, 0, 0;
    const Eigen::VectorXf f = enc.with_actions(9).encode(x, 4);
    CHECK(f[0] == doctest::Approx(0.5));
    CHECK(f[1] == doctest::Approx(-1.0));
    CHECK(f[2] == doctest::Approx(0.5));
    CHECK(f[8] == doctest::Approx(0.0).epsilon(1e-7)); // cos theta1
    CHECK(f[9] == doctest::Approx(1.0));               // sin theta1
    CHECK(f[10] == doctest::Approx(1.0));              // cos theta2
    for (int a = 0; a < 9; ++a)
        CHECK(f[12 + a] == (a == 4 ? 1.0f : 0.0f));
    CHECK_THROWS(enc.with_actions(9).encode(x, 9));
}

TEST_CASE("forward pass matches a hand-written reference")
{
    std::vector<Eigen::MatrixXf> w(2);
    std::vector<Eigen::VectorXf> b(2);
    w[0].resize(3, 2);
    w[0] << 1, -1, 0.5, 2, -1, -1;
    b[0].resize(3);
    b[0] << 0.1, -0.2, 0.3;
    w[1].resize(1, 3);
    w[1] << 1, 2, -3;
    b[1].resize(1);
    b[1] << 0.5;
    const Mlp net({2, 3, 1}, 0.0f, 0, w, b);
    Eigen::MatrixXf X(2, 1);
    X << 1, 0.5;
    // hidden: relu(0.6)=0.6, relu(1.3)=1.3, relu(-1.2)=0 -> 0.6 + 2.6 + 0.5
    CHECK(net.predict(X)[0] == doctest::Approx(3.7));
}

TEST_CASE("MC dropout ensemble matches masked reference passes")
{
    const Mlp net({5, 16, 12, 1}, 0.5f, 77);
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXf x(5);
        for (int i = 0; i < 5; ++i)
            x[i] = static_cast<float>(rng.uniform(-1, 1));
        const int n = 30;
        std::vector<double> ys;
        for (int s = 0; s < n; ++s)
            ys.push_back(reference_forward(net, x, masks_for(net, s), 2.0));
        double mean = 0;
        for (double y : ys)
            mean += y / n;
        double ss = 0;
        for (double y : ys)
            ss += (y - mean) * (y - mean);
        const double sd = std::sqrt(ss / (n - 1));
        const McPrediction p = net.predict_mc(x, n);
        CHECK(p.mean[0] == doctest::Approx(mean).epsilon(1e-4));
        CHECK(p.sigma[0] == doctest::Approx(sd).epsilon(1e-4));
        CHECK(net.predict(x)[0] == doctest::Approx(reference_forward(net, x, {}, 1.0)).epsilon(1e-4));
    }
}

TEST_CASE("uncertainty contract")
{
    const FeatureEncoder enc = di_encoder();
    SUBCASE("dropout 0 gives sigma exactly 0")
    {
        const MlpRegressor m(enc, Mlp({2, 8, 8, 1}, 0.0f, 3), 50.0);
        const Prediction p = m.predict_with_uncertainty(di_state(1, 0), 50);
        CHECK(p.sigma == 0.0);
        CHECK(p.mean == doctest::Approx(m.predict(di_state(1, 0))).epsilon(1e-6));
    }
    SUBCASE("sigma nonnegative, conservative value monotone in n_sigma, seeded")
    {
        const MlpRegressor m(enc, Mlp({2, 32, 32, 1}, 0.5f, 4), 50.0);
        Rng rng(5);
        for (int i = 0; i < 200; ++i) {
            const StateVec x = di_state(rng.uniform(-1, 3), rng.uniform(-2, 2));
            const Prediction p = m.predict_with_uncertainty(x, 50);
            REQUIRE(p.sigma >= 0.0);
            REQUIRE(p.conservative(3.0) <= p.mean);
            REQUIRE(p.conservative(3.0) <= p.conservative(1.0));
            const Prediction q = predict_with_uncertainty(m, x, 50);
            REQUIRE(q.mean == p.mean);
            REQUIRE(q.sigma == p.sigma);
        }
    }
}

TEST_CASE("fit: overfit a single repeated sample")
{
    std::vector<StateVec> xs(64, di_state(1.0, -0.5));
    std::vector<double> ys(64, 17.0);
    TrainConfig cfg;
    cfg.hidden = {16, 16};
    cfg.dropout = 0.0;
    cfg.epochs = 400;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-2;
    cfg.validation_fraction = 0.25;
    const FitResult r = fit_regressor(xs, ys, di_encoder(), cfg);
    CHECK(std::abs(r.model->predict(di_state(1.0, -0.5)) - 17.0) <= 0.01 * cfg.target_clip);
    CHECK(r.history.size() == 400u);
    CHECK(r.train_rows + r.validation_rows == 64u);
}

TEST_CASE("fit: constant targets give near-zero validation error")
{
    Rng rng(6);
    std::vector<StateVec> xs;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(di_state(rng.uniform(-1, 3), rng.uniform(-2, 2)));
        ys.push_back(-4.0);
    }
    TrainConfig cfg;
    cfg.hidden = {16, 16};
    cfg.dropout = 0.0;
    cfg.epochs = 1000;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-2;
    const FitResult r = fit_regressor(xs, ys, di_encoder(), cfg);
    // residual RMSE well under 1% of the target clip
    CHECK(r.validation_mse < 0.1);
    CHECK(r.validation_mse < 1e-3 * r.history.front().validation);
    CHECK(r.history.size() == 1000u);
}

TEST_CASE("fit: targets are clipped and invalid input rejected")
{
    std::vector<StateVec> xs(40, di_state(0.0, 0.0));
    std::vector<double> ys(40, 500.0);
    TrainConfig cfg;
    cfg.hidden = {8};
    cfg.dropout = 0.0;
    cfg.epochs = 300;
    cfg.batch_size = 8;
    cfg.learning_rate = 1e-2;
    const FitResult r = fit_regressor(xs, ys, di_encoder(), cfg);
    CHECK(r.model->predict(di_state(0.0, 0.0)) == doctest::Approx(50.0).epsilon(0.02));

    ys[3] = std::nan("");
    CHECK_THROWS(fit_regressor(xs, ys, di_encoder(), cfg));
    CHECK_THROWS(fit_regressor(std::span<const StateVec>(xs.data(), 1), std::span<const double>(ys.data(), 1),
                               di_encoder(), cfg));
    cfg.mc_samples = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("fit is reproducible and optimizers both learn a slope")
{
    Rng rng(7);
    std::vector<StateVec> xs;
    std::vector<double> ys;
    for (int i = 0; i < 300; ++i) {
        const double p = rng.uniform(-1, 3);
        xs.push_back(di_state(p, rng.uniform(-2, 2)));
        ys.push_back(10 * p);
    }
    for (Optimizer o : {Optimizer::adam, Optimizer::sgd}) {
        TrainConfig cfg;
        cfg.hidden = {32, 32};
        cfg.dropout = 0.1;
        cfg.epochs = 200;
        cfg.batch_size = 32;
        cfg.optimizer = o;
        cfg.learning_rate = o == Optimizer::adam ? 3e-3 : 3e-2;
        cfg.momentum = o == Optimizer::sgd ? 0.9 : 0.0;
        const FitResult a = fit_regressor(xs, ys, di_encoder(), cfg);
        const FitResult b = fit_regressor(xs, ys, di_encoder(), cfg);
        CHECK(a.model->network().weights()[1] == b.model->network().weights()[1]);
        CHECK(a.validation_mse == b.validation_mse);
        CHECK_MESSAGE(a.validation_mse < 10.0, to_string(o) << " mse " << a.validation_mse);
    }
    CHECK(parse_optimizer("sgd") == Optimizer::sgd);
    CHECK_THROWS(parse_optimizer("rmsprop"));
}

TEST_CASE("checkpoint round trip is exact")
{
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(8, -200), hi = Eigen::VectorXd::Constant(8, 200);
    const FeatureEncoder enc(Normalizer(lo, hi), {2, 6}, false, 9);
    const MlpRegressor m(enc, Mlp({21, 24, 24, 1}, 0.5f, 99), 50.0);
    std::stringstream ss;
    write_checkpoint(m, ss, {{"iteration", "2"}});
    const std::string first = ss.str();
    const MlpRegressor back = read_checkpoint(ss);
    CHECK(back.network().layer_sizes() == m.network().layer_sizes());
    CHECK(back.network().seed() == 99u);
    CHECK(back.encoder().action_count() == 9);
    for (std::size_t l = 0; l < m.network().weights().size(); ++l) {
        CHECK(back.network().weights()[l] == m.network().weights()[l]);
        CHECK(back.network().biases()[l] == m.network().biases()[l]);
    }
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        StateVec x(8);
        for (int d = 0; d < 8; ++d)
            x[d] = rng.uniform(-200, 200);
        const auto a = m.predict_with_uncertainty(x, 20, i % 9);
        const auto b = back.predict_with_uncertainty(x, 20, i % 9);
        CHECK(a.mean == b.mean);
        CHECK(a.sigma == b.sigma);
    }
    std::stringstream again;
    write_checkpoint(back, again, {{"iteration", "2"}});
    CHECK(again.str() == first);

    std::stringstream bad("{\"format\": \"other\"}");
    CHECK_THROWS(read_checkpoint(bad));
}
