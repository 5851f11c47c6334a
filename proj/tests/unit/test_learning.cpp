#include <doctest.h>

#include <mfbf/dataset.hpp>
#include <mfbf/expansion.hpp>
#include <mfbf/learned_barrier.hpp>
#include <mfbf/sim.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mfbf;

namespace {

std::shared_ptr<const Plant> di() { return std::make_shared<DoubleIntegrator>(0.1); }

StateVec di_state(double p, double v)
{
    StateVec x(2);
    x << p, v;
    return x;
}

ControlVec scalar(double u)
{
    ControlVec c(1);
    c << u;
    return c;
}

double position(const StateVec& x) { return x[0]; }

NominalFactory constant_nominal(double u)
{
    return [u](const StateVec&) { return constant_policy(scalar(u)); };
}

SamplerSpec di_sampler(std::uint64_t seed)
{
    SamplerSpec s;
    s.lower = di_state(-0.5, -2);
    s.upper = di_state(3, 2);
    s.seed = seed;
    return s;
}

TrainConfig small_train()
{
    TrainConfig t;
    t.hidden = {16, 16};
    t.epochs = 60;
    t.batch_size = 32;
    t.learning_rate = 3e-3;
    t.dropout = 0.2;
    t.mc_samples = 20;
    t.target_clip = 5.0;
    return t;
}

ExpansionSetup di_setup()
{
    ExpansionSetup s;
    s.plant = di();
    s.rho = position;
    s.nominal = constant_nominal(2.0);
    s.sampler = di_sampler(1);
    s.filter.actions = make_scalar_action_set(std::vector<double>{0, 1, 2});
    s.encoder = FeatureEncoder(s.sampler.normalizer(), {});
    s.train = small_train();
    s.episodes = 200;
    s.horizon = 100;
    s.seed = 42;
    return s;
}

BarrierPtr di_barrier(double u, int horizon = 100)
{
    return std::make_shared<RolloutBarrier>(di(), constant_policy(scalar(u)), SafetyFn(position), horizon);
}

bool same(const Dataset& a, const Dataset& b)
{
    if (a.rows.size() != b.rows.size() || a.deltas.size() != b.deltas.size())
        return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        if (a.rows[i].x0 != b.rows[i].x0 || a.rows[i].rho_min != b.rows[i].rho_min ||
            a.rows[i].h_prior != b.rows[i].h_prior)
            return false;
    }
    for (std::size_t i = 0; i < a.deltas.size(); ++i)
        if (a.deltas[i].u_idx != b.deltas[i].u_idx || a.deltas[i].rho_min_tail != b.deltas[i].rho_min_tail)
            return false;
    return true;
}

} // namespace

TEST_CASE("dataset generation: counts, determinism, jobs independence")
{
    GenerateOptions opts;
    opts.episodes = 100;
    opts.horizon = 50;
    opts.filter.actions = make_scalar_action_set(std::vector<double>{0, 1, 2});
    opts.filter_barrier = di_barrier(1.0);
    opts.record_delta = true;
    const Dataset a = generate_dataset(*di(), position, constant_nominal(0.0), di_sampler(3), opts);
    CHECK(a.rows.size() == 100u);
    CHECK(a.deltas.size() == 100u);
    const Dataset b = generate_dataset(*di(), position, constant_nominal(0.0), di_sampler(3), opts);
    CHECK(same(a, b));
    opts.jobs = 3;
    const Dataset c = generate_dataset(*di(), position, constant_nominal(0.0), di_sampler(3), opts);
    CHECK(same(a, c));
    const Dataset d = generate_dataset(*di(), position, constant_nominal(0.0), di_sampler(4), opts);
    CHECK_FALSE(same(a, d));
    for (const auto& r : a.rows)
        CHECK(r.rho_min <= r.x0[0]);

    opts.episodes = 0;
    CHECK_THROWS(generate_dataset(*di(), position, constant_nominal(0.0), di_sampler(3), opts));
}

TEST_CASE("delta rows record the post-first-step minimum")
{
    GenerateOptions opts;
    opts.episodes = 30;
    opts.horizon = 80;
    opts.filter.actions = make_scalar_action_set(std::vector<double>{0, 1, 2});
    opts.record_delta = true;
    opts.explore_first_action = true;
    const Dataset d = generate_dataset(*di(), position, constant_nominal(1.0), di_sampler(9), opts);
    for (const DeltaSample& s : d.deltas) {
        REQUIRE(s.u_idx >= 0);
        REQUIRE(s.u_idx < 3);
        // independent replay: first action from the set, then the nominal
        double p = s.x0[0], v = s.x0[1];
        double u = opts.filter.actions[static_cast<std::size_t>(s.u_idx)][0];
        double tail = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 80; ++k) {
            p += 0.1 * v;
            v += 0.1 * u;
            u = 1.0;
            tail = std::min(tail, p);
        }
        CHECK(s.rho_min_tail == doctest::Approx(tail).epsilon(1e-12));
    }
    opts.explore_first_action = false;
    const Dataset e = generate_dataset(*di(), position, constant_nominal(1.0), di_sampler(9), opts);
    for (const DeltaSample& s : e.deltas)
        CHECK(s.u_idx == 1);
}

TEST_CASE("head-on start under straight flight yields -ds")
{
    const FixedWingPair plant;
    JointState s;
    s.vehicle1 = {-300, 0, 0, 0};
    s.vehicle2 = {300, 0, std::numbers::pi, 0};
    SamplerSpec fixed;
    fixed.lower = fixed.upper = s.flat();
    GenerateOptions opts;
    opts.episodes = 3;
    opts.horizon = 500;
    const Policy straight = gamma_straight(15, 15, 0, 0);
    const Dataset d = generate_dataset(plant, SeparationMargin{}, [&](const StateVec&) { return straight; }, fixed, opts);
    for (const auto& r : d.rows)
        CHECK(r.rho_min == doctest::Approx(-25.0).epsilon(1e-9));
}

TEST_CASE("dataset CSV round trip")
{
    GenerateOptions opts;
    opts.episodes = 20;
    opts.horizon = 30;
    opts.filter.actions = make_scalar_action_set(std::vector<double>{0, 1, 2});
    opts.record_delta = true;
    opts.prior = di_barrier(1.0);
    const Dataset a = generate_dataset(*di(), position, constant_nominal(1.0), di_sampler(5), opts);
    std::stringstream ss;
    write_dataset_csv(a, ss);
    const std::string text = ss.str();
    CHECK(text.substr(0, text.find('\n')) == "x0_0,x0_1,u_idx,rho_min,rho_min_tail,h_prior");
    const Dataset b = read_dataset_csv(ss);
    CHECK(b.state_dim == 2);
    CHECK(same(a, b));
    std::stringstream bad("x0_0,foo\n1,2\n");
    CHECK_THROWS(read_dataset_csv(bad));
}

TEST_CASE("expansion with the gamma=1 barrier reproduces the gamma=2 value")
{
    ExpansionSetup s = di_setup();
    s.sampler.lower = s.sampler.upper = di_state(0.5, -1);
    s.episodes = 4;
    const ExpansionResult r = expand_safe_set(di_barrier(1.0, 200), s);
    for (const auto& row : r.data.rows)
        CHECK(std::abs(row.target() - 0.2) < 1e-9);
    s.episodes = 0;
    CHECK_THROWS_AS(expand_safe_set(di_barrier(1.0), s), ConfigError);
}

TEST_CASE("filtered episodes from a safe start stay safe")
{
    // exact barrier and a feasible start: the rollout minimum is nonnegative
    ExpansionSetup s = di_setup();
    s.nominal = constant_nominal(-2.0);
    s.sampler.lower = di_state(0.2, -1);
    s.sampler.upper = di_state(2, 1);
    GenerateOptions opts;
    opts.episodes = 100;
    opts.horizon = 100;
    opts.filter = s.filter;
    opts.filter_barrier = di_barrier(1.0);
    const Dataset d = generate_dataset(*s.plant, s.rho, s.nominal, s.sampler, opts);
    int checked = 0;
    for (const auto& r : d.rows) {
        if (opts.filter_barrier->value(r.x0) < 0)
            continue;
        ++checked;
        CHECK(r.rho_min >= 0.0);
    }
    CHECK(checked > 20);
}

TEST_CASE("max targets")
{
    RolloutSample r;
    r.rho_min = -5;
    r.h_prior = 10;
    CHECK(r.target() == 10);
    r.rho_min = 30;
    r.h_prior = -25;
    CHECK(r.target() == 30);
    r.h_prior.reset();
    CHECK(r.target() == 30);
}

TEST_CASE("paired seeds: max targets dominate plain targets")
{
    const ExpansionSetup s = di_setup();
    const BarrierPtr h = di_barrier(1.0);
    const ExpansionResult plain = expand_safe_set(h, s, 2);
    const ExpansionResult with_max = expand_safe_set_with_max(h, s, 2);
    REQUIRE(plain.data.rows.size() == with_max.data.rows.size());
    int strictly = 0;
    for (std::size_t i = 0; i < plain.data.rows.size(); ++i) {
        REQUIRE(plain.data.rows[i].x0 == with_max.data.rows[i].x0);
        REQUIRE(with_max.data.rows[i].target() >= plain.data.rows[i].target());
        strictly += with_max.data.rows[i].target() > plain.data.rows[i].target() ? 1 : 0;
    }
    MESSAGE(strictly << " rows raised by the prior");
}

TEST_CASE("iterate_expansion bookkeeping")
{
    ExpansionSetup s = di_setup();
    s.episodes = 100;
    const BarrierPtr h0 = di_barrier(1.0);
    const auto one = iterate_expansion(h0, 1, s);
    REQUIRE(one.size() == 1u);
    CHECK(one[0].iteration == 1);
    const ExpansionResult direct = expand_safe_set_with_max(h0, s, 1);
    CHECK(same(one[0].result.data, direct.data));
    CHECK(one[0].result.fit.validation_mse == direct.fit.validation_mse);

    int hooked = 0;
    const auto three = iterate_expansion(h0, 3, s, [&](IterationRecord& r) {
        ++hooked;
        r.metrics["custom"] = r.iteration;
    });
    CHECK(hooked == 3);
    REQUIRE(three.size() == 3u);
    for (const auto& r : three) {
        CHECK(r.metrics.count("over_prediction_pct") == 1);
        CHECK(r.metrics.at("over_prediction_pct") >= 0.0);
        CHECK(r.metrics.at("over_prediction_pct") <= 100.0);
        CHECK(r.metrics.at("custom") == r.iteration);
    }
    // resuming from iteration 1's barrier reproduces iteration 2
    const auto resumed = iterate_expansion(three[0].barrier, 1, s, {}, 2);
    CHECK(same(resumed[0].result.data, three[1].result.data));
    CHECK(resumed[0].result.fit.model->network().weights()[0] == three[1].result.fit.model->network().weights()[0]);
    CHECK_THROWS(iterate_expansion(h0, 0, s));
}

TEST_CASE("learned barrier modes")
{
    ExpansionSetup s = di_setup();
    s.record_delta = true;
    s.episodes = 300;
    s.train.epochs = 150;
    const ExpansionResult r = expand_safe_set(di_barrier(1.0), s);
    REQUIRE(r.delta_fit.has_value());
    const auto model = r.fit.model;
    const auto next = r.delta_fit->model;

    SUBCASE("n_sigma 0 without dropout equals the network output")
    {
        const auto plain = std::make_shared<MlpRegressor>(model->encoder(),
                                                          Mlp(model->network().layer_sizes(), 0.0f, 1,
                                                              model->network().weights(), model->network().biases()),
                                                          model->target_scale());
        const LearnedBarrier h(plain, di(), 0.0, 10);
        for (double p : {-0.2, 0.5, 1.7})
            CHECK(h.value(di_state(p, 0.3)) == doctest::Approx(plain->predict(di_state(p, 0.3))).epsilon(1e-9));
    }
    SUBCASE("value is monotone in n_sigma")
    {
        const LearnedBarrier h0(model, di(), 0.0, 20), h1(model, di(), 1.0, 20), h3(model, di(), 3.0, 20);
        Rng rng(3);
        for (int i = 0; i < 100; ++i) {
            const StateVec x = di_state(rng.uniform(-0.5, 3), rng.uniform(-2, 2));
            REQUIRE(h3.value(x) <= h1.value(x));
            REQUIRE(h1.value(x) <= h0.value(x));
        }
    }
    SUBCASE("hybrid next value steps the plant")
    {
        const LearnedBarrier h(model, di(), 3.0, 20);
        const StateVec x = di_state(1.0, -0.5);
        CHECK(h.next_value(x, scalar(2)) == h.value(di()->step(x, scalar(2))));
    }
    SUBCASE("model-free admissibility is g >= (1 - lambda) h")
    {
        const LearnedBarrier free(model, next, s.filter.actions, 3.0, 20);
        const LearnedBarrier hybrid(model, di(), 3.0, 20);
        CHECK(free.model_free());
        Rng rng(4);
        int agree = 0, total = 0;
        for (int i = 0; i < 100; ++i) {
            const StateVec x = di_state(rng.uniform(-0.5, 3), rng.uniform(-2, 2));
            const double lambda = rng.uniform(0, 1);
            for (const ControlVec& u : s.filter.actions) {
                const std::size_t a = *s.filter.actions.index_of(u);
                const double g = next->predict_with_uncertainty(x, 20, static_cast<int>(a)).conservative(3.0);
                REQUIRE(admissible(free, x, u, lambda) == (g >= (1 - lambda) * free.value(x)));
                agree += admissible(free, x, u, lambda) == admissible(hybrid, x, u, lambda) ? 1 : 0;
                ++total;
            }
        }
        MESSAGE("model-free vs hybrid agreement " << 100.0 * agree / total << "%");
        CHECK_THROWS(free.next_value(di_state(0, 0), scalar(0.5)));
    }
    SUBCASE("dimension checks")
    {
        CHECK_THROWS(LearnedBarrier(model, std::make_shared<FixedWingPair>(), 3.0, 20));
        CHECK_THROWS(LearnedBarrier(model, model, s.filter.actions, 3.0, 20));
    }
}
