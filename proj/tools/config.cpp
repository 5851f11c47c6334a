#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace mfbf::cli {

using nlohmann::ordered_json;

namespace {

template <class Cfg, class F>
void visit_fields(Cfg& c, F&& f)
{
    f("seed", c.seed);
    f("jobs", c.jobs);
    f("out", c.out);
    f("dt", c.dt);
    f("v_min", c.v_min);
    f("v_max", c.v_max);
    f("omega_max_deg", c.omega_max_deg);
    f("zeta_max", c.zeta_max);
    f("ds", c.ds);
    f("clip", c.clip);
    f("lambda", c.lambda);
    f("infeasible", c.infeasible);
    f("omega_choices_deg", c.omega_choices_deg);
    f("speed", c.speed);
    f("zeta", c.zeta);
    f("horizon", c.horizon);
    f("sampler_lower", c.sampler_lower);
    f("sampler_upper", c.sampler_upper);
    f("waypoint_half_span", c.waypoint_half_span);
    f("capture_radius", c.capture_radius);
    f("initial_episodes", c.initial_episodes);
    f("episodes", c.episodes);
    f("iterations", c.iterations);
    f("hidden", c.hidden);
    f("learning_rate", c.learning_rate);
    f("epochs", c.epochs);
    f("batch_size", c.batch_size);
    f("dropout", c.dropout);
    f("mc_samples", c.mc_samples);
    f("n_sigma", c.n_sigma);
    f("validation_fraction", c.validation_fraction);
    f("optimizer", c.optimizer);
    f("momentum", c.momentum);
    f("raw_angles", c.raw_angles);
    f("record_delta", c.record_delta);
    f("explore_first_action", c.explore_first_action);
    f("exact_omega_deg", c.exact_omega_deg);
    f("exact_eta", c.exact_eta);
    f("barrier", c.barrier);
    f("checkpoint", c.checkpoint);
    f("eval_episodes", c.eval_episodes);
    f("variants", c.variants);
    f("grid_nx", c.grid_nx);
    f("grid_ny", c.grid_ny);
    f("grid_extent", c.grid_extent);
    f("scenario", c.scenario);
    f("scenario_separation", c.scenario_separation);
    f("scenario_gap", c.scenario_gap);
}

void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw ConfigError(msg);
}

bool finite_all(const std::vector<double>& v)
{
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

} // namespace

ordered_json RunConfig::to_json() const
{
    ordered_json j;
    visit_fields(*this, [&](const char* key, const auto& field) { j[key] = field; });
    return j;
}

void RunConfig::merge(const ordered_json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    std::set<std::string> known;
    visit_fields(*this, [&](const char* key, auto&) { known.insert(key); });
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "'");
    visit_fields(*this, [&](const char* key, auto& field) {
        const auto it = j.find(key);
        if (it == j.end())
            return;
        try {
            using T = std::decay_t<decltype(field)>;
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                if (!it->is_number_integer())
                    throw ConfigError(std::string("config key '") + key + "' must be an integer");
                if constexpr (std::is_same_v<T, std::uint64_t>)
                    if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<std::int64_t>() < 0)
                        throw ConfigError(std::string("config key '") + key + "' must be nonnegative");
            }
            field = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    });
}

void RunConfig::set(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    ordered_json value;
    try {
        value = ordered_json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;
    }
    ordered_json j;
    j[key] = std::move(value);
    merge(j);
}

std::uint64_t RunConfig::hash() const
{
    ordered_json j = to_json();
    j.erase("jobs");
    j.erase("out");
    j.erase("checkpoint");
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void RunConfig::validate() const
{
    require(jobs >= 1, "jobs must be >= 1");
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(v_min > 0.0, "v_min must be positive");
    require(v_min <= v_max, "v_min must not exceed v_max");
    require(omega_max_deg >= 0.0 && zeta_max >= 0.0, "omega_max_deg and zeta_max must be nonnegative");
    require(ds > 0.0 && std::isfinite(ds), "ds must be positive");
    require(clip > 0.0, "clip must be positive");
    require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
    require(infeasible == "max_slack" || infeasible == "pass_through", "infeasible must be max_slack or pass_through");
    require(!omega_choices_deg.empty(), "omega_choices_deg must not be empty");
    require(finite_all(omega_choices_deg), "omega_choices_deg must be finite");
    require(horizon >= 1, "horizon must be >= 1");
    require(sampler_lower.size() == 8 && sampler_upper.size() == 8, "sampler bounds must have 8 entries");
    require(finite_all(sampler_lower) && finite_all(sampler_upper), "sampler bounds must be finite");
    for (std::size_t i = 0; i < 8; ++i)
        require(sampler_lower[i] <= sampler_upper[i], "sampler_lower must not exceed sampler_upper");
    require(waypoint_half_span > 0.0, "waypoint_half_span must be positive");
    require(capture_radius > 0.0, "capture_radius must be positive");
    require(initial_episodes >= 2, "initial_episodes must be >= 2");
    require(episodes >= 2, "episodes must be >= 2");
    require(iterations >= 1, "iterations must be >= 1");
    require(exact_eta > 0.0 && exact_eta <= 1.0, "exact_eta must lie in (0, 1]");
    require(eval_episodes >= 1, "eval_episodes must be >= 1");
    require(!variants.empty(), "variants must not be empty");
    for (const std::string& v : variants)
        parse_barrier_kind(v);
    parse_barrier_kind(barrier);
    require(grid_nx >= 1 && grid_ny >= 1, "grid cell counts must be >= 1");
    require(grid_extent > 0.0, "grid_extent must be positive");
    require(scenario == "head_on" || scenario == "pass_left" || scenario == "fig2",
            "scenario must be head_on, pass_left or fig2");
    require(scenario_separation > 0.0 && scenario_gap >= 0.0, "scenario geometry must be positive");

    plant_params().validate();
    rho().validate();
    train().validate();
    const ControlBounds b = plant_params().bounds;
    for (double w : omega_choices_deg)
        b.check({speed, deg_to_rad(w), zeta});
    b.check({exact_eta * speed, deg_to_rad(exact_omega_deg), 0.0});
}

PlantParams RunConfig::plant_params() const
{
    PlantParams p;
    p.dt = dt;
    p.bounds = {v_min, v_max, deg_to_rad(omega_max_deg), zeta_max};
    return p;
}

SeparationMargin RunConfig::rho() const { return {ds, clip}; }

NominalSettings RunConfig::nominal() const
{
    NominalSettings n;
    n.speed = speed;
    n.zeta = zeta;
    n.omega_choices.clear();
    for (double w : omega_choices_deg)
        n.omega_choices.push_back(deg_to_rad(w));
    n.dt = dt;
    return n;
}

WaypointPlan RunConfig::plan() const
{
    WaypointPlan p = crossing_plan(waypoint_half_span);
    p.vehicle1.front().capture_radius = capture_radius;
    p.vehicle2.front().capture_radius = capture_radius;
    return p;
}

ActionSet RunConfig::actions() const
{
    return make_action_set(nominal().omega_choices, speed, zeta, plant_params().bounds);
}

FilterConfig RunConfig::filter() const
{
    FilterConfig f;
    f.lambda = lambda;
    f.actions = actions();
    f.infeasible = infeasible == "pass_through" ? InfeasiblePolicy::pass_through : InfeasiblePolicy::max_slack;
    return f;
}

SamplerSpec RunConfig::sampler() const
{
    SamplerSpec s;
    s.lower = Eigen::Map<const Eigen::VectorXd>(sampler_lower.data(), 8);
    s.upper = Eigen::Map<const Eigen::VectorXd>(sampler_upper.data(), 8);
    s.seed = seed;
    return s;
}

FeatureEncoder RunConfig::encoder() const { return FeatureEncoder(sampler().normalizer(), {2, 6}, raw_angles); }

TrainConfig RunConfig::train() const
{
    TrainConfig t;
    t.hidden = hidden;
    t.learning_rate = learning_rate;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.dropout = dropout;
    t.mc_samples = mc_samples;
    t.n_sigma = n_sigma;
    t.validation_fraction = validation_fraction;
    t.optimizer = parse_optimizer(optimizer);
    t.momentum = momentum;
    t.target_clip = clip;
    t.seed = seed;
    return t;
}

ExactBarrierSettings RunConfig::exact() const
{
    ExactBarrierSettings e;
    e.horizon = horizon;
    e.speed = speed;
    e.omega = deg_to_rad(exact_omega_deg);
    e.eta = exact_eta;
    e.zeta = zeta;
    return e;
}

GridSpec RunConfig::grid(const std::string& heading) const
{
    GridSpec g;
    g.x_min = g.y_min = -grid_extent;
    g.x_max = g.y_max = grid_extent;
    g.nx = grid_nx;
    g.ny = grid_ny;
    g.heading2 = named_heading(heading);
    return g;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfig c;
    c.merge(j);
    return c;
}

} // namespace mfbf::cli
