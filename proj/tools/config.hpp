#pragma once

#include <mfbf/barrier.hpp>
#include <mfbf/expansion.hpp>
#include <mfbf/regressor.hpp>
#include <mfbf/sim.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mfbf::cli {

// Flat key schema. Every key is optional in a config file; unknown keys are
// rejected. See RunConfig::schema_json() for the full list with defaults.
struct RunConfig {
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out = "out";

    // plant
    double dt = 0.1;
    double v_min = 10.0;
    double v_max = 20.0;
    double omega_max_deg = 12.0;
    double zeta_max = 5.0;

    // safety and filter
    double ds = 25.0;
    double clip = 50.0;
    double lambda = 1.0;
    std::string infeasible = "max_slack";
    std::vector<double> omega_choices_deg{-12.0, 0.0, 12.0};
    double speed = 15.0;
    double zeta = 0.0;
    int horizon = 500;

    // sampling and nominal controller
    std::vector<double> sampler_lower{-200, -200, -3.141592653589793, 0, -200, -200, -3.141592653589793, 0};
    std::vector<double> sampler_upper{200, 200, 3.141592653589793, 0, 200, 200, 3.141592653589793, 0};
    double waypoint_half_span = 400.0;
    double capture_radius = 50.0;

    // learning
    int initial_episodes = 5000;
    int episodes = 2000;
    int iterations = 3;
    std::vector<int> hidden{128, 128};
    double learning_rate = 1e-4;
    int epochs = 2000;
    int batch_size = 256;
    double dropout = 0.5;
    int mc_samples = 50;
    double n_sigma = 3.0;
    double validation_fraction = 0.1;
    std::string optimizer = "adam";
    double momentum = 0.0;
    bool raw_angles = false;
    bool record_delta = false;
    bool explore_first_action = true;

    // exact barriers
    double exact_omega_deg = 12.0;
    double exact_eta = 1.0;

    // generate / grid / evaluate / scenario
    std::string barrier = "none";
    std::string checkpoint;
    int eval_episodes = 1000;
    std::vector<std::string> variants{"none", "learned"};
    int grid_nx = 81;
    int grid_ny = 81;
    double grid_extent = 200.0;
    std::string scenario = "head_on";
    double scenario_separation = 600.0;
    double scenario_gap = 100.0;

    /// Throws ConfigError on any inconsistent setting.
    void validate() const;

    nlohmann::ordered_json to_json() const;
    /// Applies the keys present in j; unknown keys throw ConfigError.
    void merge(const nlohmann::ordered_json& j);
    /// Applies one key=value override; the value is parsed as JSON, falling
    /// back to a plain string.
    void set(const std::string& assignment);

    /// FNV-1a over the canonical JSON of every result-affecting key
    /// (everything except jobs and the out / checkpoint paths).
    std::uint64_t hash() const;

    // Library views.
    PlantParams plant_params() const;
    SeparationMargin rho() const;
    NominalSettings nominal() const;
    WaypointPlan plan() const;
    ActionSet actions() const;
    FilterConfig filter() const;
    SamplerSpec sampler() const;
    FeatureEncoder encoder() const;
    TrainConfig train() const;
    ExactBarrierSettings exact() const;
    GridSpec grid(const std::string& heading) const;
};

RunConfig load_config(const std::filesystem::path& path);

} // namespace mfbf::cli
