#include "commands.hpp"

#include <mfbf/checkpoint.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mfbf::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    return f;
}

void write_meta(const fs::path& p, const RunConfig& cfg, const std::string& command)
{
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    ordered_json j;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["config_hash"] = hash;
    j["config"] = cfg.to_json();
    open_out(p) << j.dump(2) << '\n';
}

std::map<std::string, std::string> checkpoint_meta(const RunConfig& cfg, int iteration)
{
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash()));
    return {{"config_hash", hash}, {"iteration", std::to_string(iteration)}, {"seed", std::to_string(cfg.seed)}};
}

std::shared_ptr<const FixedWingPair> plant_of(const RunConfig& cfg)
{
    return std::make_shared<FixedWingPair>(cfg.plant_params());
}

ExpansionSetup setup_of(const RunConfig& cfg)
{
    ExpansionSetup s;
    s.plant = plant_of(cfg);
    s.rho = cfg.rho();
    s.nominal = waypoint_nominal(cfg.plan(), cfg.nominal());
    s.sampler = cfg.sampler();
    s.filter = cfg.filter();
    s.encoder = cfg.encoder();
    s.train = cfg.train();
    s.episodes = cfg.episodes;
    s.horizon = cfg.horizon;
    s.record_delta = cfg.record_delta;
    s.seed = cfg.seed;
    s.jobs = cfg.jobs;
    return s;
}

// Checkpoint metadata is written by save_checkpoint but not returned by the
// loader, so read the iteration tag directly.
int checkpoint_iteration(const fs::path& p)
{
    std::ifstream in(p);
    ordered_json j;
    in >> j;
    const auto it = j.find("metadata");
    if (it == j.end() || !it->contains("iteration"))
        throw ConfigError("checkpoint " + p.string() + " has no iteration tag");
    return std::stoi(it->at("iteration").get<std::string>());
}

} // namespace

BarrierPtr make_barrier(const RunConfig& cfg, const std::string& kind, const std::string& checkpoint)
{
    const BarrierKind k = parse_barrier_kind(kind);
    switch (k) {
    case BarrierKind::none:
        return nullptr;
    case BarrierKind::exact_straight:
    case BarrierKind::exact_turn:
        return make_exact_barrier(k, plant_of(cfg), cfg.rho(), cfg.exact(), cfg.plant_params().bounds);
    case BarrierKind::learned: {
        if (checkpoint.empty())
            throw ConfigError("the learned barrier needs a checkpoint");
        auto model = std::make_shared<const MlpRegressor>(load_checkpoint(checkpoint));
        if (model->encoder().state_dim() != 8)
            throw ConfigError("checkpoint is not a two-vehicle model");
        return learned_barrier(std::move(model), plant_of(cfg), cfg.n_sigma, cfg.mc_samples);
    }
    }
    return nullptr;
}

void cmd_generate(const RunConfig& cfg)
{
    cfg.validate();
    const auto plant = plant_of(cfg);
    GenerateOptions opts;
    opts.episodes = cfg.episodes;
    opts.horizon = cfg.horizon;
    opts.filter_barrier = make_barrier(cfg, cfg.barrier, cfg.checkpoint);
    opts.filter = cfg.filter();
    opts.record_delta = cfg.record_delta;
    opts.explore_first_action = cfg.explore_first_action;
    opts.jobs = cfg.jobs;
    const Dataset d =
        generate_dataset(*plant, cfg.rho(), waypoint_nominal(cfg.plan(), cfg.nominal()), cfg.sampler(), opts);
    const fs::path out(cfg.out);
    auto f = open_out(out);
    write_dataset_csv(d, f);
    write_meta(out.string() + ".meta.json", cfg, "generate");
}

FitResult cmd_train(const RunConfig& cfg, const std::string& data)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    FitResult fit;
    if (data.empty()) {
        fit = fit_initial_barrier(setup_of(cfg), cfg.initial_episodes).fit;
    } else {
        std::ifstream in(data);
        if (!in)
            throw std::runtime_error("cannot open dataset " + data);
        const Dataset d = read_dataset_csv(in);
        if (d.state_dim != 8)
            throw ConfigError("dataset is not two-vehicle data");
        std::vector<StateVec> xs;
        std::vector<double> ys;
        for (const auto& r : d.rows) {
            xs.push_back(r.x0);
            ys.push_back(r.target());
        }
        fit = fit_regressor(xs, ys, cfg.encoder(), cfg.train());
    }
    save_checkpoint(*fit.model, dir / "model.json", checkpoint_meta(cfg, 0));
    auto h = open_out(dir / "history.csv");
    h << "epoch,train_mse,validation_mse\n";
    char buf[128];
    for (std::size_t e = 0; e < fit.history.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, fit.history[e].train, fit.history[e].validation);
        h << buf;
    }
    write_meta(dir / "meta.json", cfg, "train");
    return fit;
}

int unsafe_cells(const RunConfig& cfg, const BarrierFunction& h)
{
    int n = 0;
    for (const std::string& name : heading_names())
        n += grid_unsafe_set(h, cfg.grid(name), cfg.jobs).unsafe_count();
    return n;
}

std::vector<IterationRecord> cmd_iterate(const RunConfig& cfg)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    const ExpansionSetup setup = setup_of(cfg);

    BarrierPtr h0;
    int first = 1;
    if (!cfg.checkpoint.empty()) {
        first = checkpoint_iteration(cfg.checkpoint) + 1;
        h0 = make_barrier(cfg, "learned", cfg.checkpoint);
    } else {
        const ExpansionResult init = fit_initial_barrier(setup, cfg.initial_episodes);
        save_checkpoint(*init.fit.model, dir / "initial.json", checkpoint_meta(cfg, 0));
        h0 = make_learned_barrier(setup, init.fit.model);
    }
    const int count = cfg.iterations - first + 1;
    if (count < 1)
        throw ConfigError("checkpoint is already at or beyond the configured iteration count");

    auto metrics = open_out(dir / "metrics.csv");
    metrics << "iteration,train_loss,validation_mse,over_prediction_pct,unsafe_cells\n";
    const auto hook = [&](IterationRecord& rec) {
        rec.metrics["unsafe_cells"] = unsafe_cells(cfg, *rec.barrier);
        const std::string tag = std::to_string(rec.iteration);
        save_checkpoint(*rec.result.fit.model, dir / ("iter_" + tag + ".json"), checkpoint_meta(cfg, rec.iteration));
        auto d = open_out(dir / ("data_iter_" + tag + ".csv"));
        write_dataset_csv(rec.result.data, d);
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%d\n", rec.iteration, rec.metrics["train_loss"],
                      rec.metrics["validation_mse"], rec.metrics["over_prediction_pct"],
                      static_cast<int>(rec.metrics["unsafe_cells"]));
        metrics << buf << std::flush;
    };
    auto records = iterate_expansion(h0, count, setup, hook, first);
    write_meta(dir / "meta.json", cfg, "iterate");
    return records;
}

CollisionTable cmd_evaluate(const RunConfig& cfg)
{
    cfg.validate();
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    std::vector<BarrierVariant> variants;
    for (const std::string& v : cfg.variants)
        variants.push_back({v, make_barrier(cfg, v, cfg.checkpoint)});
    CollisionStudy study;
    study.episodes = cfg.eval_episodes;
    study.horizon = cfg.horizon;
    study.sampler = cfg.sampler();
    study.plan = cfg.plan();
    study.nominal = cfg.nominal();
    study.filter = cfg.filter();
    study.ds = cfg.ds;
    study.seed = derive_seed(cfg.seed, 0xe7a1);
    study.jobs = cfg.jobs;
    const FixedWingPair plant(cfg.plant_params());
    CollisionTable t = evaluate_collision_rates(study, plant, variants);
    auto r = open_out(dir / "rates.csv");
    write_rates_csv(t, r);
    auto e = open_out(dir / "episodes.csv");
    write_episodes_csv(t, e);
    write_meta(dir / "meta.json", cfg, "evaluate");
    return t;
}

void cmd_grid(const RunConfig& cfg)
{
    cfg.validate();
    const BarrierPtr h = make_barrier(cfg, cfg.barrier, cfg.checkpoint);
    if (!h)
        throw ConfigError("grid needs a barrier (exact_straight, exact_turn or learned)");
    const fs::path dir(cfg.out);
    for (const std::string& name : heading_names()) {
        auto f = open_out(dir / ("grid_" + name + ".csv"));
        write_grid_csv(grid_unsafe_set(*h, cfg.grid(name), cfg.jobs), f);
    }
    write_meta(dir / "meta.json", cfg, "grid");
}

EpisodeResult cmd_scenario(const RunConfig& cfg)
{
    cfg.validate();
    EpisodeConfig ec = scenario(cfg.scenario, cfg.scenario_separation, cfg.scenario_gap);
    ec.horizon = cfg.horizon;
    ec.filter = cfg.filter();
    ec.record_trajectory = true;
    const BarrierPtr h = make_barrier(cfg, cfg.barrier, cfg.checkpoint);
    const FixedWingPair plant(cfg.plant_params());
    const EpisodeResult r = run_episode(ec, plant, cfg.nominal(), h.get(), cfg.ds);

    const fs::path dir(cfg.out);
    char buf[512];
    auto s = open_out(dir / "summary.csv");
    s << "scenario,barrier,min_distance,collided,override_count,infeasible_count\n";
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%d,%d,%d\n", cfg.scenario.c_str(), cfg.barrier.c_str(),
                  r.min_distance, r.collided ? 1 : 0, r.override_count, r.infeasible_count);
    s << buf;
    auto t = open_out(dir / "trajectory.csv");
    t << "k,x1,y1,theta1,z1,x2,y2,theta2,z2\n";
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        const StateVec& x = r.trajectory[k];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k, x[0], x[1], x[2],
                      x[3], x[4], x[5], x[6], x[7]);
        t << buf;
    }
    write_meta(dir / "meta.json", cfg, "scenario");
    return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Model-free barrier functions for two-vehicle collision avoidance"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_path;
    std::optional<std::string> checkpoint;
    std::string data;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", sets, "Override a config key (key=value); repeatable");
        sub->add_option("--seed", seed, "Master seed");
        sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_path, "Output file (generate) or directory");
        sub->add_option("--checkpoint", checkpoint, "Model checkpoint (learned barrier or resume point)");
    };
    auto* gen = app.add_subcommand("generate", "Roll out episodes and write a dataset CSV");
    auto* train = app.add_subcommand("train", "Fit a barrier model");
    auto* iter = app.add_subcommand("iterate", "Run the iterative safe-set expansion");
    auto* eval = app.add_subcommand("evaluate", "Collision rates per barrier variant");
    auto* grid = app.add_subcommand("grid", "Barrier values over vehicle-2 positions");
    auto* scen = app.add_subcommand("scenario", "Run one named scenario");
    for (auto* s : {gen, train, iter, eval, grid, scen})
        add_common(s);
    train->add_option("--data", data, "Dataset CSV to fit (default: fresh nominal episodes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty())
            cfg = load_config(config_path);
        for (const std::string& s : sets)
            cfg.set(s);
        if (seed)
            cfg.seed = *seed;
        if (jobs)
            cfg.jobs = *jobs;
        if (out_path)
            cfg.out = *out_path;
        if (checkpoint)
            cfg.checkpoint = *checkpoint;
        cfg.validate();

        if (gen->parsed()) {
            cmd_generate(cfg);
            out << "wrote " << cfg.out << '\n';
        } else if (train->parsed()) {
            const FitResult fit = cmd_train(cfg, data);
            out << "validation_mse " << fit.validation_mse << ", over-prediction " << 100.0 * fit.over_prediction_rate
                << "%\nwrote " << (fs::path(cfg.out) / "model.json").string() << '\n';
        } else if (iter->parsed()) {
            for (const IterationRecord& r : cmd_iterate(cfg))
                out << "iteration " << r.iteration << ": validation_mse " << r.metrics.at("validation_mse")
                    << ", over-prediction " << r.metrics.at("over_prediction_pct") << "%, unsafe cells "
                    << r.metrics.at("unsafe_cells") << '\n';
        } else if (eval->parsed()) {
            for (const VariantRate& r : cmd_evaluate(cfg).rates)
                out << r.name << ": " << r.rate_pct << "% [" << r.ci_low_pct << ", " << r.ci_high_pct << "]\n";
        } else if (grid->parsed()) {
            cmd_grid(cfg);
            out << "wrote grids to " << cfg.out << '\n';
        } else if (scen->parsed()) {
            const EpisodeResult r = cmd_scenario(cfg);
            out << "min distance " << r.min_distance << " m, overrides " << r.override_count
                << (r.collided ? ", collided\n" : "\n");
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const BoundsError& e) {
        err << "bounds error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace mfbf::cli
