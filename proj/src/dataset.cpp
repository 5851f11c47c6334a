#include "mfbf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mfbf {

void SamplerSpec::validate() const
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw ConfigError("sampler bounds must be non-empty and equally sized");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
            throw ConfigError("sampler bound " + std::to_string(i) + " needs finite lower <= upper");
    }
}

StateVec SamplerSpec::sample(Rng& rng) const
{
    StateVec x(lower.size());
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        x[i] = lower[i] == upper[i] ? lower[i] : rng.uniform(lower[i], upper[i]);
    return x;
}

Normalizer SamplerSpec::normalizer() const
{
    return Normalizer(Eigen::VectorXd(lower), Eigen::VectorXd(upper));
}

double RolloutSample::target() const
{
    return h_prior ? std::max(*h_prior, rho_min) : rho_min;
}

EpisodeTrace run_rollout(const Plant& plant, const SafetyFn& rho, const Policy& nominal,
                         const BarrierFunction* barrier, const FilterConfig& filter, const StateVec& x0,
                         int horizon, std::optional<std::size_t> forced_first)
{
    if (horizon < 1)
        throw std::invalid_argument("episode horizon must be >= 1");
    EpisodeTrace trace;
    trace.rho_min = rho(x0);
    trace.rho_min_tail = std::numeric_limits<double>::infinity();
    StateVec x = x0;
    for (int k = 0; k < horizon; ++k) {
        ControlVec u;
        if (k == 0 && forced_first) {
            u = filter.actions[*forced_first];
            trace.first_action = *forced_first;
        } else {
            const ControlVec u_nom = nominal(x);
            if (barrier) {
                const FilterResult fr = safety_filter(*barrier, x, u_nom, filter);
                u = fr.u;
                trace.overrides += fr.overridden ? 1 : 0;
                trace.infeasible += fr.feasible ? 0 : 1;
                if (k == 0)
                    trace.first_action = fr.index;
            } else {
                u = u_nom;
                if (k == 0)
                    trace.first_action = filter.actions.index_of(u).value_or(filter.actions.size());
            }
        }
        x = plant.step(x, u);
        const double r = rho(x);
        trace.rho_min = std::min(trace.rho_min, r);
        trace.rho_min_tail = std::min(trace.rho_min_tail, r);
    }
    return trace;
}

Dataset generate_dataset(const Plant& plant, const SafetyFn& rho, const NominalFactory& nominal,
                         const SamplerSpec& sampler, const GenerateOptions& opts)
{
    sampler.validate();
    if (opts.episodes < 1)
        throw std::invalid_argument("dataset needs at least one episode");
    if (opts.horizon < 1)
        throw std::invalid_argument("episode horizon must be >= 1");
    if (sampler.lower.size() != plant.state_dim())
        throw std::invalid_argument("sampler dimension does not match the plant state");
    if (opts.filter_barrier)
        opts.filter.validate();
    if (opts.record_delta && opts.filter.actions.empty())
        throw std::invalid_argument("delta recording needs an action set");

    const auto n = static_cast<std::size_t>(opts.episodes);
    Dataset data;
    data.state_dim = plant.state_dim();
    data.rows.resize(n);
    if (opts.record_delta)
        data.deltas.resize(n);

    parallel_for(n, opts.jobs, [&](std::size_t j) {
        Rng rng(derive_seed(sampler.seed, j));
        const StateVec x0 = sampler.sample(rng);
        const EpisodeTrace trace =
            run_rollout(plant, rho, nominal(x0), opts.filter_barrier.get(), opts.filter, x0, opts.horizon);

        RolloutSample& row = data.rows[j];
        row.x0 = x0;
        row.rho_min = trace.rho_min;
        if (opts.prior)
            row.h_prior = opts.prior->value(x0);

        if (opts.record_delta) {
            DeltaSample& d = data.deltas[j];
            d.x0 = x0;
            if (opts.explore_first_action) {
                const std::size_t a = rng.index(opts.filter.actions.size());
                const EpisodeTrace branch = run_rollout(plant, rho, nominal(x0), opts.filter_barrier.get(),
                                                        opts.filter, x0, opts.horizon, a);
                d.u_idx = static_cast<int>(a);
                d.rho_min_tail = branch.rho_min_tail;
            } else {
                if (trace.first_action >= opts.filter.actions.size())
                    throw std::runtime_error("first applied control is not in the action set");
                d.u_idx = static_cast<int>(trace.first_action);
                d.rho_min_tail = trace.rho_min_tail;
            }
        }
    });
    return data;
}

namespace {

void put(std::ostream& out, double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

} // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out)
{
    const bool has_delta = !data.deltas.empty();
    const bool has_prior = std::any_of(data.rows.begin(), data.rows.end(), [](const auto& r) { return r.h_prior.has_value(); });
    if (has_delta && data.deltas.size() != data.rows.size())
        throw std::invalid_argument("delta rows must align with rollout rows");

    for (int i = 0; i < data.state_dim; ++i)
        out << "x0_" << i << ',';
    out << "u_idx,rho_min";
    if (has_delta)
        out << ",rho_min_tail";
    if (has_prior)
        out << ",h_prior";
    out << '\n';

    for (std::size_t j = 0; j < data.rows.size(); ++j) {
        const auto& r = data.rows[j];
        for (int i = 0; i < data.state_dim; ++i) {
            put(out, r.x0[i]);
            out << ',';
        }
        out << (has_delta ? data.deltas[j].u_idx : -1) << ',';
        put(out, r.rho_min);
        if (has_delta) {
            out << ',';
            put(out, data.deltas[j].rho_min_tail);
        }
        if (has_prior) {
            out << ',';
            put(out, r.h_prior.value_or(std::nan("")));
        }
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("dataset is empty");
    const auto header = split_csv(line);
    Dataset data;
    int u_col = -1, rho_col = -1, tail_col = -1, prior_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto& h = header[c];
        if (h == "x0_" + std::to_string(data.state_dim))
            ++data.state_dim;
        else if (h == "u_idx")
            u_col = static_cast<int>(c);
        else if (h == "rho_min")
            rho_col = static_cast<int>(c);
        else if (h == "rho_min_tail")
            tail_col = static_cast<int>(c);
        else if (h == "h_prior")
            prior_col = static_cast<int>(c);
        else
            throw std::runtime_error("unexpected dataset column '" + h + "'");
    }
    if (data.state_dim == 0 || u_col < 0 || rho_col < 0)
        throw std::runtime_error("dataset header lacks x0_*, u_idx or rho_min");
    if (data.state_dim > 8)
        throw std::runtime_error("dataset states wider than 8 are not supported");

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw std::runtime_error("dataset line " + std::to_string(lineno) + " has the wrong column count");
        RolloutSample r;
        r.x0.resize(data.state_dim);
        for (int i = 0; i < data.state_dim; ++i)
            r.x0[i] = std::stod(cells[i]);
        r.rho_min = std::stod(cells[rho_col]);
        if (prior_col >= 0)
            r.h_prior = std::stod(cells[prior_col]);
        if (tail_col >= 0)
            data.deltas.push_back({r.x0, std::stoi(cells[u_col]), std::stod(cells[tail_col])});
        data.rows.push_back(std::move(r));
    }
    return data;
}

} // namespace mfbf
