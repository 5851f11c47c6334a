#include "mfbf/sim.hpp"

#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace mfbf {

void GridSpec::validate() const
{
    if (nx < 1 || ny < 1)
        throw ConfigError("grid cell counts must be >= 1");
    if (!(x_min <= x_max) || !(y_min <= y_max))
        throw ConfigError("grid ranges need min <= max");
}

double GridSpec::x_at(int i) const
{
    return nx == 1 ? 0.5 * (x_min + x_max) : x_min + (x_max - x_min) * i / (nx - 1);
}

double GridSpec::y_at(int j) const
{
    return ny == 1 ? 0.5 * (y_min + y_max) : y_min + (y_max - y_min) * j / (ny - 1);
}

StateVec GridSpec::state_at(int i, int j) const
{
    JointState s;
    s.vehicle1 = vehicle1;
    s.vehicle2 = {x_at(i), y_at(j), wrap_angle(heading2), z2};
    return s.flat();
}

const std::vector<std::string>& heading_names()
{
    static const std::vector<std::string> names{"left", "up", "right", "down"};
    return names;
}

double named_heading(const std::string& name)
{
    if (name == "left")
        return std::numbers::pi;
    if (name == "up")
        return std::numbers::pi / 2;
    if (name == "right")
        return 0.0;
    if (name == "down")
        return -std::numbers::pi / 2;
    throw ConfigError("unknown heading '" + name + "' (left, up, right, down)");
}

int GridResult::unsafe_count() const
{
    int n = 0;
    for (double v : h)
        n += v < 0.0 ? 1 : 0;
    return n;
}

GridResult grid_unsafe_set(const BarrierFunction& h, const GridSpec& grid, int jobs)
{
    grid.validate();
    GridResult g;
    g.spec = grid;
    g.h.resize(static_cast<std::size_t>(grid.nx) * grid.ny);
    parallel_for(g.h.size(), jobs, [&](std::size_t c) {
        const int i = static_cast<int>(c % grid.nx);
        const int j = static_cast<int>(c / grid.nx);
        g.h[c] = h.value(grid.state_at(i, j));
    });
    return g;
}

void write_grid_csv(const GridResult& g, std::ostream& out)
{
    out << "x,y,h,unsafe\n";
    char buf[128];
    for (int j = 0; j < g.spec.ny; ++j)
        for (int i = 0; i < g.spec.nx; ++i) {
            const double v = g.at(i, j);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", g.spec.x_at(i), g.spec.y_at(j), v,
                          v < 0.0 ? 1 : 0);
            out << buf;
        }
}

} // namespace mfbf
