#pragma once

#include <vcrl/rng.hpp>
#include <vcrl/sim/config.hpp>

#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vcrl::sim {

/// Trace file could not be parsed; `line()` is 1-based.
class TraceError : public std::runtime_error {
public:
    TraceError(int line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line)
    {
    }
    int line() const { return line_; }

private:
    int line_;
};

struct Waypoint {
    double t = 0.0;
    Point p;
};

/// One vehicle trip as a piecewise-linear path; waypoint times strictly increase.
struct Trip {
    std::vector<Waypoint> path;

    double start() const { return path.front().t; }
    double end() const { return path.back().t; }
    bool active(double t) const { return t >= start() && t < end(); }
    Point position(double t) const;
};

struct ManhattanParams {
    double width = 2000.0;
    double height = 2000.0;
    double block = 200.0;
    double speed_min = 8.0;
    double speed_max = 16.0;
    double mean_trip = 692.81;
};

/// Random walk over grid intersections; no U-turns unless at a dead end. Trip length ~ Exp(mean_trip).
Trip manhattan_trip(const ManhattanParams& p, double start, double duration, Rng& rng);

/// CSV `vehicle_id,time_s,x_m,y_m` with a header row; one trip per vehicle id, ordered by id.
std::vector<Trip> parse_trace(std::istream& in);
std::vector<Trip> load_trace(const std::string& path);

struct Placement {
    std::vector<Point> positions;
    bool short_of_sites = false; ///< fewer feasible sites than requested
};

/**
 * Greedy top-`count` intersections by visit frequency over the trips, keeping
 * every pair more than 2 * radio_range apart. Ties go to the lower grid index.
 */
Placement place_rsus_top(const std::vector<Trip>& trips, std::uint32_t count, double radio_range, double width,
                         double height, double block);
/// Evenly spread lattice of `count` sites.
std::vector<Point> place_rsus_grid(std::uint32_t count, double width, double height);

double distance(const Point& a, const Point& b);

} // namespace vcrl::sim
