#include <vcrl/sim/mobility.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace vcrl::sim {

double distance(const Point& a, const Point& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

Point Trip::position(double t) const
{
    if (t <= path.front().t) {
        return path.front().p;
    }
    if (t >= path.back().t) {
        return path.back().p;
    }
    auto it = std::upper_bound(path.begin(), path.end(), t, [](double v, const Waypoint& w) { return v < w.t; });
    const Waypoint& b = *it;
    const Waypoint& a = *(it - 1);
    const double f = (t - a.t) / (b.t - a.t);
    return {a.p.x + f * (b.p.x - a.p.x), a.p.y + f * (b.p.y - a.p.y)};
}

Trip manhattan_trip(const ManhattanParams& p, double start, double duration, Rng& rng)
{
    const int nx = static_cast<int>(std::floor(p.width / p.block + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor(p.height / p.block + 1e-9)) + 1;
    int ix = static_cast<int>(rng.below(static_cast<std::uint64_t>(nx)));
    int iy = static_cast<int>(rng.below(static_cast<std::uint64_t>(ny)));
    Trip trip;
    trip.path.push_back({start, {ix * p.block, iy * p.block}});
    const double end = start + duration;
    int dx = 0;
    int dy = 0;
    double t = start;
    static constexpr int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    while (t < end) {
        int options[4];
        int n = 0;
        for (int d = 0; d < 4; ++d) {
            const int jx = ix + dirs[d][0];
            const int jy = iy + dirs[d][1];
            if (jx < 0 || jy < 0 || jx >= nx || jy >= ny) {
                continue;
            }
            if ((dx != 0 || dy != 0) && dirs[d][0] == -dx && dirs[d][1] == -dy) {
                continue;
            }
            options[n++] = d;
        }
        if (n == 0) {
            // dead end: turn around
            options[n++] = dx == 1 ? 1 : dx == -1 ? 0 : dy == 1 ? 3 : 2;
        }
        const int d = options[rng.below(static_cast<std::uint64_t>(n))];
        dx = dirs[d][0];
        dy = dirs[d][1];
        ix += dx;
        iy += dy;
        const double speed = rng.uniform(p.speed_min, p.speed_max);
        const double leg = p.block / speed;
        const Point next{ix * p.block, iy * p.block};
        if (t + leg >= end) {
            const Point prev = trip.path.back().p;
            const double f = (end - t) / leg;
            trip.path.push_back({end, {prev.x + f * (next.x - prev.x), prev.y + f * (next.y - prev.y)}});
            break;
        }
        t += leg;
        trip.path.push_back({t, next});
    }
    if (trip.path.size() == 1) {
        trip.path.push_back({end, trip.path.front().p});
    }
    return trip;
}

std::vector<Trip> parse_trace(std::istream& in)
{
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) {
        throw TraceError(1, "empty trace");
    }
    ++lineno;
    {
        std::string h = line;
        h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == ' ' || c == '\r'; }), h.end());
        if (h != "vehicle_id,time_s,x_m,y_m") {
            throw TraceError(lineno, "expected header vehicle_id,time_s,x_m,y_m");
        }
    }
    std::map<std::string, Trip> trips;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string id;
        std::string fields[3];
        if (!std::getline(ss, id, ',') || !std::getline(ss, fields[0], ',') || !std::getline(ss, fields[1], ',') ||
            !std::getline(ss, fields[2])) {
            throw TraceError(lineno, "expected 4 comma-separated fields");
        }
        double v[3];
        for (int i = 0; i < 3; ++i) {
            try {
                std::size_t used = 0;
                v[i] = std::stod(fields[i], &used);
                if (used != fields[i].size() || !std::isfinite(v[i])) {
                    throw std::invalid_argument(fields[i]);
                }
            } catch (const std::exception&) {
                throw TraceError(lineno, "not a number: '" + fields[i] + "'");
            }
        }
        Trip& trip = trips[id];
        if (!trip.path.empty() && v[0] <= trip.path.back().t) {
            throw TraceError(lineno, "time must increase per vehicle");
        }
        trip.path.push_back({v[0], {v[1], v[2]}});
    }
    std::vector<Trip> out;
    for (auto& [id, trip] : trips) {
        if (trip.path.size() == 1) {
            trip.path.push_back({trip.path.front().t + 1.0, trip.path.front().p});
        }
        out.push_back(std::move(trip));
    }
    return out;
}

std::vector<Trip> load_trace(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw TraceError(0, "cannot open " + path);
    }
    return parse_trace(in);
}

Placement place_rsus_top(const std::vector<Trip>& trips, std::uint32_t count, double radio_range, double width,
                         double height, double block)
{
    Placement out;
    if (count == 0) {
        return out;
    }
    const int nx = static_cast<int>(std::floor(width / block + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor(height / block + 1e-9)) + 1;
    std::vector<std::uint64_t> visits(static_cast<std::size_t>(nx * ny), 0);
    for (const auto& trip : trips) {
        for (const auto& w : trip.path) {
            const int ix = std::clamp(static_cast<int>(std::lround(w.p.x / block)), 0, nx - 1);
            const int iy = std::clamp(static_cast<int>(std::lround(w.p.y / block)), 0, ny - 1);
            ++visits[static_cast<std::size_t>(iy * nx + ix)];
        }
    }
    std::vector<int> order(visits.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<int>(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return visits[a] > visits[b]; });
    for (int idx : order) {
        const Point p{(idx % nx) * block, (idx / nx) * block};
        const bool clear = std::all_of(out.positions.begin(), out.positions.end(),
                                       [&](const Point& q) { return distance(p, q) > 2 * radio_range; });
        if (clear) {
            out.positions.push_back(p);
            if (out.positions.size() == count) {
                break;
            }
        }
    }
    out.short_of_sites = out.positions.size() < count;
    return out;
}

std::vector<Point> place_rsus_grid(std::uint32_t count, double width, double height)
{
    std::vector<Point> out;
    if (count == 0) {
        return out;
    }
    const auto cols = static_cast<std::uint32_t>(std::ceil(std::sqrt(static_cast<double>(count))));
    const std::uint32_t rows = (count + cols - 1) / cols;
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint32_t c = k % cols;
        const std::uint32_t r = k / cols;
        out.push_back({(c + 0.5) * width / cols, (r + 0.5) * height / rows});
    }
    return out;
}

} // namespace vcrl::sim
