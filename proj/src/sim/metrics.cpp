#include <vcrl/sim/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace vcrl::sim {

std::string to_string(Role r)
{
    switch (r) {
    case Role::honest: return "honest";
    case Role::selfish: return "selfish";
    case Role::dos: return "dos";
    case Role::delta_flood: return "delta_flood";
    }
    return "honest";
}

std::optional<double> VehicleMetrics::delay() const
{
    if (!cognizant_time) {
        return std::nullopt;
    }
    return *cognizant_time - std::max(trip_start, release);
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::optional<double> nearest_rank(const std::vector<double>& sorted, std::size_t population, double q)
{
    if (population == 0) {
        return std::nullopt;
    }
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(population) - 1e-9));
    const std::size_t idx = std::max<std::size_t>(rank, 1) - 1;
    if (idx >= sorted.size()) {
        return std::nullopt;
    }
    return sorted[idx];
}

Summary summarize(const MetricsLog& log)
{
    Summary s;
    std::vector<double> delays;
    double total = 0.0;
    std::uint32_t failed = 0;
    for (const auto& v : log.vehicles) {
        if (!v.measured()) {
            continue;
        }
        ++s.measured;
        if (auto d = v.delay()) {
            ++s.cognizant;
            delays.push_back(*d);
            total += *d;
        }
        if (v.trip_completed) {
            ++s.completed_trips;
            if (!v.cognizant_time) {
                ++failed;
            }
        }
    }
    std::sort(delays.begin(), delays.end());
    s.cognizant_fraction = s.measured == 0 ? 0.0 : static_cast<double>(s.cognizant) / s.measured;
    s.failure_ratio = s.completed_trips == 0 ? 0.0 : static_cast<double>(failed) / s.completed_trips;
    if (!delays.empty()) {
        s.mean_delay = total / static_cast<double>(delays.size());
    }
    auto fill = [&](Quantiles& q, std::size_t population) {
        q.p50 = nearest_rank(delays, population, 0.50);
        q.p90 = nearest_rank(delays, population, 0.90);
        q.p95 = nearest_rank(delays, population, 0.95);
        q.p99 = nearest_rank(delays, population, 0.99);
    };
    fill(s.conditional, delays.size());
    fill(s.unconditional, s.measured);
    return s;
}

namespace {

nlohmann::json opt(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json quantiles_json(const Quantiles& q)
{
    return {{"p50", opt(q.p50)}, {"p90", opt(q.p90)}, {"p95", opt(q.p95)}, {"p99", opt(q.p99)}};
}

} // namespace

nlohmann::json summary_json(const MetricsLog& log)
{
    const Summary s = summarize(log);
    nlohmann::json j;
    j["mode"] = to_string(log.mode);
    j["seed"] = log.seed;
    j["signature_scheme"] = crypto::to_string(log.scheme);
    j["mock_signatures"] = log.scheme == crypto::SignatureScheme::mock;
    j["duration"] = log.duration;
    j["vehicles"] = log.vehicles.size();
    j["measured_vehicles"] = s.measured;
    j["cognizant"] = s.cognizant;
    j["cognizant_fraction"] = s.cognizant_fraction;
    j["completed_trips"] = s.completed_trips;
    j["failure_ratio"] = s.failure_ratio;
    j["mean_delay"] = opt(s.mean_delay);
    j["delay_quantiles_conditional"] = quantiles_json(s.conditional);
    j["delay_quantiles_unconditional"] = quantiles_json(s.unconditional);
    j["piece_count"] = log.piece_count;
    j["entry_count"] = log.entry_count;
    j["fingerprint_bytes"] = log.fingerprint_bytes;
    j["events_processed"] = log.events_processed;
    j["messages_sent"] = log.messages_sent;
    j["bytes_sent"] = log.bytes_sent;
    j["delta_pieces_generated"] = log.delta_pieces_generated;
    j["keys_disclosed"] = log.keys_disclosed;

    // how many measured vehicles ended holding k pieces
    std::map<std::uint32_t, std::uint32_t> hist;
    for (const auto& v : log.vehicles) {
        if (v.measured()) {
            ++hist[v.pieces_held];
        }
    }
    auto h = nlohmann::json::array();
    for (const auto& [k, n] : hist) {
        h.push_back({{"pieces", k}, {"vehicles", n}});
    }
    j["pieces_held_histogram"] = h;
    return j;
}

std::string vehicle_csv_header()
{
    return "vehicle_id,role,carrier,trip_start,trip_end,trip_completed,release,cognizant,cognizant_time,delay,"
           "pieces_held,pieces_accepted,pieces_forged,pieces_duplicate,pieces_dropped,rx_budget_drops,muted_drops,"
           "delta_accepted,delta_forged,store_size";
}

void write_vehicle_csv(std::ostream& out, const MetricsLog& log)
{
    out << vehicle_csv_header() << '\n';
    for (const auto& v : log.vehicles) {
        const auto d = v.delay();
        out << v.id << ',' << to_string(v.role) << ',' << (v.carrier ? 1 : 0) << ',' << fmt(v.trip_start) << ','
            << fmt(v.trip_end) << ',' << (v.trip_completed ? 1 : 0) << ',' << fmt(v.release) << ','
            << (v.cognizant_time ? 1 : 0) << ',' << (v.cognizant_time ? fmt(*v.cognizant_time) : "") << ','
            << (d ? fmt(*d) : "") << ',' << v.pieces_held << ',' << v.pieces_accepted << ',' << v.pieces_forged << ','
            << v.pieces_duplicate << ',' << v.pieces_dropped << ',' << v.rx_budget_drops << ',' << v.muted_drops << ','
            << v.delta_accepted << ',' << v.delta_forged << ',' << v.store_size << '\n';
    }
}

void write_timeseries_csv(std::ostream& out, const MetricsLog& log)
{
    out << "time_s,cognizant,active\n";
    for (std::size_t t = 0; t < log.cognizant_series.size(); ++t) {
        out << t << ',' << log.cognizant_series[t] << ',' << log.active_series[t] << '\n';
    }
}

void write_cdf_csv(std::ostream& out, const MetricsLog& log)
{
    std::vector<double> delays;
    std::size_t measured = 0;
    for (const auto& v : log.vehicles) {
        if (!v.measured()) {
            continue;
        }
        ++measured;
        if (auto d = v.delay()) {
            delays.push_back(*d);
        }
    }
    std::sort(delays.begin(), delays.end());
    out << "delay_s,cdf\n";
    for (std::size_t i = 0; i < delays.size(); ++i) {
        out << fmt(delays[i]) << ',' << fmt(static_cast<double>(i + 1) / static_cast<double>(measured)) << '\n';
    }
}

} // namespace vcrl::sim
