#pragma once

#include <vcrl/crypto.hpp>
#include <vcrl/sim/config.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vcrl::sim {

enum class Role : std::uint8_t { honest, selfish, dos, delta_flood };
std::string to_string(Role r);

struct VehicleMetrics {
    std::uint32_t id = 0;
    Role role = Role::honest;
    bool carrier = false;
    double trip_start = 0.0;
    double trip_end = 0.0; ///< clipped to the run duration
    bool trip_completed = false;
    double release = 0.0;  ///< when the CRL the delay is measured against was published
    std::optional<double> cognizant_time;
    std::uint32_t pieces_held = 0;
    std::uint64_t pieces_accepted = 0;
    std::uint64_t pieces_forged = 0;
    std::uint64_t pieces_duplicate = 0;
    std::uint64_t pieces_dropped = 0;
    std::uint64_t rx_budget_drops = 0;
    std::uint64_t muted_drops = 0;
    std::uint64_t delta_accepted = 0;
    std::uint64_t delta_forged = 0;
    std::uint64_t store_size = 0;

    /// Only honest vehicles enter the statistics.
    bool measured() const { return role == Role::honest; }
    std::optional<double> delay() const;
};

struct MetricsLog {
    Mode mode = Mode::vehicle_centric;
    std::uint64_t seed = 0;
    crypto::SignatureScheme scheme = crypto::SignatureScheme::mock;
    double duration = 0.0;
    std::uint32_t piece_count = 0;
    std::uint64_t entry_count = 0;
    std::uint64_t fingerprint_bytes = 0;
    std::vector<VehicleMetrics> vehicles;
    std::vector<std::uint32_t> cognizant_series; ///< per second: honest vehicles cognizant so far
    std::vector<std::uint32_t> active_series;    ///< per second: vehicles on the road
    std::uint64_t events_processed = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t bytes_sent = 0;
    std::uint64_t delta_pieces_generated = 0;
    std::uint64_t keys_disclosed = 0;
};

struct Quantiles {
    std::optional<double> p50, p90, p95, p99; ///< empty when never reached
};

struct Summary {
    std::uint32_t measured = 0;
    std::uint32_t cognizant = 0;
    double cognizant_fraction = 0.0;
    std::uint32_t completed_trips = 0;
    double failure_ratio = 0.0; ///< completed trips that ended non-cognizant
    std::optional<double> mean_delay;
    Quantiles conditional;   ///< over cognizant vehicles only
    Quantiles unconditional; ///< over all measured vehicles; non-cognizant count as never
};

Summary summarize(const MetricsLog& log);

/// Nearest-rank quantile of a sorted sample of size `population`; empty if rank exceeds the sample.
std::optional<double> nearest_rank(const std::vector<double>& sorted, std::size_t population, double q);

nlohmann::json summary_json(const MetricsLog& log);

std::string vehicle_csv_header();
void write_vehicle_csv(std::ostream& out, const MetricsLog& log);
void write_timeseries_csv(std::ostream& out, const MetricsLog& log);
/// Unconditional empirical CDF of acquisition delay: one row per cognizant vehicle.
void write_cdf_csv(std::ostream& out, const MetricsLog& log);

/// Fixed six-decimal rendering so CSV bytes are stable across runs.
std::string fmt(double v);

} // namespace vcrl::sim
