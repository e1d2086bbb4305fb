#pragma once

#include <vcrl/bytes.hpp>
#include <vcrl/crypto.hpp>
#include <vcrl/messages.hpp>

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace vcrl::sim {

/// Bad or missing scenario key; `key()` names it.
class ConfigError : public ParameterError {
public:
    ConfigError(std::string key, const std::string& what) : ParameterError(what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class Mode : std::uint8_t { vehicle_centric, baseline };
enum class AdversaryKind : std::uint8_t { none, selfish, dos, delta_flood };
enum class RsuPlacement : std::uint8_t { top_intersections, grid, explicit_list };
enum class MobilityKind : std::uint8_t { synthetic, trace };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);
std::string to_string(AdversaryKind a);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct SimConfig {
    // required
    std::uint32_t vehicles = 0;
    double duration = 0.0;        ///< s
    double bandwidth = 0.0;       ///< B, bytes/s
    double revocation_rate = 0.0; ///< fraction of the day's pseudonyms
    double area_width = 0.0;      ///< m
    double area_height = 0.0;
    std::uint32_t rsu_count = 0;

    Mode mode = Mode::vehicle_centric;
    std::uint64_t seed = 1;

    RsuPlacement rsu_placement = RsuPlacement::top_intersections;
    std::vector<Point> rsu_positions; ///< explicit placement only
    double radio_range = 300.0;
    double loss_probability = 0.0;

    double piece_tx_interval = 0.5;
    double fingerprint_tx_interval = 5.0;
    double request_interval = 0.5;
    double response_jitter = 0.05;
    double cam_rate = 1.0; ///< carrier beacons per second
    double carrier_fraction = 0.1;

    double tau_p = 60.0;
    double gamma = 60.0;
    double gamma_crl = 3600.0;
    DisclosurePolicy disclosure = DisclosurePolicy::optimized;
    double fingerprint_fp = 1e-30;

    std::uint64_t population = 1'712'782; ///< pseudonyms issued per day
    double delta_revocations = 1.0;       ///< mean new revocation events per τ_P

    AdversaryKind adversary = AdversaryKind::none;
    double adversary_fraction = 0.0;
    double bogus_interval = 0.5;

    MobilityKind mobility = MobilityKind::synthetic;
    std::string trace_file;
    double block_size = 200.0;
    double speed_min = 8.0;
    double speed_max = 16.0;
    double mean_trip = 692.81;
    bool replace_trips = true; ///< a finished trip is followed by a fresh vehicle, keeping density steady

    double rx_capacity_factor = 4.0; ///< per-receiver admission budget in units of B
    double sig_verify_latency = 2.346e-3;
    double bf_check_latency = 0.352e-3;
    double max_clock_offset = 0.0;
    std::size_t delta_buffer_cap = 1u << 20;
    std::uint32_t strike_threshold = 1;
    bool parse_baseline_entries = false;

    crypto::SignatureScheme signature_scheme = crypto::SignatureScheme::mock;
    bool record_events = false;

    Timing timing() const;
};

/// Parses flat `key = value` text; `#` starts a comment. Unknown keys are errors.
SimConfig parse_config(std::istream& in);
SimConfig parse_config_string(const std::string& text);
SimConfig load_config(const std::string& path);
void validate(const SimConfig& c);

/// Documented key names, in documentation order.
const std::vector<std::string>& config_keys();
const std::vector<std::string>& required_config_keys();

} // namespace vcrl::sim
