#pragma once

#include <vcrl/authority.hpp>
#include <vcrl/sim/config.hpp>
#include <vcrl/sim/metrics.hpp>
#include <vcrl/sim/mobility.hpp>
#include <vcrl/vehicle.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

namespace vcrl::sim {

using vehicle::NodeId;

enum class MsgKind : std::uint8_t { fingerprint, cam, piece, delta, key, request };
std::string to_string(MsgKind k);

/// One broadcast frame. Payloads are shared between all receivers.
struct Message {
    MsgKind kind = MsgKind::cam;
    NodeId sender = 0;
    std::size_t bytes = 0;
    std::uint64_t serial = 0; ///< unique per frame, for the event log
    std::shared_ptr<const bloom::Fingerprint> fingerprint;
    std::shared_ptr<const cred::Pseudonym> cam;
    std::shared_ptr<const WirePiece> piece;
    std::shared_ptr<const DeltaCrlPiece> delta;
    std::shared_ptr<const KeyDisclosure> key;
    std::shared_ptr<const PieceRequest> request;
    bool request_valid = false; ///< verified once at send time; the outcome is the same for every receiver
};

/// Event-log line. `outcome` is empty for transmissions.
struct EventRecord {
    double t = 0.0;
    bool tx = true;
    NodeId node = 0;
    NodeId peer = 0; ///< sender, for receptions
    MsgKind kind = MsgKind::cam;
    std::uint64_t message = 0;
    std::size_t bytes = 0;
    std::string outcome;
};

/**
 * Discrete-event simulation of one scenario. Vehicles are node ids
 * 0..vehicles-1, RSUs follow. Frames are delivered at send time to every
 * active node within radio range; each receiver charges its own admission
 * budget and verification latency.
 */
class Simulator {
public:
    explicit Simulator(SimConfig config);
    /// Replaces the mobility model with explicit trips, one vehicle per trip.
    Simulator(SimConfig config, std::vector<Trip> trips);
    ~Simulator();

    MetricsLog run();

    const SimConfig& config() const { return config_; }
    const authority::Authority& authority() const { return *authority_; }
    std::size_t vehicle_count() const { return vehicles_.size(); }
    const vehicle::VehicleNode* vehicle_state(NodeId id) const;
    Role role(NodeId id) const;
    const std::vector<Point>& rsu_positions() const { return rsu_positions_; }
    bool rsu_sites_short() const { return rsu_short_; }
    const std::vector<EventRecord>& event_log() const { return log_; }
    /// Bytes each node sent per whole second, excluding beacons, for the channel budget check.
    const std::vector<std::map<std::uint64_t, std::size_t>>& tx_per_second() const { return tx_per_second_; }

private:
    enum class Ev : std::uint8_t {
        base_build,
        key_disclose,
        delta_gen,
        revocation,
        tick,
        rsu_fingerprint,
        rsu_tick,
        trip_start,
        request,
        response,
        cam,
        adversary,
        trip_end,
    };
    struct Event {
        double t;
        Ev kind;
        std::uint64_t seq;
        std::uint32_t a;
        std::uint32_t b;
        bool operator>(const Event& o) const
        {
            if (t != o.t) return t > o.t;
            if (kind != o.kind) return kind > o.kind;
            return seq > o.seq;
        }
    };
    struct Window {
        std::deque<std::pair<double, std::size_t>> items;
        std::size_t bytes = 0;
        void expire(double now);
    };
    struct Vehicle;
    struct Rsu;
    struct DeltaOnAir {
        std::uint64_t id = 0;
        std::shared_ptr<const DeltaCrlPiece> piece;
        double until = 0.0; ///< disclosure time of its interval
    };

    void init(std::vector<Trip> trips);
    void schedule(double t, Ev kind, std::uint32_t a = 0, std::uint32_t b = 0);
    void dispatch(const Event& e);

    void on_base_build(std::uint32_t g);
    void on_key_disclose(std::uint32_t g, std::uint32_t i);
    void on_delta_gen(std::uint32_t g, std::uint32_t i);
    void on_revocation();
    void on_tick(std::uint32_t second);
    void on_rsu_fingerprint(std::uint32_t r);
    void on_rsu_tick(std::uint32_t r);
    void on_trip_start(std::uint32_t v);
    void on_request(std::uint32_t v);
    void on_response(std::uint32_t v);
    void on_cam(std::uint32_t v);
    void on_adversary(std::uint32_t v);
    void on_trip_end(std::uint32_t v);

    void rebuild_grid();
    void place_in_grid(NodeId id, const Point& p);
    Point position(NodeId id) const;
    bool try_send(NodeId sender, Message msg, bool budgeted);
    void deliver(const Message& msg, NodeId to);
    std::string receive(Vehicle& v, const Message& msg);
    void ensure_pseudonym(Vehicle& v);
    void build_bogus();
    std::uint32_t current_gamma_crl() const;

    SimConfig config_;
    Timing timing_;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
    std::uint64_t next_serial_ = 1;
    std::uint64_t next_batch_id_ = 1'000'000'000;
    Rng rng_;
    std::unique_ptr<authority::Authority> authority_;
    std::shared_ptr<vehicle::VerifyCache> verify_cache_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;

    std::vector<std::unique_ptr<Vehicle>> vehicles_;
    std::vector<std::unique_ptr<Rsu>> rsus_;
    std::vector<Point> rsu_positions_;
    bool rsu_short_ = false;

    // current CRL on air
    std::optional<std::uint32_t> current_g_;
    std::vector<std::shared_ptr<const WirePiece>> base_pieces_;
    std::shared_ptr<const bloom::Fingerprint> fingerprint_;
    std::vector<std::shared_ptr<const WirePiece>> bogus_pieces_;
    std::vector<DeltaOnAir> deltas_;
    std::shared_ptr<const KeyDisclosure> latest_key_;
    std::uint64_t latest_key_id_ = 0;
    std::uint64_t next_delta_id_ = 1;

    // spatial index: cell -> node ids, rebuilt every second
    double cell_ = 300.0;
    int grid_nx_ = 1;
    int grid_ny_ = 1;
    std::vector<std::vector<NodeId>> grid_;
    std::vector<Point> snapshot_;

    MetricsLog metrics_;
    std::vector<EventRecord> log_;
    std::vector<std::map<std::uint64_t, std::size_t>> tx_per_second_;
};

MetricsLog run_simulation(const SimConfig& config);

} // namespace vcrl::sim
