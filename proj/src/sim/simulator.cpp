#include <vcrl/sim/simulator.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace vcrl::sim {

namespace {

constexpr double resend_gap = 5.0;  // Δ pieces and keys are repeated at most this often per RSU
constexpr double max_backlog = 1.0; // frames waiting longer than this for the CPU are dropped
constexpr std::size_t cam_body_bytes = 64;

} // namespace

std::string to_string(MsgKind k)
{
    switch (k) {
    case MsgKind::fingerprint: return "fingerprint";
    case MsgKind::cam: return "cam";
    case MsgKind::piece: return "piece";
    case MsgKind::delta: return "delta";
    case MsgKind::key: return "key";
    case MsgKind::request: return "request";
    }
    return "cam";
}

void Simulator::Window::expire(double now)
{
    while (!items.empty() && items.front().first <= now - 1.0) {
        bytes -= items.front().second;
        items.pop_front();
    }
}

struct Simulator::Vehicle {
    NodeId id = 0;
    Role role = Role::honest;
    bool carrier = false;
    Trip trip;
    bool started = false;
    bool active = false;
    double release = 0.0;
    std::unique_ptr<vehicle::VehicleNode> state;
    Rng rng{0};
    Window tx;
    Window rx;
    double busy_until = 0.0;

    std::optional<cred::PseudonymBatch> batch;
    std::uint64_t batch_gamma = std::numeric_limits<std::uint64_t>::max();
    std::uint32_t batch_fp_version = 0;
    std::uint32_t batch_fp_gamma = 0;
    std::shared_ptr<const cred::Pseudonym> pseudonym;
    std::optional<crypto::SigningKey> key;

    bool response_pending = false;
    std::shared_ptr<const PieceRequest> pending_request;

    std::uint64_t bogus_slot = std::numeric_limits<std::uint64_t>::max();
    std::shared_ptr<const DeltaCrlPiece> bogus_delta;

    std::uint64_t rx_budget_drops = 0;
    std::uint64_t muted_drops = 0;

    bool honest_sender() const { return role == Role::honest; }
};

struct Simulator::Rsu {
    NodeId id = 0;
    Point pos;
    Window tx;
    std::map<std::uint16_t, double> requested; ///< index -> last time a request named it
    std::uint32_t cursor = 0;
    bool fingerprint_pending = false;
    std::map<std::uint64_t, double> delta_sent;
    std::uint64_t key_id = 0;
    double key_sent = -1e300;
};

Simulator::Simulator(SimConfig config) : Simulator(std::move(config), {}) {}

Simulator::Simulator(SimConfig config, std::vector<Trip> trips)
    : config_(std::move(config)), timing_(config_.timing()), rng_(derive_seed(config_.seed, 1))
{
    validate(config_);
    init(std::move(trips));
}

Simulator::~Simulator() = default;

const vehicle::VehicleNode* Simulator::vehicle_state(NodeId id) const
{
    return id < vehicles_.size() ? vehicles_[id]->state.get() : nullptr;
}

Role Simulator::role(NodeId id) const
{
    return vehicles_.at(id)->role;
}

void Simulator::schedule(double t, Ev kind, std::uint32_t a, std::uint32_t b)
{
    queue_.push({t, kind, seq_++, a, b});
}

std::uint32_t Simulator::current_gamma_crl() const
{
    return static_cast<std::uint32_t>(std::floor(now_ / timing_.gamma_crl_length()));
}

void Simulator::init(std::vector<Trip> trips)
{
    const bool vc = config_.mode == Mode::vehicle_centric;
    Rng setup(derive_seed(config_.seed, 2));

    // issuer and background revocations
    auto pca = crypto::SigningKey::generate(config_.signature_scheme, setup);
    authority_ = std::make_unique<authority::Authority>(
        authority::AuthorityConfig{timing_, config_.fingerprint_fp}, pca, derive_seed(config_.seed, 3));
    authority::SyntheticDay day;
    day.pseudonyms_per_day = config_.population;
    day.revocation_rate = config_.revocation_rate;
    day.tau_p = config_.tau_p;
    authority::populate_synthetic_day(authority_->ledger(), day, derive_seed(config_.seed, 4));
    verify_cache_ = std::make_shared<vehicle::VerifyCache>();

    // mobility
    const bool explicit_trips = !trips.empty();
    ManhattanParams mp{config_.area_width, config_.area_height, config_.block_size,
                       config_.speed_min,  config_.speed_max,   config_.mean_trip};
    if (!explicit_trips && config_.mobility == MobilityKind::trace) {
        trips = load_trace(config_.trace_file);
        if (trips.size() > config_.vehicles) {
            trips.resize(config_.vehicles);
        }
    }
    const std::size_t n = explicit_trips || config_.mobility == MobilityKind::trace ? trips.size() : config_.vehicles;

    // roles: a seeded shuffle picks the adversaries
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::shuffle(order.begin(), order.end(), setup.engine());
    const auto bad = config_.adversary == AdversaryKind::none
                         ? std::size_t{0}
                         : static_cast<std::size_t>(std::llround(config_.adversary_fraction * static_cast<double>(n)));
    std::vector<Role> roles(n, Role::honest);
    for (std::size_t j = 0; j < bad; ++j) {
        switch (config_.adversary) {
        case AdversaryKind::selfish: roles[order[j]] = Role::selfish; break;
        case AdversaryKind::dos: roles[order[j]] = Role::dos; break;
        case AdversaryKind::delta_flood: roles[order[j]] = Role::delta_flood; break;
        case AdversaryKind::none: break;
        }
    }

    // synthetic traffic is stationary: every vehicle slot is on the road at t = 0 with a residual
    // trip (exponential, so memoryless) and, with replace_trips, is refilled when the trip ends
    Rng mob(derive_seed(config_.seed, 5));
    std::vector<Trip> plan;
    std::vector<Role> plan_roles;
    for (std::uint32_t i = 0; i < n; ++i) {
        const bool attacker = roles[i] == Role::dos || roles[i] == Role::delta_flood;
        if (explicit_trips || config_.mobility == MobilityKind::trace) {
            plan.push_back(trips[i]);
            plan_roles.push_back(roles[i]);
            continue;
        }
        if (attacker) {
            plan.push_back(manhattan_trip(mp, 0.0, config_.duration + 1.0, mob));
            plan_roles.push_back(roles[i]);
            continue;
        }
        double start = 0.0;
        do {
            plan.push_back(manhattan_trip(mp, start, mob.exponential(config_.mean_trip), mob));
            plan_roles.push_back(roles[i]);
            start = plan.back().end();
        } while (config_.replace_trips && start < config_.duration);
    }
    for (std::uint32_t i = 0; i < plan.size(); ++i) {
        auto v = std::make_unique<Vehicle>();
        v->id = i;
        v->role = plan_roles[i];
        v->rng = Rng(derive_seed(config_.seed, 1000 + i));
        v->trip = std::move(plan[i]);
        const bool attacker = v->role == Role::dos || v->role == Role::delta_flood;
        v->carrier = !attacker && mob.chance(config_.carrier_fraction);
        vehicles_.push_back(std::move(v));
    }

    // RSUs
    switch (config_.rsu_placement) {
    case RsuPlacement::explicit_list: rsu_positions_ = config_.rsu_positions; break;
    case RsuPlacement::grid:
        rsu_positions_ = place_rsus_grid(config_.rsu_count, config_.area_width, config_.area_height);
        break;
    case RsuPlacement::top_intersections: {
        std::vector<Trip> dry;
        dry.reserve(vehicles_.size());
        for (const auto& v : vehicles_) {
            dry.push_back(v->trip);
        }
        auto placed = place_rsus_top(dry, config_.rsu_count, config_.radio_range, config_.area_width,
                                     config_.area_height, config_.block_size);
        rsu_positions_ = std::move(placed.positions);
        rsu_short_ = placed.short_of_sites;
        break;
    }
    }
    for (std::size_t r = 0; r < rsu_positions_.size(); ++r) {
        auto rsu = std::make_unique<Rsu>();
        rsu->id = static_cast<NodeId>(vehicles_.size() + r);
        rsu->pos = rsu_positions_[r];
        rsus_.push_back(std::move(rsu));
    }

    const std::size_t nodes = vehicles_.size() + rsus_.size();
    snapshot_.assign(nodes, Point{});
    tx_per_second_.assign(nodes, {});
    cell_ = std::max(config_.radio_range, 1.0);
    grid_nx_ = std::max(1, static_cast<int>(std::ceil(config_.area_width / cell_)) + 1);
    grid_ny_ = std::max(1, static_cast<int>(std::ceil(config_.area_height / cell_)) + 1);

    metrics_.mode = config_.mode;
    metrics_.seed = config_.seed;
    metrics_.scheme = config_.signature_scheme;
    metrics_.duration = config_.duration;

    // schedule
    const double D = config_.duration;
    const double G = timing_.gamma_crl_length();
    if (vc) {
        for (std::uint32_t g = 0; g * G < D; ++g) {
            schedule(g * G, Ev::base_build, g);
        }
        for (std::uint32_t g = 0; g * G - timing_.tau_p < D; ++g) {
            for (std::uint32_t i = 1; i <= timing_.intervals; ++i) {
                const double disclose = timing_.disclosure_time(g, i);
                if (disclose < 0.0 || disclose >= D) {
                    continue;
                }
                schedule(disclose, Ev::key_disclose, g, i);
                const double gen = std::max(disclose - timing_.tau_p, g * G);
                if (gen < disclose) {
                    schedule(gen, Ev::delta_gen, g, i);
                }
            }
        }
        if (config_.delta_revocations > 0.0) {
            schedule(rng_.exponential(timing_.tau_p / config_.delta_revocations), Ev::revocation);
        }
    } else {
        schedule(0.0, Ev::base_build, 0);
    }
    schedule(0.0, Ev::tick, 0);
    for (std::uint32_t r = 0; r < rsus_.size(); ++r) {
        if (vc) {
            schedule(rng_.uniform(0.0, config_.fingerprint_tx_interval), Ev::rsu_fingerprint, r);
        }
        schedule(rng_.uniform(0.0, config_.piece_tx_interval), Ev::rsu_tick, r);
    }
    for (std::uint32_t i = 0; i < vehicles_.size(); ++i) {
        if (vehicles_[i]->trip.start() < D) {
            schedule(std::max(0.0, vehicles_[i]->trip.start()), Ev::trip_start, i);
        }
    }
}

// ---------------------------------------------------------------------------

MetricsLog Simulator::run()
{
    while (!queue_.empty()) {
        const Event e = queue_.top();
        if (e.t > config_.duration) {
            break;
        }
        queue_.pop();
        now_ = e.t;
        ++metrics_.events_processed;
        dispatch(e);
    }
    now_ = config_.duration;

    metrics_.vehicles.clear();
    for (const auto& v : vehicles_) {
        if (!v->started) {
            continue;
        }
        VehicleMetrics m;
        m.id = v->id;
        m.role = v->role;
        m.carrier = v->carrier;
        m.trip_start = std::max(0.0, v->trip.start());
        m.trip_end = std::min(v->trip.end(), config_.duration);
        m.trip_completed = v->trip.end() <= config_.duration;
        m.release = v->release;
        m.rx_budget_drops = v->rx_budget_drops;
        m.muted_drops = v->muted_drops;
        if (v->state) {
            const auto& c = v->state->counters();
            m.cognizant_time = v->state->first_cognizant_time();
            m.pieces_held = static_cast<std::uint32_t>(v->state->pieces().size());
            m.pieces_accepted = c.pieces_accepted;
            m.pieces_forged = c.pieces_forged;
            m.pieces_duplicate = c.pieces_duplicate;
            m.pieces_dropped = c.pieces_dropped;
            m.delta_accepted = c.delta_accepted;
            m.delta_forged = c.delta_forged;
            m.store_size = v->state->store_size();
        }
        metrics_.vehicles.push_back(m);
    }
    return metrics_;
}

void Simulator::dispatch(const Event& e)
{
    switch (e.kind) {
    case Ev::base_build: on_base_build(e.a); break;
    case Ev::key_disclose: on_key_disclose(e.a, e.b); break;
    case Ev::delta_gen: on_delta_gen(e.a, e.b); break;
    case Ev::revocation: on_revocation(); break;
    case Ev::tick: on_tick(e.a); break;
    case Ev::rsu_fingerprint: on_rsu_fingerprint(e.a); break;
    case Ev::rsu_tick: on_rsu_tick(e.a); break;
    case Ev::trip_start: on_trip_start(e.a); break;
    case Ev::request: on_request(e.a); break;
    case Ev::response: on_response(e.a); break;
    case Ev::cam: on_cam(e.a); break;
    case Ev::adversary: on_adversary(e.a); break;
    case Ev::trip_end: on_trip_end(e.a); break;
    }
}

// ---------------------------------------------------------------------------
// authority side

void Simulator::on_base_build(std::uint32_t g)
{
    const auto piece_budget = static_cast<std::size_t>(config_.bandwidth);
    base_pieces_.clear();
    if (config_.mode == Mode::vehicle_centric) {
        const authority::BaseCrl& base = authority_->build_base_crl(g, piece_budget);
        for (const auto& wp : base.pieces) {
            base_pieces_.push_back(std::make_shared<const WirePiece>(wp));
        }
        fingerprint_ = std::make_shared<const bloom::Fingerprint>(base.fingerprint);
        current_g_ = g;
        metrics_.entry_count = base.entry_count();
        metrics_.fingerprint_bytes = bloom::encode(base.fingerprint).size();
    } else {
        // one unscoped CRL for the whole day
        const auto day_slots = static_cast<std::uint64_t>(std::ceil(86'400.0 / config_.tau_p));
        const auto pieces = authority_->build_baseline_crl(0, day_slots - 1, piece_budget, 1);
        std::uint64_t entries = 0;
        for (const auto& wp : pieces) {
            entries += wp.piece.entries.size();
            base_pieces_.push_back(std::make_shared<const WirePiece>(wp));
        }
        metrics_.entry_count = entries;
    }
    metrics_.piece_count = static_cast<std::uint32_t>(base_pieces_.size());
    for (auto& rsu : rsus_) {
        rsu->requested.clear();
        rsu->cursor = 0;
        rsu->fingerprint_pending = fingerprint_ != nullptr;
    }
    build_bogus();
}

void Simulator::build_bogus()
{
    bogus_pieces_.clear();
    const std::size_t n = base_pieces_.size();
    Rng rng(derive_seed(config_.seed, 6 + current_g_.value_or(0)));
    for (std::size_t j = 0; j < n; ++j) {
        const CrlPiece& genuine = base_pieces_[j]->piece;
        CrlPiece p = genuine;
        for (auto& e : p.entries) {
            e.first_revoked_serial = rng.digest();
            e.chain_value = rng.digest();
        }
        if (p.kind == PieceKind::baseline) {
            p.piece_signature.bytes = rng.bytes(p.piece_signature.bytes.size());
        }
        bogus_pieces_.push_back(std::make_shared<const WirePiece>(WirePiece::from(std::move(p))));
    }
}

void Simulator::on_key_disclose(std::uint32_t g, std::uint32_t i)
{
    latest_key_ = std::make_shared<const KeyDisclosure>(authority_->key_disclosure(g, i, now_));
    latest_key_id_ = next_delta_id_++;
    ++metrics_.keys_disclosed;
    std::erase_if(deltas_, [&](const DeltaOnAir& d) { return d.until <= now_; });
}

void Simulator::on_delta_gen(std::uint32_t g, std::uint32_t i)
{
    if (authority_->base_crl(g) == nullptr) {
        return;
    }
    const Digest key = authority_->schedule(g).chain[i];
    auto pieces = authority_->gen_delta_crl(g, i, key, static_cast<std::size_t>(config_.bandwidth), now_);
    const double until = timing_.disclosure_time(g, i);
    for (auto& p : pieces) {
        if (p.serials.empty()) {
            continue;
        }
        deltas_.push_back({next_delta_id_++, std::make_shared<const DeltaCrlPiece>(std::move(p)), until});
        ++metrics_.delta_pieces_generated;
    }
}

void Simulator::on_revocation()
{
    schedule(now_ + rng_.exponential(timing_.tau_p / config_.delta_revocations), Ev::revocation);
    // first slot whose Δ broadcast window has not opened yet
    const double offset = timing_.policy == DisclosurePolicy::strict ? 0.0 : timing_.tau_p / 2;
    const auto slot = static_cast<std::uint64_t>(std::floor((now_ + offset + timing_.tau_p) / timing_.tau_p)) + 1;
    authority::BatchRecord b;
    b.id = next_batch_id_++;
    b.first_slot = slot;
    const auto chain = cred::derive_serial_chain(rng_.digest(), rng_.digest(), 1);
    b.serials = chain.serials;
    b.chain_values = chain.chain_values;
    authority_->ledger().register_batch(b);
    authority_->ledger().revoke(b.id, slot);
}

// ---------------------------------------------------------------------------
// space and channel

void Simulator::place_in_grid(NodeId id, const Point& p)
{
    snapshot_[id] = p;
    const int cx = std::clamp(static_cast<int>(p.x / cell_), 0, grid_nx_ - 1);
    const int cy = std::clamp(static_cast<int>(p.y / cell_), 0, grid_ny_ - 1);
    grid_[static_cast<std::size_t>(cy * grid_nx_ + cx)].push_back(id);
}

void Simulator::rebuild_grid()
{
    grid_.assign(static_cast<std::size_t>(grid_nx_ * grid_ny_), {});
    for (const auto& v : vehicles_) {
        if (v->active) {
            place_in_grid(v->id, v->trip.position(now_));
        }
    }
    for (const auto& r : rsus_) {
        place_in_grid(r->id, r->pos);
    }
}

Point Simulator::position(NodeId id) const
{
    return snapshot_[id];
}

bool Simulator::try_send(NodeId sender, Message msg, bool budgeted)
{
    Window* window = sender < vehicles_.size() ? &vehicles_[sender]->tx : &rsus_[sender - vehicles_.size()]->tx;
    if (budgeted) {
        window->expire(now_);
        if (static_cast<double>(window->bytes + msg.bytes) > config_.bandwidth) {
            return false;
        }
        window->items.emplace_back(now_, msg.bytes);
        window->bytes += msg.bytes;
        tx_per_second_[sender][static_cast<std::uint64_t>(now_)] += msg.bytes;
    }
    msg.sender = sender;
    msg.serial = next_serial_++;
    ++metrics_.messages_sent;
    metrics_.bytes_sent += msg.bytes;
    if (config_.record_events) {
        log_.push_back({now_, true, sender, sender, msg.kind, msg.serial, msg.bytes, ""});
    }

    const Point from = position(sender);
    const int cx = std::clamp(static_cast<int>(from.x / cell_), 0, grid_nx_ - 1);
    const int cy = std::clamp(static_cast<int>(from.y / cell_), 0, grid_ny_ - 1);
    for (int y = std::max(0, cy - 1); y <= std::min(grid_ny_ - 1, cy + 1); ++y) {
        for (int x = std::max(0, cx - 1); x <= std::min(grid_nx_ - 1, cx + 1); ++x) {
            for (NodeId to : grid_[static_cast<std::size_t>(y * grid_nx_ + x)]) {
                if (to == sender || distance(from, snapshot_[to]) > config_.radio_range) {
                    continue;
                }
                if (to < vehicles_.size() && !vehicles_[to]->active) {
                    continue;
                }
                if (config_.loss_probability > 0.0 && rng_.chance(config_.loss_probability)) {
                    continue;
                }
                deliver(msg, to);
            }
        }
    }
    return true;
}

void Simulator::deliver(const Message& msg, NodeId to)
{
    if (to >= vehicles_.size()) {
        Rsu& rsu = *rsus_[to - vehicles_.size()];
        if (msg.kind != MsgKind::request || !msg.request_valid) {
            return;
        }
        const PieceRequest& req = *msg.request;
        const bool current = config_.mode == Mode::vehicle_centric
                                 ? req.kind == PieceKind::scoped && fingerprint_ &&
                                       req.gamma_crl_index == fingerprint_->gamma_crl_index &&
                                       req.crl_version == fingerprint_->crl_version
                                 : req.kind == PieceKind::baseline;
        if (!current) {
            return;
        }
        if (req.missing_indices.empty()) {
            for (std::size_t j = 0; j < base_pieces_.size(); ++j) {
                rsu.requested[static_cast<std::uint16_t>(j)] = now_;
            }
        }
        for (auto idx : req.missing_indices) {
            if (idx < base_pieces_.size()) {
                rsu.requested[idx] = now_;
            }
        }
        return;
    }
    Vehicle& v = *vehicles_[to];
    std::string outcome = receive(v, msg);
    if (config_.record_events) {
        log_.push_back({now_, false, to, msg.sender, msg.kind, msg.serial, msg.bytes, std::move(outcome)});
    }
}

namespace {

const char* piece_outcome(vehicle::PieceOutcome o)
{
    using vehicle::PieceOutcome;
    switch (o) {
    case PieceOutcome::accepted: return "accepted";
    case PieceOutcome::duplicate: return "duplicate";
    case PieceOutcome::no_fingerprint: return "no_fingerprint";
    case PieceOutcome::stale: return "stale";
    case PieceOutcome::forged: return "forged";
    case PieceOutcome::malformed: return "malformed";
    case PieceOutcome::muted: return "muted";
    }
    return "";
}

const char* delta_outcome(vehicle::DeltaOutcome o)
{
    using vehicle::DeltaOutcome;
    switch (o) {
    case DeltaOutcome::buffered: return "buffered";
    case DeltaOutcome::duplicate: return "duplicate";
    case DeltaOutcome::key_known: return "key_known";
    case DeltaOutcome::too_late: return "too_late";
    case DeltaOutcome::rate_limited: return "rate_limited";
    case DeltaOutcome::buffer_full: return "buffer_full";
    case DeltaOutcome::forged: return "forged";
    case DeltaOutcome::muted: return "muted";
    }
    return "";
}

} // namespace

std::string Simulator::receive(Vehicle& v, const Message& msg)
{
    if (v.role == Role::dos || v.role == Role::delta_flood || !v.state) {
        return "ignored";
    }
    vehicle::VehicleNode& node = *v.state;
    const bool vc = config_.mode == Mode::vehicle_centric;

    if (msg.kind == MsgKind::cam) {
        // beacons are processed for safety anyway; only the carried fingerprint matters here
        if (!vc || !msg.cam->carrier_payload) {
            return "beacon";
        }
        const auto& fp = *msg.cam->carrier_payload;
        const auto& mine = node.fingerprint();
        if (mine && std::make_pair(fp.gamma_crl_index, fp.crl_version) <=
                        std::make_pair(mine->gamma_crl_index, mine->crl_version)) {
            return "beacon";
        }
        return node.handle_carrier(*msg.cam, msg.sender, now_) ? "fingerprint" : "rejected";
    }

    if (vc && node.muted(msg.sender, now_)) {
        ++v.muted_drops;
        return "muted";
    }
    v.rx.expire(now_);
    if (static_cast<double>(v.rx.bytes + msg.bytes) > config_.rx_capacity_factor * config_.bandwidth) {
        ++v.rx_budget_drops;
        return "budget";
    }
    v.rx.items.emplace_back(now_, msg.bytes);
    v.rx.bytes += msg.bytes;

    double cost = 0.0;
    switch (msg.kind) {
    case MsgKind::fingerprint: cost = config_.sig_verify_latency; break;
    case MsgKind::piece: {
        const CrlPiece& p = msg.piece->piece;
        const WirePiece* held = node.piece(p.piece_index);
        const bool duplicate = held != nullptr && held->piece.crl_version == p.crl_version &&
                               held->piece.gamma_crl_index == p.gamma_crl_index;
        if (!duplicate) {
            cost = p.kind == PieceKind::baseline ? config_.sig_verify_latency : config_.bf_check_latency;
        }
        break;
    }
    case MsgKind::request:
        if (v.honest_sender() && !v.response_pending && !node.servable(*msg.request).empty()) {
            cost = config_.sig_verify_latency;
        }
        break;
    default: break;
    }
    const double start = std::max(now_, v.busy_until);
    if (start - now_ > max_backlog) {
        ++v.rx_budget_drops;
        return "backlog";
    }
    const double done = start + cost;
    v.busy_until = done;

    switch (msg.kind) {
    case MsgKind::fingerprint:
        return node.handle_fingerprint(*msg.fingerprint, msg.sender, done) ? "fingerprint" : "rejected";
    case MsgKind::piece: return piece_outcome(node.handle_piece(msg.piece, msg.sender, done));
    case MsgKind::delta: return delta_outcome(node.buffer_delta_piece(*msg.delta, msg.sender, done));
    case MsgKind::key: return node.handle_key_disclosure(*msg.key, done) ? "key" : "rejected";
    case MsgKind::request:
        if (cost == 0.0 || !msg.request_valid) {
            return "request";
        }
        v.response_pending = true;
        v.pending_request = msg.request;
        schedule(done + v.rng.uniform(0.0, config_.response_jitter), Ev::response, v.id);
        return "request";
    case MsgKind::cam: break;
    }
    return "";
}

// ---------------------------------------------------------------------------
// periodic activity

void Simulator::on_tick(std::uint32_t second)
{
    rebuild_grid();
    std::uint32_t cognizant = 0;
    std::uint32_t active = 0;
    const auto slot = static_cast<std::uint64_t>(now_ / timing_.tau_p);
    const bool new_slot = second > 0 && static_cast<std::uint64_t>((now_ - 1.0) / timing_.tau_p) != slot;
    for (const auto& v : vehicles_) {
        if (v->active) {
            ++active;
            if (new_slot && v->state) {
                v->state->prune_before(slot);
            }
        }
        if (v->role == Role::honest && v->state) {
            const auto t = v->state->first_cognizant_time();
            if (t && *t <= now_) {
                ++cognizant;
            }
        }
    }
    metrics_.cognizant_series.push_back(cognizant);
    metrics_.active_series.push_back(active);
    if (second + 1 <= config_.duration) {
        schedule(second + 1.0, Ev::tick, second + 1);
    }
}

void Simulator::on_rsu_fingerprint(std::uint32_t r)
{
    rsus_[r]->fingerprint_pending = fingerprint_ != nullptr;
    schedule(now_ + config_.fingerprint_tx_interval, Ev::rsu_fingerprint, r);
}

void Simulator::on_rsu_tick(std::uint32_t r)
{
    schedule(now_ + config_.piece_tx_interval, Ev::rsu_tick, r);
    Rsu& rsu = *rsus_[r];

    // priority: keys, then Δ pieces, then one requested base piece, then the fingerprint
    if (latest_key_ && (rsu.key_id != latest_key_id_ || now_ - rsu.key_sent >= resend_gap)) {
        Message m;
        m.kind = MsgKind::key;
        m.key = latest_key_;
        m.bytes = encode(*latest_key_).size();
        if (try_send(rsu.id, m, true)) {
            rsu.key_id = latest_key_id_;
            rsu.key_sent = now_;
        }
    }
    for (const auto& d : deltas_) {
        if (d.until <= now_) {
            continue;
        }
        auto it = rsu.delta_sent.find(d.id);
        if (it != rsu.delta_sent.end() && now_ - it->second < resend_gap) {
            continue;
        }
        Message m;
        m.kind = MsgKind::delta;
        m.delta = d.piece;
        m.bytes = delta_piece_overhead + d.piece->serials.size() * Digest::size;
        if (try_send(rsu.id, m, true)) {
            rsu.delta_sent[d.id] = now_;
        }
    }
    std::erase_if(rsu.delta_sent, [&](const auto& kv) {
        return std::none_of(deltas_.begin(), deltas_.end(), [&](const DeltaOnAir& d) { return d.id == kv.first; });
    });

    std::erase_if(rsu.requested, [&](const auto& kv) { return kv.second < now_ - 1.0; });
    if (!rsu.requested.empty() && !base_pieces_.empty()) {
        auto it = rsu.requested.lower_bound(static_cast<std::uint16_t>(rsu.cursor % base_pieces_.size()));
        if (it == rsu.requested.end()) {
            it = rsu.requested.begin();
        }
        Message m;
        m.kind = MsgKind::piece;
        m.piece = base_pieces_[it->first];
        m.bytes = m.piece->bytes.size();
        if (try_send(rsu.id, m, true)) {
            rsu.cursor = it->first + 1u;
        }
    }

    if (rsu.fingerprint_pending && fingerprint_) {
        Message m;
        m.kind = MsgKind::fingerprint;
        m.fingerprint = fingerprint_;
        m.bytes = bloom::encode(*fingerprint_).size();
        if (try_send(rsu.id, m, true)) {
            rsu.fingerprint_pending = false;
        }
    }
}

// ---------------------------------------------------------------------------
// vehicles

void Simulator::ensure_pseudonym(Vehicle& v)
{
    const auto tau = static_cast<std::uint64_t>(config_.tau_p);
    const auto gamma_len = static_cast<std::uint64_t>(config_.gamma);
    const auto gamma = static_cast<std::uint64_t>(now_ / config_.gamma);
    const bool carry = v.carrier && config_.mode == Mode::vehicle_centric && fingerprint_;
    const bool stale_fp = carry && (v.batch_fp_gamma != fingerprint_->gamma_crl_index ||
                                    v.batch_fp_version != fingerprint_->crl_version);
    if (v.batch_gamma != gamma || stale_fp) {
        cred::IssueParams params;
        params.gamma_index = gamma;
        params.tau_p = tau;
        params.gamma_len = gamma_len;
        params.is_carrier = carry;
        if (carry) {
            params.fingerprint = *fingerprint_;
            v.batch_fp_gamma = fingerprint_->gamma_crl_index;
            v.batch_fp_version = fingerprint_->crl_version;
        }
        params.ticket_id = v.id;
        v.batch = cred::issue_batch(params, authority_->pca(), v.rng);
        v.batch_gamma = gamma;
        v.pseudonym.reset();
    }
    const auto slot = static_cast<std::uint64_t>(now_ / config_.tau_p);
    const auto idx = static_cast<std::size_t>(std::min<std::uint64_t>(slot - v.batch->first_slot(),
                                                                      v.batch->size() - 1));
    if (!v.pseudonym || v.pseudonym->index_in_batch != idx + 1) {
        v.pseudonym = std::make_shared<const cred::Pseudonym>(v.batch->pseudonyms[idx]);
        v.key = v.batch->private_keys[idx];
    }
}

void Simulator::on_trip_start(std::uint32_t id)
{
    Vehicle& v = *vehicles_[id];
    v.started = true;
    v.active = true;
    const bool vc = config_.mode == Mode::vehicle_centric;
    v.release = vc ? std::floor(now_ / timing_.gamma_crl_length()) * timing_.gamma_crl_length() : 0.0;
    if (!grid_.empty()) {
        place_in_grid(v.id, v.trip.position(now_));
    }

    const bool attacker = v.role == Role::dos || v.role == Role::delta_flood;
    if (!attacker) {
        vehicle::VehicleConfig vc_cfg;
        vc_cfg.pca = authority_->pca().public_key();
        vc_cfg.timing = timing_;
        vc_cfg.clock_offset =
            config_.max_clock_offset > 0.0 ? v.rng.uniform(-config_.max_clock_offset, config_.max_clock_offset) : 0.0;
        vc_cfg.max_clock_offset = config_.max_clock_offset;
        vc_cfg.delta_buffer_cap = config_.delta_buffer_cap;
        vc_cfg.strike_threshold = config_.strike_threshold;
        vc_cfg.parse_entries = vc || config_.parse_baseline_entries;
        vc_cfg.verify_cache = verify_cache_;
        v.state = std::make_unique<vehicle::VehicleNode>(vc_cfg);
        if (v.carrier && vc) {
            // a carrier knows the fingerprint from its own pseudonym
            ensure_pseudonym(v);
            if (v.pseudonym->carrier_payload) {
                v.state->handle_carrier(*v.pseudonym, v.id, now_);
            }
            if (config_.cam_rate > 0.0) {
                schedule(now_ + v.rng.uniform(0.0, 1.0 / config_.cam_rate), Ev::cam, id);
            }
        }
        schedule(now_ + v.rng.uniform(0.0, config_.request_interval), Ev::request, id);
    } else {
        schedule(now_ + v.rng.uniform(0.0, config_.bogus_interval), Ev::adversary, id);
    }
    if (v.trip.end() < config_.duration) {
        schedule(v.trip.end(), Ev::trip_end, id);
    }
}

void Simulator::on_trip_end(std::uint32_t id)
{
    vehicles_[id]->active = false;
}

void Simulator::on_request(std::uint32_t id)
{
    Vehicle& v = *vehicles_[id];
    if (!v.active) {
        return;
    }
    schedule(now_ + config_.request_interval, Ev::request, id);
    vehicle::VehicleNode& node = *v.state;
    if (!node.wants_pieces()) {
        return;
    }
    if (config_.mode == Mode::vehicle_centric && !node.fingerprint()) {
        return;
    }
    ensure_pseudonym(v);
    auto req = std::make_shared<const PieceRequest>(node.make_request(*v.pseudonym, *v.key));
    Message m;
    m.kind = MsgKind::request;
    m.bytes = encode(*req).size();
    m.request_valid = verify_piece_request(*req, authority_->pca().public_key(), now_);
    m.request = std::move(req);
    try_send(v.id, m, true);
}

void Simulator::on_response(std::uint32_t id)
{
    Vehicle& v = *vehicles_[id];
    v.response_pending = false;
    auto req = std::move(v.pending_request);
    if (!v.active || !req) {
        return;
    }
    const auto idx = v.state->choose_piece(*req, v.rng);
    if (!idx) {
        return;
    }
    Message m;
    m.kind = MsgKind::piece;
    m.piece = v.state->pieces().at(*idx);
    m.bytes = m.piece->bytes.size();
    try_send(v.id, m, true);
}

void Simulator::on_cam(std::uint32_t id)
{
    Vehicle& v = *vehicles_[id];
    if (!v.active) {
        return;
    }
    schedule(now_ + 1.0 / config_.cam_rate, Ev::cam, id);
    ensure_pseudonym(v);
    Message m;
    m.kind = MsgKind::cam;
    m.cam = v.pseudonym;
    m.bytes = cred::encode(*v.pseudonym).size() + cam_body_bytes;
    try_send(v.id, m, false);
}

void Simulator::on_adversary(std::uint32_t id)
{
    Vehicle& v = *vehicles_[id];
    if (!v.active) {
        return;
    }
    schedule(now_ + config_.bogus_interval, Ev::adversary, id);
    Message m;
    if (v.role == Role::dos) {
        if (bogus_pieces_.empty()) {
            return;
        }
        m.kind = MsgKind::piece;
        m.piece = bogus_pieces_[v.rng.below(bogus_pieces_.size())];
        m.bytes = m.piece->bytes.size();
    } else {
        // a Δ piece for the interval whose window is open, stuffed to B
        const double offset = timing_.policy == DisclosurePolicy::strict ? 0.0 : timing_.tau_p / 2;
        const auto slot = static_cast<std::uint64_t>(std::floor((now_ + offset) / timing_.tau_p)) + 1;
        if (slot != v.bogus_slot) {
            DeltaCrlPiece p;
            p.gamma_crl_index = static_cast<std::uint32_t>(slot / timing_.intervals);
            p.interval_index = static_cast<std::uint32_t>(slot % timing_.intervals) + 1;
            p.piece_index = static_cast<std::uint16_t>(v.rng.below(8));
            p.total_pieces = 8;
            const auto count = static_cast<std::size_t>(
                std::max(1.0, (config_.bandwidth - static_cast<double>(delta_piece_overhead)) / Digest::size));
            for (std::size_t j = 0; j < count; ++j) {
                p.serials.push_back(v.rng.digest());
            }
            p.mac = v.rng.digest();
            p.disclosed_prev_key = v.rng.digest();
            v.bogus_delta = std::make_shared<const DeltaCrlPiece>(std::move(p));
            v.bogus_slot = slot;
        }
        m.kind = MsgKind::delta;
        m.delta = v.bogus_delta;
        m.bytes = delta_piece_overhead + v.bogus_delta->serials.size() * Digest::size;
    }
    try_send(v.id, m, false);
}

MetricsLog run_simulation(const SimConfig& config)
{
    Simulator sim(config);
    return sim.run();
}

} // namespace vcrl::sim
