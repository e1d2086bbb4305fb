#pragma once

#include <vcrl/bloom.hpp>
#include <vcrl/credentials.hpp>
#include <vcrl/crypto.hpp>
#include <vcrl/messages.hpp>
#include <vcrl/rng.hpp>

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vcrl::vehicle {

using NodeId = std::uint32_t;

/**
 * Memo of signature checks keyed by a digest of the signed message. One
 * broadcast reaches many receivers; a simulation shares one cache so each
 * distinct message is verified once.
 */
class VerifyCache {
public:
    template <typename F>
    bool check(const Digest& key, F&& verify)
    {
        auto it = memo_.find(key);
        if (it != memo_.end()) {
            return it->second;
        }
        const bool ok = verify();
        memo_.emplace(key, ok);
        return ok;
    }
    std::size_t size() const { return memo_.size(); }

private:
    std::unordered_map<Digest, bool, DigestHash> memo_;
};

/// Classic token bucket; `take` spends one token if available.
class TokenBucket {
public:
    TokenBucket(double rate, double burst) : rate_(rate), burst_(burst), tokens_(burst) {}
    bool take(double now);

private:
    double rate_;
    double burst_;
    double tokens_;
    double last_ = 0.0;
};

struct VehicleConfig {
    crypto::PublicKey pca;
    Timing timing;
    double clock_offset = 0.0;     ///< local clock minus true time
    double max_clock_offset = 0.0; ///< bound every honest clock is assumed to respect
    std::size_t delta_buffer_cap = 1u << 20; ///< bytes
    double delta_rate = 4.0;       ///< Δ pieces per second per sender
    double delta_burst = 4.0;
    std::uint32_t strike_threshold = 1;
    double mute_seconds = -1.0;    ///< negative means one τ_P
    bool parse_entries = true;     ///< false skips filling the revocation store
    std::shared_ptr<VerifyCache> verify_cache;
};

enum class PieceOutcome : std::uint8_t {
    accepted,
    duplicate,
    no_fingerprint,
    stale,         ///< header names another Γ_CRL or version; ignored without penalty
    forged,        ///< Bloom-filter miss or bad signature; sender gets a strike
    malformed,
    muted,
};

enum class DeltaOutcome : std::uint8_t {
    buffered,
    duplicate,
    key_known,     ///< the interval's key is already out
    too_late,      ///< arrived past the local-clock-adjusted disclosure time
    rate_limited,
    buffer_full,
    forged,        ///< the piece's disclosed previous key fails the anchor check
    muted,
};

struct ValidationResult {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

struct NodeCounters {
    std::uint64_t pieces_accepted = 0;
    std::uint64_t pieces_forged = 0;
    std::uint64_t pieces_duplicate = 0;
    std::uint64_t pieces_dropped = 0; ///< no fingerprint, stale, muted or malformed
    std::uint64_t delta_accepted = 0;
    std::uint64_t delta_forged = 0;
    std::uint64_t delta_dropped = 0;
    std::uint64_t misbehavior = 0;
};

/**
 * OBU-side CRL state machine. Purely event-driven: the caller supplies the
 * true time of every event and the node converts it to its local clock where
 * the protocol depends on it.
 */
class VehicleNode {
public:
    explicit VehicleNode(VehicleConfig config);

    double local_time(double now) const { return now + config_.clock_offset; }

    bool handle_fingerprint(const bloom::Fingerprint& fp, NodeId sender, double now);
    /// Fingerprint embedded in a carrier pseudonym; only the pseudonym's issuer signature is checked.
    bool handle_carrier(const cred::Pseudonym& carrier, NodeId sender, double now);
    /// Accepted pieces are held by pointer so a simulation can share one copy across nodes.
    PieceOutcome handle_piece(std::shared_ptr<const WirePiece> piece, NodeId sender, double now);
    PieceOutcome handle_piece(const WirePiece& piece, NodeId sender, double now);

    bool handle_key_disclosure(const KeyDisclosure& kd, double now);
    DeltaOutcome buffer_delta_piece(const DeltaCrlPiece& piece, NodeId sender, double now);
    ValidationResult validate_on_key_disclosure(std::uint32_t gamma_crl_index, std::uint32_t interval, const Digest& key,
                                                double now);

    bool is_revoked(const Digest& serial, std::uint64_t slot) const;
    /// Drops store entries for slots before `slot` and buffers of earlier Γ_CRLs.
    void prune_before(std::uint64_t slot);

    bool verify_request(const PieceRequest& req, double now) const;
    /// Requested indices this node holds, ascending.
    std::vector<std::uint16_t> servable(const PieceRequest& req) const;
    std::optional<std::uint16_t> choose_piece(const PieceRequest& req, Rng& rng) const;
    /// verify_request then choose_piece.
    const WirePiece* answer_request(const PieceRequest& req, double now, Rng& rng) const;

    /// Indices still needed; empty when cognizant or when nothing is known about the CRL.
    std::vector<std::uint16_t> missing() const;
    bool wants_pieces() const;
    PieceRequest make_request(const cred::Pseudonym& pseudonym, const crypto::SigningKey& key) const;

    bool cognizant() const { return cognizant_; }
    std::optional<double> first_cognizant_time() const { return first_cognizant_; }
    bool muted(NodeId sender, double now) const;
    bool anchor_known(std::uint32_t gamma_crl_index) const { return anchors_.count(gamma_crl_index) != 0; }
    bool key_known(std::uint32_t gamma_crl_index, std::uint32_t interval) const;

    const std::optional<bloom::Fingerprint>& fingerprint() const { return fingerprint_; }
    const std::map<std::uint16_t, std::shared_ptr<const WirePiece>>& pieces() const { return pieces_; }
    const WirePiece* piece(std::uint16_t index) const;
    std::size_t store_size() const;
    std::size_t delta_buffer_bytes() const { return delta_bytes_; }
    const NodeCounters& counters() const { return counters_; }
    const std::map<std::uint64_t, std::vector<Digest>>& revocation_store() const { return store_; }

    nlohmann::json to_json() const;

    static std::vector<std::pair<Digest, std::uint64_t>> parse_crl_piece(const CrlPiece& piece);

private:
    struct Sender {
        std::uint32_t strikes = 0;
        double muted_until = -1.0;
        std::optional<TokenBucket> bucket;
    };
    struct Buffered {
        DeltaCrlPiece piece;
        double received = 0.0;
        NodeId sender = 0;
        std::size_t bytes = 0;
    };
    using IntervalKey = std::pair<std::uint32_t, std::uint32_t>; // (Γ_CRL, interval)

    void strike(NodeId sender, double now);
    bool check_signature(const Digest& memo_key, ByteView payload, const crypto::Signature& sig,
                         const crypto::PublicKey& key) const;
    bool learn_anchor(std::uint32_t gamma_crl_index, const Digest& anchor, const crypto::Signature& sig);
    bool adopt_fingerprint(const bloom::Fingerprint& fp, double now);
    void merge(std::vector<std::pair<Digest, std::uint64_t>> items);
    void set_cognizant(double now);

    VehicleConfig config_;
    std::optional<bloom::Fingerprint> fingerprint_;
    std::map<std::uint16_t, std::shared_ptr<const WirePiece>> pieces_;
    std::optional<std::uint32_t> baseline_version_;
    std::optional<std::uint16_t> baseline_total_;
    std::map<std::uint32_t, Digest> anchors_;
    std::map<std::uint32_t, std::uint32_t> known_upto_; ///< Γ_CRL -> highest interval with a known key
    std::map<IntervalKey, std::vector<Buffered>> delta_buffer_;
    std::size_t delta_bytes_ = 0;
    std::map<std::uint64_t, std::vector<Digest>> store_;
    mutable std::unordered_map<NodeId, Sender> senders_;
    bool cognizant_ = false;
    std::optional<double> first_cognizant_;
    NodeCounters counters_;
};

/// Worst-case Δ buffer a single unthrottled sender can force: B bytes/s for one τ_P.
double delta_buffer_worst_case(double bandwidth_bytes_per_s, double tau_p_seconds);

} // namespace vcrl::vehicle
