#pragma once

#include <vcrl/bytes.hpp>
#include <vcrl/credentials.hpp>
#include <vcrl/crypto.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace vcrl {

/// A key or piece was requested outside its disclosure window.
class ScheduleError : public StateError {
public:
    using StateError::StateError;
};

enum class DisclosurePolicy : std::uint8_t {
    strict,    ///< K_i released at the start of interval i
    optimized, ///< K_i released at the midpoint of interval i-1
};

/**
 * Maps Γ_CRL-relative interval numbers onto the global τ_P grid.
 * Interval i (1-based) of Γ_CRL g is global slot g*N + i - 1.
 */
struct Timing {
    double tau_p = 60.0;
    std::uint32_t intervals = 60; ///< N = Γ_CRL / τ_P
    DisclosurePolicy policy = DisclosurePolicy::optimized;

    std::uint64_t slot_of(std::uint32_t gamma_crl, std::uint32_t interval) const
    {
        return std::uint64_t{gamma_crl} * intervals + interval - 1;
    }
    double interval_start(std::uint32_t gamma_crl, std::uint32_t interval) const
    {
        return static_cast<double>(slot_of(gamma_crl, interval)) * tau_p;
    }
    /// Earliest time K_interval may be released.
    double disclosure_time(std::uint32_t gamma_crl, std::uint32_t interval) const
    {
        const double start = interval_start(gamma_crl, interval);
        return policy == DisclosurePolicy::strict ? start : start - tau_p / 2;
    }
    double gamma_crl_length() const { return tau_p * intervals; }
};

enum class PieceKind : std::uint8_t {
    scoped = 1,   ///< vehicle-centric base-CRL piece, authenticated by the fingerprint
    baseline = 2, ///< full-day CRL piece, individually signed
};

struct CrlPiece {
    PieceKind kind = PieceKind::scoped;
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t crl_version = 0;
    std::uint16_t piece_index = 0;
    std::uint16_t total_pieces = 0;
    Digest tesla_anchor;                  ///< scoped only
    crypto::Signature anchor_signature;   ///< scoped only
    std::vector<cred::RevocationEntry> entries;
    crypto::Signature piece_signature;    ///< baseline only

    bool operator==(const CrlPiece&) const = default;
};

/// Encoded size of everything in a piece except the entries.
std::size_t crl_piece_overhead(PieceKind kind, crypto::SignatureScheme scheme);

Bytes encode(const CrlPiece& piece);
CrlPiece decode_crl_piece(ByteView bytes);
/// Bytes a baseline piece signature covers: the encoding up to the signature.
Bytes baseline_signing_payload(const CrlPiece& piece);

/// A piece together with its encoding and SHA-256 digest, computed once.
struct WirePiece {
    CrlPiece piece;
    Bytes bytes;
    Digest digest;

    static WirePiece from(CrlPiece piece);
    static WirePiece from_bytes(Bytes bytes);
};

struct DeltaCrlPiece {
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t interval_index = 0;
    std::uint16_t piece_index = 0;
    std::uint16_t total_pieces = 0;
    std::vector<Digest> serials;
    Digest mac;                ///< MAC(K'_i, header || serials)
    Digest disclosed_prev_key; ///< K_{i-1}

    bool operator==(const DeltaCrlPiece&) const = default;
};

inline constexpr std::size_t delta_piece_overhead = 4 + 1 + 4 + 4 + 2 + 2 + 4 + 32 + 32;

/// The MACed part of a Δ piece (ζ).
Bytes delta_mac_payload(const DeltaCrlPiece& piece);
Bytes encode(const DeltaCrlPiece& piece);
DeltaCrlPiece decode_delta_piece(ByteView bytes);

/// RSU heartbeat releasing K_i; carries the signed anchor so receivers without base pieces can check it.
struct KeyDisclosure {
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t interval_index = 0;
    Digest key;
    Digest anchor;
    crypto::Signature anchor_signature;

    bool operator==(const KeyDisclosure&) const = default;
};

Bytes encode(const KeyDisclosure& kd);
KeyDisclosure decode_key_disclosure(ByteView bytes);

struct PieceRequest {
    PieceKind kind = PieceKind::scoped;
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t crl_version = 0;
    /// Empty means "anything": a baseline requester that has not learned the piece count yet.
    std::vector<std::uint16_t> missing_indices;
    cred::Pseudonym requester_pseudonym;
    crypto::Signature signature;

    bool operator==(const PieceRequest&) const = default;
};

Bytes request_signing_payload(const PieceRequest& req);
PieceRequest make_piece_request(PieceKind kind, std::uint32_t gamma_crl_index, std::uint32_t crl_version,
                                std::vector<std::uint16_t> missing, const cred::Pseudonym& pseudonym,
                                const crypto::SigningKey& pseudonym_key);
/// Signature under the embedded pseudonym, pseudonym issued by the PCA and valid at `now`.
bool verify_piece_request(const PieceRequest& req, const crypto::PublicKey& pca, double now);
Bytes encode(const PieceRequest& req);
PieceRequest decode_piece_request(ByteView bytes);

} // namespace vcrl
