#pragma once

#include <vcrl/bloom.hpp>
#include <vcrl/bytes.hpp>
#include <vcrl/crypto.hpp>
#include <vcrl/rng.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace vcrl::cred {

/**
 * Short-lived anonymized certificate. Lifetimes are aligned to the global
 * τ_P grid so every batch with the same Γ and τ_P has identical windows.
 */
struct Pseudonym {
    Digest serial;
    std::uint64_t valid_from = 0; ///< seconds
    std::uint64_t valid_to = 0;
    std::uint32_t index_in_batch = 0; ///< 1-based
    crypto::PublicKey subject_key;
    std::optional<bloom::Fingerprint> carrier_payload;
    crypto::Signature issuer_signature;

    bool operator==(const Pseudonym&) const = default;
};

/**
 * One Γ worth of pseudonyms whose serials form a one-way chain:
 *   C_w  = H^w(rnd_seed)
 *   SN_w = H(SN_{w-1} || C_w),  SN_0 = sn_anchor
 * with H plain SHA-256.
 */
struct PseudonymBatch {
    std::uint64_t gamma_index = 0;
    std::uint64_t gamma_len = 0;
    std::uint64_t tau_p = 0;
    Digest sn_anchor;
    Digest rnd_seed;
    std::vector<Pseudonym> pseudonyms;
    /// Owner-side private keys, parallel to pseudonyms; empty after JSON import.
    std::vector<crypto::SigningKey> private_keys;
    std::uint64_t ticket_id = 0;

    std::uint32_t size() const { return static_cast<std::uint32_t>(pseudonyms.size()); }
    /// Global τ_P slot of the first pseudonym.
    std::uint64_t first_slot() const { return gamma_index * (gamma_len / tau_p); }
};

struct RevocationEntry {
    Digest first_revoked_serial;
    Digest chain_value;          ///< C at the first revoked index
    std::uint16_t remaining = 0; ///< pseudonyms after the first one
    std::uint32_t first_slot = 0; ///< τ_P slot the first serial is valid in

    bool operator==(const RevocationEntry&) const = default;
};

inline constexpr std::size_t revocation_entry_size = 72;

struct IssueParams {
    std::uint64_t gamma_index = 0;
    std::uint64_t tau_p = 60;
    std::uint64_t gamma_len = 60;
    bool is_carrier = false;
    std::optional<bloom::Fingerprint> fingerprint;
    std::uint64_t ticket_id = 0;
    crypto::SignatureScheme subject_scheme = crypto::SignatureScheme::mock;
};

PseudonymBatch issue_batch(const IssueParams& params, const crypto::SigningKey& pca, Rng& rng);

/// C_1..C_count and SN_1..SN_count derived from the batch secrets.
struct SerialChain {
    std::vector<Digest> serials;
    std::vector<Digest> chain_values;
};
SerialChain derive_serial_chain(const Digest& sn_anchor, const Digest& rnd_seed, std::uint32_t count);

RevocationEntry make_revocation_entry(const PseudonymBatch& batch, std::uint32_t from_index);
std::vector<Digest> expand_entry(const RevocationEntry& entry);

Bytes pseudonym_signing_payload(const Pseudonym& p);
bool verify_pseudonym(const Pseudonym& p, const crypto::PublicKey& pca);

void write_entry(Writer& w, const RevocationEntry& e);
RevocationEntry read_entry(Reader& r);
void write_pseudonym(Writer& w, const Pseudonym& p);
Pseudonym read_pseudonym(Reader& r);
Bytes encode(const RevocationEntry& e);
Bytes encode(const Pseudonym& p);
Pseudonym decode_pseudonym(ByteView bytes);

nlohmann::json batch_to_json(const PseudonymBatch& batch);
PseudonymBatch batch_from_json(const nlohmann::json& j);

} // namespace vcrl::cred
