#pragma once

#include <vcrl/bloom.hpp>
#include <vcrl/credentials.hpp>
#include <vcrl/crypto.hpp>
#include <vcrl/messages.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace vcrl::authority {

/// Issuer-side view of one batch: everything needed to build entries for it.
struct BatchRecord {
    std::uint64_t id = 0;
    std::uint64_t first_slot = 0; ///< global τ_P slot of pseudonym 1
    std::vector<Digest> serials;
    std::vector<Digest> chain_values; ///< C_w for w = 1..D

    std::uint32_t size() const { return static_cast<std::uint32_t>(serials.size()); }
    std::uint64_t last_slot() const { return first_slot + serials.size() - 1; }
};

BatchRecord record_from_batch(std::uint64_t id, const cred::PseudonymBatch& batch);

enum class EventKind : std::uint8_t { revoke, reinstate };

struct LedgerEvent {
    std::uint64_t batch_id = 0;
    EventKind kind = EventKind::revoke;
    std::uint64_t slot = 0; ///< effective from this global slot
};

enum class BatchStatus : std::uint8_t { active, revoked, reinstated };

/**
 * Append-only revocation history. A batch's status at slot s is given by its
 * last event with slot <= s; each batch alternates revoke / reinstate.
 */
class RevocationLedger {
public:
    void register_batch(BatchRecord record);
    bool has_batch(std::uint64_t id) const { return batches_.count(id) != 0; }
    const BatchRecord& batch(std::uint64_t id) const;

    void revoke(std::uint64_t batch_id, std::uint64_t from_slot);
    void reinstate(std::uint64_t batch_id, std::uint64_t at_slot);

    BatchStatus status(std::uint64_t batch_id) const;
    bool is_revoked_at(std::uint64_t batch_id, std::uint64_t slot) const;

    /// Start of the revocation run that lasts through the batch's final slot, if any.
    std::optional<std::uint64_t> terminal_revocation(std::uint64_t batch_id) const;

    const std::vector<LedgerEvent>& events() const { return log_; }
    /// Ids of batches with at least one event, ascending.
    std::vector<std::uint64_t> touched_batches() const;

    /// Brute-force (serial, slot) pairs revoked within [slot_lo, slot_hi].
    std::vector<std::pair<Digest, std::uint64_t>> revoked_serials(std::uint64_t slot_lo, std::uint64_t slot_hi) const;

private:
    const std::vector<LedgerEvent>& history(std::uint64_t batch_id) const;

    std::map<std::uint64_t, BatchRecord> batches_;
    std::map<std::uint64_t, std::vector<LedgerEvent>> per_batch_;
    std::vector<LedgerEvent> log_;
};

struct BaseCrl {
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t crl_version = 0;
    std::vector<WirePiece> pieces;
    bloom::Fingerprint fingerprint;
    crypto::KeySchedule schedule;
    /// batch id -> first slot its base entry covers
    std::map<std::uint64_t, std::uint64_t> covered_from;

    std::size_t entry_count() const;
};

struct AuthorityConfig {
    Timing timing;
    double fingerprint_fp = 1e-30;
};

/**
 * The PCA's revocation side. Owns the ledger, one key schedule per Γ_CRL
 * (generated on first use and kept across rebuilds), and the latest base CRL
 * of each Γ_CRL.
 */
class Authority {
public:
    Authority(AuthorityConfig config, crypto::SigningKey pca, std::uint64_t seed);

    RevocationLedger& ledger() { return ledger_; }
    const RevocationLedger& ledger() const { return ledger_; }
    const Timing& timing() const { return config_.timing; }
    const crypto::SigningKey& pca() const { return pca_; }

    const crypto::KeySchedule& schedule(std::uint32_t gamma_crl_index);

    /// Rebuilds the base CRL for gamma_crl_index from the current ledger; crl_version increments per call.
    const BaseCrl& build_base_crl(std::uint32_t gamma_crl_index, std::size_t bandwidth);
    const BaseCrl* base_crl(std::uint32_t gamma_crl_index) const;

    std::vector<DeltaCrlPiece> gen_delta_crl(std::uint32_t gamma_crl_index, std::uint32_t interval, const Digest& key,
                                             std::size_t bandwidth, double now);

    Digest disclose_key(std::uint32_t gamma_crl_index, std::uint32_t interval, double now);
    KeyDisclosure key_disclosure(std::uint32_t gamma_crl_index, std::uint32_t interval, double now);

    /// Unscoped CRL over [slot_lo, slot_hi] with individually signed pieces (comparison scheme).
    std::vector<WirePiece> build_baseline_crl(std::uint64_t slot_lo, std::uint64_t slot_hi, std::size_t bandwidth,
                                              std::uint32_t version) const;

private:
    AuthorityConfig config_;
    crypto::SigningKey pca_;
    std::uint64_t seed_;
    RevocationLedger ledger_;
    std::map<std::uint32_t, crypto::KeySchedule> schedules_;
    std::map<std::uint32_t, BaseCrl> bases_;
};

/// Even split of `count` items into pieces holding at most `per_piece` each; returns piece boundaries.
std::vector<std::size_t> split_evenly(std::size_t count, std::size_t per_piece);

/**
 * Background revocation load for one day: round(pseudonyms_per_day * rate)
 * revoked pseudonyms, each a one-pseudonym batch at a uniform slot, revoked
 * from that slot.
 */
struct SyntheticDay {
    std::uint64_t pseudonyms_per_day = 1'712'782;
    double revocation_rate = 0.01;
    double tau_p = 60.0;
    double day_seconds = 86'400.0;
};

/// Registers and revokes the day's batches with ids starting at first_id; returns the count.
std::uint64_t populate_synthetic_day(RevocationLedger& ledger, const SyntheticDay& day, std::uint64_t seed,
                                     std::uint64_t first_id = 1);

} // namespace vcrl::authority
