#pragma once

#include <vcrl/bytes.hpp>
#include <vcrl/crypto.hpp>

#include <cstdint>
#include <span>

namespace vcrl::bloom {

struct BloomParams {
    std::uint32_t m = 0; ///< bit count
    std::uint32_t k = 0; ///< hash function count
};

/**
 * Size a filter for n items at false-positive target p.
 *
 * m = ceil(-n ln p / (ln 2)^2) and k = ceil(-log2 p). When the exact
 * false-positive formula at (m, k, n) still exceeds p (the closed forms use the
 * e^{-kn/m} approximation), m grows bit by bit until it does not.
 */
BloomParams bf_params(std::uint64_t n, double p);

/// Exact [1 - (1 - 1/m)^{kn}]^k.
double false_positive_prob(double m, double k, double n);

/// Expected seconds for a query-only attacker to find one false positive:
/// k / (p * hashrate), counting k hash evaluations per trial.
double attack_time(double p, double k, double hashrate);

/// Seconds between clock synchronizations so drift stays within max_error.
double sync_period(double clock_accuracy_ppm, double max_error_seconds);

/// Fingerprint size in bytes for n pieces at false-positive rate p.
std::size_t fingerprint_bytes(std::uint64_t n, double p);

/**
 * Plain Bloom filter over byte strings. Position j is big-endian u32 lane j % 8 of
 * SHA256(SHA256(x) || be32(j / 8)), reduced mod m.
 */
class BloomFilter {
public:
    BloomFilter(std::uint32_t m, std::uint32_t k);
    /// Rebuild from wire fields; bits are packed MSB-first.
    static BloomFilter from_packed(std::uint32_t m, std::uint32_t k, Bytes packed, std::uint64_t n_inserted);

    void insert(ByteView item);
    bool query(ByteView item) const;
    void insert(const Digest& d) { insert(d.view()); }
    bool query(const Digest& d) const { return query(d.view()); }

    std::uint32_t bit_count() const { return m_; }
    std::uint32_t hash_count() const { return k_; }
    std::uint64_t inserted() const { return n_inserted_; }
    std::size_t popcount() const;
    const Bytes& packed_bits() const { return bits_; }
    std::size_t byte_size() const { return bits_.size(); }

    bool operator==(const BloomFilter&) const = default;

private:
    template <typename F>
    void for_each_position(ByteView item, F&& f) const;

    std::uint32_t m_;
    std::uint32_t k_;
    Bytes bits_;
    std::uint64_t n_inserted_ = 0;
};

/// Signed Bloom filter over CRL piece digests for one Γ_CRL.
struct Fingerprint {
    std::uint32_t gamma_crl_index = 0;
    std::uint32_t crl_version = 0;
    std::uint32_t piece_count = 0;
    BloomFilter filter{1, 1};
    crypto::Signature signature;

    bool operator==(const Fingerprint&) const = default;
};

Fingerprint make_fingerprint(std::uint32_t gamma_crl_index, std::uint32_t crl_version,
                             std::span<const Digest> piece_digests, double target_fp, const crypto::SigningKey& pca);

/// Every field except the signature, in wire order.
Bytes fingerprint_signing_payload(const Fingerprint& fp);
bool verify_fingerprint(const Fingerprint& fp, const crypto::PublicKey& pca);

Bytes encode(const Fingerprint& fp);
Fingerprint decode_fingerprint(ByteView bytes);
void write_fingerprint(Writer& w, const Fingerprint& fp);
Fingerprint read_fingerprint(Reader& r);

} // namespace vcrl::bloom
