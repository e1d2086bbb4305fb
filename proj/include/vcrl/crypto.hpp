#pragma once

#include <vcrl/bytes.hpp>
#include <vcrl/rng.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace vcrl::crypto {

Digest sha256(ByteView data);
/// SHA-256 over the concatenation a || b.
Digest sha256(ByteView a, ByteView b);
Digest hmac_sha256(ByteView key, ByteView data);

/// Constant-time equality; false when sizes differ.
bool constant_time_equal(ByteView a, ByteView b);

// Domain tags for the one-way key chain.
inline constexpr std::uint8_t chain_step_tag = 0x00;
inline constexpr std::uint8_t mac_key_tag = 0x01;

/// H(x) = SHA-256(0x00 || x), the step of every one-way key chain.
Digest chain_step(const Digest& x);
/// H'(x) = SHA-256(0x01 || x), MAC-key derivation.
Digest mac_key_hash(const Digest& x);

/// [seed, H(seed), H^2(seed), ..., H^length(seed)].
std::vector<Digest> hash_chain(const Digest& seed, std::size_t length);

struct MacKey {
    Digest bytes;
    std::uint32_t interval_index = 0;
};

struct IntervalKeys {
    Digest previous_key; ///< K_{i-1} = H(K_i)
    MacKey mac_key;      ///< K'_i = H'(K_i)
};

IntervalKeys derive_interval_keys(const Digest& key, std::uint32_t interval);

/// True iff H^interval(candidate) == anchor.
bool verify_key_against_anchor(const Digest& candidate, std::uint32_t interval, const Digest& anchor);

Digest mac_compute(const MacKey& key, ByteView payload);
bool mac_verify(const MacKey& key, ByteView payload, const Digest& tag);

// ---------------------------------------------------------------------------
// Signatures

enum class SignatureScheme : std::uint8_t {
    ecdsa_p256 = 1,
    mock = 2,
};

std::string to_string(SignatureScheme scheme);
SignatureScheme parse_signature_scheme(const std::string& name);

inline constexpr std::size_t ecdsa_signature_size = 64; // r || s
inline constexpr std::size_t mock_signature_size = 16;

std::size_t signature_size(SignatureScheme scheme);

struct Signature {
    SignatureScheme scheme = SignatureScheme::mock;
    Bytes bytes;

    bool operator==(const Signature&) const = default;
};

void write_signature(Writer& w, const Signature& sig);
Signature read_signature(Reader& r);
std::size_t encoded_signature_size(SignatureScheme scheme);

class PublicKey {
public:
    PublicKey() = default;
    PublicKey(SignatureScheme scheme, Bytes encoded) : scheme_(scheme), encoded_(std::move(encoded)) {}

    SignatureScheme scheme() const { return scheme_; }
    /// DER SubjectPublicKeyInfo for ECDSA, the shared secret for the mock scheme.
    const Bytes& encoded() const { return encoded_; }

    bool operator==(const PublicKey&) const = default;

private:
    SignatureScheme scheme_ = SignatureScheme::mock;
    Bytes encoded_;
};

void write_public_key(Writer& w, const PublicKey& key);
PublicKey read_public_key(Reader& r);

/**
 * Private signing key. ECDSA keys live in an OpenSSL EVP_PKEY shared between
 * copies; the mock scheme keeps a 32-byte symmetric secret.
 */
class SigningKey {
public:
    static SigningKey generate(SignatureScheme scheme, Rng& rng);
    static SigningKey generate_ecdsa();
    static SigningKey mock(const Digest& secret);

    SignatureScheme scheme() const { return scheme_; }
    Signature sign(ByteView payload) const;
    const PublicKey& public_key() const { return public_; }

private:
    struct EvpHandle;

    SignatureScheme scheme_ = SignatureScheme::mock;
    Digest mock_secret_;
    std::shared_ptr<EvpHandle> evp_;
    PublicKey public_;
};

/// Malformed signatures or keys yield false, never an exception.
bool verify_signature(const PublicKey& key, ByteView payload, const Signature& sig);

// ---------------------------------------------------------------------------
// Per-Γ_CRL key schedule

struct KeySchedule {
    std::uint32_t gamma_crl_index = 0;
    /// chain[0] is the anchor; chain[i-1] == H(chain[i]).
    std::vector<Digest> chain;
    Signature anchor_signature;

    const Digest& anchor() const { return chain.front(); }
    std::uint32_t intervals() const { return static_cast<std::uint32_t>(chain.size() - 1); }
};

Bytes anchor_signing_payload(std::uint32_t gamma_crl_index, const Digest& anchor);
KeySchedule make_key_schedule(std::uint32_t gamma_crl_index, std::uint32_t intervals, const Digest& seed,
                              const SigningKey& pca);
bool verify_anchor(const PublicKey& pca, std::uint32_t gamma_crl_index, const Digest& anchor, const Signature& sig);

} // namespace vcrl::crypto
