#define OPENSSL_SUPPRESS_DEPRECATED

#include <vcrl/crypto.hpp>

#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>
#include <openssl/x509.h>

#include <algorithm>
#include <cstring>

namespace vcrl::crypto {

Digest sha256(ByteView data)
{
    Digest out;
    SHA256(data.data(), data.size(), out.bytes().data());
    return out;
}

Digest sha256(ByteView a, ByteView b)
{
    SHA256_CTX ctx;
    SHA256_Init(&ctx);
    SHA256_Update(&ctx, a.data(), a.size());
    SHA256_Update(&ctx, b.data(), b.size());
    Digest out;
    SHA256_Final(out.bytes().data(), &ctx);
    return out;
}

Digest hmac_sha256(ByteView key, ByteView data)
{
    Digest out;
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(), out.bytes().data(), &len);
    return out;
}

bool constant_time_equal(ByteView a, ByteView b)
{
    if (a.size() != b.size()) {
        return false;
    }
    return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

namespace {

Digest tagged_hash(std::uint8_t tag, const Digest& x)
{
    const std::uint8_t prefix[1] = {tag};
    return sha256(ByteView(prefix, 1), x.view());
}

} // namespace

Digest chain_step(const Digest& x)
{
    return tagged_hash(chain_step_tag, x);
}

Digest mac_key_hash(const Digest& x)
{
    return tagged_hash(mac_key_tag, x);
}

std::vector<Digest> hash_chain(const Digest& seed, std::size_t length)
{
    std::vector<Digest> out;
    out.reserve(length + 1);
    out.push_back(seed);
    for (std::size_t i = 0; i < length; ++i) {
        out.push_back(chain_step(out.back()));
    }
    return out;
}

IntervalKeys derive_interval_keys(const Digest& key, std::uint32_t interval)
{
    if (interval < 1) {
        throw ParameterError("interval index must be >= 1");
    }
    return IntervalKeys{chain_step(key), MacKey{mac_key_hash(key), interval}};
}

bool verify_key_against_anchor(const Digest& candidate, std::uint32_t interval, const Digest& anchor)
{
    if (interval < 1) {
        return false;
    }
    Digest cur = candidate;
    for (std::uint32_t i = 0; i < interval; ++i) {
        cur = chain_step(cur);
    }
    return constant_time_equal(cur.view(), anchor.view());
}

Digest mac_compute(const MacKey& key, ByteView payload)
{
    return hmac_sha256(key.bytes.view(), payload);
}

bool mac_verify(const MacKey& key, ByteView payload, const Digest& tag)
{
    return constant_time_equal(mac_compute(key, payload).view(), tag.view());
}

// ---------------------------------------------------------------------------

std::string to_string(SignatureScheme scheme)
{
    switch (scheme) {
    case SignatureScheme::ecdsa_p256:
        return "ecdsa_p256";
    case SignatureScheme::mock:
        return "mock";
    }
    return "unknown";
}

SignatureScheme parse_signature_scheme(const std::string& name)
{
    if (name == "ecdsa_p256" || name == "ecdsa") return SignatureScheme::ecdsa_p256;
    if (name == "mock") return SignatureScheme::mock;
    throw ParameterError("unknown signature scheme: " + name);
}

std::size_t signature_size(SignatureScheme scheme)
{
    return scheme == SignatureScheme::ecdsa_p256 ? ecdsa_signature_size : mock_signature_size;
}

std::size_t encoded_signature_size(SignatureScheme scheme)
{
    return 1 + 2 + signature_size(scheme);
}

void write_signature(Writer& w, const Signature& sig)
{
    w.u8(static_cast<std::uint8_t>(sig.scheme));
    w.u16(static_cast<std::uint16_t>(sig.bytes.size()));
    w.raw(sig.bytes);
}

Signature read_signature(Reader& r)
{
    Signature sig;
    const std::uint8_t scheme = r.u8();
    if (scheme != 1 && scheme != 2) {
        throw DecodeError("unknown signature scheme id");
    }
    sig.scheme = static_cast<SignatureScheme>(scheme);
    const std::uint16_t len = r.u16();
    const ByteView b = r.raw(len);
    sig.bytes.assign(b.begin(), b.end());
    return sig;
}

void write_public_key(Writer& w, const PublicKey& key)
{
    w.u8(static_cast<std::uint8_t>(key.scheme()));
    w.u16(static_cast<std::uint16_t>(key.encoded().size()));
    w.raw(key.encoded());
}

PublicKey read_public_key(Reader& r)
{
    const std::uint8_t scheme = r.u8();
    if (scheme != 1 && scheme != 2) {
        throw DecodeError("unknown public key scheme id");
    }
    const std::uint16_t len = r.u16();
    const ByteView b = r.raw(len);
    return PublicKey(static_cast<SignatureScheme>(scheme), Bytes(b.begin(), b.end()));
}

struct SigningKey::EvpHandle {
    EVP_PKEY* pkey = nullptr;
    ~EvpHandle() { EVP_PKEY_free(pkey); }
};

SigningKey SigningKey::generate(SignatureScheme scheme, Rng& rng)
{
    if (scheme == SignatureScheme::ecdsa_p256) {
        return generate_ecdsa();
    }
    return mock(rng.digest());
}

SigningKey SigningKey::generate_ecdsa()
{
    SigningKey key;
    key.scheme_ = SignatureScheme::ecdsa_p256;
    key.evp_ = std::make_shared<EvpHandle>();
    key.evp_->pkey = EVP_EC_gen("P-256");
    if (key.evp_->pkey == nullptr) {
        throw std::runtime_error("EC key generation failed");
    }
    unsigned char* der = nullptr;
    const int len = i2d_PUBKEY(key.evp_->pkey, &der);
    if (len <= 0) {
        throw std::runtime_error("public key encoding failed");
    }
    key.public_ = PublicKey(SignatureScheme::ecdsa_p256, Bytes(der, der + len));
    OPENSSL_free(der);
    return key;
}

SigningKey SigningKey::mock(const Digest& secret)
{
    SigningKey key;
    key.scheme_ = SignatureScheme::mock;
    key.mock_secret_ = secret;
    key.public_ = PublicKey(SignatureScheme::mock, Bytes(secret.bytes().begin(), secret.bytes().end()));
    return key;
}

namespace {

Bytes mock_tag(ByteView secret, ByteView payload)
{
    const Digest full = hmac_sha256(secret, payload);
    return Bytes(full.bytes().begin(), full.bytes().begin() + mock_signature_size);
}

struct EvpMdCtx {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    ~EvpMdCtx() { EVP_MD_CTX_free(ctx); }
};

} // namespace

Signature SigningKey::sign(ByteView payload) const
{
    if (scheme_ == SignatureScheme::mock) {
        return Signature{SignatureScheme::mock, mock_tag(mock_secret_.view(), payload)};
    }
    EvpMdCtx md;
    if (EVP_DigestSignInit(md.ctx, nullptr, EVP_sha256(), nullptr, evp_->pkey) != 1) {
        throw std::runtime_error("EVP_DigestSignInit failed");
    }
    std::size_t der_len = 0;
    if (EVP_DigestSign(md.ctx, nullptr, &der_len, payload.data(), payload.size()) != 1) {
        throw std::runtime_error("EVP_DigestSign size query failed");
    }
    Bytes der(der_len);
    if (EVP_DigestSign(md.ctx, der.data(), &der_len, payload.data(), payload.size()) != 1) {
        throw std::runtime_error("EVP_DigestSign failed");
    }
    const unsigned char* p = der.data();
    ECDSA_SIG* sig = d2i_ECDSA_SIG(nullptr, &p, static_cast<long>(der_len));
    if (sig == nullptr) {
        throw std::runtime_error("signature decoding failed");
    }
    const BIGNUM* r = nullptr;
    const BIGNUM* s = nullptr;
    ECDSA_SIG_get0(sig, &r, &s);
    Bytes raw(ecdsa_signature_size);
    BN_bn2binpad(r, raw.data(), 32);
    BN_bn2binpad(s, raw.data() + 32, 32);
    ECDSA_SIG_free(sig);
    return Signature{SignatureScheme::ecdsa_p256, std::move(raw)};
}

namespace {

bool verify_ecdsa(const PublicKey& key, ByteView payload, const Signature& sig)
{
    if (sig.bytes.size() != ecdsa_signature_size) {
        return false;
    }
    const unsigned char* kp = key.encoded().data();
    EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &kp, static_cast<long>(key.encoded().size()));
    if (pkey == nullptr) {
        return false;
    }
    ECDSA_SIG* es = ECDSA_SIG_new();
    BIGNUM* r = BN_bin2bn(sig.bytes.data(), 32, nullptr);
    BIGNUM* s = BN_bin2bn(sig.bytes.data() + 32, 32, nullptr);
    ECDSA_SIG_set0(es, r, s);
    unsigned char* der = nullptr;
    const int der_len = i2d_ECDSA_SIG(es, &der);
    ECDSA_SIG_free(es);

    bool ok = false;
    if (der_len > 0) {
        EvpMdCtx md;
        if (EVP_DigestVerifyInit(md.ctx, nullptr, EVP_sha256(), nullptr, pkey) == 1) {
            ok = EVP_DigestVerify(md.ctx, der, static_cast<std::size_t>(der_len), payload.data(), payload.size()) == 1;
        }
    }
    OPENSSL_free(der);
    EVP_PKEY_free(pkey);
    return ok;
}

} // namespace

bool verify_signature(const PublicKey& key, ByteView payload, const Signature& sig)
{
    if (key.scheme() != sig.scheme) {
        return false;
    }
    if (sig.scheme == SignatureScheme::mock) {
        if (sig.bytes.size() != mock_signature_size || key.encoded().size() != Digest::size) {
            return false;
        }
        return constant_time_equal(mock_tag(key.encoded(), payload), sig.bytes);
    }
    return verify_ecdsa(key, payload, sig);
}

// ---------------------------------------------------------------------------

Bytes anchor_signing_payload(std::uint32_t gamma_crl_index, const Digest& anchor)
{
    Writer w;
    w.u32(0x414e4348); // "ANCH"
    w.u32(gamma_crl_index);
    w.digest(anchor);
    return w.take();
}

KeySchedule make_key_schedule(std::uint32_t gamma_crl_index, std::uint32_t intervals, const Digest& seed,
                              const SigningKey& pca)
{
    if (intervals < 1) {
        throw ParameterError("key schedule needs at least one interval");
    }
    KeySchedule ks;
    ks.gamma_crl_index = gamma_crl_index;
    ks.chain = hash_chain(seed, intervals);
    std::reverse(ks.chain.begin(), ks.chain.end());
    ks.anchor_signature = pca.sign(anchor_signing_payload(gamma_crl_index, ks.anchor()));
    return ks;
}

bool verify_anchor(const PublicKey& pca, std::uint32_t gamma_crl_index, const Digest& anchor, const Signature& sig)
{
    return verify_signature(pca, anchor_signing_payload(gamma_crl_index, anchor), sig);
}

} // namespace vcrl::crypto
