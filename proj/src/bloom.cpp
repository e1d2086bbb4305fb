#include <vcrl/bloom.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace vcrl::bloom {

namespace {

constexpr std::uint32_t fingerprint_magic = 0x43524c46; // "CRLF"
constexpr std::uint8_t wire_version = 1;

// Guards ceil() against values like 1.0000000000000002 from log arithmetic.
double robust_ceil(double x)
{
    const double r = std::round(x);
    if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) {
        return r;
    }
    return std::ceil(x);
}

} // namespace

BloomParams bf_params(std::uint64_t n, double p)
{
    if (n < 1) {
        throw ParameterError("bf_params: n must be >= 1");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw ParameterError("bf_params: p must lie in (0, 1)");
    }
    const double ln2 = std::log(2.0);
    const double nd = static_cast<double>(n);
    const double m = robust_ceil(-nd * std::log(p) / (ln2 * ln2));
    const double k = robust_ceil(-std::log2(p));
    if (m > std::numeric_limits<std::uint32_t>::max()) {
        throw ParameterError("bf_params: filter too large");
    }
    BloomParams out{static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(std::max(1.0, k))};
    while (false_positive_prob(out.m, out.k, nd) > p) {
        ++out.m;
    }
    return out;
}

double false_positive_prob(double m, double k, double n)
{
    if (n <= 0.0) {
        return 0.0;
    }
    // 1 - (1 - 1/m)^{kn} without cancellation, then raised to k in log space
    const double fill = -std::expm1(k * n * std::log1p(-1.0 / m));
    if (fill <= 0.0) {
        return 0.0;
    }
    return std::exp(k * std::log(fill));
}

double attack_time(double p, double k, double hashrate)
{
    if (!(p > 0.0) || !(k > 0.0) || !(hashrate > 0.0)) {
        throw ParameterError("attack_time: all arguments must be positive");
    }
    return k / (p * hashrate);
}

double sync_period(double clock_accuracy_ppm, double max_error_seconds)
{
    if (!(clock_accuracy_ppm > 0.0) || !(max_error_seconds > 0.0)) {
        throw ParameterError("sync_period: arguments must be positive");
    }
    return max_error_seconds / (clock_accuracy_ppm * 1e-6);
}

std::size_t fingerprint_bytes(std::uint64_t n, double p)
{
    return (bf_params(n, p).m + 7) / 8;
}

// ---------------------------------------------------------------------------

BloomFilter::BloomFilter(std::uint32_t m, std::uint32_t k) : m_(m), k_(k), bits_((m + 7) / 8, 0)
{
    if (m < 1 || k < 1) {
        throw ParameterError("BloomFilter requires m >= 1 and k >= 1");
    }
}

BloomFilter BloomFilter::from_packed(std::uint32_t m, std::uint32_t k, Bytes packed, std::uint64_t n_inserted)
{
    BloomFilter f(m, k);
    if (packed.size() != f.bits_.size()) {
        throw DecodeError("bloom filter bit array has wrong length");
    }
    // padding bits past m must be clear
    if (m % 8 != 0 && (packed.back() & (0xffu >> (m % 8))) != 0) {
        throw DecodeError("bloom filter padding bits set");
    }
    f.bits_ = std::move(packed);
    f.n_inserted_ = n_inserted;
    return f;
}

// Position j is the j-th big-endian u32 of SHA256(SHA256(x) || be32(block)), reduced mod m.
// Independent indices, so a random query matches with probability fill^k; double hashing
// would cap the pattern space near m^2, far above the targets used here.
template <typename F>
void BloomFilter::for_each_position(ByteView item, F&& f) const
{
    const Digest seed = crypto::sha256(item);
    std::uint8_t input[36];
    std::copy(seed.bytes().begin(), seed.bytes().end(), input);
    Digest block;
    for (std::uint32_t j = 0; j < k_; ++j) {
        const std::uint32_t lane = j % 8;
        if (lane == 0) {
            const std::uint32_t b = j / 8;
            input[32] = static_cast<std::uint8_t>(b >> 24);
            input[33] = static_cast<std::uint8_t>(b >> 16);
            input[34] = static_cast<std::uint8_t>(b >> 8);
            input[35] = static_cast<std::uint8_t>(b);
            block = crypto::sha256(ByteView(input, sizeof input));
        }
        const auto& w = block.bytes();
        const std::uint32_t v = (std::uint32_t{w[4 * lane]} << 24) | (std::uint32_t{w[4 * lane + 1]} << 16) |
                                (std::uint32_t{w[4 * lane + 2]} << 8) | std::uint32_t{w[4 * lane + 3]};
        if (!f(v % m_)) {
            return;
        }
    }
}

void BloomFilter::insert(ByteView item)
{
    for_each_position(item, [this](std::uint32_t pos) {
        bits_[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
        return true;
    });
    ++n_inserted_;
}

bool BloomFilter::query(ByteView item) const
{
    bool all = true;
    for_each_position(item, [&](std::uint32_t pos) {
        if ((bits_[pos / 8] & (0x80u >> (pos % 8))) == 0) {
            all = false;
        }
        return all;
    });
    return all;
}

std::size_t BloomFilter::popcount() const
{
    std::size_t c = 0;
    for (auto b : bits_) {
        c += static_cast<std::size_t>(std::popcount(b));
    }
    return c;
}

// ---------------------------------------------------------------------------

Fingerprint make_fingerprint(std::uint32_t gamma_crl_index, std::uint32_t crl_version,
                             std::span<const Digest> piece_digests, double target_fp, const crypto::SigningKey& pca)
{
    const std::uint64_t n = std::max<std::uint64_t>(1, piece_digests.size());
    const BloomParams params = bf_params(n, target_fp);
    Fingerprint fp;
    fp.gamma_crl_index = gamma_crl_index;
    fp.crl_version = crl_version;
    fp.piece_count = static_cast<std::uint32_t>(piece_digests.size());
    fp.filter = BloomFilter(params.m, params.k);
    for (const auto& d : piece_digests) {
        fp.filter.insert(d);
    }
    fp.signature = pca.sign(fingerprint_signing_payload(fp));
    return fp;
}

namespace {

void write_unsigned_part(Writer& w, const Fingerprint& fp)
{
    w.u32(fingerprint_magic);
    w.u8(wire_version);
    w.u32(fp.gamma_crl_index);
    w.u32(fp.crl_version);
    w.u32(fp.piece_count);
    w.u32(fp.filter.bit_count());
    w.u16(static_cast<std::uint16_t>(fp.filter.hash_count()));
    w.var_bytes(fp.filter.packed_bits());
}

} // namespace

Bytes fingerprint_signing_payload(const Fingerprint& fp)
{
    Writer w;
    write_unsigned_part(w, fp);
    return w.take();
}

bool verify_fingerprint(const Fingerprint& fp, const crypto::PublicKey& pca)
{
    if (fp.piece_count != fp.filter.inserted()) {
        return false;
    }
    return crypto::verify_signature(pca, fingerprint_signing_payload(fp), fp.signature);
}

void write_fingerprint(Writer& w, const Fingerprint& fp)
{
    write_unsigned_part(w, fp);
    crypto::write_signature(w, fp.signature);
}

Fingerprint read_fingerprint(Reader& r)
{
    if (r.u32() != fingerprint_magic) {
        throw DecodeError("not a fingerprint");
    }
    if (r.u8() != wire_version) {
        throw DecodeError("unsupported fingerprint version");
    }
    Fingerprint fp;
    fp.gamma_crl_index = r.u32();
    fp.crl_version = r.u32();
    fp.piece_count = r.u32();
    const std::uint32_t m = r.u32();
    const std::uint16_t k = r.u16();
    if (m == 0 || k == 0) {
        throw DecodeError("fingerprint filter parameters must be nonzero");
    }
    Bytes bits = r.var_bytes((std::uint64_t{m} + 7) / 8);
    fp.filter = BloomFilter::from_packed(m, k, std::move(bits), fp.piece_count);
    fp.signature = crypto::read_signature(r);
    return fp;
}

Bytes encode(const Fingerprint& fp)
{
    Writer w;
    write_fingerprint(w, fp);
    return w.take();
}

Fingerprint decode_fingerprint(ByteView bytes)
{
    Reader r(bytes);
    Fingerprint fp = read_fingerprint(r);
    r.expect_done();
    return fp;
}

} // namespace vcrl::bloom
