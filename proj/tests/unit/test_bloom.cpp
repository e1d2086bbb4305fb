#include <vcrl/bloom.hpp>
#include <vcrl/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace vcrl;
using namespace vcrl::bloom;

TEST(BloomParams, TenPiecesAt1e20)
{
    // exact false-positive at m = 959 is just above 1e-20, so one more bit is needed
    const BloomParams p = bf_params(10, 1e-20);
    EXPECT_EQ(p.k, 67u);
    EXPECT_EQ(p.m, 960u);
    EXPECT_NEAR((p.m + 7) / 8, 120.0, 6.0);
    EXPECT_LE(false_positive_prob(p.m, p.k, 10), 1e-20);
}

TEST(BloomParams, FrozenValues)
{
    // high-precision evaluation of the closed forms plus the exact-probability bump
    EXPECT_EQ(bf_params(7, 1e-30).m, 1007u);
    EXPECT_EQ(bf_params(7, 1e-30).k, 100u);
    EXPECT_EQ(bf_params(1, 0.5).m, 2u);
    EXPECT_EQ(bf_params(1, 0.5).k, 1u);
}

TEST(BloomParams, RejectsBadInput)
{
    EXPECT_THROW(bf_params(0, 0.1), ParameterError);
    EXPECT_THROW(bf_params(5, 0.0), ParameterError);
    EXPECT_THROW(bf_params(5, 1.0), ParameterError);
}

TEST(BloomAnalysis, FalsePositiveProb)
{
    EXPECT_NEAR(false_positive_prob(22, 3, 3), 0.0400316610596959, 1e-12);
    EXPECT_EQ(false_positive_prob(100, 5, 0), 0.0);
}

TEST(BloomAnalysis, ChosenInsertionGrowth)
{
    // 100-byte filter at k = 67: values match the published curve
    const double p5 = false_positive_prob(800, 67, 5);
    const double p10 = false_positive_prob(800, 67, 10);
    EXPECT_NEAR(p5 / 6.3911e-32, 1.0, 1e-3);
    EXPECT_NEAR(p10 / 3.2539e-17, 1.0, 1e-3);
    EXPECT_GT(p10 / p5, 1e10);
}

TEST(BloomAnalysis, AttackTime)
{
    EXPECT_NEAR(attack_time(1e-20, 67, 1.6e18), 4187.5, 1e-6);
    EXPECT_NEAR(attack_time(1e-22, 73, 1.6e18) / 3600.0, 126.73611, 1e-4);
    EXPECT_NEAR(attack_time(1e-23, 76, 1.6e18) / 3600.0, 1319.4444, 1e-3);
    EXPECT_THROW(attack_time(0, 1, 1), ParameterError);
}

TEST(BloomAnalysis, SyncPeriod)
{
    EXPECT_NEAR(sync_period(20, 1), 50'000.0, 1e-6);
    EXPECT_NEAR(sync_period(1, 1), 1e6, 1e-3);
    EXPECT_NEAR(sync_period(40, 2), 50'000.0, 1e-6);
}

TEST(BloomAnalysis, FingerprintVersusSha1List)
{
    // 20 pieces: 400 bytes of SHA-1 digests against roughly 300 bytes of filter
    const double bf = static_cast<double>(fingerprint_bytes(20, 1e-25));
    EXPECT_NEAR(bf, 311.0, 31.1);
    EXPECT_LT(bf, 400.0);
}

TEST(BloomFilter, EmptyQueriesFalse)
{
    BloomFilter f(959, 67);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        EXPECT_FALSE(f.query(rng.digest()));
    }
    EXPECT_EQ(f.popcount(), 0u);
}

TEST(BloomFilter, NoFalseNegativesAndPopcountBound)
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = 1 + rng.below(50);
        const BloomParams p = bf_params(n, 1e-6);
        BloomFilter f(p.m, p.k);
        std::vector<Digest> items;
        for (std::uint64_t i = 0; i < n; ++i) {
            items.push_back(rng.digest());
            f.insert(items.back());
        }
        for (const auto& d : items) {
            EXPECT_TRUE(f.query(d));
        }
        EXPECT_LE(f.popcount(), static_cast<std::size_t>(p.k) * n);
        EXPECT_EQ(f.inserted(), n);
    }
}

TEST(BloomFilter, FrozenPositions)
{
    // computed independently from the same counter-mode derivation
    std::array<std::uint8_t, 32> x{};
    std::iota(x.begin(), x.end(), std::uint8_t{0});
    BloomFilter f(1000, 10);
    f.insert(ByteView(x.data(), x.size()));
    std::set<std::uint32_t> set;
    for (std::uint32_t i = 0; i < 1000; ++i) {
        if (f.packed_bits()[i / 8] & (0x80u >> (i % 8))) {
            set.insert(i);
        }
    }
    EXPECT_EQ(set, (std::set<std::uint32_t>{573, 409, 32, 766, 973, 0, 502, 530, 203, 740}));
}

TEST(BloomFilter, EmpiricalRateNearTarget)
{
    // per filter the rate is fill^k exactly; the formula is its mean over filters
    const BloomParams p = bf_params(100, 1e-2);
    Rng rng(3);
    const int filters = 40;
    const int q = 20'000;
    long total_hits = 0;
    for (int t = 0; t < filters; ++t) {
        BloomFilter f(p.m, p.k);
        for (int i = 0; i < 100; ++i) {
            f.insert(rng.digest());
        }
        int hits = 0;
        for (int i = 0; i < q; ++i) {
            hits += f.query(rng.digest()) ? 1 : 0;
        }
        const double cond = std::pow(static_cast<double>(f.popcount()) / p.m, p.k);
        const double sigma = std::sqrt(cond * (1 - cond) / q);
        EXPECT_NEAR(static_cast<double>(hits) / q, cond, 5 * sigma) << t; // 40 comparisons
        total_hits += hits;
    }
    const double mean = static_cast<double>(total_hits) / (static_cast<double>(filters) * q);
    EXPECT_NEAR(mean, false_positive_prob(p.m, p.k, 100), 0.1 * false_positive_prob(p.m, p.k, 100));
}

TEST(Fingerprint, SignEncodeDecode)
{
    Rng rng(4);
    const auto pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    std::vector<Digest> digests{rng.digest(), rng.digest(), rng.digest()};
    const Fingerprint fp = make_fingerprint(2, 5, digests, 1e-20, pca);
    EXPECT_EQ(fp.piece_count, 3u);
    EXPECT_EQ(fp.filter.inserted(), 3u);
    EXPECT_TRUE(verify_fingerprint(fp, pca.public_key()));
    for (const auto& d : digests) {
        EXPECT_TRUE(fp.filter.query(d));
    }
    const Fingerprint back = decode_fingerprint(encode(fp));
    EXPECT_EQ(back, fp);

    Fingerprint tampered = fp;
    tampered.crl_version = 6;
    EXPECT_FALSE(verify_fingerprint(tampered, pca.public_key()));
    Bytes bad = encode(fp);
    bad[0] ^= 0xff;
    EXPECT_THROW(decode_fingerprint(bad), DecodeError);
}

TEST(Fingerprint, EmptyCrlIsValid)
{
    Rng rng(5);
    const auto pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    const Fingerprint fp = make_fingerprint(0, 1, {}, 1e-20, pca);
    EXPECT_EQ(fp.piece_count, 0u);
    EXPECT_TRUE(verify_fingerprint(fp, pca.public_key()));
}
