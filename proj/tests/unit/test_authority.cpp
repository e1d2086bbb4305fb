#include <vcrl/authority.hpp>
#include <vcrl/vehicle.hpp>

#include <gtest/gtest.h>

#include <set>

using namespace vcrl;
using namespace vcrl::authority;

namespace {

constexpr std::uint32_t N = 60;

Timing hour_timing(DisclosurePolicy policy = DisclosurePolicy::optimized)
{
    return Timing{60.0, N, policy};
}

struct World {
    Rng rng;
    Authority auth;
    std::uint64_t next_id = 1;

    explicit World(std::uint64_t seed, DisclosurePolicy policy = DisclosurePolicy::optimized)
        : rng(seed), auth(AuthorityConfig{hour_timing(policy), 1e-20},
                          crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng), seed)
    {
    }

    /// Registers a batch of `size` pseudonyms starting at global slot `first`.
    std::uint64_t batch(std::uint64_t first, std::uint32_t size)
    {
        const auto chain = cred::derive_serial_chain(rng.digest(), rng.digest(), size);
        BatchRecord r{next_id++, first, chain.serials, chain.chain_values};
        auth.ledger().register_batch(r);
        return r.id;
    }

    std::vector<DeltaCrlPiece> delta(std::uint32_t g, std::uint32_t i, std::size_t bw = 10'240)
    {
        const Digest key = auth.schedule(g).chain[i];
        return auth.gen_delta_crl(g, i, key, bw, auth.timing().disclosure_time(g, i) - 1.0);
    }

    std::set<Digest> delta_serials(std::uint32_t g, std::uint32_t i)
    {
        std::set<Digest> out;
        for (const auto& p : delta(g, i)) {
            out.insert(p.serials.begin(), p.serials.end());
        }
        return out;
    }
};

} // namespace

TEST(Ledger, RevokeReinstateRules)
{
    World w(1);
    const auto id = w.batch(10, 5);
    auto& l = w.auth.ledger();
    EXPECT_THROW(l.reinstate(id, 11), StateError);
    l.revoke(id, 11);
    EXPECT_THROW(l.revoke(id, 12), StateError);
    EXPECT_THROW(l.reinstate(id, 11), StateError);
    l.reinstate(id, 13);
    EXPECT_EQ(l.status(id), BatchStatus::reinstated);
    EXPECT_FALSE(l.is_revoked_at(id, 10));
    EXPECT_TRUE(l.is_revoked_at(id, 11));
    EXPECT_TRUE(l.is_revoked_at(id, 12));
    EXPECT_FALSE(l.is_revoked_at(id, 13));
    EXPECT_FALSE(l.terminal_revocation(id).has_value());
    l.revoke(id, 14);
    EXPECT_EQ(l.terminal_revocation(id), 14u);
    EXPECT_EQ(l.events().size(), 3u);
    EXPECT_THROW(l.batch(999), ParameterError);
}

TEST(Ledger, RevokedSerialsBruteForce)
{
    World w(2);
    const auto id = w.batch(0, 4);
    w.auth.ledger().revoke(id, 2);
    const auto got = w.auth.ledger().revoked_serials(0, 100);
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0].first, w.auth.ledger().batch(id).serials[2]);
    EXPECT_EQ(got[0].second, 2u);
    EXPECT_EQ(got[1].second, 3u);
}

TEST(BaseCrl, EmptyLedgerGivesSignedEmptyFingerprint)
{
    World w(3);
    const BaseCrl& b = w.auth.build_base_crl(0, 10'240);
    EXPECT_TRUE(b.pieces.empty());
    EXPECT_EQ(b.fingerprint.piece_count, 0u);
    EXPECT_TRUE(bloom::verify_fingerprint(b.fingerprint, w.auth.pca().public_key()));
    EXPECT_EQ(b.crl_version, 1u);
    EXPECT_EQ(w.auth.build_base_crl(0, 10'240).crl_version, 2u);
}

TEST(BaseCrl, ScopedEntryCountGivesSixPieces)
{
    // 714 entries of 72 bytes at a 10 KB/s budget
    World w(4);
    for (int j = 0; j < 714; ++j) {
        const std::uint64_t slot = w.rng.below(N);
        w.auth.ledger().revoke(w.batch(slot, 1), slot);
    }
    const BaseCrl& b = w.auth.build_base_crl(0, 10'240);
    EXPECT_EQ(b.entry_count(), 714u);
    ASSERT_EQ(b.pieces.size(), 6u);
    for (const auto& wp : b.pieces) {
        EXPECT_LE(wp.bytes.size(), 10'240u);
        EXPECT_EQ(wp.piece.total_pieces, 6u);
        EXPECT_EQ(wp.piece.tesla_anchor, b.schedule.anchor());
        EXPECT_TRUE(b.fingerprint.filter.query(wp.digest));
    }
    EXPECT_TRUE(bloom::verify_fingerprint(b.fingerprint, w.auth.pca().public_key()));
}

TEST(BaseCrl, SkipsExpiredAndFuture)
{
    World w(5);
    auto& l = w.auth.ledger();
    const auto expired = w.batch(0, 10);   // ends in Γ_CRL 0
    const auto spanning = w.batch(55, 10); // slots 55..64
    const auto future = w.batch(130, 5);   // Γ_CRL 2
    l.revoke(expired, 2);
    l.revoke(spanning, 57);
    l.revoke(future, 130);
    const BaseCrl& b = w.auth.build_base_crl(1, 10'240);
    ASSERT_EQ(b.entry_count(), 1u);
    const auto& e = b.pieces[0].piece.entries[0];
    EXPECT_EQ(e.first_slot, 60u);
    EXPECT_EQ(e.first_revoked_serial, l.batch(spanning).serials[5]);
    EXPECT_EQ(e.remaining, 4u);
}

TEST(BaseCrl, EntriesPlusDeltasMatchLedger)
{
    // safety and soundness: what a vehicle can learn for a Γ_CRL equals the ledger's revoked set
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
        World w(seed);
        auto& l = w.auth.ledger();
        const std::uint32_t g = 1;
        for (int j = 0; j < 80; ++j) {
            const std::uint64_t first = 30 + w.rng.below(120);
            const auto size = static_cast<std::uint32_t>(1 + w.rng.below(12));
            const auto id = w.batch(first, size);
            if (w.rng.chance(0.3)) {
                continue;
            }
            std::uint64_t s = first + w.rng.below(size);
            l.revoke(id, s);
            if (w.rng.chance(0.4)) {
                l.reinstate(id, s + 1 + w.rng.below(4));
            }
        }
        const BaseCrl& base = w.auth.build_base_crl(g, 4'096);
        const std::uint64_t lo = w.auth.timing().slot_of(g, 1);
        const std::uint64_t hi = lo + N - 1;
        std::set<std::pair<Digest, std::uint64_t>> learned;
        for (const auto& wp : base.pieces) {
            EXPECT_LE(wp.bytes.size(), 4'096u);
            for (const auto& [serial, slot] : vehicle::VehicleNode::parse_crl_piece(wp.piece)) {
                if (slot >= lo && slot <= hi) {
                    learned.emplace(serial, slot);
                }
            }
        }
        for (std::uint32_t i = 1; i <= N; ++i) {
            for (const auto& p : w.delta(g, i, 1'024)) {
                EXPECT_LE(encode(p).size(), 1'024u);
                for (const auto& s : p.serials) {
                    learned.emplace(s, w.auth.timing().slot_of(g, i));
                }
            }
        }
        const auto truth = l.revoked_serials(lo, hi);
        using Known = std::set<std::pair<Digest, std::uint64_t>>;
        EXPECT_EQ(learned, Known(truth.begin(), truth.end())) << seed;
    }
}

TEST(DeltaCrl, TimelineAccumulates)
{
    // one vehicle revoked during interval i-1, three more during interval i
    World w(6);
    auto& l = w.auth.ledger();
    w.auth.build_base_crl(0, 10'240);
    const std::uint32_t i = 10;
    std::vector<std::uint64_t> ids;
    for (int j = 0; j < 4; ++j) {
        ids.push_back(w.batch(0, N));
    }
    l.revoke(ids[0], i - 1);
    EXPECT_EQ(w.delta_serials(0, i).size(), 1u);
    for (int j = 1; j < 4; ++j) {
        l.revoke(ids[j], i);
    }
    const auto next = w.delta_serials(0, i + 1);
    EXPECT_EQ(next.size(), 4u);
    EXPECT_TRUE(next.count(l.batch(ids[0]).serials[i]));
}

TEST(DeltaCrl, ReinstatementDropsSerials)
{
    World w(7);
    auto& l = w.auth.ledger();
    w.auth.build_base_crl(0, 10'240);
    const auto a = w.batch(0, N);
    const auto b = w.batch(0, N);
    const auto c = w.batch(0, N);
    l.revoke(a, 4); // interval 5
    l.revoke(b, 4);
    l.revoke(c, 4);
    l.reinstate(a, 6); // interval 7
    EXPECT_EQ(w.delta_serials(0, 5).size(), 3u);
    EXPECT_EQ(w.delta_serials(0, 6).size(), 3u);
    for (std::uint32_t i = 7; i <= 12; ++i) {
        const auto s = w.delta_serials(0, i);
        EXPECT_EQ(s.size(), 2u);
        EXPECT_FALSE(s.count(l.batch(a).serials[i - 1]));
    }
}

TEST(DeltaCrl, RevokeThenReinstateNextIntervalPublishesOneSerial)
{
    World w(8);
    auto& l = w.auth.ledger();
    w.auth.build_base_crl(0, 10'240);
    const auto id = w.batch(0, N);
    l.revoke(id, 20);
    l.reinstate(id, 21);
    std::set<Digest> published;
    for (std::uint32_t i = 1; i <= N; ++i) {
        const auto s = w.delta_serials(0, i);
        published.insert(s.begin(), s.end());
    }
    EXPECT_EQ(published, std::set<Digest>{l.batch(id).serials[20]});
    EXPECT_EQ(w.auth.build_base_crl(0, 10'240).entry_count(), 0u);
}

TEST(DeltaCrl, RevokeAtLastSlotPublishesFinalSerial)
{
    World w(9);
    auto& l = w.auth.ledger();
    const auto id = w.batch(0, 6);
    l.revoke(id, 5);
    const BaseCrl& b = w.auth.build_base_crl(0, 10'240);
    ASSERT_EQ(b.entry_count(), 1u);
    EXPECT_EQ(cred::expand_entry(b.pieces[0].piece.entries[0]), std::vector<Digest>{l.batch(id).serials[5]});
}

TEST(DeltaCrl, MacVerifiesAndScheduleEnforced)
{
    World w(10);
    const auto id = w.batch(0, N);
    w.auth.ledger().revoke(id, 3);
    const auto pieces = w.delta(0, 4);
    ASSERT_EQ(pieces.size(), 1u);
    const auto& ks = w.auth.schedule(0);
    const auto keys = crypto::derive_interval_keys(ks.chain[4], 4);
    EXPECT_TRUE(crypto::mac_verify(keys.mac_key, delta_mac_payload(pieces[0]), pieces[0].mac));
    EXPECT_EQ(pieces[0].disclosed_prev_key, ks.chain[3]);

    const double disclose = w.auth.timing().disclosure_time(0, 4);
    EXPECT_THROW(w.auth.gen_delta_crl(0, 4, ks.chain[4], 10'240, disclose), ScheduleError);
    EXPECT_THROW(w.auth.gen_delta_crl(0, 4, ks.chain[5], 10'240, 0.0), StateError);
    EXPECT_THROW(w.auth.gen_delta_crl(0, 0, ks.chain[0], 10'240, 0.0), ParameterError);
}

TEST(DeltaCrl, NoEventsGivesNoPieces)
{
    World w(11);
    w.auth.build_base_crl(0, 10'240);
    EXPECT_TRUE(w.delta(0, 7).empty());
    EXPECT_NO_THROW(w.auth.disclose_key(0, 7, w.auth.timing().disclosure_time(0, 7)));
}

TEST(KeyDisclosure, StrictSchedule)
{
    World w(12, DisclosurePolicy::strict);
    const double start = w.auth.timing().interval_start(0, 5);
    EXPECT_EQ(w.auth.disclose_key(0, 5, start), w.auth.schedule(0).chain[5]);
    EXPECT_THROW(w.auth.disclose_key(0, 5, start - 60.0), ScheduleError);
    EXPECT_THROW(w.auth.disclose_key(0, 5, start - 1e-6), ScheduleError);
}

TEST(KeyDisclosure, OptimizedReleasesAtPrecedingMidpoint)
{
    World w(13);
    const double mid = w.auth.timing().interval_start(0, 5) - 30.0;
    EXPECT_NO_THROW(w.auth.disclose_key(0, 5, mid));
    EXPECT_THROW(w.auth.disclose_key(0, 5, mid - 1e-6), ScheduleError);
    const KeyDisclosure kd = w.auth.key_disclosure(0, 5, mid);
    EXPECT_TRUE(crypto::verify_key_against_anchor(kd.key, 5, kd.anchor));
    EXPECT_TRUE(crypto::verify_anchor(w.auth.pca().public_key(), 0, kd.anchor, kd.anchor_signature));
    EXPECT_EQ(decode_key_disclosure(encode(kd)), kd);
}

TEST(BaselineCrl, SignedPiecesWithinBudget)
{
    World w(14);
    for (int j = 0; j < 500; ++j) {
        const std::uint64_t slot = w.rng.below(1440);
        w.auth.ledger().revoke(w.batch(slot, 1), slot);
    }
    const auto pieces = w.auth.build_baseline_crl(0, 1439, 8'192, 1);
    std::size_t entries = 0;
    for (const auto& wp : pieces) {
        EXPECT_LE(wp.bytes.size(), 8'192u);
        EXPECT_TRUE(crypto::verify_signature(w.auth.pca().public_key(), baseline_signing_payload(wp.piece),
                                             wp.piece.piece_signature));
        entries += wp.piece.entries.size();
    }
    EXPECT_EQ(entries, 500u);
}

TEST(SplitEvenly, Bounds)
{
    EXPECT_EQ(split_evenly(0, 10), (std::vector<std::size_t>{0}));
    EXPECT_EQ(split_evenly(10, 10), (std::vector<std::size_t>{0, 10}));
    EXPECT_EQ(split_evenly(11, 10), (std::vector<std::size_t>{0, 5, 11}));
    EXPECT_THROW(split_evenly(3, 0), ParameterError);
}

TEST(SyntheticDay, CountMatchesRate)
{
    RevocationLedger l;
    SyntheticDay d;
    d.pseudonyms_per_day = 10'000;
    d.revocation_rate = 0.05;
    EXPECT_EQ(populate_synthetic_day(l, d, 1), 500u);
    EXPECT_EQ(l.touched_batches().size(), 500u);
    d.revocation_rate = 1.5;
    EXPECT_THROW(populate_synthetic_day(l, d, 1, 10'000), ParameterError);
}
