#include <vcrl/authority.hpp>
#include <vcrl/vehicle.hpp>

#include <gtest/gtest.h>

using namespace vcrl;
using namespace vcrl::vehicle;

namespace {

constexpr NodeId rsu = 1000;
constexpr NodeId attacker = 666;

/// Γ_CRL 0 with 40 revoked single-pseudonym batches split over five pieces.
struct Scene {
    Rng rng{21};
    crypto::SigningKey pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    authority::Authority auth{authority::AuthorityConfig{Timing{60.0, 60, DisclosurePolicy::optimized}, 1e-20}, pca,
                              5};
    std::vector<std::uint64_t> late; ///< unrevoked batches spanning the whole Γ_CRL
    std::uint64_t next_id = 1;

    Scene()
    {
        for (int j = 0; j < 40; ++j) {
            const std::uint64_t slot = rng.below(60);
            auth.ledger().register_batch(batch(slot, 1));
            auth.ledger().revoke(next_id - 1, slot);
        }
        auth.build_base_crl(0, 700);
        for (int j = 0; j < 3; ++j) {
            auth.ledger().register_batch(batch(0, 60));
            late.push_back(next_id - 1);
        }
    }

    authority::BatchRecord batch(std::uint64_t first, std::uint32_t size)
    {
        const auto chain = cred::derive_serial_chain(rng.digest(), rng.digest(), size);
        return {next_id++, first, chain.serials, chain.chain_values};
    }

    const authority::BaseCrl& base() const { return *auth.base_crl(0); }

    VehicleConfig config(std::shared_ptr<VerifyCache> cache = nullptr) const
    {
        VehicleConfig c;
        c.pca = pca.public_key();
        c.timing = auth.timing();
        c.verify_cache = std::move(cache);
        return c;
    }

    std::vector<DeltaCrlPiece> delta(std::uint32_t i)
    {
        return auth.gen_delta_crl(0, i, auth.schedule(0).chain[i], 10'240, auth.timing().disclosure_time(0, i) - 1);
    }
};

WirePiece forged_copy(const WirePiece& genuine, Rng& rng)
{
    CrlPiece p = genuine.piece;
    for (auto& e : p.entries) {
        e.first_revoked_serial = rng.digest();
    }
    return WirePiece::from(std::move(p));
}

} // namespace

TEST(VehicleFingerprint, NewerAcceptedOlderRejected)
{
    Scene s;
    VehicleNode v(s.config());
    const auto v1 = s.base().fingerprint;
    EXPECT_TRUE(v.handle_fingerprint(v1, rsu, 0.0));
    EXPECT_EQ(v.handle_piece(s.base().pieces[0], rsu, 1.0), PieceOutcome::accepted);
    EXPECT_EQ(v.pieces().size(), 1u);

    const auto v2 = s.auth.build_base_crl(0, 700).fingerprint;
    EXPECT_TRUE(v.handle_fingerprint(v2, rsu, 2.0));
    EXPECT_TRUE(v.pieces().empty());
    EXPECT_FALSE(v.handle_fingerprint(v1, rsu, 3.0));
    EXPECT_EQ(v.fingerprint()->crl_version, v2.crl_version);
}

TEST(VehicleFingerprint, BadSignatureStrikesSender)
{
    Scene s;
    VehicleNode v(s.config());
    auto fp = s.base().fingerprint;
    fp.crl_version += 1;
    EXPECT_FALSE(v.handle_fingerprint(fp, attacker, 0.0));
    EXPECT_TRUE(v.muted(attacker, 1.0));
    EXPECT_FALSE(v.fingerprint().has_value());
}

TEST(VehicleFingerprint, CarrierCostsOnlyThePseudonymCheck)
{
    Scene s;
    auto cache = std::make_shared<VerifyCache>();
    VehicleNode v(s.config(cache));
    cred::IssueParams ip;
    ip.is_carrier = true;
    ip.fingerprint = s.base().fingerprint;
    const auto batch = cred::issue_batch(ip, s.pca, s.rng);
    EXPECT_TRUE(v.handle_carrier(batch.pseudonyms[0], 3, 0.0));
    EXPECT_EQ(cache->size(), 1u);
    EXPECT_EQ(v.fingerprint(), s.base().fingerprint);
    // every piece is then validated by the filter alone
    for (const auto& wp : s.base().pieces) {
        EXPECT_EQ(v.handle_piece(wp, rsu, 1.0), PieceOutcome::accepted);
    }
    EXPECT_EQ(cache->size(), 2u); // the anchor signature, checked once
    EXPECT_TRUE(v.cognizant());
}

TEST(VehiclePiece, GenuineForgedDuplicate)
{
    Scene s;
    VehicleNode v(s.config());
    const auto& pieces = s.base().pieces;
    ASSERT_EQ(pieces.size(), 5u);
    EXPECT_EQ(v.handle_piece(pieces[0], rsu, 0.0), PieceOutcome::no_fingerprint);
    v.handle_fingerprint(s.base().fingerprint, rsu, 0.0);

    EXPECT_EQ(v.handle_piece(forged_copy(pieces[0], s.rng), attacker, 0.5), PieceOutcome::forged);
    EXPECT_TRUE(v.muted(attacker, 0.6));
    EXPECT_EQ(v.handle_piece(pieces[0], attacker, 0.7), PieceOutcome::muted);

    EXPECT_EQ(v.handle_piece(pieces[0], rsu, 1.0), PieceOutcome::accepted);
    const auto store = v.store_size();
    EXPECT_EQ(v.handle_piece(pieces[0], rsu, 1.1), PieceOutcome::duplicate);
    EXPECT_EQ(v.store_size(), store);
    EXPECT_FALSE(v.cognizant());
    for (std::size_t j = 1; j < pieces.size(); ++j) {
        v.handle_piece(pieces[j], rsu, 2.0 + static_cast<double>(j));
    }
    EXPECT_TRUE(v.cognizant());
    EXPECT_EQ(v.first_cognizant_time(), 6.0);
    EXPECT_TRUE(v.missing().empty());
    EXPECT_EQ(v.counters().pieces_forged, 1u);
}

TEST(VehiclePiece, StaleVersionIgnoredWithoutStrike)
{
    Scene s;
    VehicleNode v(s.config());
    const WirePiece old = s.base().pieces[0];
    v.handle_fingerprint(s.auth.build_base_crl(0, 700).fingerprint, rsu, 0.0);
    EXPECT_EQ(v.handle_piece(old, 7, 1.0), PieceOutcome::stale);
    EXPECT_FALSE(v.muted(7, 1.0));
}

TEST(VehiclePiece, EmptyCrlMakesCognizantAtFingerprint)
{
    Rng rng(2);
    const auto pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    authority::Authority auth({Timing{}, 1e-20}, pca, 1);
    VehicleConfig c;
    c.pca = pca.public_key();
    VehicleNode v(c);
    EXPECT_TRUE(v.handle_fingerprint(auth.build_base_crl(0, 1'000).fingerprint, rsu, 4.0));
    EXPECT_TRUE(v.cognizant());
    EXPECT_EQ(v.first_cognizant_time(), 4.0);
}

TEST(VehiclePiece, ForgeryRateWithinFilterBound)
{
    Scene s;
    VehicleConfig c = s.config();
    c.strike_threshold = 1'000'000;
    VehicleNode v(c);
    v.handle_fingerprint(s.base().fingerprint, rsu, 0.0);
    int accepted = 0;
    for (int j = 0; j < 2'000; ++j) {
        accepted += v.handle_piece(forged_copy(s.base().pieces[j % 5], s.rng), attacker, 1.0) ==
                    PieceOutcome::accepted;
    }
    EXPECT_EQ(accepted, 0);
}

TEST(ParsePiece, Expansions)
{
    Rng rng(3);
    auto entry = [&](std::uint16_t remaining, std::uint32_t slot) {
        const auto chain = cred::derive_serial_chain(rng.digest(), rng.digest(), remaining + 1u);
        return cred::RevocationEntry{chain.serials[0], chain.chain_values[0], remaining, slot};
    };
    CrlPiece single;
    single.entries = {entry(0, 9)};
    const auto one = VehicleNode::parse_crl_piece(single);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].second, 9u);

    // full batch of six from its issuer list
    cred::IssueParams ip;
    ip.gamma_index = 2;
    ip.gamma_len = 360;
    const crypto::SigningKey pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    const auto batch = cred::issue_batch(ip, pca, rng);
    CrlPiece full;
    full.entries = {cred::make_revocation_entry(batch, 1)};
    const auto six = VehicleNode::parse_crl_piece(full);
    ASSERT_EQ(six.size(), 6u);
    for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_EQ(six[j].first, batch.pseudonyms[j].serial);
        EXPECT_EQ(six[j].second, 12u + j);
    }

    CrlPiece mixed;
    mixed.entries = {entry(1, 0), entry(2, 0), entry(3, 0)};
    EXPECT_EQ(VehicleNode::parse_crl_piece(mixed).size(), 9u);
}

TEST(VehicleStore, QueryAndPrune)
{
    Scene s;
    VehicleNode v(s.config());
    v.handle_fingerprint(s.base().fingerprint, rsu, 0.0);
    for (const auto& wp : s.base().pieces) {
        v.handle_piece(wp, rsu, 0.0);
    }
    const auto truth = s.auth.ledger().revoked_serials(0, 59);
    ASSERT_FALSE(truth.empty());
    for (const auto& [serial, slot] : truth) {
        EXPECT_TRUE(v.is_revoked(serial, slot));
        EXPECT_FALSE(v.is_revoked(serial, slot + 100));
    }
    EXPECT_FALSE(v.is_revoked(s.rng.digest(), truth[0].second));
    v.prune_before(30);
    for (const auto& [serial, slot] : truth) {
        EXPECT_EQ(v.is_revoked(serial, slot), slot >= 30);
    }
}

TEST(VehicleDelta, BufferedThenValidatedOnKey)
{
    Scene s;
    s.auth.ledger().revoke(s.late[0], 9); // interval 10
    const auto pieces = s.delta(10);
    ASSERT_EQ(pieces.size(), 1u);
    VehicleNode v(s.config());
    v.handle_fingerprint(s.base().fingerprint, rsu, 0.0);
    v.handle_piece(s.base().pieces[0], rsu, 0.0); // learns the anchor
    const double disclose = s.auth.timing().disclosure_time(0, 10);
    EXPECT_EQ(v.buffer_delta_piece(pieces[0], rsu, disclose - 20), DeltaOutcome::buffered);
    EXPECT_EQ(v.buffer_delta_piece(pieces[0], rsu, disclose - 19), DeltaOutcome::duplicate);
    EXPECT_GT(v.delta_buffer_bytes(), 0u);
    EXPECT_TRUE(v.handle_key_disclosure(s.auth.key_disclosure(0, 10, disclose), disclose));
    EXPECT_EQ(v.delta_buffer_bytes(), 0u);
    EXPECT_EQ(v.counters().delta_accepted, 1u);
    EXPECT_TRUE(v.is_revoked(s.auth.ledger().batch(s.late[0]).serials[9], 9));
    // the same piece once the key is out
    EXPECT_EQ(v.buffer_delta_piece(pieces[0], rsu, disclose + 1), DeltaOutcome::key_known);
}

TEST(VehicleDelta, RejectedAfterDisclosureTime)
{
    Scene s;
    s.auth.ledger().revoke(s.late[0], 9);
    const auto pieces = s.delta(10);
    VehicleNode v(s.config());
    const double disclose = s.auth.timing().disclosure_time(0, 10);
    EXPECT_EQ(v.buffer_delta_piece(pieces[0], rsu, disclose), DeltaOutcome::too_late);

    VehicleConfig skewed = s.config();
    skewed.max_clock_offset = 2.0;
    VehicleNode w(skewed);
    EXPECT_EQ(w.buffer_delta_piece(pieces[0], rsu, disclose - 1.5), DeltaOutcome::too_late);
    EXPECT_EQ(w.buffer_delta_piece(pieces[0], rsu, disclose - 2.5), DeltaOutcome::buffered);
}

TEST(VehicleDelta, FlippedSerialAndForgedKey)
{
    Scene s;
    s.auth.ledger().revoke(s.late[0], 9);
    s.auth.ledger().revoke(s.late[1], 9);
    auto pieces = s.delta(10);
    ASSERT_EQ(pieces.size(), 1u);
    DeltaCrlPiece tampered = pieces[0];
    tampered.serials[0].bytes()[0] ^= 1;
    const double disclose = s.auth.timing().disclosure_time(0, 10);

    VehicleNode v(s.config());
    EXPECT_EQ(v.buffer_delta_piece(tampered, attacker, disclose - 20), DeltaOutcome::buffered);
    KeyDisclosure fake = s.auth.key_disclosure(0, 10, disclose);
    fake.key = s.rng.digest();
    EXPECT_FALSE(v.handle_key_disclosure(fake, disclose));
    EXPECT_EQ(v.counters().delta_forged, 0u);
    EXPECT_GT(v.delta_buffer_bytes(), 0u);

    EXPECT_TRUE(v.handle_key_disclosure(s.auth.key_disclosure(0, 10, disclose), disclose));
    EXPECT_EQ(v.counters().delta_accepted, 0u);
    EXPECT_EQ(v.counters().delta_forged, 1u);
    EXPECT_EQ(v.store_size(), 0u);
}

TEST(VehicleDelta, RandomMacForgeriesNeverAccepted)
{
    Scene s;
    s.auth.ledger().revoke(s.late[0], 19);
    const auto genuine = s.delta(20);
    const double disclose = s.auth.timing().disclosure_time(0, 20);
    VehicleConfig c = s.config();
    c.delta_rate = 1e9;
    c.delta_burst = 1e9;
    c.strike_threshold = 1'000'000;
    VehicleNode v(c);
    for (int j = 0; j < 500; ++j) {
        DeltaCrlPiece f = genuine[0];
        f.piece_index = static_cast<std::uint16_t>(j + 1);
        f.serials = {s.rng.digest()};
        f.mac = s.rng.digest();
        v.buffer_delta_piece(f, attacker, disclose - 10);
    }
    v.buffer_delta_piece(genuine[0], rsu, disclose - 10);
    v.handle_key_disclosure(s.auth.key_disclosure(0, 20, disclose), disclose);
    EXPECT_EQ(v.counters().delta_accepted, 1u);
    EXPECT_EQ(v.counters().delta_forged, 500u);
    EXPECT_EQ(v.store_size(), 1u);
}

TEST(VehicleDelta, FloodBoundAndMuting)
{
    EXPECT_NEAR(delta_buffer_worst_case(50.0 * 1024, 300) / 1e6, 15.36, 1e-9);
    Scene s;
    s.auth.ledger().revoke(s.late[0], 29);
    const auto piece = s.delta(30)[0];
    VehicleConfig c = s.config();
    c.delta_rate = 1.0;
    c.delta_burst = 2.0;
    c.strike_threshold = 3;
    VehicleNode v(c);
    const double t = s.auth.timing().disclosure_time(0, 30) - 40;
    int buffered = 0;
    for (int j = 0; j < 50; ++j) {
        DeltaCrlPiece p = piece;
        p.piece_index = static_cast<std::uint16_t>(j);
        buffered += v.buffer_delta_piece(p, attacker, t) == DeltaOutcome::buffered;
    }
    EXPECT_EQ(buffered, 2);
    EXPECT_TRUE(v.muted(attacker, t));
    EXPECT_LE(v.delta_buffer_bytes(), 2 * (delta_piece_overhead + 32));
}

TEST(VehicleDelta, BufferCapHolds)
{
    Scene s;
    s.auth.ledger().revoke(s.late[0], 29);
    const auto piece = s.delta(30)[0];
    VehicleConfig c = s.config();
    c.delta_buffer_cap = 1'000;
    c.delta_rate = 1e9;
    c.delta_burst = 1e9;
    VehicleNode v(c);
    const double t = s.auth.timing().disclosure_time(0, 30) - 40;
    for (int j = 0; j < 50; ++j) {
        DeltaCrlPiece p = piece;
        p.piece_index = static_cast<std::uint16_t>(j);
        v.buffer_delta_piece(p, static_cast<NodeId>(j), t);
    }
    EXPECT_LE(v.delta_buffer_bytes(), 1'000u);
}

TEST(VehicleRequest, IntersectionAndChiSquare)
{
    Scene s;
    VehicleNode holder(s.config());
    holder.handle_fingerprint(s.base().fingerprint, rsu, 0.0);
    for (std::uint16_t j : {1, 2, 3}) {
        holder.handle_piece(s.base().pieces[j], rsu, 0.0);
    }
    cred::IssueParams ip;
    const auto batch = cred::issue_batch(ip, s.pca, s.rng);
    auto request = [&](std::vector<std::uint16_t> missing) {
        return make_piece_request(PieceKind::scoped, 0, s.base().crl_version, std::move(missing),
                                  batch.pseudonyms[0], batch.private_keys[0]);
    };
    Rng rng(99);
    const auto r24 = request({2, 4});
    EXPECT_TRUE(holder.verify_request(r24, 10.0));
    EXPECT_FALSE(holder.verify_request(r24, 61.0));
    const WirePiece* got = holder.answer_request(r24, 10.0, rng);
    ASSERT_NE(got, nullptr);
    EXPECT_EQ(got->piece.piece_index, 2u);
    EXPECT_EQ(holder.answer_request(request({0, 4}), 10.0, rng), nullptr);
    PieceRequest bad = r24;
    bad.missing_indices = {3};
    EXPECT_EQ(holder.answer_request(bad, 10.0, rng), nullptr);

    holder.handle_piece(s.base().pieces[4], rsu, 0.0);
    int twos = 0;
    const int trials = 10'000;
    for (int j = 0; j < trials; ++j) {
        twos += *holder.choose_piece(r24, rng) == 2;
    }
    const double e = trials / 2.0;
    const double chi2 = (twos - e) * (twos - e) / e * 2.0;
    EXPECT_LT(chi2, 10.83); // one degree of freedom, 0.1%
}

TEST(VehicleRequest, RequestListsMissingOfCurrentCrl)
{
    Scene s;
    VehicleNode v(s.config());
    EXPECT_TRUE(v.missing().empty());
    v.handle_fingerprint(s.base().fingerprint, rsu, 0.0);
    v.handle_piece(s.base().pieces[3], rsu, 0.0);
    EXPECT_EQ(v.missing(), (std::vector<std::uint16_t>{0, 1, 2, 4}));
    cred::IssueParams ip;
    const auto batch = cred::issue_batch(ip, s.pca, s.rng);
    const PieceRequest r = v.make_request(batch.pseudonyms[0], batch.private_keys[0]);
    EXPECT_EQ(r.gamma_crl_index, 0u);
    EXPECT_EQ(r.crl_version, s.base().crl_version);
    EXPECT_EQ(r.missing_indices, v.missing());
    EXPECT_TRUE(verify_piece_request(r, s.pca.public_key(), 1.0));
    EXPECT_EQ(decode_piece_request(encode(r)), r);
}

TEST(VehicleBaseline, SignedPiecesAndVersioning)
{
    Scene s;
    const auto pieces = s.auth.build_baseline_crl(0, 1439, 700, 1);
    ASSERT_GT(pieces.size(), 1u);
    VehicleNode v(s.config());
    WirePiece bad = forged_copy(pieces[0], s.rng);
    EXPECT_EQ(v.handle_piece(bad, attacker, 0.0), PieceOutcome::forged);
    for (const auto& wp : pieces) {
        EXPECT_EQ(v.handle_piece(wp, rsu, 1.0), PieceOutcome::accepted);
    }
    EXPECT_TRUE(v.cognizant());
    const auto older = s.auth.build_baseline_crl(0, 1439, 700, 0);
    EXPECT_EQ(v.handle_piece(older[0], rsu, 2.0), PieceOutcome::stale);
}
