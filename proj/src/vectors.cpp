#include <vcrl/vectors.hpp>

#include <vcrl/authority.hpp>
#include <vcrl/credentials.hpp>
#include <vcrl/crypto.hpp>
#include <vcrl/messages.hpp>

namespace vcrl {

namespace {

constexpr std::uint32_t delta_interval = 10;
constexpr std::size_t piece_budget = 512;

Bytes hex_bytes(const nlohmann::json& j)
{
    return from_hex(j.get<std::string>());
}

} // namespace

nlohmann::json make_vectors(std::uint64_t seed)
{
    Rng rng(seed);
    const auto pca = crypto::SigningKey::generate(crypto::SignatureScheme::mock, rng);
    nlohmann::json out;
    out["seed"] = seed;
    out["signature_scheme"] = "mock";
    Writer pk;
    crypto::write_public_key(pk, pca.public_key());
    out["pca_public_key"] = to_hex(pk.bytes());

    // batch of 10 pseudonyms in Γ 5 (slots 50..59), revoked from the 4th
    cred::IssueParams params;
    params.gamma_index = 5;
    params.tau_p = 60;
    params.gamma_len = 600;
    const cred::PseudonymBatch batch = cred::issue_batch(params, pca, rng);
    const std::uint32_t from_index = 4;
    const cred::RevocationEntry entry = cred::make_revocation_entry(batch, from_index);
    auto expansion = nlohmann::json::array();
    for (const auto& s : cred::expand_entry(entry)) {
        expansion.push_back(s.hex());
    }
    out["credentials"] = {{"batch", cred::batch_to_json(batch)},
                          {"from_index", from_index},
                          {"entry", to_hex(cred::encode(entry))},
                          {"expansion", expansion}};

    // base CRL for Γ_CRL 0 over a small synthetic day plus the batch above
    Timing timing{60.0, 60, DisclosurePolicy::optimized};
    authority::Authority auth({timing, 1e-20}, pca, seed);
    authority::SyntheticDay day;
    day.pseudonyms_per_day = 20'000;
    day.revocation_rate = 0.01;
    authority::populate_synthetic_day(auth.ledger(), day, seed);
    auth.ledger().register_batch(authority::record_from_batch(1'000'000, batch));
    auth.ledger().revoke(1'000'000, batch.first_slot() + from_index - 1);
    const authority::BaseCrl& base = auth.build_base_crl(0, piece_budget);
    auto pieces = nlohmann::json::array();
    for (const auto& wp : base.pieces) {
        pieces.push_back({{"bytes", to_hex(wp.bytes)}, {"digest", wp.digest.hex()}});
    }
    out["base_crl"] = {{"gamma_crl_index", 0},
                       {"piece_budget", piece_budget},
                       {"pieces", pieces},
                       {"fingerprint", to_hex(bloom::encode(base.fingerprint))}};

    // one more revocation after the base, carried by the Δ of interval 10
    authority::BatchRecord late;
    late.id = 2'000'000;
    late.first_slot = timing.slot_of(0, delta_interval);
    const auto chain = cred::derive_serial_chain(rng.digest(), rng.digest(), 1);
    late.serials = chain.serials;
    late.chain_values = chain.chain_values;
    auth.ledger().register_batch(late);
    auth.ledger().revoke(late.id, late.first_slot);
    const crypto::KeySchedule& ks = auth.schedule(0);
    const double now = timing.disclosure_time(0, delta_interval) - 1.0;
    const auto delta = auth.gen_delta_crl(0, delta_interval, ks.chain[delta_interval], piece_budget, now);
    auto chain_hex = nlohmann::json::array();
    for (const auto& k : ks.chain) {
        chain_hex.push_back(k.hex());
    }
    auto delta_hex = nlohmann::json::array();
    for (const auto& p : delta) {
        delta_hex.push_back(to_hex(encode(p)));
    }
    out["delta"] = {{"gamma_crl_index", 0},
                    {"interval", delta_interval},
                    {"key", ks.chain[delta_interval].hex()},
                    {"key_chain", chain_hex},
                    {"anchor_signature", to_hex(ks.anchor_signature.bytes)},
                    {"pieces", delta_hex},
                    {"revoked_serial", late.serials.front().hex()}};
    return out;
}

std::vector<std::string> check_vectors(const nlohmann::json& v)
{
    std::vector<std::string> bad;
    try {
        const Bytes pk_bytes = hex_bytes(v.at("pca_public_key"));
        Reader pkr(pk_bytes);
        const crypto::PublicKey pca = crypto::read_public_key(pkr);

        // credentials
        const auto& c = v.at("credentials");
        const cred::PseudonymBatch batch = cred::batch_from_json(c.at("batch"));
        const auto from = c.at("from_index").get<std::uint32_t>();
        const Bytes entry_bytes = hex_bytes(c.at("entry"));
        Reader er(entry_bytes);
        const cred::RevocationEntry entry = cred::read_entry(er);
        const auto expanded = cred::expand_entry(entry);
        if (expanded.size() != c.at("expansion").size()) {
            bad.push_back("expansion length");
        }
        for (std::size_t j = 0; j < expanded.size() && j < c.at("expansion").size(); ++j) {
            if (expanded[j].hex() != c.at("expansion")[j].get<std::string>()) {
                bad.push_back("expansion value " + std::to_string(j));
            }
            if (from - 1 + j >= batch.size() || batch.pseudonyms[from - 1 + j].serial != expanded[j]) {
                bad.push_back("expansion does not match issued serial " + std::to_string(j));
            }
        }
        for (const auto& p : batch.pseudonyms) {
            if (!cred::verify_pseudonym(p, pca)) {
                bad.push_back("pseudonym signature");
            }
        }

        // base CRL
        const auto& b = v.at("base_crl");
        const bloom::Fingerprint fp = bloom::decode_fingerprint(hex_bytes(b.at("fingerprint")));
        if (!bloom::verify_fingerprint(fp, pca)) {
            bad.push_back("fingerprint signature");
        }
        if (fp.piece_count != b.at("pieces").size()) {
            bad.push_back("fingerprint piece count");
        }
        Digest anchor;
        for (const auto& p : b.at("pieces")) {
            const WirePiece wp = WirePiece::from_bytes(hex_bytes(p.at("bytes")));
            if (wp.digest.hex() != p.at("digest").get<std::string>()) {
                bad.push_back("piece digest");
            }
            if (!fp.filter.query(wp.digest)) {
                bad.push_back("piece not in fingerprint");
            }
            anchor = wp.piece.tesla_anchor;
        }

        // Δ
        const auto& d = v.at("delta");
        const auto g = d.at("gamma_crl_index").get<std::uint32_t>();
        const auto i = d.at("interval").get<std::uint32_t>();
        const Digest key = Digest::from_hex(d.at("key").get<std::string>());
        if (!crypto::verify_key_against_anchor(key, i, anchor)) {
            bad.push_back("delta key fails anchor");
        }
        const auto& chain = d.at("key_chain");
        for (std::size_t j = 1; j < chain.size(); ++j) {
            if (crypto::chain_step(Digest::from_hex(chain[j].get<std::string>())).hex() !=
                chain[j - 1].get<std::string>()) {
                bad.push_back("key chain link " + std::to_string(j));
            }
        }
        const crypto::Signature anchor_sig{crypto::SignatureScheme::mock, hex_bytes(d.at("anchor_signature"))};
        if (!crypto::verify_anchor(pca, g, anchor, anchor_sig)) {
            bad.push_back("anchor signature");
        }
        const auto keys = crypto::derive_interval_keys(key, i);
        bool found = false;
        for (const auto& h : d.at("pieces")) {
            const DeltaCrlPiece p = decode_delta_piece(hex_bytes(h));
            if (!crypto::mac_verify(keys.mac_key, delta_mac_payload(p), p.mac)) {
                bad.push_back("delta MAC");
            }
            for (const auto& s : p.serials) {
                found = found || s.hex() == d.at("revoked_serial").get<std::string>();
            }
        }
        if (!found) {
            bad.push_back("delta does not carry the revoked serial");
        }
    } catch (const std::exception& e) {
        bad.push_back(std::string("malformed vectors: ") + e.what());
    }
    return bad;
}

} // namespace vcrl
