#include <vcrl/credentials.hpp>

namespace vcrl::cred {

namespace {

constexpr std::uint16_t entry_marker = 0x5245;     // "RE"
constexpr std::uint32_t pseudonym_magic = 0x50534e4d; // "PSNM"

} // namespace

SerialChain derive_serial_chain(const Digest& sn_anchor, const Digest& rnd_seed, std::uint32_t count)
{
    SerialChain out;
    out.serials.reserve(count);
    out.chain_values.reserve(count);
    Digest sn = sn_anchor;
    Digest c = rnd_seed;
    for (std::uint32_t w = 1; w <= count; ++w) {
        c = crypto::sha256(c.view());
        sn = crypto::sha256(sn.view(), c.view());
        out.serials.push_back(sn);
        out.chain_values.push_back(c);
    }
    return out;
}

PseudonymBatch issue_batch(const IssueParams& params, const crypto::SigningKey& pca, Rng& rng)
{
    if (params.tau_p == 0 || params.gamma_len == 0 || params.gamma_len % params.tau_p != 0) {
        throw ParameterError("issue_batch: gamma_len must be a positive multiple of tau_p");
    }
    if (params.is_carrier && !params.fingerprint) {
        throw ParameterError("issue_batch: carrier batch needs a fingerprint");
    }
    const std::uint64_t count = params.gamma_len / params.tau_p;
    if (count > 0xffff) {
        throw ParameterError("issue_batch: too many pseudonyms per batch");
    }

    PseudonymBatch batch;
    batch.gamma_index = params.gamma_index;
    batch.gamma_len = params.gamma_len;
    batch.tau_p = params.tau_p;
    batch.sn_anchor = rng.digest();
    batch.rnd_seed = rng.digest();
    batch.ticket_id = params.ticket_id;

    const SerialChain chain = derive_serial_chain(batch.sn_anchor, batch.rnd_seed, static_cast<std::uint32_t>(count));
    const std::uint64_t start = params.gamma_index * params.gamma_len;
    batch.pseudonyms.reserve(count);
    batch.private_keys.reserve(count);
    for (std::uint32_t w = 1; w <= count; ++w) {
        crypto::SigningKey subject = crypto::SigningKey::generate(params.subject_scheme, rng);
        Pseudonym p;
        p.serial = chain.serials[w - 1];
        p.valid_from = start + (w - 1) * params.tau_p;
        p.valid_to = p.valid_from + params.tau_p;
        p.index_in_batch = w;
        p.subject_key = subject.public_key();
        if (params.is_carrier) {
            p.carrier_payload = params.fingerprint;
        }
        p.issuer_signature = pca.sign(pseudonym_signing_payload(p));
        batch.pseudonyms.push_back(std::move(p));
        batch.private_keys.push_back(std::move(subject));
    }
    return batch;
}

RevocationEntry make_revocation_entry(const PseudonymBatch& batch, std::uint32_t from_index)
{
    if (from_index < 1 || from_index > batch.size()) {
        throw ParameterError("make_revocation_entry: index out of range");
    }
    Digest c = batch.rnd_seed;
    for (std::uint32_t w = 1; w <= from_index; ++w) {
        c = crypto::sha256(c.view());
    }
    RevocationEntry e;
    e.first_revoked_serial = batch.pseudonyms[from_index - 1].serial;
    e.chain_value = c;
    e.remaining = static_cast<std::uint16_t>(batch.size() - from_index);
    e.first_slot = static_cast<std::uint32_t>(batch.first_slot() + from_index - 1);
    return e;
}

std::vector<Digest> expand_entry(const RevocationEntry& entry)
{
    std::vector<Digest> out;
    out.reserve(entry.remaining + 1u);
    Digest sn = entry.first_revoked_serial;
    Digest c = entry.chain_value;
    out.push_back(sn);
    for (std::uint32_t r = 0; r < entry.remaining; ++r) {
        c = crypto::sha256(c.view());
        sn = crypto::sha256(sn.view(), c.view());
        out.push_back(sn);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void write_pseudonym_body(Writer& w, const Pseudonym& p)
{
    w.u32(pseudonym_magic);
    w.digest(p.serial);
    w.u64(p.valid_from);
    w.u64(p.valid_to);
    w.u16(static_cast<std::uint16_t>(p.index_in_batch));
    crypto::write_public_key(w, p.subject_key);
    if (p.carrier_payload) {
        w.u8(1);
        w.var_bytes(bloom::encode(*p.carrier_payload));
    } else {
        w.u8(0);
    }
}

} // namespace

Bytes pseudonym_signing_payload(const Pseudonym& p)
{
    Writer w;
    write_pseudonym_body(w, p);
    return w.take();
}

bool verify_pseudonym(const Pseudonym& p, const crypto::PublicKey& pca)
{
    if (p.valid_to <= p.valid_from) {
        return false;
    }
    return crypto::verify_signature(pca, pseudonym_signing_payload(p), p.issuer_signature);
}

void write_entry(Writer& w, const RevocationEntry& e)
{
    w.u16(entry_marker);
    w.u32(e.first_slot);
    w.digest(e.first_revoked_serial);
    w.digest(e.chain_value);
    w.u16(e.remaining);
}

RevocationEntry read_entry(Reader& r)
{
    if (r.u16() != entry_marker) {
        throw DecodeError("bad revocation entry marker");
    }
    RevocationEntry e;
    e.first_slot = r.u32();
    e.first_revoked_serial = r.digest();
    e.chain_value = r.digest();
    e.remaining = r.u16();
    return e;
}

void write_pseudonym(Writer& w, const Pseudonym& p)
{
    write_pseudonym_body(w, p);
    crypto::write_signature(w, p.issuer_signature);
}

Pseudonym read_pseudonym(Reader& r)
{
    if (r.u32() != pseudonym_magic) {
        throw DecodeError("not a pseudonym");
    }
    Pseudonym p;
    p.serial = r.digest();
    p.valid_from = r.u64();
    p.valid_to = r.u64();
    p.index_in_batch = r.u16();
    p.subject_key = crypto::read_public_key(r);
    const std::uint8_t has_fp = r.u8();
    if (has_fp > 1) {
        throw DecodeError("bad carrier flag");
    }
    if (has_fp == 1) {
        const Bytes fp = r.var_bytes();
        p.carrier_payload = bloom::decode_fingerprint(fp);
    }
    p.issuer_signature = crypto::read_signature(r);
    return p;
}

Bytes encode(const RevocationEntry& e)
{
    Writer w;
    write_entry(w, e);
    return w.take();
}

Bytes encode(const Pseudonym& p)
{
    Writer w;
    write_pseudonym(w, p);
    return w.take();
}

Pseudonym decode_pseudonym(ByteView bytes)
{
    Reader r(bytes);
    Pseudonym p = read_pseudonym(r);
    r.expect_done();
    return p;
}

nlohmann::json batch_to_json(const PseudonymBatch& batch)
{
    nlohmann::json j;
    j["gamma_index"] = batch.gamma_index;
    j["gamma_len"] = batch.gamma_len;
    j["tau_p"] = batch.tau_p;
    j["sn_anchor"] = batch.sn_anchor.hex();
    j["rnd_seed"] = batch.rnd_seed.hex();
    j["ticket_id"] = batch.ticket_id;
    auto& ps = j["pseudonyms"] = nlohmann::json::array();
    for (const auto& p : batch.pseudonyms) {
        ps.push_back({{"serial", p.serial.hex()},
                      {"valid_from", p.valid_from},
                      {"valid_to", p.valid_to},
                      {"index", p.index_in_batch},
                      {"wire", to_hex(encode(p))}});
    }
    return j;
}

PseudonymBatch batch_from_json(const nlohmann::json& j)
{
    PseudonymBatch batch;
    batch.gamma_index = j.at("gamma_index").get<std::uint64_t>();
    batch.gamma_len = j.at("gamma_len").get<std::uint64_t>();
    batch.tau_p = j.at("tau_p").get<std::uint64_t>();
    batch.sn_anchor = Digest::from_hex(j.at("sn_anchor").get<std::string>());
    batch.rnd_seed = Digest::from_hex(j.at("rnd_seed").get<std::string>());
    batch.ticket_id = j.at("ticket_id").get<std::uint64_t>();
    for (const auto& pj : j.at("pseudonyms")) {
        const Bytes wire = from_hex(pj.at("wire").get<std::string>());
        batch.pseudonyms.push_back(decode_pseudonym(wire));
    }
    return batch;
}

} // namespace vcrl::cred
