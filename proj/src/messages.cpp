#include <vcrl/messages.hpp>

namespace vcrl {

namespace {

constexpr std::uint32_t piece_magic = 0x43524c50;   // "CRLP"
constexpr std::uint32_t delta_magic = 0x44435250;   // "DCRP"
constexpr std::uint32_t key_magic = 0x4b455944;     // "KEYD"
constexpr std::uint32_t request_magic = 0x50524551; // "PREQ"
constexpr std::uint8_t wire_version = 1;

PieceKind read_kind(Reader& r)
{
    const std::uint8_t k = r.u8();
    if (k != 1 && k != 2) {
        throw DecodeError("unknown piece kind");
    }
    return static_cast<PieceKind>(k);
}

void write_piece_unsigned(Writer& w, const CrlPiece& p)
{
    w.u32(piece_magic);
    w.u8(wire_version);
    w.u8(static_cast<std::uint8_t>(p.kind));
    w.u32(p.gamma_crl_index);
    w.u32(p.crl_version);
    w.u16(p.piece_index);
    w.u16(p.total_pieces);
    if (p.kind == PieceKind::scoped) {
        w.digest(p.tesla_anchor);
        crypto::write_signature(w, p.anchor_signature);
    }
    w.u32(static_cast<std::uint32_t>(p.entries.size()));
    for (const auto& e : p.entries) {
        cred::write_entry(w, e);
    }
}

void write_delta_header(Writer& w, const DeltaCrlPiece& p)
{
    w.u32(delta_magic);
    w.u8(wire_version);
    w.u32(p.gamma_crl_index);
    w.u32(p.interval_index);
    w.u16(p.piece_index);
    w.u16(p.total_pieces);
    w.u32(static_cast<std::uint32_t>(p.serials.size()));
    for (const auto& s : p.serials) {
        w.digest(s);
    }
}

void write_request_unsigned(Writer& w, const PieceRequest& req)
{
    w.u32(request_magic);
    w.u8(wire_version);
    w.u8(static_cast<std::uint8_t>(req.kind));
    w.u32(req.gamma_crl_index);
    w.u32(req.crl_version);
    w.u16(static_cast<std::uint16_t>(req.missing_indices.size()));
    for (auto idx : req.missing_indices) {
        w.u16(idx);
    }
    cred::write_pseudonym(w, req.requester_pseudonym);
}

} // namespace

std::size_t crl_piece_overhead(PieceKind kind, crypto::SignatureScheme scheme)
{
    std::size_t n = 4 + 1 + 1 + 4 + 4 + 2 + 2 + 4;
    if (kind == PieceKind::scoped) {
        n += Digest::size;
    }
    // scoped pieces carry the anchor signature, baseline pieces their own
    return n + crypto::encoded_signature_size(scheme);
}

Bytes baseline_signing_payload(const CrlPiece& piece)
{
    Writer w;
    write_piece_unsigned(w, piece);
    return w.take();
}

Bytes encode(const CrlPiece& piece)
{
    Writer w;
    write_piece_unsigned(w, piece);
    if (piece.kind == PieceKind::baseline) {
        crypto::write_signature(w, piece.piece_signature);
    }
    return w.take();
}

CrlPiece decode_crl_piece(ByteView bytes)
{
    Reader r(bytes);
    if (r.u32() != piece_magic) {
        throw DecodeError("not a CRL piece");
    }
    if (r.u8() != wire_version) {
        throw DecodeError("unsupported CRL piece version");
    }
    CrlPiece p;
    p.kind = read_kind(r);
    p.gamma_crl_index = r.u32();
    p.crl_version = r.u32();
    p.piece_index = r.u16();
    p.total_pieces = r.u16();
    if (p.piece_index >= p.total_pieces) {
        throw DecodeError("piece index out of range");
    }
    if (p.kind == PieceKind::scoped) {
        p.tesla_anchor = r.digest();
        p.anchor_signature = crypto::read_signature(r);
    }
    const std::uint32_t count = r.u32();
    if (std::uint64_t{count} * cred::revocation_entry_size > r.remaining()) {
        throw DecodeError("entry count exceeds piece size");
    }
    p.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        p.entries.push_back(cred::read_entry(r));
    }
    if (p.kind == PieceKind::baseline) {
        p.piece_signature = crypto::read_signature(r);
    }
    r.expect_done();
    return p;
}

WirePiece WirePiece::from(CrlPiece piece)
{
    WirePiece w;
    w.bytes = encode(piece);
    w.digest = crypto::sha256(w.bytes);
    w.piece = std::move(piece);
    return w;
}

WirePiece WirePiece::from_bytes(Bytes bytes)
{
    WirePiece w;
    w.piece = decode_crl_piece(bytes);
    w.digest = crypto::sha256(bytes);
    w.bytes = std::move(bytes);
    return w;
}

// ---------------------------------------------------------------------------

Bytes delta_mac_payload(const DeltaCrlPiece& piece)
{
    Writer w;
    write_delta_header(w, piece);
    return w.take();
}

Bytes encode(const DeltaCrlPiece& piece)
{
    Writer w;
    write_delta_header(w, piece);
    w.digest(piece.mac);
    w.digest(piece.disclosed_prev_key);
    return w.take();
}

DeltaCrlPiece decode_delta_piece(ByteView bytes)
{
    Reader r(bytes);
    if (r.u32() != delta_magic) {
        throw DecodeError("not a delta-CRL piece");
    }
    if (r.u8() != wire_version) {
        throw DecodeError("unsupported delta-CRL piece version");
    }
    DeltaCrlPiece p;
    p.gamma_crl_index = r.u32();
    p.interval_index = r.u32();
    p.piece_index = r.u16();
    p.total_pieces = r.u16();
    if (p.interval_index < 1 || p.piece_index >= p.total_pieces) {
        throw DecodeError("delta piece header out of range");
    }
    const std::uint32_t count = r.u32();
    if (std::uint64_t{count} * Digest::size > r.remaining()) {
        throw DecodeError("serial count exceeds piece size");
    }
    p.serials.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        p.serials.push_back(r.digest());
    }
    p.mac = r.digest();
    p.disclosed_prev_key = r.digest();
    r.expect_done();
    return p;
}

// ---------------------------------------------------------------------------

Bytes encode(const KeyDisclosure& kd)
{
    Writer w;
    w.u32(key_magic);
    w.u8(wire_version);
    w.u32(kd.gamma_crl_index);
    w.u32(kd.interval_index);
    w.digest(kd.key);
    w.digest(kd.anchor);
    crypto::write_signature(w, kd.anchor_signature);
    return w.take();
}

KeyDisclosure decode_key_disclosure(ByteView bytes)
{
    Reader r(bytes);
    if (r.u32() != key_magic) {
        throw DecodeError("not a key disclosure");
    }
    if (r.u8() != wire_version) {
        throw DecodeError("unsupported key disclosure version");
    }
    KeyDisclosure kd;
    kd.gamma_crl_index = r.u32();
    kd.interval_index = r.u32();
    kd.key = r.digest();
    kd.anchor = r.digest();
    kd.anchor_signature = crypto::read_signature(r);
    r.expect_done();
    return kd;
}

// ---------------------------------------------------------------------------

Bytes request_signing_payload(const PieceRequest& req)
{
    Writer w;
    write_request_unsigned(w, req);
    return w.take();
}

PieceRequest make_piece_request(PieceKind kind, std::uint32_t gamma_crl_index, std::uint32_t crl_version,
                                std::vector<std::uint16_t> missing, const cred::Pseudonym& pseudonym,
                                const crypto::SigningKey& pseudonym_key)
{
    PieceRequest req;
    req.kind = kind;
    req.gamma_crl_index = gamma_crl_index;
    req.crl_version = crl_version;
    req.missing_indices = std::move(missing);
    req.requester_pseudonym = pseudonym;
    req.signature = pseudonym_key.sign(request_signing_payload(req));
    return req;
}

bool verify_piece_request(const PieceRequest& req, const crypto::PublicKey& pca, double now)
{
    const auto& p = req.requester_pseudonym;
    if (now < static_cast<double>(p.valid_from) || now >= static_cast<double>(p.valid_to)) {
        return false;
    }
    if (!cred::verify_pseudonym(p, pca)) {
        return false;
    }
    return crypto::verify_signature(p.subject_key, request_signing_payload(req), req.signature);
}

Bytes encode(const PieceRequest& req)
{
    Writer w;
    write_request_unsigned(w, req);
    crypto::write_signature(w, req.signature);
    return w.take();
}

PieceRequest decode_piece_request(ByteView bytes)
{
    Reader r(bytes);
    if (r.u32() != request_magic) {
        throw DecodeError("not a piece request");
    }
    if (r.u8() != wire_version) {
        throw DecodeError("unsupported piece request version");
    }
    PieceRequest req;
    req.kind = read_kind(r);
    req.gamma_crl_index = r.u32();
    req.crl_version = r.u32();
    const std::uint16_t n = r.u16();
    req.missing_indices.reserve(n);
    for (std::uint16_t i = 0; i < n; ++i) {
        req.missing_indices.push_back(r.u16());
    }
    req.requester_pseudonym = cred::read_pseudonym(r);
    req.signature = crypto::read_signature(r);
    r.expect_done();
    return req;
}

} // namespace vcrl
