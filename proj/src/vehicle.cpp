#include <vcrl/vehicle.hpp>

#include <algorithm>

namespace vcrl::vehicle {

bool TokenBucket::take(double now)
{
    if (now > last_) {
        tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
        last_ = now;
    }
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return true;
    }
    return false;
}

double delta_buffer_worst_case(double bandwidth_bytes_per_s, double tau_p_seconds)
{
    return bandwidth_bytes_per_s * tau_p_seconds;
}

VehicleNode::VehicleNode(VehicleConfig config) : config_(std::move(config))
{
    if (config_.mute_seconds < 0.0) {
        config_.mute_seconds = config_.timing.tau_p;
    }
    if (config_.strike_threshold < 1) {
        throw ParameterError("strike threshold must be at least 1");
    }
}

bool VehicleNode::muted(NodeId sender, double now) const
{
    auto it = senders_.find(sender);
    return it != senders_.end() && now < it->second.muted_until;
}

void VehicleNode::strike(NodeId sender, double now)
{
    ++counters_.misbehavior;
    Sender& s = senders_[sender];
    if (++s.strikes >= config_.strike_threshold) {
        s.strikes = 0;
        s.muted_until = now + config_.mute_seconds;
    }
}

bool VehicleNode::check_signature(const Digest& memo_key, ByteView payload, const crypto::Signature& sig,
                                  const crypto::PublicKey& key) const
{
    auto verify = [&] { return crypto::verify_signature(key, payload, sig); };
    if (config_.verify_cache) {
        return config_.verify_cache->check(memo_key, verify);
    }
    return verify();
}

bool VehicleNode::learn_anchor(std::uint32_t gamma_crl_index, const Digest& anchor, const crypto::Signature& sig)
{
    auto it = anchors_.find(gamma_crl_index);
    if (it != anchors_.end()) {
        return it->second == anchor;
    }
    const Bytes payload = crypto::anchor_signing_payload(gamma_crl_index, anchor);
    Writer memo;
    memo.raw(payload);
    memo.raw(sig.bytes);
    if (!check_signature(crypto::sha256(memo.bytes()), payload, sig, config_.pca)) {
        return false;
    }
    anchors_.emplace(gamma_crl_index, anchor);
    return true;
}

void VehicleNode::set_cognizant(double now)
{
    cognizant_ = true;
    if (!first_cognizant_) {
        first_cognizant_ = now;
    }
}

// ---------------------------------------------------------------------------

bool VehicleNode::adopt_fingerprint(const bloom::Fingerprint& fp, double now)
{
    if (fingerprint_) {
        const auto cur = std::make_pair(fingerprint_->gamma_crl_index, fingerprint_->crl_version);
        const auto got = std::make_pair(fp.gamma_crl_index, fp.crl_version);
        if (got < cur) {
            return false;
        }
        if (got == cur) {
            return true;
        }
    }
    fingerprint_ = fp;
    pieces_.clear();
    cognizant_ = false;
    if (fp.piece_count == 0) {
        set_cognizant(now);
    }
    return true;
}

bool VehicleNode::handle_fingerprint(const bloom::Fingerprint& fp, NodeId sender, double now)
{
    if (muted(sender, now)) {
        return false;
    }
    const Bytes payload = bloom::fingerprint_signing_payload(fp);
    Writer memo;
    memo.raw(payload);
    memo.raw(fp.signature.bytes);
    if (fp.piece_count != fp.filter.inserted() ||
        !check_signature(crypto::sha256(memo.bytes()), payload, fp.signature, config_.pca)) {
        strike(sender, now);
        return false;
    }
    return adopt_fingerprint(fp, now);
}

bool VehicleNode::handle_carrier(const cred::Pseudonym& carrier, NodeId sender, double now)
{
    if (!carrier.carrier_payload || muted(sender, now)) {
        return false;
    }
    const Bytes payload = cred::pseudonym_signing_payload(carrier);
    Writer memo;
    memo.raw(payload);
    memo.raw(carrier.issuer_signature.bytes);
    if (!check_signature(crypto::sha256(memo.bytes()), payload, carrier.issuer_signature, config_.pca)) {
        strike(sender, now);
        return false;
    }
    return adopt_fingerprint(*carrier.carrier_payload, now);
}

std::vector<std::pair<Digest, std::uint64_t>> VehicleNode::parse_crl_piece(const CrlPiece& piece)
{
    std::vector<std::pair<Digest, std::uint64_t>> out;
    for (const auto& e : piece.entries) {
        const auto serials = cred::expand_entry(e);
        for (std::size_t j = 0; j < serials.size(); ++j) {
            out.emplace_back(serials[j], std::uint64_t{e.first_slot} + j);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    return out;
}

void VehicleNode::merge(std::vector<std::pair<Digest, std::uint64_t>> items)
{
    std::map<std::uint64_t, std::vector<Digest>> fresh;
    for (auto& [serial, slot] : items) {
        fresh[slot].push_back(serial);
    }
    for (auto& [slot, serials] : fresh) {
        auto& dst = store_[slot];
        dst.insert(dst.end(), serials.begin(), serials.end());
        std::sort(dst.begin(), dst.end());
        dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
    }
}

PieceOutcome VehicleNode::handle_piece(const WirePiece& wp, NodeId sender, double now)
{
    return handle_piece(std::make_shared<const WirePiece>(wp), sender, now);
}

PieceOutcome VehicleNode::handle_piece(std::shared_ptr<const WirePiece> shared, NodeId sender, double now)
{
    const WirePiece& wp = *shared;
    auto drop = [&](PieceOutcome o) {
        ++counters_.pieces_dropped;
        return o;
    };
    if (muted(sender, now)) {
        return drop(PieceOutcome::muted);
    }
    const CrlPiece& p = wp.piece;

    if (p.kind == PieceKind::baseline) {
        if (baseline_version_ && p.crl_version < *baseline_version_) {
            return drop(PieceOutcome::stale);
        }
        if (baseline_version_ && p.crl_version == *baseline_version_ && pieces_.count(p.piece_index) != 0) {
            ++counters_.pieces_duplicate;
            return PieceOutcome::duplicate;
        }
        const Bytes payload = baseline_signing_payload(p);
        if (!check_signature(wp.digest, payload, p.piece_signature, config_.pca)) {
            ++counters_.pieces_forged;
            return PieceOutcome::forged;
        }
        if (!baseline_version_ || p.crl_version > *baseline_version_) {
            baseline_version_ = p.crl_version;
            baseline_total_ = p.total_pieces;
            pieces_.clear();
            cognizant_ = false;
        }
        if (p.total_pieces != *baseline_total_) {
            return drop(PieceOutcome::malformed);
        }
        pieces_.emplace(p.piece_index, shared);
        ++counters_.pieces_accepted;
        if (config_.parse_entries) {
            merge(parse_crl_piece(p));
        }
        if (pieces_.size() == *baseline_total_) {
            set_cognizant(now);
        }
        return PieceOutcome::accepted;
    }

    if (!fingerprint_) {
        return drop(PieceOutcome::no_fingerprint);
    }
    if (p.gamma_crl_index != fingerprint_->gamma_crl_index || p.crl_version != fingerprint_->crl_version) {
        return drop(PieceOutcome::stale);
    }
    if (pieces_.count(p.piece_index) != 0) {
        ++counters_.pieces_duplicate;
        return PieceOutcome::duplicate;
    }
    if (!fingerprint_->filter.query(wp.digest)) {
        ++counters_.pieces_forged;
        strike(sender, now);
        return PieceOutcome::forged;
    }
    if (p.total_pieces != fingerprint_->piece_count || p.piece_index >= fingerprint_->piece_count) {
        // passed the filter yet contradicts the signed piece count: a false positive
        ++counters_.pieces_forged;
        strike(sender, now);
        return PieceOutcome::forged;
    }
    learn_anchor(p.gamma_crl_index, p.tesla_anchor, p.anchor_signature);
    pieces_.emplace(p.piece_index, shared);
    ++counters_.pieces_accepted;
    if (config_.parse_entries) {
        merge(parse_crl_piece(p));
    }
    if (pieces_.size() == fingerprint_->piece_count) {
        set_cognizant(now);
    }
    return PieceOutcome::accepted;
}

// ---------------------------------------------------------------------------

bool VehicleNode::key_known(std::uint32_t gamma_crl_index, std::uint32_t interval) const
{
    auto it = known_upto_.find(gamma_crl_index);
    return it != known_upto_.end() && interval <= it->second;
}

bool VehicleNode::handle_key_disclosure(const KeyDisclosure& kd, double now)
{
    if (!learn_anchor(kd.gamma_crl_index, kd.anchor, kd.anchor_signature)) {
        return false;
    }
    if (!crypto::verify_key_against_anchor(kd.key, kd.interval_index, anchors_.at(kd.gamma_crl_index))) {
        return false;
    }
    validate_on_key_disclosure(kd.gamma_crl_index, kd.interval_index, kd.key, now);
    return true;
}

DeltaOutcome VehicleNode::buffer_delta_piece(const DeltaCrlPiece& piece, NodeId sender, double now)
{
    auto drop = [&](DeltaOutcome o) {
        ++counters_.delta_dropped;
        return o;
    };
    if (muted(sender, now)) {
        return drop(DeltaOutcome::muted);
    }
    const std::uint32_t g = piece.gamma_crl_index;
    const std::uint32_t i = piece.interval_index;
    if (i < 1 || i > config_.timing.intervals) {
        return drop(DeltaOutcome::forged);
    }
    if (key_known(g, i)) {
        return drop(DeltaOutcome::key_known);
    }
    // TESLA safety condition: even a clock that is max_clock_offset slow must still be before disclosure
    if (local_time(now) + config_.max_clock_offset >= config_.timing.disclosure_time(g, i)) {
        return drop(DeltaOutcome::too_late);
    }
    Sender& s = senders_[sender];
    if (!s.bucket) {
        s.bucket.emplace(config_.delta_rate, config_.delta_burst);
    }
    if (!s.bucket->take(now)) {
        strike(sender, now);
        return drop(DeltaOutcome::rate_limited);
    }

    auto anchor = anchors_.find(g);
    if (i >= 2 && anchor != anchors_.end() && !key_known(g, i - 1)) {
        if (!crypto::verify_key_against_anchor(piece.disclosed_prev_key, i - 1, anchor->second)) {
            ++counters_.delta_forged;
            strike(sender, now);
            return DeltaOutcome::forged;
        }
        validate_on_key_disclosure(g, i - 1, piece.disclosed_prev_key, now);
    }

    auto& slot = delta_buffer_[{g, i}];
    for (const auto& b : slot) {
        if (b.piece.piece_index == piece.piece_index && b.piece.mac == piece.mac) {
            return drop(DeltaOutcome::duplicate);
        }
    }
    const std::size_t bytes = delta_piece_overhead + piece.serials.size() * Digest::size;
    if (delta_bytes_ + bytes > config_.delta_buffer_cap) {
        return drop(DeltaOutcome::buffer_full);
    }
    slot.push_back({piece, now, sender, bytes});
    delta_bytes_ += bytes;
    return DeltaOutcome::buffered;
}

ValidationResult VehicleNode::validate_on_key_disclosure(std::uint32_t gamma_crl_index, std::uint32_t interval,
                                                         const Digest& key, double now)
{
    ValidationResult result;
    auto anchor = anchors_.find(gamma_crl_index);
    if (anchor == anchors_.end() || interval < 1 ||
        !crypto::verify_key_against_anchor(key, interval, anchor->second)) {
        return result;
    }
    if (key_known(gamma_crl_index, interval)) {
        return result;
    }
    known_upto_[gamma_crl_index] = interval;

    // K_j for j < interval follows from H^{interval-j}(key)
    Digest k = key;
    for (std::uint32_t j = interval; j >= 1; --j) {
        auto it = delta_buffer_.find({gamma_crl_index, j});
        if (it != delta_buffer_.end()) {
            const crypto::IntervalKeys keys = crypto::derive_interval_keys(k, j);
            const std::uint64_t slot = config_.timing.slot_of(gamma_crl_index, j);
            for (auto& b : it->second) {
                delta_bytes_ -= b.bytes;
                if (crypto::mac_verify(keys.mac_key, delta_mac_payload(b.piece), b.piece.mac)) {
                    std::vector<std::pair<Digest, std::uint64_t>> items;
                    items.reserve(b.piece.serials.size());
                    for (const auto& s : b.piece.serials) {
                        items.emplace_back(s, slot);
                    }
                    merge(std::move(items));
                    ++result.accepted;
                    ++counters_.delta_accepted;
                } else {
                    ++result.rejected;
                    ++counters_.delta_forged;
                    strike(b.sender, now);
                }
            }
            delta_buffer_.erase(it);
        }
        k = crypto::chain_step(k);
    }
    return result;
}

bool VehicleNode::is_revoked(const Digest& serial, std::uint64_t slot) const
{
    auto it = store_.find(slot);
    return it != store_.end() && std::binary_search(it->second.begin(), it->second.end(), serial);
}

void VehicleNode::prune_before(std::uint64_t slot)
{
    store_.erase(store_.begin(), store_.lower_bound(slot));
    const auto gamma = static_cast<std::uint32_t>(slot / config_.timing.intervals);
    for (auto it = delta_buffer_.begin(); it != delta_buffer_.end();) {
        if (it->first.first < gamma) {
            for (const auto& b : it->second) {
                delta_bytes_ -= b.bytes;
            }
            it = delta_buffer_.erase(it);
        } else {
            ++it;
        }
    }
}

std::size_t VehicleNode::store_size() const
{
    std::size_t n = 0;
    for (const auto& [slot, v] : store_) {
        n += v.size();
    }
    return n;
}

// ---------------------------------------------------------------------------

bool VehicleNode::verify_request(const PieceRequest& req, double now) const
{
    return verify_piece_request(req, config_.pca, now);
}

std::vector<std::uint16_t> VehicleNode::servable(const PieceRequest& req) const
{
    std::vector<std::uint16_t> out;
    if (req.kind == PieceKind::scoped) {
        if (!fingerprint_ || req.gamma_crl_index != fingerprint_->gamma_crl_index ||
            req.crl_version != fingerprint_->crl_version) {
            return out;
        }
    } else if (!baseline_version_ || req.crl_version > *baseline_version_) {
        return out;
    } else if (req.crl_version != *baseline_version_ && !req.missing_indices.empty()) {
        return out;
    }
    if (req.kind == PieceKind::baseline && req.missing_indices.empty()) {
        for (const auto& [idx, wp] : pieces_) {
            if (wp->piece.kind == PieceKind::baseline) {
                out.push_back(idx);
            }
        }
        return out;
    }
    for (auto idx : req.missing_indices) {
        auto it = pieces_.find(idx);
        if (it != pieces_.end() && it->second->piece.kind == req.kind) {
            out.push_back(idx);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<std::uint16_t> VehicleNode::choose_piece(const PieceRequest& req, Rng& rng) const
{
    const auto options = servable(req);
    if (options.empty()) {
        return std::nullopt;
    }
    return options[rng.below(options.size())];
}

const WirePiece* VehicleNode::answer_request(const PieceRequest& req, double now, Rng& rng) const
{
    if (!verify_request(req, now)) {
        return nullptr;
    }
    const auto idx = choose_piece(req, rng);
    return idx ? piece(*idx) : nullptr;
}

const WirePiece* VehicleNode::piece(std::uint16_t index) const
{
    auto it = pieces_.find(index);
    return it == pieces_.end() ? nullptr : it->second.get();
}

std::vector<std::uint16_t> VehicleNode::missing() const
{
    std::vector<std::uint16_t> out;
    std::uint32_t total = 0;
    if (fingerprint_) {
        total = fingerprint_->piece_count;
    } else if (baseline_total_) {
        total = *baseline_total_;
    }
    for (std::uint32_t j = 0; j < total; ++j) {
        if (pieces_.count(static_cast<std::uint16_t>(j)) == 0) {
            out.push_back(static_cast<std::uint16_t>(j));
        }
    }
    return out;
}

bool VehicleNode::wants_pieces() const
{
    return !cognizant_;
}

PieceRequest VehicleNode::make_request(const cred::Pseudonym& pseudonym, const crypto::SigningKey& key) const
{
    if (fingerprint_) {
        return make_piece_request(PieceKind::scoped, fingerprint_->gamma_crl_index, fingerprint_->crl_version,
                                  missing(), pseudonym, key);
    }
    return make_piece_request(PieceKind::baseline, 0, baseline_version_.value_or(0), missing(), pseudonym, key);
}

nlohmann::json VehicleNode::to_json() const
{
    nlohmann::json j;
    if (fingerprint_) {
        j["fingerprint"] = {{"gamma_crl_index", fingerprint_->gamma_crl_index},
                            {"crl_version", fingerprint_->crl_version},
                            {"piece_count", fingerprint_->piece_count}};
    }
    auto held = nlohmann::json::array();
    for (const auto& [idx, wp] : pieces_) {
        held.push_back(idx);
    }
    j["pieces"] = held;
    j["cognizant"] = cognizant_;
    j["store_size"] = store_size();
    j["delta_buffer_bytes"] = delta_bytes_;
    auto keys = nlohmann::json::object();
    for (const auto& [g, i] : known_upto_) {
        keys[std::to_string(g)] = i;
    }
    j["known_keys_upto"] = keys;
    j["counters"] = {{"pieces_accepted", counters_.pieces_accepted}, {"pieces_forged", counters_.pieces_forged},
                     {"pieces_duplicate", counters_.pieces_duplicate}, {"pieces_dropped", counters_.pieces_dropped},
                     {"delta_accepted", counters_.delta_accepted}, {"delta_forged", counters_.delta_forged},
                     {"delta_dropped", counters_.delta_dropped}, {"misbehavior", counters_.misbehavior}};
    return j;
}

} // namespace vcrl::vehicle
