#include <vcrl/authority.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vcrl::authority {

BatchRecord record_from_batch(std::uint64_t id, const cred::PseudonymBatch& batch)
{
    const cred::SerialChain chain = cred::derive_serial_chain(batch.sn_anchor, batch.rnd_seed, batch.size());
    BatchRecord r;
    r.id = id;
    r.first_slot = batch.first_slot();
    r.serials = chain.serials;
    r.chain_values = chain.chain_values;
    return r;
}

// ---------------------------------------------------------------------------

void RevocationLedger::register_batch(BatchRecord record)
{
    if (record.serials.empty() || record.serials.size() != record.chain_values.size()) {
        throw ParameterError("batch record needs matching, nonempty serial and chain lists");
    }
    if (batches_.count(record.id) != 0) {
        throw StateError("batch already registered");
    }
    const std::uint64_t id = record.id;
    batches_.emplace(id, std::move(record));
}

const BatchRecord& RevocationLedger::batch(std::uint64_t id) const
{
    auto it = batches_.find(id);
    if (it == batches_.end()) {
        throw ParameterError("unknown batch id");
    }
    return it->second;
}

const std::vector<LedgerEvent>& RevocationLedger::history(std::uint64_t batch_id) const
{
    static const std::vector<LedgerEvent> none;
    auto it = per_batch_.find(batch_id);
    return it == per_batch_.end() ? none : it->second;
}

void RevocationLedger::revoke(std::uint64_t batch_id, std::uint64_t from_slot)
{
    batch(batch_id);
    auto& h = per_batch_[batch_id];
    if (!h.empty() && h.back().kind == EventKind::revoke) {
        throw StateError("batch is already revoked");
    }
    if (!h.empty() && from_slot < h.back().slot) {
        throw StateError("revocation predates the batch's reinstatement");
    }
    h.push_back({batch_id, EventKind::revoke, from_slot});
    log_.push_back(h.back());
}

void RevocationLedger::reinstate(std::uint64_t batch_id, std::uint64_t at_slot)
{
    batch(batch_id);
    auto it = per_batch_.find(batch_id);
    if (it == per_batch_.end() || it->second.back().kind != EventKind::revoke) {
        throw StateError("reinstating a batch that is not revoked");
    }
    if (at_slot <= it->second.back().slot) {
        throw StateError("reinstatement must come after the revocation");
    }
    it->second.push_back({batch_id, EventKind::reinstate, at_slot});
    log_.push_back(it->second.back());
}

BatchStatus RevocationLedger::status(std::uint64_t batch_id) const
{
    batch(batch_id);
    const auto& h = history(batch_id);
    if (h.empty()) {
        return BatchStatus::active;
    }
    return h.back().kind == EventKind::revoke ? BatchStatus::revoked : BatchStatus::reinstated;
}

bool RevocationLedger::is_revoked_at(std::uint64_t batch_id, std::uint64_t slot) const
{
    bool revoked = false;
    for (const auto& e : history(batch_id)) {
        if (e.slot > slot) {
            break;
        }
        revoked = e.kind == EventKind::revoke;
    }
    return revoked;
}

std::optional<std::uint64_t> RevocationLedger::terminal_revocation(std::uint64_t batch_id) const
{
    const auto& h = history(batch_id);
    if (h.empty() || h.back().kind != EventKind::revoke) {
        return std::nullopt;
    }
    const BatchRecord& b = batch(batch_id);
    if (h.back().slot > b.last_slot()) {
        return std::nullopt;
    }
    return std::max(h.back().slot, b.first_slot);
}

std::vector<std::uint64_t> RevocationLedger::touched_batches() const
{
    std::vector<std::uint64_t> out;
    out.reserve(per_batch_.size());
    for (const auto& [id, h] : per_batch_) {
        out.push_back(id);
    }
    return out;
}

std::vector<std::pair<Digest, std::uint64_t>> RevocationLedger::revoked_serials(std::uint64_t slot_lo,
                                                                                std::uint64_t slot_hi) const
{
    std::vector<std::pair<Digest, std::uint64_t>> out;
    for (const auto& [id, h] : per_batch_) {
        const BatchRecord& b = batch(id);
        const std::uint64_t lo = std::max(slot_lo, b.first_slot);
        const std::uint64_t hi = std::min(slot_hi, b.last_slot());
        for (std::uint64_t s = lo; s <= hi && lo <= hi; ++s) {
            if (is_revoked_at(id, s)) {
                out.emplace_back(b.serials[s - b.first_slot], s);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });
    return out;
}

// ---------------------------------------------------------------------------

std::size_t BaseCrl::entry_count() const
{
    std::size_t n = 0;
    for (const auto& p : pieces) {
        n += p.piece.entries.size();
    }
    return n;
}

std::vector<std::size_t> split_evenly(std::size_t count, std::size_t per_piece)
{
    if (per_piece == 0) {
        throw ParameterError("bandwidth too small for a single entry");
    }
    const std::size_t n = (count + per_piece - 1) / per_piece;
    if (n > 0xffff) {
        throw ParameterError("too many pieces for the wire format");
    }
    std::vector<std::size_t> bounds(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        bounds[j] = n == 0 ? 0 : j * count / n;
    }
    return bounds;
}

namespace {

struct PendingEntry {
    std::uint64_t start_slot;
    cred::RevocationEntry entry;
};

cred::RevocationEntry entry_from(const BatchRecord& b, std::uint64_t start_slot)
{
    const std::size_t idx = start_slot - b.first_slot;
    cred::RevocationEntry e;
    e.first_revoked_serial = b.serials[idx];
    e.chain_value = b.chain_values[idx];
    e.remaining = static_cast<std::uint16_t>(b.size() - idx - 1);
    e.first_slot = static_cast<std::uint32_t>(start_slot);
    return e;
}

void sort_entries(std::vector<PendingEntry>& v)
{
    std::sort(v.begin(), v.end(), [](const PendingEntry& a, const PendingEntry& b) {
        return std::tie(a.start_slot, a.entry.first_revoked_serial) <
               std::tie(b.start_slot, b.entry.first_revoked_serial);
    });
}

} // namespace

Authority::Authority(AuthorityConfig config, crypto::SigningKey pca, std::uint64_t seed)
    : config_(config), pca_(std::move(pca)), seed_(seed)
{
    if (!(config_.timing.tau_p > 0.0) || config_.timing.intervals < 1) {
        throw ParameterError("authority timing needs tau_p > 0 and at least one interval");
    }
}

const crypto::KeySchedule& Authority::schedule(std::uint32_t gamma_crl_index)
{
    auto it = schedules_.find(gamma_crl_index);
    if (it == schedules_.end()) {
        Rng rng(derive_seed(seed_, gamma_crl_index));
        it = schedules_
                 .emplace(gamma_crl_index,
                          crypto::make_key_schedule(gamma_crl_index, config_.timing.intervals, rng.digest(), pca_))
                 .first;
    }
    return it->second;
}

const BaseCrl& Authority::build_base_crl(std::uint32_t gamma_crl_index, std::size_t bandwidth)
{
    const crypto::KeySchedule& ks = schedule(gamma_crl_index);
    const Timing& t = config_.timing;
    const std::uint64_t gs = t.slot_of(gamma_crl_index, 1);
    const std::uint64_t ge = gs + t.intervals - 1;

    std::vector<PendingEntry> pending;
    std::map<std::uint64_t, std::uint64_t> covered;
    for (std::uint64_t id : ledger_.touched_batches()) {
        const auto from = ledger_.terminal_revocation(id);
        if (!from) {
            continue;
        }
        const BatchRecord& b = ledger_.batch(id);
        // expired pseudonyms are skipped by advancing the start to the Γ_CRL
        const std::uint64_t s0 = std::max({*from, gs, b.first_slot});
        if (s0 > ge || s0 > b.last_slot()) {
            continue;
        }
        pending.push_back({s0, entry_from(b, s0)});
        covered.emplace(id, s0);
    }
    sort_entries(pending);

    const std::size_t overhead = crl_piece_overhead(PieceKind::scoped, pca_.scheme());
    if (bandwidth <= overhead) {
        throw ParameterError("bandwidth smaller than the piece header");
    }
    const auto bounds = split_evenly(pending.size(), (bandwidth - overhead) / cred::revocation_entry_size);
    const std::size_t n = bounds.size() - 1;

    auto prev = bases_.find(gamma_crl_index);
    BaseCrl base;
    base.gamma_crl_index = gamma_crl_index;
    base.crl_version = prev == bases_.end() ? 1 : prev->second.crl_version + 1;
    base.schedule = ks;
    base.covered_from = std::move(covered);
    std::vector<Digest> digests;
    for (std::size_t j = 0; j < n; ++j) {
        CrlPiece p;
        p.kind = PieceKind::scoped;
        p.gamma_crl_index = gamma_crl_index;
        p.crl_version = base.crl_version;
        p.piece_index = static_cast<std::uint16_t>(j);
        p.total_pieces = static_cast<std::uint16_t>(n);
        p.tesla_anchor = ks.anchor();
        p.anchor_signature = ks.anchor_signature;
        for (std::size_t e = bounds[j]; e < bounds[j + 1]; ++e) {
            p.entries.push_back(pending[e].entry);
        }
        base.pieces.push_back(WirePiece::from(std::move(p)));
        digests.push_back(base.pieces.back().digest);
    }
    base.fingerprint = bloom::make_fingerprint(gamma_crl_index, base.crl_version, digests, config_.fingerprint_fp, pca_);
    bases_[gamma_crl_index] = std::move(base);
    return bases_[gamma_crl_index];
}

const BaseCrl* Authority::base_crl(std::uint32_t gamma_crl_index) const
{
    auto it = bases_.find(gamma_crl_index);
    return it == bases_.end() ? nullptr : &it->second;
}

std::vector<DeltaCrlPiece> Authority::gen_delta_crl(std::uint32_t gamma_crl_index, std::uint32_t interval,
                                                     const Digest& key, std::size_t bandwidth, double now)
{
    const Timing& t = config_.timing;
    if (interval < 1 || interval > t.intervals) {
        throw ParameterError("interval out of range");
    }
    const crypto::KeySchedule& ks = schedule(gamma_crl_index);
    if (key != ks.chain[interval]) {
        throw StateError("key does not belong to this interval");
    }
    if (now >= t.disclosure_time(gamma_crl_index, interval)) {
        throw ScheduleError("delta pieces requested after their key is disclosed");
    }
    if (bandwidth <= delta_piece_overhead) {
        throw ParameterError("bandwidth smaller than the delta piece header");
    }

    const std::uint64_t slot = t.slot_of(gamma_crl_index, interval);
    const BaseCrl* base = base_crl(gamma_crl_index);
    std::vector<Digest> serials;
    for (std::uint64_t id : ledger_.touched_batches()) {
        if (base != nullptr) {
            auto it = base->covered_from.find(id);
            if (it != base->covered_from.end() && slot >= it->second) {
                continue;
            }
        }
        const BatchRecord& b = ledger_.batch(id);
        if (slot < b.first_slot || slot > b.last_slot() || !ledger_.is_revoked_at(id, slot)) {
            continue;
        }
        serials.push_back(b.serials[slot - b.first_slot]);
    }
    std::sort(serials.begin(), serials.end());

    const crypto::IntervalKeys keys = crypto::derive_interval_keys(key, interval);
    const auto bounds = split_evenly(serials.size(), (bandwidth - delta_piece_overhead) / Digest::size);
    const std::size_t n = bounds.size() - 1;
    std::vector<DeltaCrlPiece> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        DeltaCrlPiece p;
        p.gamma_crl_index = gamma_crl_index;
        p.interval_index = interval;
        p.piece_index = static_cast<std::uint16_t>(j);
        p.total_pieces = static_cast<std::uint16_t>(n);
        p.serials.assign(serials.begin() + static_cast<std::ptrdiff_t>(bounds[j]),
                         serials.begin() + static_cast<std::ptrdiff_t>(bounds[j + 1]));
        p.mac = crypto::mac_compute(keys.mac_key, delta_mac_payload(p));
        p.disclosed_prev_key = keys.previous_key;
        out.push_back(std::move(p));
    }
    return out;
}

Digest Authority::disclose_key(std::uint32_t gamma_crl_index, std::uint32_t interval, double now)
{
    const Timing& t = config_.timing;
    if (interval < 1 || interval > t.intervals) {
        throw ParameterError("interval out of range");
    }
    if (now < t.disclosure_time(gamma_crl_index, interval)) {
        throw ScheduleError("key requested before its disclosure time");
    }
    return schedule(gamma_crl_index).chain[interval];
}

KeyDisclosure Authority::key_disclosure(std::uint32_t gamma_crl_index, std::uint32_t interval, double now)
{
    KeyDisclosure kd;
    kd.gamma_crl_index = gamma_crl_index;
    kd.interval_index = interval;
    kd.key = disclose_key(gamma_crl_index, interval, now);
    const crypto::KeySchedule& ks = schedule(gamma_crl_index);
    kd.anchor = ks.anchor();
    kd.anchor_signature = ks.anchor_signature;
    return kd;
}

std::vector<WirePiece> Authority::build_baseline_crl(std::uint64_t slot_lo, std::uint64_t slot_hi,
                                                     std::size_t bandwidth, std::uint32_t version) const
{
    std::vector<PendingEntry> pending;
    for (std::uint64_t id : ledger_.touched_batches()) {
        const BatchRecord& b = ledger_.batch(id);
        const std::uint64_t lo = std::max(slot_lo, b.first_slot);
        const std::uint64_t hi = std::min(slot_hi, b.last_slot());
        for (std::uint64_t s = lo; lo <= hi && s <= hi; ++s) {
            if (ledger_.is_revoked_at(id, s)) {
                pending.push_back({s, entry_from(b, s)});
                break;
            }
        }
    }
    sort_entries(pending);

    const std::size_t overhead = crl_piece_overhead(PieceKind::baseline, pca_.scheme());
    if (bandwidth <= overhead) {
        throw ParameterError("bandwidth smaller than the piece header");
    }
    const auto bounds = split_evenly(pending.size(), (bandwidth - overhead) / cred::revocation_entry_size);
    const std::size_t n = bounds.size() - 1;
    std::vector<WirePiece> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        CrlPiece p;
        p.kind = PieceKind::baseline;
        p.crl_version = version;
        p.piece_index = static_cast<std::uint16_t>(j);
        p.total_pieces = static_cast<std::uint16_t>(n);
        for (std::size_t e = bounds[j]; e < bounds[j + 1]; ++e) {
            p.entries.push_back(pending[e].entry);
        }
        p.piece_signature = pca_.sign(baseline_signing_payload(p));
        out.push_back(WirePiece::from(std::move(p)));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::uint64_t populate_synthetic_day(RevocationLedger& ledger, const SyntheticDay& day, std::uint64_t seed,
                                     std::uint64_t first_id)
{
    if (!(day.revocation_rate >= 0.0 && day.revocation_rate <= 1.0)) {
        throw ParameterError("revocation rate must lie in [0, 1]");
    }
    if (!(day.tau_p > 0.0) || !(day.day_seconds >= day.tau_p)) {
        throw ParameterError("synthetic day needs tau_p > 0 and at least one slot");
    }
    const auto revoked = static_cast<std::uint64_t>(std::llround(static_cast<double>(day.pseudonyms_per_day) * day.revocation_rate));
    const auto slots = static_cast<std::uint64_t>(day.day_seconds / day.tau_p);
    Rng rng(seed);
    for (std::uint64_t k = 0; k < revoked; ++k) {
        const std::uint64_t slot = rng.below(slots);
        const Digest sn0 = rng.digest();
        const Digest rnd0 = rng.digest();
        const cred::SerialChain chain = cred::derive_serial_chain(sn0, rnd0, 1);
        BatchRecord r;
        r.id = first_id + k;
        r.first_slot = slot;
        r.serials = chain.serials;
        r.chain_values = chain.chain_values;
        ledger.register_batch(std::move(r));
        ledger.revoke(first_id + k, slot);
    }
    return revoked;
}

} // namespace vcrl::authority
