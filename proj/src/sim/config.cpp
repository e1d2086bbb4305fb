#include <vcrl/sim/config.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace vcrl::sim {

std::string to_string(Mode m)
{
    return m == Mode::vehicle_centric ? "vehicle_centric" : "baseline";
}

Mode parse_mode(const std::string& s)
{
    if (s == "vehicle_centric" || s == "vc") return Mode::vehicle_centric;
    if (s == "baseline") return Mode::baseline;
    throw ConfigError("mode", "unknown mode: " + s);
}

std::string to_string(AdversaryKind a)
{
    switch (a) {
    case AdversaryKind::none: return "none";
    case AdversaryKind::selfish: return "selfish";
    case AdversaryKind::dos: return "dos";
    case AdversaryKind::delta_flood: return "delta_flood";
    }
    return "none";
}

Timing SimConfig::timing() const
{
    Timing t;
    t.tau_p = tau_p;
    t.intervals = static_cast<std::uint32_t>(std::llround(gamma_crl / tau_p));
    t.policy = disclosure;
    return t;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key, "key '" + key + "': not a number: " + v);
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
    const double d = to_double(key, v);
    if (d < 0 || d != std::floor(d) || d > 1e18) {
        throw ConfigError(key, "key '" + key + "': not a nonnegative integer: " + v);
    }
    return static_cast<std::uint64_t>(d);
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "key '" + key + "': not a boolean: " + v);
}

std::vector<Point> to_points(const std::string& key, const std::string& v)
{
    // "x1:y1, x2:y2, ..."
    std::vector<Point> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(key, "key '" + key + "': expected x:y pairs, got " + item);
        }
        out.push_back({to_double(key, trim(item.substr(0, colon))), to_double(key, trim(item.substr(colon + 1)))});
    }
    return out;
}

using Setter = std::function<void(SimConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters()
{
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"vehicles", [](SimConfig& c, const auto& k, const auto& v) { c.vehicles = static_cast<std::uint32_t>(to_uint(k, v)); }},
        {"duration", [](SimConfig& c, const auto& k, const auto& v) { c.duration = to_double(k, v); }},
        {"bandwidth", [](SimConfig& c, const auto& k, const auto& v) { c.bandwidth = to_double(k, v); }},
        {"revocation_rate", [](SimConfig& c, const auto& k, const auto& v) { c.revocation_rate = to_double(k, v); }},
        {"area_width", [](SimConfig& c, const auto& k, const auto& v) { c.area_width = to_double(k, v); }},
        {"area_height", [](SimConfig& c, const auto& k, const auto& v) { c.area_height = to_double(k, v); }},
        {"rsu_count", [](SimConfig& c, const auto& k, const auto& v) { c.rsu_count = static_cast<std::uint32_t>(to_uint(k, v)); }},
        {"mode", [](SimConfig& c, const auto&, const auto& v) { c.mode = parse_mode(v); }},
        {"seed", [](SimConfig& c, const auto& k, const auto& v) { c.seed = to_uint(k, v); }},
        {"rsu_placement", [](SimConfig& c, const auto& k, const auto& v) {
             if (v == "top_intersections") c.rsu_placement = RsuPlacement::top_intersections;
             else if (v == "grid") c.rsu_placement = RsuPlacement::grid;
             else if (v == "explicit") c.rsu_placement = RsuPlacement::explicit_list;
             else throw ConfigError(k, "key '" + k + "': unknown placement " + v);
         }},
        {"rsu_positions", [](SimConfig& c, const auto& k, const auto& v) { c.rsu_positions = to_points(k, v); }},
        {"radio_range", [](SimConfig& c, const auto& k, const auto& v) { c.radio_range = to_double(k, v); }},
        {"loss_probability", [](SimConfig& c, const auto& k, const auto& v) { c.loss_probability = to_double(k, v); }},
        {"piece_tx_interval", [](SimConfig& c, const auto& k, const auto& v) { c.piece_tx_interval = to_double(k, v); }},
        {"fingerprint_tx_interval", [](SimConfig& c, const auto& k, const auto& v) { c.fingerprint_tx_interval = to_double(k, v); }},
        {"request_interval", [](SimConfig& c, const auto& k, const auto& v) { c.request_interval = to_double(k, v); }},
        {"response_jitter", [](SimConfig& c, const auto& k, const auto& v) { c.response_jitter = to_double(k, v); }},
        {"cam_rate", [](SimConfig& c, const auto& k, const auto& v) { c.cam_rate = to_double(k, v); }},
        {"carrier_fraction", [](SimConfig& c, const auto& k, const auto& v) { c.carrier_fraction = to_double(k, v); }},
        {"tau_p", [](SimConfig& c, const auto& k, const auto& v) { c.tau_p = to_double(k, v); }},
        {"gamma", [](SimConfig& c, const auto& k, const auto& v) { c.gamma = to_double(k, v); }},
        {"gamma_crl", [](SimConfig& c, const auto& k, const auto& v) { c.gamma_crl = to_double(k, v); }},
        {"disclosure", [](SimConfig& c, const auto& k, const auto& v) {
             if (v == "optimized") c.disclosure = DisclosurePolicy::optimized;
             else if (v == "strict") c.disclosure = DisclosurePolicy::strict;
             else throw ConfigError(k, "key '" + k + "': unknown policy " + v);
         }},
        {"fingerprint_fp", [](SimConfig& c, const auto& k, const auto& v) { c.fingerprint_fp = to_double(k, v); }},
        {"population", [](SimConfig& c, const auto& k, const auto& v) { c.population = to_uint(k, v); }},
        {"delta_revocations", [](SimConfig& c, const auto& k, const auto& v) { c.delta_revocations = to_double(k, v); }},
        {"adversary", [](SimConfig& c, const auto& k, const auto& v) {
             if (v == "none") c.adversary = AdversaryKind::none;
             else if (v == "selfish") c.adversary = AdversaryKind::selfish;
             else if (v == "dos") c.adversary = AdversaryKind::dos;
             else if (v == "delta_flood") c.adversary = AdversaryKind::delta_flood;
             else throw ConfigError(k, "key '" + k + "': unknown adversary " + v);
         }},
        {"adversary_fraction", [](SimConfig& c, const auto& k, const auto& v) { c.adversary_fraction = to_double(k, v); }},
        {"bogus_interval", [](SimConfig& c, const auto& k, const auto& v) { c.bogus_interval = to_double(k, v); }},
        {"mobility", [](SimConfig& c, const auto& k, const auto& v) {
             if (v == "synthetic") c.mobility = MobilityKind::synthetic;
             else if (v == "trace") c.mobility = MobilityKind::trace;
             else throw ConfigError(k, "key '" + k + "': unknown mobility " + v);
         }},
        {"trace_file", [](SimConfig& c, const auto&, const auto& v) { c.trace_file = v; }},
        {"block_size", [](SimConfig& c, const auto& k, const auto& v) { c.block_size = to_double(k, v); }},
        {"speed_min", [](SimConfig& c, const auto& k, const auto& v) { c.speed_min = to_double(k, v); }},
        {"speed_max", [](SimConfig& c, const auto& k, const auto& v) { c.speed_max = to_double(k, v); }},
        {"mean_trip", [](SimConfig& c, const auto& k, const auto& v) { c.mean_trip = to_double(k, v); }},
        {"replace_trips", [](SimConfig& c, const auto& k, const auto& v) { c.replace_trips = to_bool(k, v); }},
        {"rx_capacity_factor", [](SimConfig& c, const auto& k, const auto& v) { c.rx_capacity_factor = to_double(k, v); }},
        {"sig_verify_latency", [](SimConfig& c, const auto& k, const auto& v) { c.sig_verify_latency = to_double(k, v); }},
        {"bf_check_latency", [](SimConfig& c, const auto& k, const auto& v) { c.bf_check_latency = to_double(k, v); }},
        {"max_clock_offset", [](SimConfig& c, const auto& k, const auto& v) { c.max_clock_offset = to_double(k, v); }},
        {"delta_buffer_cap", [](SimConfig& c, const auto& k, const auto& v) { c.delta_buffer_cap = to_uint(k, v); }},
        {"strike_threshold", [](SimConfig& c, const auto& k, const auto& v) { c.strike_threshold = static_cast<std::uint32_t>(to_uint(k, v)); }},
        {"parse_baseline_entries", [](SimConfig& c, const auto& k, const auto& v) { c.parse_baseline_entries = to_bool(k, v); }},
        {"signature_scheme", [](SimConfig& c, const auto& k, const auto& v) {
             try {
                 c.signature_scheme = crypto::parse_signature_scheme(v);
             } catch (const ParameterError& e) {
                 throw ConfigError(k, "key '" + k + "': " + e.what());
             }
         }},
        {"record_events", [](SimConfig& c, const auto& k, const auto& v) { c.record_events = to_bool(k, v); }},
    };
    return table;
}

} // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, fn] : setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

const std::vector<std::string>& required_config_keys()
{
    static const std::vector<std::string> keys = {"vehicles", "duration", "bandwidth", "revocation_rate",
                                                  "area_width", "area_height", "rsu_count"};
    return keys;
}

SimConfig parse_config(std::istream& in)
{
    std::map<std::string, const Setter*> lookup;
    for (const auto& [name, fn] : setters()) {
        lookup.emplace(name, &fn);
    }
    SimConfig c;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw ConfigError(key, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!seen.insert(key).second) {
            throw ConfigError(key, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
        (*it->second)(c, key, value);
    }
    for (const auto& key : required_config_keys()) {
        if (seen.count(key) == 0) {
            throw ConfigError(key, "missing required key '" + key + "'");
        }
    }
    validate(c);
    return c;
}

SimConfig parse_config_string(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

SimConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot open config file: " + path);
    }
    return parse_config(in);
}

void validate(const SimConfig& c)
{
    auto require = [](bool ok, const std::string& key, const std::string& why) {
        if (!ok) {
            throw ConfigError(key, "key '" + key + "': " + why);
        }
    };
    require(c.duration > 0, "duration", "must be positive");
    require(c.bandwidth > 0, "bandwidth", "must be positive");
    require(c.revocation_rate >= 0 && c.revocation_rate <= 1, "revocation_rate", "must lie in [0, 1]");
    require(c.area_width > 0, "area_width", "must be positive");
    require(c.area_height > 0, "area_height", "must be positive");
    require(c.radio_range > 0, "radio_range", "must be positive");
    require(c.loss_probability >= 0 && c.loss_probability < 1, "loss_probability", "must lie in [0, 1)");
    require(c.piece_tx_interval > 0, "piece_tx_interval", "must be positive");
    require(c.fingerprint_tx_interval > 0, "fingerprint_tx_interval", "must be positive");
    require(c.request_interval > 0, "request_interval", "must be positive");
    require(c.response_jitter >= 0, "response_jitter", "must be nonnegative");
    require(c.cam_rate > 0, "cam_rate", "must be positive");
    require(c.carrier_fraction >= 0 && c.carrier_fraction <= 1, "carrier_fraction", "must lie in [0, 1]");
    require(c.tau_p > 0, "tau_p", "must be positive");
    const double d = c.gamma / c.tau_p;
    require(c.gamma > 0 && std::abs(d - std::round(d)) < 1e-9, "gamma", "must be a positive multiple of tau_p");
    const double n = c.gamma_crl / c.tau_p;
    require(c.gamma_crl > 0 && std::abs(n - std::round(n)) < 1e-9, "gamma_crl", "must be a positive multiple of tau_p");
    require(c.fingerprint_fp > 0 && c.fingerprint_fp < 1, "fingerprint_fp", "must lie in (0, 1)");
    require(c.delta_revocations >= 0, "delta_revocations", "must be nonnegative");
    require(c.adversary_fraction >= 0 && c.adversary_fraction <= 1, "adversary_fraction", "must lie in [0, 1]");
    require(c.bogus_interval > 0, "bogus_interval", "must be positive");
    require(c.mobility != MobilityKind::trace || !c.trace_file.empty(), "trace_file", "required for trace mobility");
    require(c.block_size > 0, "block_size", "must be positive");
    require(c.speed_min > 0 && c.speed_max >= c.speed_min, "speed_max", "needs 0 < speed_min <= speed_max");
    require(c.mean_trip > 0, "mean_trip", "must be positive");
    require(c.rx_capacity_factor > 0, "rx_capacity_factor", "must be positive");
    require(c.sig_verify_latency >= 0, "sig_verify_latency", "must be nonnegative");
    require(c.bf_check_latency >= 0, "bf_check_latency", "must be nonnegative");
    require(c.max_clock_offset >= 0, "max_clock_offset", "must be nonnegative");
    require(c.strike_threshold >= 1, "strike_threshold", "must be at least 1");
    require(c.rsu_placement != RsuPlacement::explicit_list || c.rsu_positions.size() == c.rsu_count, "rsu_positions",
            "explicit placement needs exactly rsu_count positions");
}

} // namespace vcrl::sim
