#include <vcrl/sim/report.hpp>

#include <vcrl/sim/svg.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace vcrl::sim {

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) {
            throw ParameterError("bad seed '" + s + "'");
        }
        return static_cast<std::uint64_t>(v);
    };
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
        if (item.empty()) {
            continue;
        }
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(number(item));
            continue;
        }
        const auto lo = number(item.substr(0, dash));
        const auto hi = number(item.substr(dash + 1));
        if (hi < lo || hi - lo > 100'000) {
            throw ParameterError("bad seed range '" + item + "'");
        }
        for (auto s = lo; s <= hi; ++s) {
            out.push_back(s);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) {
        throw ParameterError("no seeds given");
    }
    return out;
}

void write_run_outputs(const std::filesystem::path& dir, const MetricsLog& log)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "vehicles.csv");
        write_vehicle_csv(f, log);
    }
    {
        std::ofstream f(dir / "timeseries.csv");
        write_timeseries_csv(f, log);
    }
    {
        std::ofstream f(dir / "cdf.csv");
        write_cdf_csv(f, log);
    }
    {
        std::ofstream f(dir / "summary.json");
        f << summary_json(log).dump(2) << '\n';
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / "summary.json").string());
        }
    }
    try {
        std::vector<double> delays;
        std::size_t measured = 0;
        for (const auto& v : log.vehicles) {
            if (v.measured()) {
                ++measured;
                if (auto d = v.delay()) {
                    delays.push_back(*d);
                }
            }
        }
        std::sort(delays.begin(), delays.end());
        Series cdf{to_string(log.mode), {}};
        for (std::size_t i = 0; i < delays.size(); ++i) {
            cdf.points.emplace_back(delays[i], static_cast<double>(i + 1) / static_cast<double>(measured));
        }
        std::ofstream f1(dir / "delay_cdf.svg");
        write_line_chart(f1, "Acquisition delay CDF", "delay (s)", "fraction of vehicles", {cdf});
        Series cog{"cognizant", {}};
        Series act{"on the road", {}};
        for (std::size_t t = 0; t < log.cognizant_series.size(); ++t) {
            cog.points.emplace_back(static_cast<double>(t), log.cognizant_series[t]);
            act.points.emplace_back(static_cast<double>(t), log.active_series[t]);
        }
        std::ofstream f2(dir / "cognizant.svg");
        write_line_chart(f2, "Cognizant vehicles over time", "time (s)", "vehicles", {cog, act});
    } catch (const std::exception&) {
        // plots are best effort
    }
}

std::string aggregate_csv_header()
{
    return "seed,mode,mock_signatures,measured,cognizant_fraction,failure_ratio,mean_delay,p50,p90,p95,p99,"
           "p95_conditional,piece_count,entry_count,p95_ratio";
}

void write_aggregate_csv(std::ostream& out, std::vector<const MetricsLog*> runs)
{
    std::sort(runs.begin(), runs.end(), [](const MetricsLog* a, const MetricsLog* b) {
        return std::make_pair(a->seed, a->mode) < std::make_pair(b->seed, b->mode);
    });
    auto cell = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("inf"); };
    std::map<std::uint64_t, std::map<Mode, std::optional<double>>> p95;
    for (const auto* r : runs) {
        p95[r->seed][r->mode] = summarize(*r).unconditional.p95;
    }
    out << aggregate_csv_header() << '\n';
    for (const auto* r : runs) {
        const Summary s = summarize(*r);
        std::string ratio;
        const auto& row = p95[r->seed];
        auto vc = row.find(Mode::vehicle_centric);
        auto base = row.find(Mode::baseline);
        if (vc != row.end() && base != row.end()) {
            if (!vc->second) {
                ratio = "inf";
            } else if (!base->second) {
                ratio = fmt(0.0);
            } else if (*base->second > 0.0) {
                ratio = fmt(*vc->second / *base->second);
            }
        }
        out << r->seed << ',' << to_string(r->mode) << ',' << (r->scheme == crypto::SignatureScheme::mock ? 1 : 0)
            << ',' << s.measured << ',' << fmt(s.cognizant_fraction) << ',' << fmt(s.failure_ratio) << ','
            << cell(s.mean_delay) << ',' << cell(s.unconditional.p50) << ',' << cell(s.unconditional.p90) << ','
            << cell(s.unconditional.p95) << ',' << cell(s.unconditional.p99) << ',' << cell(s.conditional.p95)
            << ',' << r->piece_count << ',' << r->entry_count << ',' << ratio << '\n';
    }
}

} // namespace vcrl::sim
