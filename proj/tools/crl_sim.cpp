// Experiment runner: scenario sweeps, analytic calculators and golden vectors.

#include <vcrl/bloom.hpp>
#include <vcrl/sim/config.hpp>
#include <vcrl/sim/mobility.hpp>
#include <vcrl/sim/report.hpp>
#include <vcrl/sim/simulator.hpp>
#include <vcrl/vectors.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace vcrl;

namespace {

unsigned worker_count(std::size_t jobs)
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CRL_SIM_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) {
            n = static_cast<unsigned>(v);
        }
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

/// Prints rows to stdout as aligned columns and optionally to a CSV file.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
    void row(std::vector<std::string> r) { rows_.push_back(std::move(r)); }
    void print(std::ostream& out) const
    {
        std::vector<std::size_t> w(header_.size());
        for (std::size_t i = 0; i < header_.size(); ++i) {
            w[i] = header_[i].size();
            for (const auto& r : rows_) {
                w[i] = std::max(w[i], r[i].size());
            }
        }
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                out << (i ? "  " : "") << std::string(w[i] - r[i].size(), ' ') << r[i];
            }
            out << '\n';
        };
        line(header_);
        for (const auto& r : rows_) {
            line(r);
        }
    }
    void csv(const std::string& path) const
    {
        std::ofstream f(path);
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                f << (i ? "," : "") << r[i];
            }
            f << '\n';
        };
        line(header_);
        for (const auto& r : rows_) {
            line(r);
        }
        if (!f) {
            throw std::runtime_error("cannot write " + path);
        }
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct SimulateArgs {
    std::string config;
    std::string mode = "vc";
    std::string seeds;
    std::string out = "out";
};

int cmd_simulate(const SimulateArgs& a, std::optional<std::uint64_t> seed_flag)
{
    sim::SimConfig base;
    try {
        base = sim::load_config(a.config);
    } catch (const sim::ConfigError& e) {
        std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    std::vector<sim::Mode> modes;
    if (a.mode == "both") {
        modes = {sim::Mode::vehicle_centric, sim::Mode::baseline};
    } else {
        try {
            modes = {sim::parse_mode(a.mode)};
        } catch (const std::exception& e) {
            std::cerr << e.what() << '\n';
            return 2;
        }
    }
    std::vector<std::uint64_t> seeds;
    try {
        seeds = !a.seeds.empty() ? sim::parse_seeds(a.seeds)
                                 : std::vector<std::uint64_t>{seed_flag.value_or(base.seed)};
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    struct Job {
        sim::SimConfig config;
        sim::MetricsLog log;
        std::string error;
    };
    std::vector<Job> jobs;
    for (auto seed : seeds) {
        for (auto m : modes) {
            Job j;
            j.config = base;
            j.config.seed = seed;
            j.config.mode = m;
            jobs.push_back(std::move(j));
        }
    }
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            Job& j = jobs[i];
            try {
                j.log = sim::run_simulation(j.config);
                const fs::path dir =
                    fs::path(a.out) / (sim::to_string(j.config.mode) + "_seed" + std::to_string(j.config.seed));
                sim::write_run_outputs(dir, j.log);
                std::lock_guard lock(io);
                std::cerr << "done " << dir.string() << '\n';
            } catch (const std::exception& e) {
                j.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < worker_count(jobs.size()); ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }

    int rc = 0;
    std::vector<const sim::MetricsLog*> done;
    for (const auto& j : jobs) {
        if (!j.error.empty()) {
            std::cerr << "run " << sim::to_string(j.config.mode) << " seed " << j.config.seed
                      << " failed: " << j.error << '\n';
            rc = 1;
        } else {
            done.push_back(&j.log);
        }
    }
    fs::create_directories(a.out);
    {
        std::ofstream agg(fs::path(a.out) / "summary.csv");
        sim::write_aggregate_csv(agg, done);
    }
    if (base.signature_scheme == crypto::SignatureScheme::mock) {
        std::cerr << "note: signatures use the mock scheme; verification cost is modeled, not measured\n";
    }
    std::ifstream back(fs::path(a.out) / "summary.csv");
    std::cout << back.rdbuf();
    return rc;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Vehicle-centric CRL distribution: simulator and calculators"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "Seed for anything randomized (default: scenario seed)");

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario over one or more seeds");
    sim_cmd->add_option("--config", sa.config, "Scenario file (key = value)")->required();
    sim_cmd->add_option("--mode", sa.mode, "vc | baseline | both")->check(CLI::IsMember({"vc", "vehicle_centric", "baseline", "both"}));
    sim_cmd->add_option("--seeds", sa.seeds, "Seed list, e.g. 1,2 or 1-10");
    sim_cmd->add_option("--out", sa.out, "Output directory");
    sim_cmd->add_option("--seed", seed, "Single seed when --seeds is absent");

    auto* analyze = app.add_subcommand("analyze", "Analytic calculators");
    analyze->require_subcommand(1);
    std::string csv_path;

    std::uint64_t fp_n = 20;
    auto* fp_cmd = analyze->add_subcommand("fp", "False-positive rate of sized filters over a range of targets");
    fp_cmd->add_option("--n", fp_n, "Pieces in the filter");

    std::string pk = "1e-20:67,1e-22:73,1e-23:76";
    std::string rates = "1.6e18";
    auto* atk = analyze->add_subcommand("attack-cost", "Expected time for a query-only attack to find a false positive");
    atk->add_option("--pk", pk, "Comma list of p:k pairs");
    atk->add_option("--hashrate", rates, "Comma list of hashes per second");

    std::uint64_t n_max = 40;
    std::string fs_p = "1e-20,1e-25,1e-30";
    auto* fsz = analyze->add_subcommand("fingerprint-size", "Filter bytes vs SHA-1 digest lists per piece count");
    fsz->add_option("--n-max", n_max, "Largest piece count");
    fsz->add_option("--p", fs_p, "Comma list of false-positive targets");

    double ppm = 20.0;
    double max_err = 1.0;
    auto* sync = analyze->add_subcommand("sync-period", "Clock resynchronization period");
    sync->add_option("--ppm", ppm, "Clock accuracy in ppm");
    sync->add_option("--max-error", max_err, "Tolerated clock error in seconds");

    for (auto* sub : {fp_cmd, atk, fsz, sync}) {
        sub->add_option("--csv", csv_path, "Also write the table as CSV");
    }

    std::string vec_out = "vectors";
    auto* vec = app.add_subcommand("vectors", "Write golden test vectors as hex JSON");
    vec->add_option("--out", vec_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) {
            return cmd_simulate(sa, seed);
        }
        if (vec->parsed()) {
            fs::create_directories(vec_out);
            const auto v = make_vectors(seed.value_or(1));
            std::ofstream f(fs::path(vec_out) / "vectors.json");
            f << v.dump(2) << '\n';
            if (!f) {
                std::cerr << "cannot write " << vec_out << '\n';
                return 1;
            }
            const auto bad = check_vectors(v);
            for (const auto& b : bad) {
                std::cerr << "self-check: " << b << '\n';
            }
            std::cout << (fs::path(vec_out) / "vectors.json").string() << '\n';
            return bad.empty() ? 0 : 1;
        }
        std::optional<Table> table;
        if (fp_cmd->parsed()) {
            table.emplace(std::vector<std::string>{"n", "target_p", "m_bits", "k", "bytes", "fp"});
            for (int e = 3; e <= 30; ++e) {
                const double p = std::pow(10.0, -e);
                const auto bp = bloom::bf_params(fp_n, p);
                table->row({std::to_string(fp_n), sci(p), std::to_string(bp.m), std::to_string(bp.k),
                            std::to_string(bloom::fingerprint_bytes(fp_n, p)),
                            sci(bloom::false_positive_prob(bp.m, bp.k, static_cast<double>(fp_n)))});
            }
        } else if (atk->parsed()) {
            table.emplace(std::vector<std::string>{"p", "k", "hashrate", "seconds", "minutes", "hours"});
            std::stringstream ss(pk);
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos) {
                    throw ParameterError("expected p:k, got " + item);
                }
                const double p = std::stod(item.substr(0, colon));
                const double k = std::stod(item.substr(colon + 1));
                for (double r : parse_list(rates)) {
                    const double t = bloom::attack_time(p, k, r);
                    table->row({sci(p), sci(k), sci(r), sci(t), sci(t / 60), sci(t / 3600)});
                }
            }
        } else if (fsz->parsed()) {
            table.emplace(std::vector<std::string>{"n", "p", "bf_bytes", "sha1_bytes"});
            for (double p : parse_list(fs_p)) {
                for (std::uint64_t n = 1; n <= n_max; ++n) {
                    table->row({std::to_string(n), sci(p), std::to_string(bloom::fingerprint_bytes(n, p)),
                                std::to_string(20 * n)});
                }
            }
        } else if (sync->parsed()) {
            table.emplace(std::vector<std::string>{"ppm", "max_error_s", "period_s", "period_h"});
            const double s = bloom::sync_period(ppm, max_err);
            char whole[32];
            std::snprintf(whole, sizeof whole, "%.0f", s);
            table->row({sci(ppm), sci(max_err), whole, sci(s / 3600)});
        }
        if (table) {
            table->print(std::cout);
            if (!csv_path.empty()) {
                table->csv(csv_path);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
