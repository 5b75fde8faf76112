// fieldest command line: analytic error laws, Monte Carlo simulation,
// sampling-rate optimization, sweep surfaces, and consistency checks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fieldest/fieldest.hpp"

namespace fs = std::filesystem;
using namespace fieldest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCheckFailed = 4;

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Effective key-value configuration; values keep their source spelling so the
// manifest echo round-trips losslessly.
using KeyValues = std::map<std::string, std::string>;

const std::map<std::string, std::vector<std::string>>& allowed_keys() {
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"common",
         {"a", "b", "discipline", "scheduler", "seed", "out", "lambda_s", "lambda_t", "mu_bar",
          "mu", "length"}},
        {"analytic", {}},
        {"simulate", {"horizon", "warmup", "probes", "replications", "sim_length", "mode"}},
        {"optimize", {}},
        {"sweep", {"lambda_s_grid", "lambda_t_grid"}},
        {"check", {"suite", "horizon", "replications"}},
    };
    return keys;
}

bool key_allowed(const std::string& kind, const std::string& key) {
    const auto& all = allowed_keys();
    const auto in = [&](const std::string& section) {
        const auto& v = all.at(section);
        return std::find(v.begin(), v.end(), key) != v.end();
    };
    return in("common") || in(kind);
}

// Flat INI-style file: '#' comments, [section] headers per run kind, key = value
// lines. Unknown keys, duplicates, and stray lines are hard errors.
std::map<std::string, KeyValues> parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file: " + path.string());
    std::map<std::string, KeyValues> sections;
    std::string line, section;
    int lineno = 0;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::string at = path.filename().string() + ":" + std::to_string(lineno);
        if (t.front() == '[') {
            if (t.back() != ']') throw config_error(at + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section != "common" && !allowed_keys().count(section)) {
                throw config_error(at + ": unknown section [" + section + "]");
            }
            sections.try_emplace(section);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw config_error(at + ": expected key = value");
        if (section.empty()) throw config_error(at + ": key outside any [section]");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const std::string kind = section == "common" ? "analytic" : section;
        if (section == "common") {
            const auto& cv = allowed_keys().at("common");
            if (std::find(cv.begin(), cv.end(), key) == cv.end()) {
                throw config_error(at + ": unknown key '" + key + "' in [common]");
            }
        } else if (!key_allowed(section, key)) {
            throw config_error(at + ": unknown key '" + key + "' in [" + section + "]");
        }
        if (!sections[section].emplace(key, value).second) {
            throw config_error(at + ": duplicate key '" + key + "'");
        }
    }
    return sections;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("value for " + key + " is not a number: '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw config_error("value for " + key + " is not an integer: '" + value + "'");
    }
}

struct Effective {
    KeyValues kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    std::string str(const std::string& key) const { return kv.at(key); }
    double num(const std::string& key) const { return parse_double(key, kv.at(key)); }
    double num_or(const std::string& key, double fallback) const {
        return has(key) ? num(key) : fallback;
    }
    std::uint64_t u64(const std::string& key) const { return parse_u64(key, kv.at(key)); }

    void require_keys(std::initializer_list<const char*> keys) const {
        for (const char* key : keys) {
            if (!has(key)) throw config_error(std::string("missing required key: ") + key);
        }
    }

    Discipline discipline() const {
        const std::string d = kv.count("discipline") ? kv.at("discipline") : "fcfs";
        if (d == "fcfs") return Discipline::Fcfs;
        if (d == "lcfs") return Discipline::Lcfs;
        throw config_error("discipline must be fcfs or lcfs, got '" + d + "'");
    }
    Scheduler scheduler() const {
        const std::string s = kv.count("scheduler") ? kv.at("scheduler") : "ur";
        if (s == "ur") return Scheduler::UniformRandom;
        if (s == "rr") return Scheduler::RoundRobin;
        throw config_error("scheduler must be ur or rr, got '" + s + "'");
    }
    ChannelMode mode() const {
        const std::string m = kv.count("mode") ? kv.at("mode") : "channel";
        if (m == "channel") return ChannelMode::ChannelLevel;
        if (m == "decoupled") return ChannelMode::Decoupled;
        throw config_error("mode must be channel or decoupled, got '" + m + "'");
    }

    double mu_bar() const {
        if (has("mu_bar")) {
            if (has("mu")) throw config_error("give either mu_bar or mu with length, not both");
            return num("mu_bar");
        }
        if (has("mu")) {
            if (!has("length")) throw config_error("mu requires length to derive mu_bar");
            return num("mu") / num("length");
        }
        throw config_error("missing required key: mu_bar (or mu with length)");
    }

    CorrelationParams corr() const {
        require_keys({"a", "b"});
        return CorrelationParams(num("a"), num("b"));
    }
};

std::string fmt_full(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string fmt_short(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

// One tabular row shared by the analytic and simulate commands; infeasible
// analytic values stay empty, never zero.
struct ResultRow {
    double lambda_s = 0.0;
    double lambda_t = 0.0;
    std::optional<double> eps_analytic;
    std::optional<double> eps_sim_mean;
    std::optional<double> eps_sim_ci95;
    Discipline discipline = Discipline::Fcfs;
    Scheduler scheduler = Scheduler::UniformRandom;
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    std::string status = "ok";
};

void write_results_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << "lambda_s,lambda_t,eps_analytic,eps_sim_mean,eps_sim_ci95,discipline,scheduler,seed,"
           "replications,status\n";
    for (const auto& r : rows) {
        out << fmt_full(r.lambda_s) << ',' << fmt_full(r.lambda_t) << ','
            << (r.eps_analytic ? fmt_full(*r.eps_analytic) : "") << ','
            << (r.eps_sim_mean ? fmt_full(*r.eps_sim_mean) : "") << ','
            << (r.eps_sim_ci95 ? fmt_full(*r.eps_sim_ci95) : "") << ',' << to_string(r.discipline)
            << ',' << to_string(r.scheduler) << ',' << (r.seed ? std::to_string(*r.seed) : "")
            << ',' << (r.replications ? std::to_string(*r.replications) : "") << ',' << r.status
            << '\n';
    }
}

// The manifest doubles as a config file: its [section] tail regenerates the
// run (fieldest <command> --config manifest.txt).
void write_manifest(const fs::path& path, const std::string& command, const Effective& eff,
                    double wall_seconds, const std::vector<std::string>& notes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << "# fieldest run manifest\n";
    out << "# version: " << kVersion << "\n";
    out << "# command: " << command << "\n";
    out << "# rng: " << rng::kAlgorithmName << "\n";
    out << "# streams: key = mix(seed, replication, point-or-attempt, purpose)\n";
    out << "# wall_seconds: " << fmt_short(wall_seconds) << "\n";
    for (const auto& n : notes) out << "# note: " << n << "\n";
    out << "# regenerate with: fieldest " << command << " --config " << path.filename().string()
        << "\n";
    out << "[" << command << "]\n";
    for (const auto& [k, v] : eff.kv) {
        if (k == "out") continue;  // the output directory is not part of the experiment
        out << k << " = " << v << "\n";
    }
}

fs::path ensure_out_dir(const Effective& eff) {
    const fs::path dir = eff.has("out") ? fs::path(eff.str("out")) : fs::path(".");
    fs::create_directories(dir);
    return dir;
}

std::uint64_t ensure_seed(Effective& eff) {
    if (eff.has("seed")) return eff.u64("seed");
    std::random_device rd;
    const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    eff.kv["seed"] = std::to_string(seed);
    std::cout << "seed = " << seed << "  (generated; pass --seed to reproduce)\n";
    return seed;
}

SystemConfig make_config(const Effective& eff) {
    eff.require_keys({"lambda_s", "lambda_t"});
    return SystemConfig(eff.num("lambda_s"), eff.num("lambda_t"), eff.mu_bar(), eff.discipline(),
                        eff.scheduler());
}

int run_analytic(Effective eff) {
    const auto corr = eff.corr();
    const auto config = make_config(eff);
    const auto t0 = std::chrono::steady_clock::now();
    ErrorSummary summary;
    try {
        summary = eps_analytic(config, corr);
    } catch (const unstable_queue& e) {
        throw infeasible_error(std::string("FCFS stability lambda_s*lambda_t < mu_bar violated: ") +
                               e.what());
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "discipline = " << to_string(config.discipline) << "\n";
    std::cout << "eps_analytic = " << fmt_short(summary.eps_bar) << "  (method "
              << to_string(summary.method) << ", lst-at-one gap " << fmt_short(summary.consistency_gap)
              << ")\n";
    if (summary.consistency_gap > 1e-9) {
        std::cout << "warning: closed form and lst-at-one disagree beyond 1e-9\n";
    }

    const fs::path dir = ensure_out_dir(eff);
    ResultRow row;
    row.lambda_s = config.lambda_s;
    row.lambda_t = config.lambda_t;
    row.eps_analytic = summary.eps_bar;
    row.discipline = config.discipline;
    row.scheduler = config.scheduler;
    if (eff.has("seed")) row.seed = eff.u64("seed");
    write_results_csv(dir / "results.csv", {row});
    write_manifest(dir / "manifest.txt", "analytic", eff, wall, {});
    return kExitOk;
}

int run_simulate(Effective eff) {
    const auto corr = eff.corr();
    const auto config = make_config(eff);
    eff.require_keys({"horizon"});
    if (!eff.has("sim_length") && !eff.has("length")) {
        throw config_error("missing required key: sim_length (or length)");
    }
    const std::uint64_t seed = ensure_seed(eff);

    FieldSimParams fp{config, corr};
    fp.region_length = eff.has("sim_length") ? eff.num("sim_length") : eff.num("length");
    fp.horizon = eff.num("horizon");
    fp.warmup = eff.num_or("warmup", -1.0);
    fp.probes = static_cast<int>(eff.num_or("probes", 1000));
    fp.replications = static_cast<int>(eff.num_or("replications", 20));
    fp.seed = seed;
    fp.mode = eff.mode();

    const auto t0 = std::chrono::steady_clock::now();
    const SimResult res = simulate_field_error(fp);
    std::optional<double> analytic;
    std::string status = "ok";
    try {
        analytic = eps_analytic(config, corr).eps_bar;
    } catch (const unstable_queue&) {
        status = "warned";  // simulation ran, but no stationary analytic value exists
    }
    if (!res.warnings.empty()) status = "warned";
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "eps_sim = " << fmt_short(res.eps_hat) << " +/- " << fmt_short(res.eps_ci95)
              << "  (95% CI, " << res.replications << " replications, warmup "
              << fmt_short(res.warmup) << ")\n";
    if (analytic) {
        std::cout << "eps_analytic = " << fmt_short(*analytic) << "  |diff| = "
                  << fmt_short(std::abs(*analytic - res.eps_hat)) << "\n";
    }
    for (const auto& w : res.warnings) std::cout << "warning: " << w << "\n";

    const fs::path dir = ensure_out_dir(eff);
    ResultRow row;
    row.lambda_s = config.lambda_s;
    row.lambda_t = config.lambda_t;
    row.eps_analytic = analytic;
    row.eps_sim_mean = res.eps_hat;
    row.eps_sim_ci95 = res.eps_ci95;
    row.discipline = config.discipline;
    row.scheduler = config.scheduler;
    row.seed = seed;
    row.replications = res.replications;
    row.status = status;
    write_results_csv(dir / "results.csv", {row});
    std::vector<std::string> notes = res.warnings;
    notes.push_back("empty point-set redraws: " + std::to_string(res.manifest.empty_redraws));
    write_manifest(dir / "manifest.txt", "simulate", eff, wall, notes);
    return kExitOk;
}

int run_optimize(Effective eff) {
    const auto corr = eff.corr();
    const double mu_bar = eff.mu_bar();
    const auto t0 = std::chrono::steady_clock::now();
    OptimizationResult result;
    if (eff.discipline() == Discipline::Lcfs) {
        result = optimize_lcfs(corr, mu_bar);
    } else {
        result = optimize_fcfs(corr, mu_bar);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "lambda_s_star = " << fmt_short(result.lambda_s_star) << "\n";
    std::cout << "lambda_t_star = "
              << (result.lambda_t_unbounded ? std::string("inf") : fmt_short(result.lambda_t_star))
              << "\n";
    std::cout << "eps_star = " << fmt_short(result.eps_star) << "\n";
    std::cout << "method = " << (result.method == OptimizeMethod::ClosedForm ? "closed_form" : "grid_refine")
              << ", evaluations = " << result.evaluations << "\n";
    if (result.practical_lambda_t) {
        std::cout << "practical lambda_t (within 1% of the limit) = "
                  << fmt_short(*result.practical_lambda_t) << "\n";
    }
    if (result.local_minima.size() > 1) {
        std::cout << "distinct local minima surviving refinement: " << result.local_minima.size()
                  << "\n";
    }

    const fs::path dir = ensure_out_dir(eff);
    std::ofstream out(dir / "optimize.csv", std::ios::binary);
    out << "lambda_s_star,lambda_t_star,eps_star,method,evaluations\n";
    for (const auto& m : result.local_minima) {
        out << fmt_full(m.lambda_s) << ',' << fmt_full(m.lambda_t) << ',' << fmt_full(m.eps) << ','
            << (result.method == OptimizeMethod::ClosedForm ? "closed_form" : "grid_refine") << ','
            << result.evaluations << '\n';
    }
    out.close();
    write_manifest(dir / "manifest.txt", "optimize", eff, wall, {result.feasible_region});
    return kExitOk;
}

std::vector<double> parse_grid(const std::string& key, const std::string& text) {
    // "lo:hi:n" (log-spaced, inclusive) or a single fixed value
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 1) return {parse_double(key, parts[0])};
    if (parts.size() != 3) throw config_error(key + ": expected 'lo:hi:count' or a single value");
    const double lo = parse_double(key, parts[0]);
    const double hi = parse_double(key, parts[1]);
    const auto n = static_cast<int>(parse_u64(key, parts[2]));
    if (!(lo > 0.0) || !(hi > lo) || n < 2) {
        throw config_error(key + ": need 0 < lo < hi and count >= 2");
    }
    std::vector<double> grid;
    grid.reserve(n);
    for (int i = 0; i < n; ++i) {
        grid.push_back(lo * std::exp(std::log(hi / lo) * i / (n - 1)));
    }
    return grid;
}

int run_sweep(Effective eff) {
    const auto corr = eff.corr();
    const double mu_bar = eff.mu_bar();
    eff.require_keys({"lambda_s_grid", "lambda_t_grid"});
    SweepSpec spec;
    spec.lambda_s_values = parse_grid("lambda_s_grid", eff.str("lambda_s_grid"));
    spec.lambda_t_values = parse_grid("lambda_t_grid", eff.str("lambda_t_grid"));
    const SystemConfig base(spec.lambda_s_values.front(), spec.lambda_t_values.front(), mu_bar,
                            eff.discipline(), eff.scheduler());
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = sweep(base, corr, spec);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir = ensure_out_dir(eff);
    std::ofstream out(dir / "surface.csv", std::ios::binary);
    if (!out) throw config_error("cannot write surface.csv");
    out << "lambda_s,lambda_t,eps,status\n";
    int infeasible = 0;
    const SweepCell* best = nullptr;
    for (const auto& cell : grid) {
        out << fmt_full(cell.lambda_s) << ',' << fmt_full(cell.lambda_t) << ','
            << (cell.eps ? fmt_full(*cell.eps) : "") << ','
            << (cell.eps ? "ok" : "infeasible") << '\n';
        if (!cell.eps) ++infeasible;
        if (cell.eps && (!best || *cell.eps < *best->eps)) best = &cell;
    }
    out.close();
    std::cout << "sweep: " << grid.size() << " nodes, " << infeasible << " infeasible\n";
    if (best) {
        std::cout << "grid minimum: eps = " << fmt_short(*best->eps) << " at lambda_s = "
                  << fmt_short(best->lambda_s) << ", lambda_t = " << fmt_short(best->lambda_t)
                  << "\n";
    }
    write_manifest(dir / "manifest.txt", "sweep", eff, wall, {});
    return kExitOk;
}

int run_check(Effective eff) {
    const std::string suite = eff.has("suite") ? eff.str("suite") : "appendix-a";
    if (suite != "appendix-a") throw config_error("unknown check suite: " + suite);
    const std::uint64_t seed = ensure_seed(eff);

    // Channel-level vs decoupled service equivalence, uniformly random
    // scheduling, on the reference parameter set.
    struct Ref {
        double lambda_t, mu;
        int m;
    };
    const std::vector<Ref> refs = {{0.1, 4.0, 4}, {0.5, 1.0, 1}, {0.3, 2.0, 2}};
    bool all_pass = true;
    for (const auto& ref : refs) {
        EquivalenceParams p;
        p.scheduler = Scheduler::UniformRandom;
        p.lambda_t = ref.lambda_t;
        p.mu = ref.mu;
        p.point_count = ref.m;
        p.horizon = eff.num_or("horizon", 2e5);
        p.replications = static_cast<int>(eff.num_or("replications", 12));
        p.seed = seed;
        const auto report = equivalence_check(p);
        for (const auto& row : report.rows) {
            std::printf("[%s] lambda_t=%g mu=%g M=%d %-10s channel=%.6g decoupled=%.6g |diff|=%.3g ci=%.3g\n",
                        row.pass ? "PASS" : "FAIL", ref.lambda_t, ref.mu, ref.m, row.stat.c_str(),
                        row.channel_value, row.decoupled_value, std::abs(row.diff), row.ci95);
        }
        all_pass = all_pass && report.passed;
    }
    std::cout << (all_pass ? "appendix-a equivalence suite: PASS\n"
                           : "appendix-a equivalence suite: FAIL\n");
    return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fieldest: remote-estimation error laws for a sampled random field"};
    app.require_subcommand(1);

    // Raw flag values; only explicitly-passed flags override the config file.
    std::map<std::string, std::string> flags;
    std::string config_path;

    const auto add_common = [&](CLI::App* sub, bool with_rates) {
        sub->add_option("--config", config_path, "config file (key = value sections per command)");
        const auto bind = [&flags, sub](const std::string& flag, const std::string& key,
                                        const std::string& help) {
            sub->add_option_function<std::string>(
                   flag, [&flags, key](const std::string& v) { flags[key] = v; }, help)
                ->expected(1);
        };
        bind("--a", "a", "time decay rate a [1/s]");
        bind("--b", "b", "spatial decay rate b [1/m]");
        bind("--discipline", "discipline", "fcfs | lcfs");
        bind("--scheduler", "scheduler", "ur | rr");
        bind("--seed", "seed", "RNG seed");
        bind("--out", "out", "output directory");
        bind("--mu-bar", "mu_bar", "normalized service rate [1/(s*m)]");
        bind("--mu", "mu", "raw service rate [1/s] (requires --length)");
        bind("--length", "length", "region length [m] for --mu");
        if (with_rates) {
            bind("--lambda-s", "lambda_s", "spatial sampling density [1/m]");
            bind("--lambda-t", "lambda_t", "per-point arrival rate [1/s]");
        }
        return bind;
    };

    auto* analytic = app.add_subcommand("analytic", "closed-form error for one configuration");
    add_common(analytic, true);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo field-error estimate");
    {
        auto bind = add_common(simulate, true);
        bind("--horizon", "horizon", "simulated time per replication [s]");
        bind("--warmup", "warmup", "discarded initial window [s]");
        bind("--probes", "probes", "probe positions per replication");
        bind("--replications", "replications", "independent replications");
        bind("--sim-length", "sim_length", "simulated segment length [m]");
        bind("--mode", "mode", "channel | decoupled");
    }

    auto* optimize = app.add_subcommand("optimize", "error-minimizing sampling rates");
    add_common(optimize, false);

    auto* sweep_cmd = app.add_subcommand("sweep", "error surface over a rate grid");
    {
        auto bind = add_common(sweep_cmd, false);
        bind("--lambda-s-grid", "lambda_s_grid", "lo:hi:n (log-spaced) or fixed value");
        bind("--lambda-t-grid", "lambda_t_grid", "lo:hi:n (log-spaced) or fixed value");
    }

    auto* check = app.add_subcommand("check", "consistency suites");
    {
        auto bind = add_common(check, false);
        bind("--suite", "suite", "suite name (appendix-a)");
        bind("--horizon", "horizon", "simulated time per replication [s]");
        bind("--replications", "replications", "replications per mode");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Effective eff;
        if (!config_path.empty()) {
            const auto sections = parse_config_file(config_path);
            if (auto it = sections.find("common"); it != sections.end()) {
                for (const auto& [k, v] : it->second) eff.kv[k] = v;
            }
            if (auto it = sections.find(command); it != sections.end()) {
                for (const auto& [k, v] : it->second) {
                    if (!key_allowed(command, k)) {
                        throw config_error("key '" + k + "' is not valid for " + command);
                    }
                    eff.kv[k] = v;
                }
            }
        }
        for (const auto& [k, v] : flags) {
            if (!key_allowed(command, k)) {
                throw config_error("flag key '" + k + "' is not valid for " + command);
            }
            eff.kv[k] = v;  // explicit flags win over file values
        }

        if (command == "analytic") return run_analytic(std::move(eff));
        if (command == "simulate") return run_simulate(std::move(eff));
        if (command == "optimize") return run_optimize(std::move(eff));
        if (command == "sweep") return run_sweep(std::move(eff));
        if (command == "check") return run_check(std::move(eff));
        std::cerr << "unknown command: " << command << "\n";
        return kExitConfig;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const unstable_queue& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const invalid_parameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
