#include "cpsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "cpsim/breakpoints.hpp"
#include "cpsim/engine.hpp"
#include "cpsim/event_log.hpp"
#include "cpsim/percolation.hpp"
#include "cpsim/rng.hpp"
#include "cpsim/stats.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace cpsim::cli {

namespace {

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {
        "survival",  "endpoint-equality", "agreement",  "shape",
        "breakpoints", "restart",         "clt",        "percolation",
        "deficit-decay", "scan-runs"};
    return names;
}

const std::vector<std::pair<std::string, std::string>>& default_table() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"mu", "3.0"},
        {"M", "1"},
        {"horizon", "100"},
        {"seed", "1"},
        {"replicas", "100"},
        {"x_min", "(derived: -ceil(3*M*mu*horizon))"},
        {"x_max", "(derived: ceil(M*mu*horizon))"},
        {"mask", "full"},
        {"level", "0.95"},
        {"from_time", "1"},
        {"f_set", "0,-1"},
        {"a", "0.1"},
        {"t0", "20"},
        {"margin", "(derived: horizon/4)"},
        {"epsilon", "0.1"},
        {"perc_mode", "one_dependent"},
        {"n_max", "50"},
        {"n_list", "20,40,60,80"},
        {"rho", "0.6"},
        {"beta", "0.5"},
        {"b", "0.25"},
        {"event", "deficit"},
        {"bc_threshold", "0.05"},
    };
    return table;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        kv[key] = val;
    }
    return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {

double getd(const std::map<std::string, std::string>& kv, const std::string& k) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(kv.at(k), &pos);
        if (pos != kv.at(k).size()) throw std::invalid_argument(k);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + k + "': not a number");
    }
}

long geti(const std::map<std::string, std::string>& kv, const std::string& k) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(kv.at(k), &pos);
        if (pos != kv.at(k).size()) throw std::invalid_argument(k);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + k + "': not an integer");
    }
}

std::uint64_t getu(const std::map<std::string, std::string>& kv, const std::string& k) {
    try {
        return std::stoull(kv.at(k));
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + k + "': not an unsigned integer");
    }
}

std::vector<long> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<long> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            out.push_back(std::stol(tok));
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': bad integer list");
        }
    }
    if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
    return out;
}

}  // namespace

std::map<std::string, std::string> resolve_config(
    const std::map<std::string, std::string>& kv) {
    std::map<std::string, std::string> cfg;
    for (const auto& [k, v] : default_table())
        if (v.rfind("(derived", 0) != 0) cfg[k] = v;
    for (const auto& [k, v] : kv) {
        bool known = false;
        for (const auto& [dk, dv] : default_table())
            if (dk == k) known = true;
        if (!known) throw std::invalid_argument("unknown config key '" + k + "'");
        cfg[k] = v;
    }
    // cross-field checks and derived defaults
    const double mu = getd(cfg, "mu");
    const long M = geti(cfg, "M");
    const double horizon = getd(cfg, "horizon");
    if (!(mu > 0.0)) throw std::invalid_argument("config key 'mu': must be > 0");
    if (M < 1) throw std::invalid_argument("config key 'M': must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("config key 'horizon': must be > 0");
    if (cfg.find("x_min") == cfg.end())
        cfg["x_min"] = std::to_string(-static_cast<long>(std::ceil(3.0 * M * mu * horizon)));
    if (cfg.find("x_max") == cfg.end())
        cfg["x_max"] = std::to_string(static_cast<long>(std::ceil(M * mu * horizon)));
    if (cfg.find("margin") == cfg.end()) cfg["margin"] = fmt17(horizon / 4.0);
    if (geti(cfg, "replicas") < 1)
        throw std::invalid_argument("config key 'replicas': must be >= 1");
    const double eps = getd(cfg, "epsilon");
    if (!(eps >= 0.0 && eps < 1.0))
        throw std::invalid_argument("config key 'epsilon': must lie in [0, 1)");
    const double level = getd(cfg, "level");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("config key 'level': must lie in (0, 1)");
    if (cfg["mask"] != "full" && cfg["mask"] != "half")
        throw std::invalid_argument("config key 'mask': must be 'full' or 'half'");
    if (cfg["perc_mode"] != "independent" && cfg["perc_mode"] != "one_dependent")
        throw std::invalid_argument(
            "config key 'perc_mode': must be 'independent' or 'one_dependent'");
    if (cfg["event"] != "deficit" && cfg["event"] != "extinction" &&
        cfg["event"] != "slow-edges")
        throw std::invalid_argument(
            "config key 'event': must be 'deficit', 'extinction' or 'slow-edges'");
    // window margin rule via the SimConfig validator
    SimConfig sim;
    sim.mu = mu;
    sim.range_M = static_cast<int>(M);
    sim.x_min = static_cast<int>(geti(cfg, "x_min"));
    sim.x_max = static_cast<int>(geti(cfg, "x_max"));
    sim.horizon = horizon;
    sim.validate();
    return cfg;
}

std::string digest_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return digest_hex(ss.str());
}

namespace {

SimConfig sim_from(const std::map<std::string, std::string>& cfg) {
    SimConfig sim;
    sim.mu = getd(cfg, "mu");
    sim.range_M = static_cast<int>(geti(cfg, "M"));
    sim.x_min = static_cast<int>(geti(cfg, "x_min"));
    sim.x_max = static_cast<int>(geti(cfg, "x_max"));
    sim.horizon = getd(cfg, "horizon");
    sim.seed = getu(cfg, "seed");
    return sim;
}

EdgeMask mask_from(const std::map<std::string, std::string>& cfg) {
    return cfg.at("mask") == "half" ? EdgeMask::half_line : EdgeMask::full_graph;
}

Configuration f_set_from(const std::map<std::string, std::string>& cfg) {
    auto list = parse_int_list(cfg.at("f_set"), "f_set");
    std::sort(list.begin(), list.end());
    Configuration c;
    for (long x : list) c.sites.push_back(static_cast<int>(x));
    return c;
}

json estimate_json(const EstimateReport& rep) {
    return json{{"trials", rep.trials},
                {"successes", rep.successes},
                {"p_hat", rep.p_hat},
                {"ci_low", rep.ci_low},
                {"ci_high", rep.ci_high},
                {"level", rep.level},
                {"excluded_boundary", rep.excluded_boundary},
                {"horizon_note", rep.horizon_note}};
}

json test_json(const TestReport& rep) {
    return json{{"name", rep.name},
                {"statistic", rep.statistic},
                {"p_value", rep.p_value},
                {"sample_sizes", rep.sample_sizes},
                {"decision_at", rep.decision_at},
                {"rejected", rep.rejected()}};
}

struct CsvFile {
    std::ofstream out;
    CsvFile(const fs::path& path, const std::string& header) : out(path) {
        if (!out) throw std::runtime_error("cannot open output file " + path.string());
        out << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out << (i ? "," : "") << cells[i];
        out << "\n";
    }
};

struct CommandOutput {
    std::vector<std::string> files;           // relative names
    json summary = json::object();            // written as <command>.json
    std::optional<EstimateReport> primary;    // drives --window-doubling
    std::vector<std::string> warnings;
};

using Cfg = std::map<std::string, std::string>;

// ---------------------------------------------------------------- survival
CommandOutput cmd_survival(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const auto mask = mask_from(cfg);
    const long replicas = geti(cfg, "replicas");
    const auto res = survival_runs(base, mask, Configuration::single(0), replicas);

    CommandOutput out;
    const long usable = res.trials - res.excluded_boundary;
    EstimateReport est = usable > 0 ? wilson_ci(res.survivors, usable, getd(cfg, "level"))
                                    : EstimateReport{};
    est.excluded_boundary = res.excluded_boundary;
    est.horizon_note =
        "survival evaluated on [0, " + cfg.at("horizon") +
        "]; the finite-horizon estimate overestimates the infinite-horizon "
        "survival probability and is nonincreasing in the horizon";
    out.primary = est;
    if (static_cast<double>(res.excluded_boundary) >
        getd(cfg, "bc_threshold") * static_cast<double>(res.trials))
        out.warnings.push_back("boundary-contamination rate above bc_threshold");
    if (write) {
        CsvFile csv(dir / "survival.csv", "replica,survived,boundary_contaminated");
        for (long i = 0; i < res.trials; ++i)
            csv.row({std::to_string(i), std::to_string(res.survived_by_replica[i]),
                     std::to_string(res.contaminated_by_replica[i])});
        out.files.push_back("survival.csv");
    }
    out.summary["estimate"] = estimate_json(est);
    out.summary["mask"] = cfg.at("mask");
    return out;
}

// ------------------------------------------------------- endpoint equality
CommandOutput cmd_endpoint_equality(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const auto mask = mask_from(cfg);
    const long replicas = geti(cfg, "replicas");

    CommandOutput out;
    long agree = 0, excluded = 0;
    std::optional<CsvFile> csv, series_csv;
    if (write) {
        csv.emplace(dir / "endpoint_eq.csv",
                    "replica,agrees,first_violation_time,excluded_boundary");
        out.files.push_back("endpoint_eq.csv");
    }
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto rep =
            endpoint_equality(log, mask, c.horizon, Configuration::single(0), write && i == 0);
        const bool contaminated = rep.single_contaminated || rep.halfline_right_contaminated;
        if (contaminated)
            ++excluded;
        else if (rep.agreement.agrees)
            ++agree;
        if (write) {
            csv->row({std::to_string(i), rep.agreement.agrees ? "1" : "0",
                      rep.agreement.first_violation_time
                          ? fmt17(*rep.agreement.first_violation_time)
                          : "",
                      contaminated ? "1" : "0"});
            if (i == 0) {
                series_csv.emplace(dir / "endpoints.csv", "time,r,R");
                for (const auto& pt : rep.series)
                    series_csv->row({fmt17(pt.time),
                                     pt.r == kNoSite ? "-inf" : std::to_string(pt.r),
                                     pt.R == kNoSite ? "-inf" : std::to_string(pt.R)});
                out.files.push_back("endpoints.csv");
            }
        }
    }
    EstimateReport est = replicas - excluded > 0
                             ? wilson_ci(agree, replicas - excluded, getd(cfg, "level"))
                             : EstimateReport{};
    est.excluded_boundary = excluded;
    est.horizon_note =
        "event {r_t = R_t for all t} checked on [0, " + cfg.at("horizon") +
        "]; finite-horizon estimates overestimate the infinite-horizon "
        "probability and are nonincreasing in the horizon";
    out.primary = est;
    out.summary["estimate"] = estimate_json(est);
    return out;
}

// --------------------------------------------------------------- agreement
CommandOutput cmd_agreement(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const long replicas = geti(cfg, "replicas");
    const auto F = f_set_from(cfg);
    const double from_time = getd(cfg, "from_time");

    CommandOutput out;
    long agree = 0, excluded = 0;
    std::optional<CsvFile> csv;
    if (write) {
        csv.emplace(dir / "agreement.csv",
                    "replica,agrees,first_violation_time,excluded_boundary");
        out.files.push_back("agreement.csv");
    }
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto view = masked_view(log, EdgeMask::half_line);
        const auto trajZ = evolve(view, Configuration::half_line_in(c), c.horizon);
        const auto trajF = evolve(view, F, c.horizon);
        const auto rep = agreement_on_set(trajZ, trajF, F, from_time);
        const bool contaminated =
            trajZ.boundary_contaminated || trajF.boundary_contaminated;
        if (contaminated)
            ++excluded;
        else if (rep.agrees)
            ++agree;
        if (write)
            csv->row({std::to_string(i), rep.agrees ? "1" : "0",
                      rep.first_violation_time ? fmt17(*rep.first_violation_time) : "",
                      contaminated ? "1" : "0"});
    }
    EstimateReport est = replicas - excluded > 0
                             ? wilson_ci(agree, replicas - excluded, getd(cfg, "level"))
                             : EstimateReport{};
    est.excluded_boundary = excluded;
    est.horizon_note =
        "agreement on F checked on [" + cfg.at("from_time") + ", " + cfg.at("horizon") +
        "]; overestimates the infinite-horizon event and is nonincreasing in the horizon";
    out.primary = est;
    out.summary["estimate"] = estimate_json(est);
    out.summary["F"] = F.sites;
    return out;
}

// ------------------------------------------------------------------- shape
CommandOutput cmd_shape(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const long replicas = geti(cfg, "replicas");
    const auto F = f_set_from(cfg);
    const double a = getd(cfg, "a"), t0 = getd(cfg, "t0");

    CommandOutput out;
    long pass = 0, surviving = 0, excluded = 0, extinct = 0;
    std::optional<CsvFile> csv;
    if (write) {
        csv.emplace(dir / "shape.csv", "replica,f_survived,passes,excluded_boundary");
        out.files.push_back("shape.csv");
    }
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto view = masked_view(log, EdgeMask::half_line);
        const auto trajZ = evolve(view, Configuration::half_line_in(c), c.horizon);
        const auto trajF = evolve(view, F, c.horizon);
        const bool contaminated =
            trajZ.boundary_contaminated || trajF.boundary_contaminated;
        const bool f_survived = trajF.survived();
        bool ok = false;
        if (contaminated) {
            ++excluded;
        } else if (!f_survived) {
            ++extinct;  // theorem conditions on survival
        } else {
            ++surviving;
            ok = shape_agreement(trajZ, trajF, a, t0);
            if (ok) ++pass;
        }
        if (write)
            csv->row({std::to_string(i), f_survived ? "1" : "0", ok ? "1" : "0",
                      contaminated ? "1" : "0"});
    }
    EstimateReport est =
        surviving > 0 ? wilson_ci(pass, surviving, getd(cfg, "level")) : EstimateReport{};
    est.excluded_boundary = excluded;
    est.horizon_note = "shape agreement with a=" + cfg.at("a") + ", t0=" + cfg.at("t0") +
                       " on surviving runs up to the horizon; 'eventually' is truncated, "
                       "so the estimate underestimates the almost-sure limit";
    out.primary = est;
    out.summary["estimate"] = estimate_json(est);
    out.summary["extinct_excluded"] = extinct;
    return out;
}

// ------------------------------------------------------------- breakpoints
CommandOutput cmd_breakpoints(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const long replicas = geti(cfg, "replicas");
    const double margin = getd(cfg, "margin");

    CommandOutput out;
    std::optional<CsvFile> pts_csv, inc_csv;
    if (write) {
        pts_csv.emplace(dir / "breakpoints.csv", "replica,k,psi,r,censored");
        inc_csv.emplace(dir / "increments.csv", "replica,k,delta_r,delta_psi");
        out.files.push_back("breakpoints.csv");
        out.files.push_back("increments.csv");
    }
    long surviving = 0;
    long total_points = 0;
    std::vector<double> pooled_dr, pooled_dpsi;
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto series = psi_sequence(log, c.horizon, margin);
        if (series.base_extinct) continue;
        ++surviving;
        total_points += static_cast<long>(series.points.size());
        if (write)
            for (std::size_t k = 0; k < series.points.size(); ++k)
                pts_csv->row({std::to_string(i), std::to_string(k),
                              fmt17(series.points[k].psi),
                              std::to_string(series.points[k].r),
                              series.points[k].censored ? "1" : "0"});
        const auto inc = increments(series);
        for (std::size_t k = 0; k < inc.pairs.size(); ++k) {
            pooled_dr.push_back(inc.pairs[k].first);
            pooled_dpsi.push_back(inc.pairs[k].second);
            if (write)
                inc_csv->row({std::to_string(i), std::to_string(k),
                              std::to_string(inc.pairs[k].first),
                              fmt17(inc.pairs[k].second)});
        }
    }
    out.summary["replicas"] = replicas;
    out.summary["surviving_runs"] = surviving;
    out.summary["mean_points_per_surviving_run"] =
        surviving ? static_cast<double>(total_points) / surviving : 0.0;
    out.summary["pooled_increments"] = pooled_dr.size();
    const std::size_t n = pooled_dr.size();
    if (n >= 30) {
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t k = 0; k < n; ++k) pairs.emplace_back(pooled_dr[k], pooled_dpsi[k]);
        const auto speed = edge_speed(pairs, getd(cfg, "level"));
        out.summary["edge_speed"] = {{"alpha_hat", speed.alpha_hat},
                                     {"ci_low", speed.ci_low},
                                     {"ci_high", speed.ci_high}};
        auto halves = [](const std::vector<double>& v) {
            const std::size_t h = v.size() / 2;
            return std::pair(std::vector<double>(v.begin(), v.begin() + h),
                             std::vector<double>(v.begin() + h, v.end()));
        };
        const auto [dr1, dr2] = halves(pooled_dr);
        const auto [dp1, dp2] = halves(pooled_dpsi);
        out.summary["iid_ks_delta_r"] = test_json(ks_two_sample(dr1, dr2));
        out.summary["iid_ks_delta_psi"] = test_json(ks_two_sample(dp1, dp2));
        out.summary["lag1_autocorr_delta_r"] = lag_autocorrelation(pooled_dr, 1);
        out.summary["lag1_autocorr_delta_psi"] = lag_autocorrelation(pooled_dpsi, 1);
        out.summary["lag1_band"] = 2.0 / std::sqrt(static_cast<double>(n));
    }
    return out;
}

// ----------------------------------------------------------------- restart
CommandOutput cmd_restart(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const long replicas = geti(cfg, "replicas");

    CommandOutput out;
    std::optional<CsvFile> csv;
    if (write) {
        csv.emplace(dir / "restart.csv",
                    "replica,N,censored,sigma_N,final_position,chain_restarts,attempts");
        out.files.push_back("restart.csv");
    }
    std::vector<long> Ns;
    long censored = 0;
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto rec = restart_construction(log, c.horizon);
        if (rec.censored)
            ++censored;
        else
            Ns.push_back(rec.N);
        if (write)
            csv->row({std::to_string(i), std::to_string(rec.N), rec.censored ? "1" : "0",
                      fmt17(rec.sigma_N),
                      rec.censored ? "" : std::to_string(rec.final_position),
                      std::to_string(rec.extinction_times.size()),
                      std::to_string(rec.taus.size())});
    }
    out.summary["replicas"] = replicas;
    out.summary["censored"] = censored;
    if (!Ns.empty()) {
        const auto [p_hat, gof] = geometric_fit(Ns);
        out.summary["geometric_p_hat"] = p_hat;
        out.summary["geometric_gof"] = test_json(gof);
        out.summary["horizon_note"] =
            "tau = infinity proxied by no overtaking before the horizon; censored "
            "replicas reported separately";
    }
    return out;
}

// --------------------------------------------------------------------- clt
CommandOutput cmd_clt(const Cfg& cfg, const fs::path& dir, bool write) {
    const SimConfig base = sim_from(cfg);
    const long replicas = geti(cfg, "replicas");
    const double T = base.horizon;

    CommandOutput out;
    std::optional<CsvFile> csv;
    if (write) {
        csv.emplace(dir / "clt.csv", "replica,survived,boundary_contaminated,r_T");
        out.files.push_back("clt.csv");
    }
    std::vector<double> r_T;
    long excluded = 0;
    for (long i = 0; i < replicas; ++i) {
        SimConfig c = base;
        c.seed = replica_key(base.seed, static_cast<std::uint64_t>(i));
        const auto log = EventLog::build(c);
        const auto view = masked_view(log, EdgeMask::full_graph);
        Process p(view, Configuration::single(0), 0.0, c.horizon);
        while (p.peek()) p.apply_next();
        const bool survived = !p.extinction_time().has_value();
        const bool contaminated = p.touched_left_edge() || p.touched_right_edge();
        if (contaminated)
            ++excluded;
        else if (survived)
            r_T.push_back(p.sup());
        if (write)
            csv->row({std::to_string(i), survived ? "1" : "0", contaminated ? "1" : "0",
                      survived ? std::to_string(p.sup()) : ""});
    }
    out.summary["replicas"] = replicas;
    out.summary["surviving"] = r_T.size();
    out.summary["excluded_boundary"] = excluded;
    if (r_T.size() >= 20) {
        double mean = 0.0;
        for (double v : r_T) mean += v;
        mean /= static_cast<double>(r_T.size());
        double var = 0.0;
        for (double v : r_T) var += (v - mean) * (v - mean);
        var /= static_cast<double>(r_T.size() - 1);
        out.summary["alpha_hat"] = mean / T;
        out.summary["sigma_hat"] = std::sqrt(var / T);
        out.summary["normality"] = test_json(normality_test(r_T));
    }
    return out;
}

// ------------------------------------------------------------- percolation
CommandOutput cmd_percolation(const Cfg& cfg, const fs::path& dir, bool write) {
    PercConfig pc;
    pc.epsilon = getd(cfg, "epsilon");
    pc.mode = cfg.at("perc_mode") == "independent" ? PercMode::independent
                                                   : PercMode::one_dependent;
    pc.n_max = static_cast<int>(geti(cfg, "n_max"));
    const long replicas = geti(cfg, "replicas");
    const std::uint64_t master = getu(cfg, "seed");

    CommandOutput out;
    std::optional<CsvFile> csv, rows_csv;
    if (write) {
        csv.emplace(dir / "percolation.csv", "replica,tau,survived,final_size,L,R");
        out.files.push_back("percolation.csv");
    }
    long survived = 0;
    for (long i = 0; i < replicas; ++i) {
        PercConfig c = pc;
        c.seed = replica_key(master, static_cast<std::uint64_t>(i));
        const auto field = PercField::generate(c);
        const auto run = evolve_percolation(field, {0}, c.n_max);
        if (run.survived()) ++survived;
        if (write) {
            const auto& last = run.levels.back();
            csv->row({std::to_string(i), std::to_string(run.tau),
                      run.survived() ? "1" : "0", std::to_string(last.size()),
                      last.empty() ? "" : std::to_string(run.L.back()),
                      last.empty() ? "" : std::to_string(run.R.back())});
            if (i == 0) {
                rows_csv.emplace(dir / "rows.csv", "n,size,L,R");
                for (std::size_t n = 0; n < run.levels.size(); ++n)
                    rows_csv->row({std::to_string(n), std::to_string(run.levels[n].size()),
                                   run.levels[n].empty() ? "" : std::to_string(run.L[n]),
                                   run.levels[n].empty() ? "" : std::to_string(run.R[n])});
                out.files.push_back("rows.csv");
            }
        }
    }
    EstimateReport est = wilson_ci(survived, replicas, getd(cfg, "level"));
    est.horizon_note = "survival to n_max = " + cfg.at("n_max") +
                       " (finite-row proxy for tau = infinity; overestimates it)";
    out.primary = est;
    out.summary["estimate"] = estimate_json(est);
    return out;
}

// ------------------------------------------------- deficit-decay, scan-runs
CommandOutput decay_command(const Cfg& cfg, const fs::path& dir, bool write,
                            bool scan_mode) {
    PercConfig pc;
    pc.epsilon = getd(cfg, "epsilon");
    pc.mode = cfg.at("perc_mode") == "independent" ? PercMode::independent
                                                   : PercMode::one_dependent;
    const long replicas = geti(cfg, "replicas");
    const std::uint64_t master = getu(cfg, "seed");
    const auto n_list = parse_int_list(cfg.at("n_list"), "n_list");
    const double rho = getd(cfg, "rho");
    const double beta = getd(cfg, "beta");
    const double b = getd(cfg, "b");
    const std::string event = cfg.at("event");
    const int n_max_cfg = static_cast<int>(geti(cfg, "n_max"));

    CommandOutput out;
    std::optional<CsvFile> csv;
    if (write) {
        csv.emplace(dir / "decay.csv", "n,trials,successes,p_hat,ci_low,ci_high");
        out.files.push_back("decay.csv");
    }
    std::vector<DecayFit::Point> points;
    for (long n : n_list) {
        const bool needs_tail = !scan_mode && event != "deficit";
        const int rows = needs_tail ? std::max<int>(n_max_cfg, static_cast<int>(n) + 1)
                                    : static_cast<int>(n);
        PercConfig c = pc;
        c.n_max = rows;
        if (rows < n) throw std::invalid_argument("n_list entry exceeds n_max");
        const std::uint64_t submaster = mix_key(master, 0xDECA, n);
        long successes = 0;
        for (long i = 0; i < replicas; ++i) {
            PercConfig cc = c;
            cc.seed = replica_key(submaster, static_cast<std::uint64_t>(i));
            const auto field = PercField::generate(cc);
            const auto run = evolve_percolation(field, {0}, rows);
            bool hit = false;
            if (scan_mode) {
                hit = scan_consecutive_runs(run, static_cast<int>(n), b, beta, rho);
            } else if (event == "deficit") {
                const int lim = static_cast<int>(std::floor(beta * n));
                std::vector<int> Y;
                const int start = (lim + n) % 2 == 0 ? -lim : -lim + 1;
                for (int y = start; y <= lim; y += 2) Y.push_back(y);
                hit = density_deficit(run, Y, rho, static_cast<int>(n), true);
            } else if (event == "extinction") {
                hit = extinction_and_speed_events(run, static_cast<int>(n), beta).first;
            } else {
                hit = extinction_and_speed_events(run, static_cast<int>(n), beta).second;
            }
            if (hit) ++successes;
        }
        const auto est = wilson_ci(successes, replicas, getd(cfg, "level"));
        points.push_back({n, est.p_hat, replicas, successes});
        if (write)
            csv->row({std::to_string(n), std::to_string(replicas),
                      std::to_string(successes), fmt17(est.p_hat), fmt17(est.ci_low),
                      fmt17(est.ci_high)});
    }
    out.summary["event"] = scan_mode ? "scan-runs" : event;
    out.summary["raw_points"] = json::array();
    for (const auto& pt : points)
        out.summary["raw_points"].push_back(
            {{"n", pt.n}, {"p_hat", pt.p_hat}, {"trials", pt.trials}, {"successes", pt.successes}});
    try {
        const auto fit = decay_fit(points);
        out.summary["decay_fit"] = {{"c_hat", fit.c_hat},
                                    {"gamma_hat", fit.gamma_hat},
                                    {"r_squared", fit.r_squared},
                                    {"points_used", fit.support.size()}};
    } catch (const InsufficientData& e) {
        out.summary["decay_fit"] = {{"error", e.what()}};
        out.warnings.push_back("decay fit skipped: insufficient usable points");
    }
    return out;
}

CommandOutput dispatch(const std::string& command, const Cfg& cfg, const fs::path& dir,
                       bool write) {
    if (command == "survival") return cmd_survival(cfg, dir, write);
    if (command == "endpoint-equality") return cmd_endpoint_equality(cfg, dir, write);
    if (command == "agreement") return cmd_agreement(cfg, dir, write);
    if (command == "shape") return cmd_shape(cfg, dir, write);
    if (command == "breakpoints") return cmd_breakpoints(cfg, dir, write);
    if (command == "restart") return cmd_restart(cfg, dir, write);
    if (command == "clt") return cmd_clt(cfg, dir, write);
    if (command == "percolation") return cmd_percolation(cfg, dir, write);
    if (command == "deficit-decay") return decay_command(cfg, dir, write, false);
    if (command == "scan-runs") return decay_command(cfg, dir, write, true);
    throw std::invalid_argument("unknown command '" + command + "'");
}

std::string iso_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

std::string config_digest(const Cfg& cfg) {
    std::string s;
    for (const auto& [k, v] : cfg) s += k + "=" + v + "\n";
    return digest_hex(s);
}

}  // namespace

ExecResult execute(const std::string& command, const Cfg& config_in,
                   const std::string& out_root, bool window_doubling) {
    const auto cfg = resolve_config(config_in);
    const std::string started = iso_now();

    // per-run directory named by (command, seed, config digest prefix);
    // append-only: clashes get a numeric suffix
    const std::string stem =
        command + "-s" + cfg.at("seed") + "-" + config_digest(cfg).substr(0, 6);
    fs::path dir = fs::path(out_root) / stem;
    for (int k = 2; fs::exists(dir); ++k)
        dir = fs::path(out_root) / (stem + "-r" + std::to_string(k));
    fs::create_directories(dir);

    auto out = dispatch(command, cfg, dir, true);

    json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = command;
    manifest["full_config"] = cfg;
    manifest["master_seed"] = getu(cfg, "seed");
    manifest["replica_count"] = geti(cfg, "replicas");
    manifest["started_at"] = started;

    if (window_doubling) {
        json verdict;
        if (out.primary) {
            Cfg doubled = cfg;
            doubled["x_min"] = std::to_string(2 * geti(cfg, "x_min"));
            doubled["x_max"] = std::to_string(2 * geti(cfg, "x_max"));
            const auto out2 = dispatch(command, doubled, dir, false);
            const double half_width =
                (out.primary->ci_high - out.primary->ci_low) / 2.0;
            const double shift = std::fabs(out2.primary->p_hat - out.primary->p_hat);
            verdict = {{"p_hat", out.primary->p_hat},
                       {"p_hat_doubled", out2.primary->p_hat},
                       {"ci_half_width", half_width},
                       {"stable", shift < half_width}};
            if (shift >= half_width)
                out.warnings.push_back("window-doubling check failed: estimate shifted "
                                       "by more than the CI half-width");
        } else {
            verdict = {{"skipped", "command has no proportion-type primary estimate"}};
        }
        manifest["window_doubling"] = verdict;
    }

    // summary json
    {
        std::ofstream js(dir / (command + ".json"));
        js << out.summary.dump(2) << "\n";
        out.files.push_back(command + ".json");
    }
    manifest["warnings"] = out.warnings;
    manifest["finished_at"] = iso_now();
    json files = json::array();
    for (const auto& f : out.files)
        files.push_back({{"path", f}, {"digest", digest_file((dir / f).string())}});
    manifest["output_files"] = files;
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << "\n";

    ExecResult res;
    res.status = 0;
    res.run_dir = dir.string();
    res.files = out.files;
    return res;
}

}  // namespace cpsim::cli
