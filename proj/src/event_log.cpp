#include "cpsim/event_log.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "cpsim/rng.hpp"
#include "json.hpp"

namespace cpsim {

namespace {

constexpr std::uint64_t kDeathTag = 0xD0;
constexpr std::uint64_t kArrowTag = 0xA0;

// strictly increasing Poisson stream on (0, T]; zero gaps regenerated
void append_stream(StreamRng& rng, double rate, double T,
                   std::vector<double>& out) {
    if (rate <= 0.0) return;
    double t = 0.0;
    for (;;) {
        double next = t + rng.exponential(rate);
        if (next <= t) continue;  // exact duplicate under floating point
        if (next > T) break;
        out.push_back(next);
        t = next;
    }
}

bool event_order(const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.dst < b.dst;
}

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

void SimConfig::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("SimConfig.mu must be > 0");
    if (range_M < 1) throw std::invalid_argument("SimConfig.range_M must be >= 1");
    if (x_min >= x_max) throw std::invalid_argument("SimConfig.window requires x_min < x_max");
    if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig.horizon must be > 0");
    if (width() < 2 * range_M + 1)
        throw std::invalid_argument("SimConfig.window width must be >= 2*range_M + 1");
}

std::size_t EventLog::total_arrows() const {
    std::size_t n = 0;
    for (const auto& e : events_)
        if (e.kind == EventKind::arrow) ++n;
    return n;
}

std::uint32_t EventLog::first_after(int site, double t) const {
    const auto b = site_begin(site), e = site_end(site);
    const Event* base = events_.data();
    auto lo = b, hi = e;
    while (lo < hi) {
        auto mid = lo + (hi - lo) / 2;
        if (base[mid].t <= t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

void EventLog::index_sites(std::vector<std::pair<std::uint32_t, Event>>&& tagged,
                           std::vector<double>&& tagged_marks) {
    const int w = config_.width();
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(w) + 1, 0);
    for (const auto& [site_off, ev] : tagged) counts[site_off + 1]++;
    site_begin_.assign(counts.begin(), counts.end());
    for (int i = 0; i < w; ++i) site_begin_[i + 1] += site_begin_[i];

    events_.resize(tagged.size());
    const bool with_marks = !tagged_marks.empty();
    if (with_marks) marks_.resize(tagged.size());
    std::vector<std::uint32_t> cursor(site_begin_.begin(), site_begin_.end() - 1);
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        const auto pos = cursor[tagged[i].first]++;
        events_[pos] = tagged[i].second;
        if (with_marks) marks_[pos] = tagged_marks[i];
    }
    // per-site time sort with the deterministic tie-break (time, kind, dst)
    for (int i = 0; i < w; ++i) {
        auto lo = site_begin_[i], hi = site_begin_[i + 1];
        if (with_marks) {
            std::vector<std::uint32_t> perm(hi - lo);
            for (std::uint32_t k = 0; k < hi - lo; ++k) perm[k] = lo + k;
            std::sort(perm.begin(), perm.end(), [&](std::uint32_t a, std::uint32_t b) {
                return event_order(events_[a], events_[b]);
            });
            std::vector<Event> ev(hi - lo);
            std::vector<double> mk(hi - lo);
            for (std::uint32_t k = 0; k < hi - lo; ++k) {
                ev[k] = events_[perm[k]];
                mk[k] = marks_[perm[k]];
            }
            std::copy(ev.begin(), ev.end(), events_.begin() + lo);
            std::copy(mk.begin(), mk.end(), marks_.begin() + lo);
        } else {
            std::sort(events_.begin() + lo, events_.begin() + hi, event_order);
        }
    }
}

EventLog EventLog::build(const SimConfig& config) {
    return build_with_marks(config, 0.0);
}

EventLog EventLog::build_with_marks(const SimConfig& config, double mu_base) {
    config.validate();
    const bool with_marks = mu_base > 0.0;
    if (with_marks && mu_base < config.mu)
        throw std::invalid_argument("mu_base must be >= mu");
    const double arrow_rate = with_marks ? mu_base : config.mu;

    EventLog log;
    log.config_ = config;
    log.mu_base_ = arrow_rate;

    std::vector<std::pair<std::uint32_t, Event>> tagged;
    std::vector<double> tagged_marks;
    std::vector<double> times;
    for (int x = config.x_min; x <= config.x_max; ++x) {
        const auto off = static_cast<std::uint32_t>(x - config.x_min);
        times.clear();
        StreamRng drng(mix_key(config.seed, kDeathTag, x));
        append_stream(drng, 1.0, config.horizon, times);
        for (double t : times)
            tagged.push_back({off, Event{t, x, EventKind::death}});
        if (with_marks)
            for (std::size_t k = 0; k < times.size(); ++k) tagged_marks.push_back(0.0);

        for (int d = -config.range_M; d <= config.range_M; ++d) {
            if (d == 0) continue;
            const int y = x + d;
            if (y < config.x_min || y > config.x_max) continue;
            times.clear();
            StreamRng arng(mix_key(config.seed, kArrowTag, x, d));
            append_stream(arng, arrow_rate, config.horizon, times);
            for (double t : times) {
                tagged.push_back({off, Event{t, y, EventKind::arrow}});
                if (with_marks) tagged_marks.push_back(arng.open01());
            }
        }
    }
    log.index_sites(std::move(tagged), std::move(tagged_marks));
    return log;
}

EventLog EventLog::from_streams(
    const SimConfig& config,
    const std::map<int, std::vector<double>>& deaths,
    const std::map<std::pair<int, int>, std::vector<double>>& arrows) {
    config.validate();
    EventLog log;
    log.config_ = config;
    log.mu_base_ = config.mu;

    auto check_times = [&](const std::vector<double>& ts, const char* what) {
        double prev = 0.0;
        for (double t : ts) {
            if (!(t > prev) || t > config.horizon)
                throw std::invalid_argument(
                    std::string(what) + " stream not strictly increasing in (0, horizon]");
            prev = t;
        }
    };

    std::vector<std::pair<std::uint32_t, Event>> tagged;
    for (const auto& [site, ts] : deaths) {
        if (site < config.x_min || site > config.x_max)
            throw std::invalid_argument("death site outside window");
        check_times(ts, "death");
        const auto off = static_cast<std::uint32_t>(site - config.x_min);
        for (double t : ts) tagged.push_back({off, Event{t, site, EventKind::death}});
    }
    for (const auto& [edge, ts] : arrows) {
        const auto [x, y] = edge;
        if (x < config.x_min || x > config.x_max || y < config.x_min || y > config.x_max)
            throw std::invalid_argument("arrow endpoint outside window");
        const int d = std::abs(x - y);
        if (d < 1 || d > config.range_M)
            throw std::invalid_argument("arrow pair violates 1 <= |x-y| <= range_M");
        check_times(ts, "arrow");
        const auto off = static_cast<std::uint32_t>(x - config.x_min);
        for (double t : ts) tagged.push_back({off, Event{t, y, EventKind::arrow}});
    }
    log.index_sites(std::move(tagged), {});
    return log;
}

std::vector<double> EventLog::deaths_at(int site) const {
    std::vector<double> out;
    for (auto i = site_begin(site); i < site_end(site); ++i)
        if (events_[i].kind == EventKind::death) out.push_back(events_[i].t);
    return out;
}

std::vector<double> EventLog::arrows_on(int from, int to) const {
    std::vector<double> out;
    for (auto i = site_begin(from); i < site_end(from); ++i)
        if (events_[i].kind == EventKind::arrow && events_[i].dst == to)
            out.push_back(events_[i].t);
    return out;
}

std::string EventLog::to_json() const {
    nlohmann::ordered_json j;
    j["config"] = {{"mu", fmt17(config_.mu)},
                   {"range_M", config_.range_M},
                   {"x_min", config_.x_min},
                   {"x_max", config_.x_max},
                   {"horizon", fmt17(config_.horizon)},
                   {"seed", config_.seed}};
    nlohmann::ordered_json jd = nlohmann::ordered_json::object();
    nlohmann::ordered_json ja = nlohmann::ordered_json::object();
    for (int x = config_.x_min; x <= config_.x_max; ++x) {
        auto ds = deaths_at(x);
        if (!ds.empty()) {
            auto arr = nlohmann::ordered_json::array();
            for (double t : ds) arr.push_back(fmt17(t));
            jd[std::to_string(x)] = std::move(arr);
        }
        for (int d = -config_.range_M; d <= config_.range_M; ++d) {
            if (d == 0) continue;
            const int y = x + d;
            if (!in_window(y)) continue;
            auto as = arrows_on(x, y);
            if (as.empty()) continue;
            auto arr = nlohmann::ordered_json::array();
            for (double t : as) arr.push_back(fmt17(t));
            ja[std::to_string(x) + ">" + std::to_string(y)] = std::move(arr);
        }
    }
    j["deaths"] = std::move(jd);
    j["arrows"] = std::move(ja);
    return j.dump();
}

EventLog EventLog::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SimConfig cfg;
    cfg.mu = std::strtod(j.at("config").at("mu").get<std::string>().c_str(), nullptr);
    cfg.range_M = j.at("config").at("range_M").get<int>();
    cfg.x_min = j.at("config").at("x_min").get<int>();
    cfg.x_max = j.at("config").at("x_max").get<int>();
    cfg.horizon = std::strtod(j.at("config").at("horizon").get<std::string>().c_str(), nullptr);
    cfg.seed = j.at("config").at("seed").get<std::uint64_t>();

    auto parse_times = [](const nlohmann::json& arr) {
        std::vector<double> ts;
        for (const auto& s : arr) ts.push_back(std::strtod(s.get<std::string>().c_str(), nullptr));
        return ts;
    };
    std::map<int, std::vector<double>> deaths;
    for (const auto& [k, v] : j.at("deaths").items())
        deaths[std::stoi(k)] = parse_times(v);
    std::map<std::pair<int, int>, std::vector<double>> arrows;
    for (const auto& [k, v] : j.at("arrows").items()) {
        const auto gt = k.find('>');
        arrows[{std::stoi(k.substr(0, gt)), std::stoi(k.substr(gt + 1))}] = parse_times(v);
    }
    return from_streams(cfg, deaths, arrows);
}

}  // namespace cpsim
