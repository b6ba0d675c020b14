#include "cpsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "cpsim/rng.hpp"

namespace cpsim {

Configuration Configuration::interval(int lo, int hi) {
    Configuration c;
    for (int x = lo; x <= hi; ++x) c.sites.push_back(x);
    return c;
}

Configuration Configuration::half_line_in(const SimConfig& cfg, int top) {
    return interval(cfg.x_min, top);
}

bool Configuration::contains(int x) const {
    return std::binary_search(sites.begin(), sites.end(), x);
}

Configuration Trajectory::at(double t) const {
    std::set<int> s(initial.sites.begin(), initial.sites.end());
    for (const auto& tr : transitions) {
        if (tr.time > t) break;
        if (tr.born)
            s.insert(tr.site);
        else
            s.erase(tr.site);
    }
    Configuration c;
    c.sites.assign(s.begin(), s.end());
    return c;
}

int Trajectory::sup_at(double t) const {
    const auto c = at(t);
    return c.sites.empty() ? kNoSite : c.sites.back();
}

bool Process::Later::operator()(const HeapEntry& a, const HeapEntry& b) const {
    if (a.t != b.t) return a.t > b.t;
    const Event& ea = log->event(a.ev_idx);
    const Event& eb = log->event(b.ev_idx);
    if (ea.kind != eb.kind) return ea.kind > eb.kind;
    if (a.site != b.site) return a.site > b.site;
    return ea.dst > eb.dst;
}

Process::Process(const LogView& view, const Configuration& initial,
                 double start_time, double horizon)
    : view_(view),
      horizon_(horizon),
      occ_(view.log->config().width(), 0),
      next_idx_(view.log->config().width(), 0),
      heap_(Later{view.log}) {
    const auto& cfg = view.log->config();
    if (horizon > cfg.horizon)
        throw std::out_of_range("evolution horizon exceeds log horizon");
    for (int x : initial.sites) {
        if (!view.log->in_window(x))
            throw std::invalid_argument("initial site outside window");
        if (!occ_[x - cfg.x_min]) occupy(x, start_time);
    }
    if (count_ == 0) extinction_time_ = start_time;
}

void Process::push_site(int site) {
    const auto idx = next_idx_[site - view_.log->config().x_min];
    if (idx < view_.log->site_end(site)) {
        const Event& e = view_.log->event(idx);
        if (e.t <= horizon_) heap_.push(HeapEntry{e.t, idx, site});
    }
}

void Process::occupy(int site, double after_time) {
    const auto& cfg = view_.log->config();
    occ_[site - cfg.x_min] = 1;
    if (count_ == 0) {
        min_ = max_ = site;
    } else {
        min_ = std::min(min_, site);
        max_ = std::max(max_, site);
    }
    ++count_;
    if (site - cfg.x_min < cfg.range_M) left_edge_ = true;
    if (cfg.x_max - site < cfg.range_M) right_edge_ = true;
    next_idx_[site - cfg.x_min] = view_.log->first_after(site, after_time);
    push_site(site);
}

void Process::remove(int site, double at_time) {
    const auto& cfg = view_.log->config();
    occ_[site - cfg.x_min] = 0;
    --count_;
    if (count_ == 0) {
        extinction_time_ = at_time;
        return;
    }
    if (site == min_)
        while (!occ_[min_ - cfg.x_min]) ++min_;
    if (site == max_)
        while (!occ_[max_ - cfg.x_min]) --max_;
}

const Event* Process::peek() {
    const auto& cfg = view_.log->config();
    while (!heap_.empty()) {
        const HeapEntry& top = heap_.top();
        if (occ_[top.site - cfg.x_min] &&
            next_idx_[top.site - cfg.x_min] == top.ev_idx)
            return &view_.log->event(top.ev_idx);
        heap_.pop();
    }
    return nullptr;
}

Process::Step Process::apply_next() {
    const HeapEntry top = heap_.top();
    heap_.pop();
    const Event& e = view_.log->event(top.ev_idx);
    const int src = top.site;
    next_idx_[src - view_.log->config().x_min] = top.ev_idx + 1;
    push_site(src);

    if (e.kind == EventKind::death) {
        remove(src, e.t);
        return Step{e.t, src, false, true};
    }
    if (view_.admits_arrow(src, e.dst, top.ev_idx) && !occupied(e.dst)) {
        occupy(e.dst, e.t);
        return Step{e.t, e.dst, true, true};
    }
    return Step{e.t, e.dst, true, false};
}

Configuration Process::snapshot() const {
    Configuration c;
    const auto& cfg = view_.log->config();
    if (count_ == 0) return c;
    for (int x = min_; x <= max_; ++x)
        if (occ_[x - cfg.x_min]) c.sites.push_back(x);
    return c;
}

namespace {

// edges already touched by the initial set are a deliberate truncation,
// not contamination
bool contaminated(const Process& p, const Configuration& initial,
                  const SimConfig& cfg) {
    bool init_left = false, init_right = false;
    for (int x : initial.sites) {
        if (x - cfg.x_min < cfg.range_M) init_left = true;
        if (cfg.x_max - x < cfg.range_M) init_right = true;
    }
    return (p.touched_left_edge() && !init_left) ||
           (p.touched_right_edge() && !init_right);
}

}  // namespace

Trajectory evolve(const LogView& view, const Configuration& initial, double horizon) {
    Process p(view, initial, 0.0, horizon);
    Trajectory traj;
    traj.initial = initial;
    traj.horizon = horizon;
    while (p.peek()) {
        const auto step = p.apply_next();
        if (step.changed) traj.transitions.push_back({step.time, step.site, step.born});
    }
    traj.extinction_time = p.extinction_time();
    traj.boundary_contaminated = contaminated(p, initial, view.log->config());
    return traj;
}

std::vector<Trajectory> evolve_family(const EventLog& log,
                                      const std::vector<Configuration>& initials,
                                      EdgeMask mask, double horizon) {
    std::vector<Trajectory> out;
    out.reserve(initials.size());
    const auto view = masked_view(log, mask);
    for (const auto& init : initials) out.push_back(evolve(view, init, horizon));
    return out;
}

AgreementReport agreement_on_set(const Trajectory& traj_full_start,
                                 const Trajectory& traj_F_start,
                                 const Configuration& F, double from_time) {
    if (traj_full_start.horizon != traj_F_start.horizon)
        throw std::invalid_argument("agreement_on_set: mismatched horizons");
    const double horizon = traj_full_start.horizon;

    // membership-in-F evolution only
    auto restrict = [&](const Configuration& c) {
        std::set<int> s;
        for (int x : c.sites)
            if (F.contains(x)) s.insert(x);
        return s;
    };
    std::set<int> a = restrict(traj_full_start.initial);
    std::set<int> b = restrict(traj_F_start.initial);

    struct Ev {
        double t;
        int site;
        bool born;
        bool to_a;
    };
    std::vector<Ev> evs;
    for (const auto& tr : traj_full_start.transitions)
        if (F.contains(tr.site)) evs.push_back({tr.time, tr.site, tr.born, true});
    for (const auto& tr : traj_F_start.transitions)
        if (F.contains(tr.site)) evs.push_back({tr.time, tr.site, tr.born, false});
    std::stable_sort(evs.begin(), evs.end(),
                     [](const Ev& x, const Ev& y) { return x.t < y.t; });

    AgreementReport rep;
    rep.checked_horizon = horizon;
    std::size_t i = 0;
    auto apply_group = [&](double t) {  // all transitions at exactly time t
        for (; i < evs.size() && evs[i].t == t; ++i) {
            auto& s = evs[i].to_a ? a : b;
            if (evs[i].born)
                s.insert(evs[i].site);
            else
                s.erase(evs[i].site);
        }
    };
    // state at from_time
    while (i < evs.size() && evs[i].t <= from_time) apply_group(evs[i].t);
    if (a != b) {
        rep.agrees = false;
        rep.first_violation_time = from_time;
        return rep;
    }
    while (i < evs.size() && evs[i].t <= horizon) {
        const double t = evs[i].t;
        apply_group(t);
        if (a != b) {
            rep.agrees = false;
            rep.first_violation_time = t;
            return rep;
        }
    }
    return rep;
}

EndpointReport endpoint_equality(const EventLog& log, EdgeMask mask_for_Zminus,
                                 double horizon, const Configuration& single_start,
                                 bool record_series) {
    Process single(masked_view(log, EdgeMask::full_graph), single_start, 0.0, horizon);
    Process half(LogView{&log, mask_for_Zminus, -1.0},
                 Configuration::half_line_in(log.config()), 0.0, horizon);

    EndpointReport rep;
    rep.agreement.checked_horizon = horizon;
    auto check = [&](double t) {
        const int r = single.sup(), R = half.sup();
        if (record_series) rep.series.push_back({t, r, R});
        if (r != R && rep.agreement.agrees) {
            rep.agreement.agrees = false;
            rep.agreement.first_violation_time = t;
        }
        return record_series || rep.agreement.agrees;
    };
    check(0.0);
    if (record_series || rep.agreement.agrees) {
        std::vector<Process*> ps{&single, &half};
        run_lockstep(ps, check);
    }
    rep.single_contaminated = contaminated(single, single_start, log.config());
    rep.halfline_right_contaminated = half.touched_right_edge();
    return rep;
}

bool bootstrap_event(const EventLog& log, double horizon_one) {
    if (log.config().horizon < horizon_one)
        throw std::invalid_argument("bootstrap_event: log horizon below 1");
    const int M = log.config().range_M;
    Process single(masked_view(log, EdgeMask::full_graph), Configuration::single(0),
                   0.0, horizon_one);
    Process half(masked_view(log, EdgeMask::full_graph),
                 Configuration::half_line_in(log.config()), 0.0, horizon_one);
    bool ok = true;
    auto check = [&](double) {
        if (!single.occupied(0) || half.sup() > 0) ok = false;
        return ok;
    };
    if (half.sup() > 0) return false;
    std::vector<Process*> ps{&single, &half};
    run_lockstep(ps, check);
    if (!ok) return false;
    for (int y = -M; y <= 0; ++y)
        if (!single.occupied(y)) return false;
    return true;
}

bool shape_agreement(const Trajectory& traj_full, const Trajectory& traj_F,
                     double speed_a, double t0) {
    const double horizon = traj_full.horizon;
    // replay both occupied sets over a common site range
    int lo = 0, hi = 0;
    auto widen = [&](const Trajectory& tr) {
        for (int x : tr.initial.sites) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        for (const auto& t : tr.transitions) {
            lo = std::min(lo, t.site);
            hi = std::max(hi, t.site);
        }
    };
    widen(traj_full);
    widen(traj_F);
    std::vector<std::uint8_t> fullset(hi - lo + 1, 0), fset(hi - lo + 1, 0);
    for (int x : traj_full.initial.sites) fullset[x - lo] = 1;
    for (int x : traj_F.initial.sites) fset[x - lo] = 1;

    int min_l = traj_F.initial.sites.empty() ? kNoSite : traj_F.initial.sites.front();
    const double f_end = traj_F.extinction_time.value_or(horizon);

    struct Ev {
        double t;
        int site;
        bool born;
        bool to_full;
    };
    std::vector<Ev> evs;
    for (const auto& tr : traj_full.transitions)
        evs.push_back({tr.time, tr.site, tr.born, true});
    for (const auto& tr : traj_F.transitions)
        evs.push_back({tr.time, tr.site, tr.born, false});
    std::stable_sort(evs.begin(), evs.end(),
                     [](const Ev& x, const Ev& y) { return x.t < y.t; });

    auto agree_at = [&](double t) {
        const int from = std::max(min_l, static_cast<int>(std::ceil(-speed_a * t)));
        for (int y = from; y <= 0; ++y)
            if (fullset[y - lo] != fset[y - lo]) return false;
        return true;
    };

    std::size_t i = 0;
    auto apply_until = [&](double t) {
        for (; i < evs.size() && evs[i].t <= t; ++i) {
            auto& s = evs[i].to_full ? fullset : fset;
            s[evs[i].site - lo] = evs[i].born ? 1 : 0;
            if (!evs[i].to_full && evs[i].born) min_l = std::min(min_l, evs[i].site);
        }
    };
    apply_until(t0);
    // checks condition on F-survival: stop at F's extinction
    if (t0 <= f_end && !agree_at(t0)) return false;
    while (i < evs.size() && evs[i].t <= horizon) {
        const double t = evs[i].t;
        if (t > f_end) break;
        apply_until(t);
        if (t >= t0 && !agree_at(t)) return false;
    }
    return true;
}

SurvivalResult survival_runs(const SimConfig& config, EdgeMask mask,
                             const Configuration& initial, long replicas,
                             double mu_eff, double mu_base) {
    if (replicas < 1) throw std::invalid_argument("replicas must be >= 1");
    SurvivalResult res;
    res.trials = replicas;
    for (long i = 0; i < replicas; ++i) {
        SimConfig cfg = config;
        cfg.seed = replica_key(config.seed, static_cast<std::uint64_t>(i));
        const EventLog log = mu_base > 0.0 ? EventLog::build_with_marks(cfg, mu_base)
                                           : EventLog::build(cfg);
        Process p(LogView{&log, mask, mu_eff}, initial, 0.0, cfg.horizon);
        while (p.peek()) p.apply_next();
        const bool alive = !p.extinction_time().has_value();
        const bool contam = contaminated(p, initial, cfg);
        res.survived_by_replica.push_back(alive ? 1 : 0);
        res.contaminated_by_replica.push_back(contam ? 1 : 0);
        if (contam) {
            ++res.excluded_boundary;
        } else if (alive) {
            ++res.survivors;
        }
    }
    return res;
}

}  // namespace cpsim
