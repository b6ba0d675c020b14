#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cpsim/event_log.hpp"

namespace cpsim {

// sup/inf sentinels for the empty configuration
constexpr int kNoSite = std::numeric_limits<int>::min();

struct Configuration {
    std::vector<int> sites;  // sorted, unique

    static Configuration single(int x) { return {{x}}; }
    static Configuration interval(int lo, int hi);      // {lo, ..., hi}
    static Configuration half_line_in(const SimConfig&, int top = 0);  // [x_min, top]
    bool contains(int x) const;
};

struct Transition {
    double time;
    int site;
    bool born;  // false: died
};

struct Trajectory {
    Configuration initial;
    std::vector<Transition> transitions;
    double horizon = 0.0;
    bool boundary_contaminated = false;
    std::optional<double> extinction_time;

    bool survived() const { return !extinction_time.has_value(); }
    // occupied set at time t (piecewise-constant replay)
    Configuration at(double t) const;
    int sup_at(double t) const;
};

struct AgreementReport {
    bool agrees = true;
    std::optional<double> first_violation_time;
    double checked_horizon = 0.0;
};

// A single contact process evolving on a log view. Event-driven: only
// streams of currently occupied sites are consulted.
class Process {
public:
    Process(const LogView& view, const Configuration& initial, double start_time,
            double horizon);

    // next relevant event, or nullptr when none remain before the horizon
    const Event* peek();
    struct Step {
        double time;
        int site;
        bool born;
        bool changed;
    };
    Step apply_next();  // precondition: peek() != nullptr

    bool empty() const { return count_ == 0; }
    int count() const { return count_; }
    int sup() const { return count_ ? max_ : kNoSite; }
    int inf() const { return count_ ? min_ : kNoSite; }
    bool occupied(int site) const {
        return view_.log->in_window(site) && occ_[site - view_.log->config().x_min];
    }
    std::optional<double> extinction_time() const { return extinction_time_; }
    bool touched_left_edge() const { return left_edge_; }
    bool touched_right_edge() const { return right_edge_; }
    Configuration snapshot() const;

private:
    struct HeapEntry {
        double t;
        std::uint32_t ev_idx;
        std::int32_t site;
    };
    struct Later {
        const EventLog* log;
        bool operator()(const HeapEntry& a, const HeapEntry& b) const;
    };

    void occupy(int site, double after_time);
    void remove(int site, double at_time);
    void push_site(int site);

    LogView view_;
    double horizon_;
    std::vector<std::uint8_t> occ_;
    std::vector<std::uint32_t> next_idx_;
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, Later> heap_;
    int count_ = 0;
    int min_ = 0, max_ = 0;
    bool left_edge_ = false, right_edge_ = false;
    std::optional<double> extinction_time_;
};

// Steps a set of processes sharing one log through events in global time
// order. The observer runs after each event time (an event relevant to
// several processes is applied to all of them first); return false to stop.
template <class Obs>
void run_lockstep(std::vector<Process*>& ps, Obs&& obs) {
    // processes share one immutable log, so pointer identity identifies an
    // event; ordering is (time, kind, target, address)
    auto earlier = [](const Event* a, const Event* b) {
        if (a->t != b->t) return a->t < b->t;
        if (a->kind != b->kind) return a->kind < b->kind;
        if (a->dst != b->dst) return a->dst < b->dst;
        return a < b;
    };
    for (;;) {
        const Event* best = nullptr;
        for (auto* p : ps) {
            const Event* e = p->peek();
            if (e && (!best || earlier(e, best))) best = e;
        }
        if (!best) return;
        const double t = best->t;
        for (auto* p : ps)
            if (p->peek() == best) p->apply_next();
        if (!obs(t)) return;
    }
}

// trajectory evolution; horizon must not exceed the log horizon
Trajectory evolve(const LogView& view, const Configuration& initial, double horizon);

std::vector<Trajectory> evolve_family(const EventLog& log,
                                      const std::vector<Configuration>& initials,
                                      EdgeMask mask, double horizon);

// Proposition-2 style check: occupied sets intersected with F coincide at
// every time in [from_time, horizon]. Both trajectories must come from the
// same log view and horizon.
AgreementReport agreement_on_set(const Trajectory& traj_full_start,
                                 const Trajectory& traj_F_start,
                                 const Configuration& F, double from_time);

struct EndpointRecord {
    double time;
    int r;  // kNoSite when extinct
    int R;
};

struct EndpointReport {
    AgreementReport agreement;
    std::vector<EndpointRecord> series;  // populated when record_series
    bool single_contaminated = false;
    bool halfline_right_contaminated = false;
};

// Theorem-4 event {r_t = R_t for all t}: single start vs half-line start
// on the shared log. Extinction of the single start while the half-line
// start persists counts as a violation; joint extinction keeps equality.
EndpointReport endpoint_equality(const EventLog& log, EdgeMask mask_for_Zminus,
                                 double horizon,
                                 const Configuration& single_start = Configuration::single(0),
                                 bool record_series = false);

// bootstrap event of the Theorem-4 proof, evaluated on [0, 1]
bool bootstrap_event(const EventLog& log, double horizon_one = 1.0);

// Theorem-1 shape check on the half-line graph: membership of the two
// processes agrees on [-a*t, 0] above the running minimum of l_s, for all
// event times t in [t0, horizon].
bool shape_agreement(const Trajectory& traj_full, const Trajectory& traj_F,
                     double speed_a, double t0);

struct SurvivalResult {
    long trials = 0;
    long survivors = 0;
    long excluded_boundary = 0;
    std::vector<std::uint8_t> survived_by_replica;  // includes contaminated runs
    std::vector<std::uint8_t> contaminated_by_replica;
};

// proportion of replicas alive at the horizon; replica i uses a seed
// derived from (config.seed, i)
SurvivalResult survival_runs(const SimConfig& config, EdgeMask mask,
                             const Configuration& initial, long replicas,
                             double mu_eff = -1.0, double mu_base = 0.0);

}  // namespace cpsim
