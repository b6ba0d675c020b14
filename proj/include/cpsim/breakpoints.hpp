#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cpsim/engine.hpp"
#include "cpsim/event_log.hpp"

namespace cpsim {

struct CseResult {
    bool cse = false;
    std::optional<double> violation_time;  // first overtaking, when any
    double holds_up_to = 0.0;              // horizon of verification
};

// "controls subsequent edges": the pair started at time s from {x} and from
// {y <= x} within the window keeps equal sup endpoints on [s, horizon].
// Joint extinction keeps equality; single-start extinction while the
// half-line start persists is a violation.
CseResult is_cse(const EventLog& log, int x, double s, double horizon);

struct BreakPoint {
    double psi;
    int r;          // base-trajectory endpoint at psi
    bool censored;  // within the verification margin of the horizon
};

struct BreakPointSeries {
    std::vector<BreakPoint> points;
    double horizon = 0.0;
    double margin = 0.0;
    bool censored = false;     // search truncated by the horizon
    bool base_extinct = false; // conditioning event failed
};

// Successive break points psi_k = inf{t >= 1 + psi_{k-1} : r_t x t c.s.e.},
// psi_{-1} = 0, along the base trajectory from {0}. Candidates are the
// interval start and the base trajectory's transition times, evaluated
// right-continuously. Points within `margin` of the horizon are flagged
// censored (default margin: horizon / 4).
BreakPointSeries psi_sequence(const EventLog& log, double horizon, double margin = -1.0);

// Reference evaluator: every candidate goes through the plain full-depth
// pair evolution. Oracle for the staged evaluator used by psi_sequence.
BreakPointSeries psi_sequence_naive(const EventLog& log, double horizon,
                                    double margin = -1.0);

struct IncrementSample {
    std::vector<std::pair<int, double>> pairs;  // (delta r, delta psi)
};

// Consecutive differences over the uncensored head of the series; returns
// an empty sample when fewer than two usable points exist.
IncrementSample increments(const BreakPointSeries& series);

struct RestartRecord {
    std::vector<double> extinction_times;  // T_n of the origin-restart chain
    std::vector<double> taus;              // tau_1 = 1, then overtaking gaps
    std::vector<double> sigmas;            // sigma_n = sum of tau_1..tau_n
    int N = 0;                             // 0 while censored
    bool censored = false;
    double sigma_N = 0.0;
    int final_position = kNoSite;          // r' at sigma_N
};

// Restart construction: origin-restarted chain with endpoint r'_t, the
// attempt ladder tau_n / sigma_n, and N = first attempt with no overtaking
// before the horizon (finite-horizon proxy for tau_{N+1} = infinity).
RestartRecord restart_construction(const EventLog& log, double horizon);

// endpoint r'_t evaluation support (exposed for tests)
struct RestartChain {
    std::vector<std::pair<double, int>> endpoint_steps;  // (time, r') steps
    std::vector<double> extinction_times;
    int at(double t) const;  // r'_t
};
RestartChain build_restart_chain(const EventLog& log, double horizon);

}  // namespace cpsim
