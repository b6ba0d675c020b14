#include "cpsim/breakpoints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpsim {

namespace {

// First time in (s, horizon] at which the half-line start (truncated at
// depth_lo) strictly overtakes the single start from x. Truncating the
// half-line start only lowers its endpoint, so a reported overtaking is
// exact while the absence of one is conclusive only at full depth.
std::optional<double> pair_overtake(const EventLog& log, int x, double s,
                                    double horizon, int depth_lo) {
    const auto view = masked_view(log, EdgeMask::full_graph);
    Process single(view, Configuration::single(x), s, horizon);
    Process half(view, Configuration::interval(std::max(log.config().x_min, depth_lo), x),
                 s, horizon);
    std::optional<double> overtake;
    auto check = [&](double t) {
        if (half.sup() > single.sup()) {
            overtake = t;
            return false;
        }
        return true;
    };
    std::vector<Process*> ps{&single, &half};
    run_lockstep(ps, check);
    return overtake;
}

std::optional<double> pair_overtake_full(const EventLog& log, int x, double s,
                                         double horizon) {
    return pair_overtake(log, x, s, horizon, log.config().x_min);
}

// Staged c.s.e. check: cheap truncated short-horizon probes reject most
// candidates; survivors get the exact full-depth, full-horizon run.
bool cse_staged(const EventLog& log, int x, double s, double horizon) {
    static constexpr struct { double dt; int depth; } kStages[] = {
        {4.0, 24}, {16.0, 64}, {64.0, 192}};
    for (const auto& st : kStages) {
        const double h = std::min(horizon, s + st.dt);
        const int lo = x - st.depth;
        if (h >= horizon && lo <= log.config().x_min) break;  // probe == full run
        if (pair_overtake(log, x, s, h, lo)) return false;
    }
    return !pair_overtake_full(log, x, s, horizon).has_value();
}

using CseEval = bool (*)(const EventLog&, int, double, double);

bool cse_naive(const EventLog& log, int x, double s, double horizon) {
    return !pair_overtake_full(log, x, s, horizon).has_value();
}

BreakPointSeries psi_sequence_impl(const EventLog& log, double horizon,
                                   double margin, CseEval eval) {
    if (horizon > log.config().horizon)
        throw std::out_of_range("psi_sequence: horizon exceeds log horizon");
    BreakPointSeries series;
    series.horizon = horizon;
    series.margin = margin < 0.0 ? horizon / 4.0 : margin;

    const Trajectory base =
        evolve(masked_view(log, EdgeMask::full_graph), Configuration::single(0), horizon);
    if (!base.survived()) {
        series.base_extinct = true;
        return series;
    }

    // replay of the base endpoint
    const auto& cfg = log.config();
    std::vector<std::uint8_t> occ(cfg.width(), 0);
    occ[0 - cfg.x_min] = 1;
    int sup = 0;
    std::size_t ti = 0;
    auto replay_to = [&](double t) {  // apply transitions with time <= t
        for (; ti < base.transitions.size() && base.transitions[ti].time <= t; ++ti) {
            const auto& tr = base.transitions[ti];
            occ[tr.site - cfg.x_min] = tr.born ? 1 : 0;
            if (tr.born)
                sup = std::max(sup, tr.site);
            else if (tr.site == sup)
                while (!occ[sup - cfg.x_min]) --sup;
        }
    };

    double lower = 1.0;
    for (;;) {
        if (lower > horizon) {
            series.censored = true;
            break;
        }
        replay_to(lower);
        bool found = false;
        // clip point first, then each later transition time
        double cand_t = lower;
        int cand_r = sup;
        for (;;) {
            if (eval(log, cand_r, cand_t, horizon)) {
                series.points.push_back(
                    {cand_t, cand_r, cand_t > horizon - series.margin});
                lower = cand_t + 1.0;
                found = true;
                break;
            }
            if (ti >= base.transitions.size()) break;
            replay_to(base.transitions[ti].time);
            cand_t = base.transitions[ti - 1].time;  // replay_to advanced ti
            cand_r = sup;
            if (cand_t > horizon) break;
        }
        if (!found) {
            series.censored = true;
            break;
        }
    }
    return series;
}

}  // namespace

CseResult is_cse(const EventLog& log, int x, double s, double horizon) {
    if (s > horizon || horizon > log.config().horizon)
        throw std::out_of_range("is_cse: requires s <= horizon <= log horizon");
    CseResult res;
    res.holds_up_to = horizon;
    res.violation_time = pair_overtake_full(log, x, s, horizon);
    res.cse = !res.violation_time.has_value();
    return res;
}

BreakPointSeries psi_sequence(const EventLog& log, double horizon, double margin) {
    return psi_sequence_impl(log, horizon, margin, &cse_staged);
}

BreakPointSeries psi_sequence_naive(const EventLog& log, double horizon, double margin) {
    return psi_sequence_impl(log, horizon, margin, &cse_naive);
}

IncrementSample increments(const BreakPointSeries& series) {
    IncrementSample sample;
    for (std::size_t k = 1; k < series.points.size(); ++k) {
        if (series.points[k - 1].censored || series.points[k].censored) break;
        sample.pairs.emplace_back(series.points[k].r - series.points[k - 1].r,
                                  series.points[k].psi - series.points[k - 1].psi);
    }
    return sample;
}

RestartChain build_restart_chain(const EventLog& log, double horizon) {
    RestartChain chain;
    const auto view = masked_view(log, EdgeMask::full_graph);
    double start = 0.0;
    for (;;) {
        chain.endpoint_steps.emplace_back(start, 0);
        Process p(view, Configuration::single(0), start, horizon);
        while (p.peek()) {
            const auto step = p.apply_next();
            if (!step.changed) continue;
            if (p.empty()) break;  // extinction closes this segment
            chain.endpoint_steps.emplace_back(step.time, p.sup());
        }
        const auto ext = p.extinction_time();
        if (!ext || *ext >= horizon) return chain;
        chain.extinction_times.push_back(*ext);
        start = *ext;  // restart at the origin
    }
}

int RestartChain::at(double t) const {
    // last step with time <= t
    auto it = std::upper_bound(
        endpoint_steps.begin(), endpoint_steps.end(), t,
        [](double v, const std::pair<double, int>& s) { return v < s.first; });
    if (it == endpoint_steps.begin())
        throw std::out_of_range("RestartChain::at before chain start");
    return std::prev(it)->second;
}

RestartRecord restart_construction(const EventLog& log, double horizon) {
    if (horizon < 1.0 || horizon > log.config().horizon)
        throw std::out_of_range("restart_construction: requires 1 <= horizon <= log horizon");
    const RestartChain chain = build_restart_chain(log, horizon);

    RestartRecord rec;
    rec.extinction_times = chain.extinction_times;
    double sigma = 1.0;  // tau_1 = 1
    rec.taus.push_back(1.0);
    rec.sigmas.push_back(sigma);
    for (;;) {
        if (sigma > horizon) {
            rec.censored = true;
            return rec;
        }
        const int x = chain.at(sigma);
        const auto overtake = pair_overtake_full(log, x, sigma, horizon);
        if (!overtake) {
            rec.N = static_cast<int>(rec.taus.size());
            rec.sigma_N = sigma;
            rec.final_position = x;
            return rec;
        }
        rec.taus.push_back(*overtake - sigma);
        sigma = *overtake;
        rec.sigmas.push_back(sigma);
    }
}

}  // namespace cpsim
