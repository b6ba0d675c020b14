#include "cpsim/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpsim/rng.hpp"

namespace cpsim {

namespace {
constexpr std::uint64_t kEtaTag = 0xE7A;
constexpr std::uint64_t kSiteTag = 0x517E;

double site_uniform(std::uint64_t seed, std::uint64_t tag, int y, int n) {
    std::uint64_t h = mix_key(seed, tag, y, n);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace

void PercConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("PercConfig.epsilon must lie in [0, 1)");
    if (n_max < 1) throw std::invalid_argument("PercConfig.n_max must be >= 1");
    if (extent < 0) throw std::invalid_argument("PercConfig.extent must be >= 0");
}

PercField PercField::generate(const PercConfig& config) {
    config.validate();
    PercField f;
    f.config_ = config;
    const int cols = f.cols();
    f.w_.assign(static_cast<std::size_t>(config.n_max) * cols, 0);
    if (config.mode == PercMode::independent) {
        for (int n = 1; n <= config.n_max; ++n)
            for (int y = config.col_lo(); y <= config.col_hi(); ++y) {
                if ((y + n) % 2 != 0) continue;
                f.w_[f.idx(y, n)] =
                    site_uniform(config.seed, kSiteTag, y, n) < 1.0 - config.epsilon;
            }
        return f;
    }
    // latent eta on the opposite parity of each row
    const double q = std::sqrt(1.0 - config.epsilon);
    f.eta_.assign(f.w_.size(), 0);
    for (int n = 1; n <= config.n_max; ++n)
        for (int y = config.col_lo(); y <= config.col_hi(); ++y) {
            if ((y + n) % 2 == 0) continue;  // eta lives where (y + n) is odd
            f.eta_[f.idx(y, n)] = site_uniform(config.seed, kEtaTag, y, n) < q;
        }
    for (int n = 1; n <= config.n_max; ++n)
        for (int y = config.col_lo() + 1; y < config.col_hi(); ++y) {
            if ((y + n) % 2 != 0) continue;
            f.w_[f.idx(y, n)] = f.eta_[f.idx(y - 1, n)] && f.eta_[f.idx(y + 1, n)];
        }
    return f;
}

PercField PercField::constant(const PercConfig& config, bool open) {
    config.validate();
    PercField f;
    f.config_ = config;
    f.w_.assign(static_cast<std::size_t>(config.n_max) * f.cols(), open ? 1 : 0);
    return f;
}

bool PercRun::occupied(int y, int n) const {
    const auto& lv = levels[n];
    return std::binary_search(lv.begin(), lv.end(), y);
}

PercRun evolve_percolation(const PercField& field, const std::vector<int>& start,
                           int n_max) {
    const auto& cfg = field.config();
    if (start.empty()) throw std::invalid_argument("start must be nonempty");
    if (n_max > cfg.n_max) throw std::invalid_argument("n_max exceeds field rows");
    for (int y : start) {
        if (y % 2 != 0) throw std::invalid_argument("start site off-lattice (odd parity)");
        if (y - n_max < cfg.col_lo() || y + n_max > cfg.col_hi())
            throw std::invalid_argument("start site too close to the column window edge");
    }
    PercRun run;
    run.start = start;
    run.n_max = n_max;
    run.levels.resize(n_max + 1);
    run.L.assign(n_max + 1, 0);
    run.R.assign(n_max + 1, 0);
    run.levels[0] = start;
    std::sort(run.levels[0].begin(), run.levels[0].end());
    run.levels[0].erase(std::unique(run.levels[0].begin(), run.levels[0].end()),
                        run.levels[0].end());
    run.L[0] = run.levels[0].front();
    run.R[0] = run.levels[0].back();

    for (int n = 1; n <= n_max; ++n) {
        const auto& prev = run.levels[n - 1];
        auto& cur = run.levels[n];
        int last = cfg.col_lo() - 1;
        for (int y0 : prev)
            for (int y : {y0 - 1, y0 + 1}) {
                if (y <= last) continue;  // prev sorted: candidates nondecreasing
                if (field.open(y, n)) {
                    cur.push_back(y);
                    last = y;
                }
            }
        if (cur.empty()) {
            run.tau = n;
            run.levels.resize(n + 1);
            run.L.resize(n + 1);
            run.R.resize(n + 1);
            break;
        }
        run.L[n] = cur.front();
        run.R[n] = cur.back();
    }
    return run;
}

std::vector<int> full_even_row(const PercConfig& config) {
    std::vector<int> row;
    for (int y = config.col_lo(); y <= config.col_hi(); ++y)
        if (y % 2 == 0) row.push_back(y);
    return row;
}

bool coupling_identity_check(const PercField& field, int n) {
    const auto origin = evolve_percolation(field, {0}, field.config().n_max);
    // the identity is stated on survival; a dead origin run satisfies it
    // vacuously
    if (!origin.survived()) return true;
    // full-row start evolved without the cone-margin requirement: its
    // restriction to [-n, n] is exact given the window margins
    PercRun full;
    {
        const auto& cfg = field.config();
        full.start = full_even_row(cfg);
        full.levels.resize(n + 1);
        full.levels[0] = full.start;
        for (int m = 1; m <= n; ++m) {
            const auto& prev = full.levels[m - 1];
            auto& cur = full.levels[m];
            int last = cfg.col_lo() - 1;
            for (int y0 : prev)
                for (int y : {y0 - 1, y0 + 1}) {
                    if (y <= last || y < cfg.col_lo() || y > cfg.col_hi()) continue;
                    if (field.open(y, m)) {
                        cur.push_back(y);
                        last = y;
                    }
                }
        }
    }
    const auto& w0 = origin.levels[n];
    const int L = origin.L[n], R = origin.R[n];
    std::vector<int> clipped;
    for (int y : full.levels[n])
        if (y >= L && y <= R) clipped.push_back(y);
    return clipped == w0;
}

bool density_deficit(const PercRun& run_source, const std::vector<int>& Y,
                     double rho, int n, bool require_nonempty) {
    if (Y.empty()) throw std::invalid_argument("Y must be nonempty");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
    for (int y : Y)
        if ((y + n) % 2 != 0)
            throw std::invalid_argument("Y contains a site of the wrong parity");
    const bool row_present = static_cast<int>(run_source.levels.size()) > n &&
                             !run_source.levels[n].empty();
    long count = 0;
    if (row_present)
        for (int y : Y)
            if (run_source.occupied(y, n)) ++count;
    const bool deficit = static_cast<double>(count) < rho * static_cast<double>(Y.size());
    if (require_nonempty) return deficit && row_present;
    return deficit;
}

bool scan_consecutive_runs(const PercRun& run0, int n, double b, double beta,
                           double rho) {
    const int k = static_cast<int>(std::floor(b * n));
    if (k < 1) throw std::invalid_argument("scan window floor(b*n) must be >= 1");
    if (static_cast<int>(run0.levels.size()) <= n || run0.levels[n].empty())
        return false;  // W_n^0 empty
    const int lim = static_cast<int>(std::floor(beta * n));
    // X(n) points in [-beta n, beta n], ascending (step 2)
    std::vector<int> pts;
    const int start = (lim + n) % 2 == 0 ? -lim : -lim + 1;
    for (int y = start; y <= lim; y += 2) pts.push_back(y);
    if (static_cast<int>(pts.size()) < k) return false;
    // sliding occupied count
    std::vector<int> occ(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) occ[i] = run0.occupied(pts[i], n);
    long window = 0;
    for (int i = 0; i < k; ++i) window += occ[i];
    const double threshold = rho * k;
    if (static_cast<double>(window) < threshold) return true;
    for (std::size_t i = k; i < pts.size(); ++i) {
        window += occ[i] - occ[i - k];
        if (static_cast<double>(window) < threshold) return true;
    }
    return false;
}

std::pair<bool, bool> extinction_and_speed_events(const PercRun& run0, int n,
                                                  double beta) {
    // n <= tau < n_max, with tau finite
    const bool tau_in_window = run0.tau >= 0 && run0.tau >= n && run0.tau < run0.n_max;
    bool slow_edges = false;
    if (run0.survived() && static_cast<int>(run0.levels.size()) > n &&
        !run0.levels[n].empty()) {
        const double lim = beta * n;
        slow_edges = run0.L[n] >= -lim && run0.R[n] <= lim;
    }
    return {tau_in_window, slow_edges};
}

}  // namespace cpsim
