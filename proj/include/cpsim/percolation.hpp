#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace cpsim {

enum class PercMode { independent, one_dependent };

struct PercConfig {
    double epsilon = 0.0;        // closed-probability target, in [0, 1)
    PercMode mode = PercMode::independent;
    int n_max = 1;
    int extent = 0;              // largest |start site| the field must serve
    std::uint64_t seed = 0;

    // Column window sized so the speed-1 cone from any admissible start is
    // exact; full-row starts get an extra n_max margin so the coupling
    // identity can be read off exactly on [-n, n].
    int col_lo() const { return -(2 * n_max + extent + 2); }
    int col_hi() const { return 2 * n_max + extent + 2; }
    void validate() const;  // throws std::invalid_argument naming the field
};

// Site-openness field w(y, n) on {(y, n) : y + n even, 1 <= n <= n_max},
// plus the latent eta field in one_dependent mode:
//   w(y, n) = eta(y-1, n) * eta(y+1, n),  eta i.i.d. Bernoulli(sqrt(1-eps)).
class PercField {
public:
    static PercField generate(const PercConfig& config);
    // all-sites-identical field (tests)
    static PercField constant(const PercConfig& config, bool open);

    const PercConfig& config() const { return config_; }
    bool open(int y, int n) const { return w_[idx(y, n)] != 0; }
    void set_open(int y, int n, bool v) { w_[idx(y, n)] = v ? 1 : 0; }  // tests
    bool eta(int y, int n) const { return eta_[idx(y, n)] != 0; }
    bool has_eta() const { return !eta_.empty(); }

    int cols() const { return config_.col_hi() - config_.col_lo() + 1; }

private:
    std::size_t idx(int y, int n) const {
        return static_cast<std::size_t>(n - 1) * cols() + (y - config_.col_lo());
    }
    PercConfig config_;
    std::vector<std::uint8_t> w_;
    std::vector<std::uint8_t> eta_;
};

struct PercRun {
    std::vector<int> start;
    std::vector<std::vector<int>> levels;  // levels[n] = W_n sorted; levels[0] = start
    std::vector<int> L, R;                 // per-row extremes; meaningless when empty
    int tau = -1;                          // first empty row, or -1 (survived to n_max)
    int n_max = 0;                         // rows this run was evolved for

    bool survived_to(int n) const { return tau < 0 || tau > n; }
    bool survived() const { return tau < 0; }
    const std::vector<int>& level(int n) const { return levels[n]; }
    bool occupied(int y, int n) const;
};

// W_{n+1} = {y : w(y, n+1) = 1 and (y-1 in W_n or y+1 in W_n)}
PercRun evolve_percolation(const PercField& field, const std::vector<int>& start,
                           int n_max);

// full-row start 2Z within the field's window
std::vector<int> full_even_row(const PercConfig& config);

// On origin-run survival (to n_max, the tau = infinity proxy):
// W_n^0 = W_n^{2Z} cap [L_n, R_n], exactly, at row n.
bool coupling_identity_check(const PercField& field, int n);

// occupied count in Y below rho*|Y|; the origin-start variant additionally
// requires W_n^0 nonempty
bool density_deficit(const PercRun& run_source, const std::vector<int>& Y,
                     double rho, int n, bool require_nonempty);

// some window of floor(b*n) consecutive X(n)-points inside [-beta*n, beta*n]
// has occupied count below rho*floor(b*n), with W_n^0 nonempty
bool scan_consecutive_runs(const PercRun& run0, int n, double b, double beta,
                           double rho);

// (n <= tau < n_max,  survived-to-n_max with [L_n, R_n] inside [-beta*n, beta*n])
std::pair<bool, bool> extinction_and_speed_events(const PercRun& run0, int n,
                                                  double beta);

}  // namespace cpsim
