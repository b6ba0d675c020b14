#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpsim/rng.hpp"

namespace cpsim {

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EstimateReport {
    long trials = 0;
    long successes = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double level = 0.95;
    long excluded_boundary = 0;
    std::string horizon_note;
};

struct TestReport {
    std::string name;
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<std::size_t> sample_sizes;
    double decision_at = 0.01;
    bool rejected() const { return p_value < decision_at; }
};

struct DecayFit {
    struct Point {
        long n;
        double p_hat;
        long trials;
        long successes;
    };
    double c_hat = 0.0;
    double gamma_hat = 0.0;
    double r_squared = 0.0;
    std::vector<Point> support;  // the points actually fitted
};

// numeric backbone
double normal_cdf(double z);
double normal_quantile(double p);            // inverse standard normal CDF
double regularized_gamma_p(double a, double x);
double chi2_sf(double x, double dof);        // upper tail
double ks_asymptotic_sf(double lambda);      // Q_KS

// Wilson score interval at the given confidence level.
EstimateReport wilson_ci(long successes, long trials, double level = 0.95);

// Two-sample Kolmogorov-Smirnov with the asymptotic p-value.
TestReport ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS against Uniform(0, 1) (feed CDF-transformed data).
TestReport ks_one_sample_uniform(std::vector<double> u);

// Sample autocorrelation at the given lag, normalized by (n - lag) in the
// numerator and n in the denominator so exact alternation gives exactly -1.
double lag_autocorrelation(const std::vector<double>& sample, int lag);

// p_hat = 1/mean plus a chi-square goodness-of-fit report with tail-bin
// pooling (expected count >= 5 per bin).
std::pair<double, TestReport> geometric_fit(const std::vector<long>& ns);

// Anderson-Darling against the normal family with estimated mean/variance.
TestReport normality_test(std::vector<double> sample);

// Least squares on (n, log p_hat_n) over points with successes >= 5;
// p ~ c_hat * exp(-gamma_hat * n).
DecayFit decay_fit(const std::vector<DecayFit::Point>& points);

struct EdgeSpeedEstimate {
    double alpha_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t pairs = 0;
};

// Regeneration-ratio estimator sum(dr)/sum(dpsi) with a delta-method CI.
EdgeSpeedEstimate edge_speed(const std::vector<std::pair<double, double>>& dr_dpsi,
                             double level = 0.95);

// Deterministic replica orchestration: replica i runs f(i, replica_key(master, i));
// results are collected by index, so aggregation is order-independent and the
// first k replicas of a larger run equal a k-replica run exactly.
template <class F>
auto run_experiment(std::size_t replicas, std::uint64_t master_seed, F&& f) {
    if (replicas == 0) throw std::invalid_argument("replicas must be >= 1");
    using R = decltype(f(std::size_t{0}, std::uint64_t{0}));
    std::vector<R> out;
    out.reserve(replicas);
    for (std::size_t i = 0; i < replicas; ++i)
        out.push_back(f(i, replica_key(master_seed, i)));
    return out;
}

}  // namespace cpsim
