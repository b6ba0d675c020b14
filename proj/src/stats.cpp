#include "cpsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpsim {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation, refined by one Halley step.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile needs p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    return x - u / (1 + x * u / 2);
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double eps = 1e-15, fpmin = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_p domain");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_sf(double x, double dof) {
    if (x <= 0.0) return 1.0;
    return 1.0 - regularized_gamma_p(dof / 2.0, x / 2.0);
}

double ks_asymptotic_sf(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

EstimateReport wilson_ci(long successes, long trials, double level) {
    if (trials < 1) throw std::invalid_argument("wilson_ci: trials must be >= 1");
    if (successes < 0 || successes > trials)
        throw std::invalid_argument("wilson_ci: successes must lie in [0, trials]");
    EstimateReport rep;
    rep.trials = trials;
    rep.successes = successes;
    rep.level = level;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    rep.p_hat = p;
    const double z = normal_quantile(0.5 + level / 2.0);
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // boundary counts get exact endpoints (the formula leaves rounding dust)
    rep.ci_low = successes == 0 ? 0.0 : std::max(0.0, center - half);
    rep.ci_high = successes == trials ? 1.0 : std::min(1.0, center + half);
    return rep;
}

TestReport ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = a.size(), nb = b.size();
    double d = 0.0, fa = 0.0, fb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) fa = ++i / na;
        while (j < b.size() && b[j] == x) fb = ++j / nb;
        d = std::max(d, std::fabs(fa - fb));
    }
    TestReport rep;
    rep.name = "ks_two_sample";
    rep.statistic = d;
    rep.sample_sizes = {a.size(), b.size()};
    const double ne = std::sqrt(na * nb / (na + nb));
    rep.p_value = ks_asymptotic_sf((ne + 0.12 + 0.11 / ne) * d);
    return rep;
}

TestReport ks_one_sample_uniform(std::vector<double> u) {
    if (u.empty()) throw std::invalid_argument("ks_one_sample_uniform: empty sample");
    std::sort(u.begin(), u.end());
    const double n = u.size();
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d = std::max(d, std::fabs((i + 1) / n - u[i]));
        d = std::max(d, std::fabs(u[i] - i / n));
    }
    TestReport rep;
    rep.name = "ks_one_sample_uniform";
    rep.statistic = d;
    rep.sample_sizes = {u.size()};
    const double ne = std::sqrt(n);
    rep.p_value = ks_asymptotic_sf((ne + 0.12 + 0.11 / ne) * d);
    return rep;
}

double lag_autocorrelation(const std::vector<double>& sample, int lag) {
    const auto n = static_cast<long>(sample.size());
    if (lag < 1 || n <= lag)
        throw std::invalid_argument("lag_autocorrelation: need sample size > lag >= 1");
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double var = 0.0;
    for (double x : sample) var += (x - mean) * (x - mean);
    if (var == 0.0)
        throw std::invalid_argument("lag_autocorrelation: degenerate (constant) sample");
    double cov = 0.0;
    for (long t = 0; t + lag < n; ++t)
        cov += (sample[t] - mean) * (sample[t + lag] - mean);
    return (cov / (n - lag)) / (var / n);
}

std::pair<double, TestReport> geometric_fit(const std::vector<long>& ns) {
    if (ns.empty()) throw std::invalid_argument("geometric_fit: empty sample");
    for (long v : ns)
        if (v < 1) throw std::invalid_argument("geometric_fit: values must be >= 1");
    const double n = ns.size();
    const double mean = std::accumulate(ns.begin(), ns.end(), 0.0) / n;
    const double p = 1.0 / mean;

    TestReport rep;
    rep.name = "geometric_gof";
    rep.sample_sizes = {ns.size()};
    if (p >= 1.0) {  // degenerate: all ones
        rep.statistic = 0.0;
        rep.p_value = 1.0;
        return {p, rep};
    }
    // bins 1, 2, ... with the tail pooled so every expected count >= 5
    const long maxv = *std::max_element(ns.begin(), ns.end());
    std::vector<double> expected;
    std::vector<long> observed;
    double tail_prob = 1.0;
    for (long k = 1; k <= maxv; ++k) {
        const double pk = p * std::pow(1.0 - p, k - 1);
        if (tail_prob * n < 10.0 || (tail_prob - pk) * n < 5.0) break;
        expected.push_back(pk * n);
        observed.push_back(std::count(ns.begin(), ns.end(), k));
        tail_prob -= pk;
    }
    // pooled tail bin
    expected.push_back(tail_prob * n);
    const long head = std::accumulate(observed.begin(), observed.end(), 0L);
    observed.push_back(static_cast<long>(ns.size()) - head);

    double stat = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double diff = observed[i] - expected[i];
        stat += diff * diff / expected[i];
    }
    rep.statistic = stat;
    const double dof = static_cast<double>(expected.size()) - 2.0;  // p estimated
    rep.p_value = dof >= 1.0 ? chi2_sf(stat, dof) : 1.0;
    return {p, rep};
}

TestReport normality_test(std::vector<double> sample) {
    const auto n = static_cast<long>(sample.size());
    if (n < 20) throw std::invalid_argument("normality_test: need at least 20 points");
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double var = 0.0;
    for (double x : sample) var += (x - mean) * (x - mean);
    var /= (n - 1);
    if (var == 0.0) throw std::invalid_argument("normality_test: degenerate sample");
    std::sort(sample.begin(), sample.end());

    double a2 = 0.0;
    const double sd = std::sqrt(var);
    for (long i = 0; i < n; ++i) {
        const double zi = (sample[i] - mean) / sd;
        const double zr = (sample[n - 1 - i] - mean) / sd;
        const double lo = std::log(normal_cdf(zi));
        const double hi = std::log(normal_cdf(-zr));  // log(1 - Phi(zr)), stable
        a2 += (2.0 * i + 1.0) * (lo + hi);
    }
    a2 = -n - a2 / n;
    const double a2s = a2 * (1.0 + 0.75 / n + 2.25 / (n * n));

    TestReport rep;
    rep.name = "anderson_darling_normal";
    rep.statistic = a2s;
    rep.sample_sizes = {sample.size()};
    // D'Agostino-Stephens case-3 tail approximation
    double p;
    if (a2s >= 0.6)
        p = std::exp(1.2937 - 5.709 * a2s + 0.0186 * a2s * a2s);
    else if (a2s > 0.34)
        p = std::exp(0.9177 - 4.279 * a2s - 1.38 * a2s * a2s);
    else if (a2s > 0.2)
        p = 1.0 - std::exp(-8.318 + 42.796 * a2s - 59.938 * a2s * a2s);
    else
        p = 1.0 - std::exp(-13.436 + 101.14 * a2s - 223.73 * a2s * a2s);
    rep.p_value = std::min(1.0, std::max(0.0, p));
    return rep;
}

DecayFit decay_fit(const std::vector<DecayFit::Point>& points) {
    DecayFit fit;
    for (const auto& pt : points)
        if (pt.successes >= 5 && pt.p_hat > 0.0) fit.support.push_back(pt);
    if (fit.support.size() < 3)
        throw InsufficientData("decay_fit: fewer than 3 points with successes >= 5");
    const double m = fit.support.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : fit.support) {
        const double x = pt.n, y = std::log(pt.p_hat);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    fit.gamma_hat = -slope;
    fit.c_hat = std::exp(intercept);
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / m;
    for (const auto& pt : fit.support) {
        const double y = std::log(pt.p_hat);
        const double yhat = intercept + slope * pt.n;
        ss_res += (y - yhat) * (y - yhat);
        ss_tot += (y - ybar) * (y - ybar);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

EdgeSpeedEstimate edge_speed(const std::vector<std::pair<double, double>>& dr_dpsi,
                             double level) {
    if (dr_dpsi.size() < 30)
        throw InsufficientData("edge_speed: need at least 30 increment pairs");
    EdgeSpeedEstimate est;
    est.pairs = dr_dpsi.size();
    double sr = 0.0, spsi = 0.0;
    for (const auto& [dr, dp] : dr_dpsi) {
        sr += dr;
        spsi += dp;
    }
    est.alpha_hat = sr / spsi;
    // delta method on per-pair residuals dr - alpha * dpsi
    const double n = dr_dpsi.size();
    const double mpsi = spsi / n;
    double ssq = 0.0;
    for (const auto& [dr, dp] : dr_dpsi) {
        const double resid = dr - est.alpha_hat * dp;
        ssq += resid * resid;
    }
    const double se = std::sqrt(ssq / (n - 1)) / (mpsi * std::sqrt(n));
    const double z = normal_quantile(0.5 + level / 2.0);
    est.ci_low = est.alpha_hat - z * se;
    est.ci_high = est.alpha_hat + z * se;
    return est;
}

}  // namespace cpsim
