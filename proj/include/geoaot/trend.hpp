// Trend statistics over scores grouped by an ordered condition: one-way
// ANOVA with F-distribution p-values, Spearman rank correlation with
// exact small-n permutation p, and OLS slope with a t-test.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoaot/special_functions.hpp"

namespace geoaot {

// Scores bucketed by ordered condition labels (the order of `levels` is
// the trend order; labels themselves are opaque).
struct GroupedScores {
    std::vector<std::string> levels;
    std::vector<std::vector<double>> samples;  // one list per level

    void validate() const {
        if (levels.size() < 2)
            throw std::invalid_argument("GroupedScores: need at least 2 levels");
        if (samples.size() != levels.size())
            throw std::invalid_argument("GroupedScores: levels/samples size mismatch");
        for (const auto& s : samples)
            if (s.empty())
                throw std::invalid_argument("GroupedScores: empty level sample list");
    }
};

struct AnovaResult {
    double f = 0.0;   // +inf when within-group variance is zero but groups differ
    double p = 1.0;
    double df_between = 0.0;
    double df_within = 0.0;
};

// Classic one-way ANOVA. F = MSB/MSW with df (k-1, n-k). Degenerate
// inputs keep the conventional sentinels: all samples identical gives
// F = 0, p = 1; zero within-group variance with distinct means gives
// F = +inf, p = 0.
inline AnovaResult anova_oneway(const GroupedScores& g) {
    g.validate();
    const std::size_t k = g.samples.size();
    std::size_t n = 0;
    double grand_sum = 0.0;
    for (const auto& s : g.samples) {
        n += s.size();
        grand_sum = std::accumulate(s.begin(), s.end(), grand_sum);
    }
    if (n <= k)
        throw std::invalid_argument("anova_oneway: need total n > number of groups");
    const double grand_mean = grand_sum / static_cast<double>(n);

    double ssb = 0.0, ssw = 0.0;
    for (const auto& s : g.samples) {
        const double m =
            std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
        ssb += static_cast<double>(s.size()) * (m - grand_mean) * (m - grand_mean);
        for (double v : s) ssw += (v - m) * (v - m);
    }

    AnovaResult r;
    r.df_between = static_cast<double>(k - 1);
    r.df_within = static_cast<double>(n - k);
    if (ssw == 0.0) {
        if (ssb == 0.0) {
            r.f = 0.0;
            r.p = 1.0;
        } else {
            r.f = std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.f = (ssb / r.df_between) / (ssw / r.df_within);
    r.p = f_sf(r.f, r.df_between, r.df_within);
    return r;
}

// Mid-ranks with average-rank tie handling.
inline std::vector<double> midranks(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

struct SpearmanResult {
    double rho = 0.0;
    double p_exact = 1.0;       // full permutation enumeration, n <= 8 only
    double p_asymptotic = 1.0;  // two-sided t approximation
    bool exact_available = false;
    bool defined = true;        // false when either input is constant
};

// Spearman rank correlation: Pearson over mid-ranks. The exact two-sided
// p enumerates all n! rank permutations when n <= 8; the asymptotic p
// uses t = rho * sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom.
inline SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("spearman: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("spearman: need n >= 3");

    SpearmanResult r;
    const auto rx = midranks(x);
    const auto ry = midranks(y);
    const double rho = pearson(rx, ry);
    if (std::isnan(rho)) {
        r.defined = false;
        r.rho = 0.0;
        return r;
    }
    r.rho = rho;

    const double df = static_cast<double>(n - 2);
    if (std::fabs(rho) >= 1.0) {
        r.p_asymptotic = 0.0;
    } else {
        const double t = rho * std::sqrt(df / (1.0 - rho * rho));
        r.p_asymptotic = t_sf_two_sided(t, df);
    }

    if (n <= 8) {
        // Enumerate permutations of one rank vector against the other.
        std::vector<double> perm = ry;
        std::sort(perm.begin(), perm.end());
        std::size_t total = 0, at_least = 0;
        const double target = std::fabs(rho) - 1e-12;
        do {
            ++total;
            if (std::fabs(pearson(rx, perm)) >= target) ++at_least;
        } while (std::next_permutation(perm.begin(), perm.end()));
        r.p_exact = static_cast<double>(at_least) / static_cast<double>(total);
        r.exact_available = true;
    }
    return r;
}

struct OlsResult {
    double slope = 0.0;
    double intercept = 0.0;
    double p = 1.0;  // two-sided t-test on the slope, df = n - 2
};

// Least-squares line fit with a slope significance test. A zero-residual
// fit with nonzero slope reports p = 0; a constant y reports slope 0,
// p = 1; a constant x is rejected.
inline OlsResult ols_trend(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("ols_trend: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("ols_trend: need n >= 3");

    const double nn = static_cast<double>(n);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nn;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nn;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw std::invalid_argument("ols_trend: constant x");

    OlsResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;

    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - (r.intercept + r.slope * x[i]);
        ssr += resid * resid;
    }
    const double df = nn - 2.0;
    if (ssr <= 0.0) {
        r.p = r.slope == 0.0 ? 1.0 : 0.0;
        return r;
    }
    const double se = std::sqrt((ssr / df) / sxx);
    if (se == 0.0) {
        r.p = r.slope == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.p = t_sf_two_sided(r.slope / se, df);
    return r;
}

struct TrendReport {
    double f_stat = 0.0;
    double f_p = 1.0;
    double spearman_rho = 0.0;
    double spearman_p = 1.0;        // asymptotic (table-compatible)
    double spearman_p_exact = 1.0;  // permutation enumeration when available
    double ols_slope = 0.0;
    double ols_p = 1.0;
    std::vector<double> level_means;
    bool monotone_pass = false;  // Spearman over level means == 1.0
    bool remark = false;         // monotone AND f_p < alpha
};

// Per-sample or per-mean OLS input.
enum class OlsInput { PerSample, PerMean };

// Full trend protocol for one model: ANOVA across levels, Spearman over
// (level index, level mean), OLS slope over level indices. The remark
// flag requires both significance (f_p < alpha) and a perfectly monotone
// increasing sequence of level means.
inline TrendReport trend_report(const GroupedScores& g, double alpha = 0.05,
                                OlsInput ols_input = OlsInput::PerSample) {
    g.validate();
    TrendReport rep;

    const AnovaResult a = anova_oneway(g);
    rep.f_stat = a.f;
    rep.f_p = a.p;

    rep.level_means.reserve(g.samples.size());
    for (const auto& s : g.samples)
        rep.level_means.push_back(std::accumulate(s.begin(), s.end(), 0.0) /
                                  static_cast<double>(s.size()));

    std::vector<double> level_idx(g.levels.size());
    std::iota(level_idx.begin(), level_idx.end(), 0.0);
    const SpearmanResult sp = spearman(level_idx, rep.level_means);
    rep.spearman_rho = sp.defined ? sp.rho : 0.0;
    rep.spearman_p = sp.defined ? sp.p_asymptotic : 1.0;
    rep.spearman_p_exact = sp.exact_available ? sp.p_exact : 1.0;

    std::vector<double> xs, ys;
    if (ols_input == OlsInput::PerSample) {
        for (std::size_t li = 0; li < g.samples.size(); ++li)
            for (double v : g.samples[li]) {
                xs.push_back(static_cast<double>(li));
                ys.push_back(v);
            }
    } else {
        xs = level_idx;
        ys = rep.level_means;
    }
    if (xs.size() >= 3) {
        const OlsResult ols = ols_trend(xs, ys);
        rep.ols_slope = ols.slope;
        rep.ols_p = ols.p;
    }

    rep.monotone_pass = sp.defined && sp.rho == 1.0;
    rep.remark = rep.monotone_pass && rep.f_p < alpha;
    return rep;
}

}  // namespace geoaot
