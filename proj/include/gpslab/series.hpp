#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gpslab/errors.hpp"
#include "gpslab/words.hpp"

namespace gpslab {

struct Annulus {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

/// Fixed-width magnitude histogram over [0, R]; the backbone of every
/// counting estimate.  Merging is integer addition, so sharded accumulation
/// is independent of merge order.
struct MagnitudeHistogram {
    double width = 0.5;
    double R = 0.0;
    std::vector<std::size_t> bins;
    std::size_t total = 0;

    MagnitudeHistogram() = default;
    MagnitudeHistogram(double R_, double width_) : width(width_), R(R_) {
        bins.assign(static_cast<std::size_t>(std::ceil(R / width)) + 1, 0);
    }

    std::size_t index(double m) const {
        const auto i = static_cast<std::size_t>(std::max(m, 0.0) / width);
        return std::min(i, bins.size() - 1);
    }

    void add(double m) {
        ++bins[index(m)];
        ++total;
    }

    void merge(const MagnitudeHistogram& other) {
        for (std::size_t i = 0; i < bins.size() && i < other.bins.size(); ++i)
            bins[i] += other.bins[i];
        total += other.total;
    }

    std::vector<Annulus> annuli() const {
        std::vector<Annulus> out;
        out.reserve(bins.size());
        for (std::size_t i = 0; i < bins.size(); ++i)
            out.push_back({width * static_cast<double>(i),
                           width * static_cast<double>(i + 1), bins[i]});
        return out;
    }

    /// Cumulative count N(R') at the upper edge of bin i.
    std::vector<std::size_t> cumulative() const {
        std::vector<std::size_t> out(bins.size());
        std::size_t acc = 0;
        for (std::size_t i = 0; i < bins.size(); ++i) {
            acc += bins[i];
            out[i] = acc;
        }
        return out;
    }
};

struct SeriesEstimate {
    double s = 0.0;
    double R = 0.0;
    double partial_sum = 0.0;
    double tail_slope = 0.0;
    std::vector<Annulus> annuli;
};

enum class ExponentMethod { Growth, Annulus };

inline const char* exponent_method_name(ExponentMethod m) {
    return m == ExponentMethod::Growth ? "growth" : "annulus";
}

struct ExponentEstimate {
    double delta = 0.0;
    double stderr_ = 0.0;
    ExponentMethod method = ExponentMethod::Growth;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t sample_size = 0;
};

/// Ordinary least squares with the usual slope standard error
/// sqrt(SSR / (n-2) / Sxx).  Exactly zero residuals give stderr 0.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        throw InsufficientData("need at least 2 points for a line fit");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientData("degenerate abscissae in line fit");
    LineFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (fit.intercept + fit.slope * x[i]);
            ssr += r * r;
        }
        fit.stderr_ = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return fit;
}

/// Predicate over enumerated elements; empty function means "all".
using WordFilter =
    std::function<bool(const ProjMatrix&, const CartanVector&, double)>;

/// One pass over the magnitude-R ball: counting histogram, optional
/// exp(-s*mag) partial sums per bin, and the sigma'-vs-sigma comparison
/// maxima.  The identity contributes to bin 0 and weight 1 regardless of
/// the filter (every series includes it).
struct BallScan {
    MagnitudeHistogram hist;
    double s = -1.0;                  // < 0: weights not accumulated
    std::vector<double> weight_bins;  // sum of exp(-s*mag) per bin
    double cmp_eps_10 = -std::numeric_limits<double>::infinity();
    double cmp_eps_100 = -std::numeric_limits<double>::infinity();
    EnumStats stats;

    double partial_sum() const {
        double acc = 0.0;
        for (double w : weight_bins) acc += w;
        return acc;
    }
};

inline BallScan scan_ball(const GroupSpec& spec, double R,
                          const EnumCaps& caps, double width, double s,
                          const WordFilter& filter = {}, int workers = 1) {
    struct ShardAcc {
        MagnitudeHistogram hist;
        std::vector<double> wbins;
        double cmp10 = -std::numeric_limits<double>::infinity();
        double cmp100 = -std::numeric_limits<double>::infinity();
    };
    BallScan scan;
    scan.hist = MagnitudeHistogram(R, width);
    scan.s = s;
    scan.weight_bins.assign(scan.hist.bins.size(), 0.0);
    const WeightFunctional phi_prime = spec.phi_prime;

    std::vector<ShardAcc> accs(detail::kEnumShards);
    for (auto& a : accs) {
        a.hist = MagnitudeHistogram(R, width);
        a.wbins.assign(a.hist.bins.size(), 0.0);
    }
    stream_ball_sharded(
        spec, R, caps, workers,
        [&](int shard, const ProjMatrix& m, const CartanVector& kv,
            double mag) {
            ShardAcc& a = accs[static_cast<std::size_t>(shard)];
            if (filter && !filter(m, kv, mag)) return;
            a.hist.add(mag);
            if (s >= 0.0) a.wbins[a.hist.index(mag)] += std::exp(-s * mag);
            const double mp = phi_prime.evaluate(kv);
            const double lg = std::log(std::max(mp, 1e-12));
            a.cmp10 = std::max(a.cmp10, lg - 0.1 * mag);
            a.cmp100 = std::max(a.cmp100, lg - 0.01 * mag);
        },
        &scan.stats);

    scan.hist.add(0.0);  // identity
    if (s >= 0.0) scan.weight_bins[0] += 1.0;
    for (const ShardAcc& a : accs) {
        scan.hist.merge(a.hist);
        for (std::size_t i = 0; i < scan.weight_bins.size(); ++i)
            scan.weight_bins[i] += a.wbins[i];
        scan.cmp_eps_10 = std::max(scan.cmp_eps_10, a.cmp10);
        scan.cmp_eps_100 = std::max(scan.cmp_eps_100, a.cmp100);
    }
    return scan;
}

namespace detail {

/// log(annulus count) vs annulus midpoint over nonempty bins whose midpoint
/// lies in the window; demands >= 10 nonempty bins.
inline LineFit annulus_fit(const MagnitudeHistogram& hist, double lo,
                           double hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < hist.bins.size(); ++i) {
        const double mid = hist.width * (static_cast<double>(i) + 0.5);
        if (mid < lo || mid > hi || hist.bins[i] == 0) continue;
        xs.push_back(mid);
        ys.push_back(std::log(static_cast<double>(hist.bins[i])));
    }
    if (xs.size() < 10)
        throw InsufficientData("fewer than 10 nonempty annuli in the window");
    return fit_line(xs, ys);
}

inline LineFit growth_fit(const MagnitudeHistogram& hist, double lo,
                          double hi) {
    // the nonempty-annuli requirement applies to both methods
    std::size_t nonempty = 0;
    for (std::size_t i = 0; i < hist.bins.size(); ++i) {
        const double mid = hist.width * (static_cast<double>(i) + 0.5);
        if (mid >= lo && mid <= hi && hist.bins[i] > 0) ++nonempty;
    }
    if (nonempty < 10)
        throw InsufficientData("fewer than 10 nonempty annuli in the window");
    const std::vector<std::size_t> cum = hist.cumulative();
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < hist.bins.size(); ++i) {
        const double edge = hist.width * static_cast<double>(i + 1);
        if (edge < lo || edge > hi || cum[i] == 0) continue;
        xs.push_back(edge);
        ys.push_back(std::log(static_cast<double>(cum[i])));
    }
    if (xs.size() < 2)
        throw InsufficientData("fewer than 2 growth points in the window");
    return fit_line(xs, ys);
}

}  // namespace detail

/// Regression estimate of the critical exponent from a counting histogram.
/// Growth: slope of log N(R') vs R'.  Annulus: slope of log(annulus count)
/// vs annulus midpoint.  Window defaults to the upper half of the ball
/// (the lower half is dominated by generating-set boundary effects).
/// Negative slopes are clamped to 0; stderr is regression noise, not a
/// rigorous error bound.
inline ExponentEstimate critical_exponent(const MagnitudeHistogram& hist,
                                          ExponentMethod method,
                                          double window_lo = -1.0,
                                          double window_hi = -1.0) {
    const double lo = window_lo >= 0.0 ? window_lo : hist.R / 2.0;
    const double hi = window_hi >= 0.0 ? window_hi : hist.R;
    const LineFit fit = method == ExponentMethod::Growth
                            ? detail::growth_fit(hist, lo, hi)
                            : detail::annulus_fit(hist, lo, hi);
    ExponentEstimate est;
    est.delta = std::max(fit.slope, 0.0);
    est.stderr_ = fit.stderr_;
    est.method = method;
    est.window_lo = lo;
    est.window_hi = hi;
    est.sample_size = hist.total;
    return est;
}

/// Both estimators on the same data plus the mandatory agreement check:
/// disagreement beyond max(0.05, 3 * worst stderr) is surfaced as a
/// warning, never averaged away.
struct ExponentPair {
    ExponentEstimate growth;
    ExponentEstimate annulus;
    bool agree = false;
    std::vector<Warning> warnings;
};

inline ExponentPair critical_exponent_both(const MagnitudeHistogram& hist,
                                           double window_lo = -1.0,
                                           double window_hi = -1.0) {
    ExponentPair pair;
    pair.growth =
        critical_exponent(hist, ExponentMethod::Growth, window_lo, window_hi);
    pair.annulus =
        critical_exponent(hist, ExponentMethod::Annulus, window_lo, window_hi);
    const double tol = std::max(
        0.05, 3.0 * std::max(pair.growth.stderr_, pair.annulus.stderr_));
    pair.agree = std::abs(pair.growth.delta - pair.annulus.delta) <= tol;
    if (!pair.agree)
        pair.warnings.push_back(
            {WarningCode::MethodDisagreement,
             "growth and annulus exponent estimates disagree beyond tolerance"});
    return pair;
}

/// Truncated Poincare series: sum of exp(-s*magnitude) over the enumerated
/// ball (identity included), with annulus counts and the annulus-count
/// tail slope attached.
inline SeriesEstimate partial_poincare(const GroupSpec& spec, double s,
                                       double R, const EnumCaps& caps,
                                       double width = 0.5,
                                       const WordFilter& filter = {},
                                       int workers = 1,
                                       EnumStats* stats_out = nullptr) {
    if (s < 0.0) throw ConfigError("series parameter s must be >= 0");
    if (!(R >= 0.0)) throw ConfigError("truncation R must be >= 0");
    BallScan scan = scan_ball(spec, R, caps, width, s, filter, workers);
    SeriesEstimate est;
    est.s = s;
    est.R = R;
    est.partial_sum = scan.partial_sum();
    est.annuli = scan.hist.annuli();
    try {
        est.tail_slope =
            critical_exponent(scan.hist, ExponentMethod::Annulus).delta;
    } catch (const InsufficientData&) {
        est.tail_slope = 0.0;
    }
    if (stats_out) *stats_out = scan.stats;
    return est;
}

enum class DivergenceVerdict { DivergesLike, ConvergesLike, Inconclusive };

inline const char* divergence_verdict_name(DivergenceVerdict v) {
    switch (v) {
        case DivergenceVerdict::DivergesLike: return "diverges-like";
        case DivergenceVerdict::ConvergesLike: return "converges-like";
        case DivergenceVerdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

/// Heuristic divergence probe at a fixed s: fits log Q(s, R') against
/// log R' over annulus edges R' in [0.6 R, R].  Near-zero slope looks like
/// a convergent tail; a clearly positive slope (stderr < slope/3) looks
/// like divergence at s.  This is labeled a heuristic in every output.
struct DivergenceReport {
    DivergenceVerdict verdict = DivergenceVerdict::Inconclusive;
    double s = 0.0;
    double slope = 0.0;
    double stderr_ = 0.0;
    std::vector<std::pair<double, double>> points;  // (R', partial sum)
};

inline DivergenceReport divergence_diagnostic(const GroupSpec& spec, double s,
                                              double R, const EnumCaps& caps,
                                              double width = 0.5,
                                              int workers = 1) {
    BallScan scan = scan_ball(spec, R, caps, width, s, {}, workers);
    DivergenceReport rep;
    rep.s = s;
    std::vector<double> xs, ys;
    double acc = 0.0;
    for (std::size_t i = 0; i < scan.weight_bins.size(); ++i) {
        acc += scan.weight_bins[i];
        const double edge = width * static_cast<double>(i + 1);
        if (edge < 0.6 * R || edge > R || !(acc > 0.0)) continue;
        rep.points.emplace_back(edge, acc);
        xs.push_back(std::log(edge));
        ys.push_back(std::log(acc));
    }
    if (xs.size() < 5)
        throw InsufficientData("fewer than 5 partial-sum points in the window");
    const LineFit fit = fit_line(xs, ys);
    rep.slope = fit.slope;
    rep.stderr_ = fit.stderr_;
    if (fit.slope < 0.02)
        rep.verdict = DivergenceVerdict::ConvergesLike;
    else if (fit.slope > 0.0 && fit.stderr_ < fit.slope / 3.0)
        rep.verdict = DivergenceVerdict::DivergesLike;
    else
        rep.verdict = DivergenceVerdict::Inconclusive;
    return rep;
}

}  // namespace gpslab
