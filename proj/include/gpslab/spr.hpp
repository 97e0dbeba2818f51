#pragma once

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gpslab/errors.hpp"
#include "gpslab/rng.hpp"
#include "gpslab/series.hpp"
#include "gpslab/words.hpp"

namespace gpslab {

struct FlagBall {
    Flag center;
    double radius = 0.0;
};

/// Per-factor attracting sets for a ping-pong configuration: one finite
/// union of flag balls per factor.  Construction enforces conservative
/// disjointness across factors: center distance minus radii >= margin.
/// A factor with an empty set is exempt from all checks.
struct SchottkyData {
    std::vector<std::vector<FlagBall>> sets;  // indexed by factor id
    double margin = 0.0;

    SchottkyData(std::vector<std::vector<FlagBall>> sets_, double margin_)
        : sets(std::move(sets_)), margin(margin_) {
        if (!(margin > 0.0)) throw ConfigError("schottky margin must be > 0");
        for (std::size_t i = 0; i < sets.size(); ++i)
            for (std::size_t j = i + 1; j < sets.size(); ++j)
                for (const FlagBall& a : sets[i])
                    for (const FlagBall& b : sets[j]) {
                        const double gap =
                            flag_distance(a.center, b.center) - a.radius -
                            b.radius;
                        if (gap < margin)
                            throw DisjointnessViolation(
                                "factor sets " + std::to_string(i) + " and " +
                                std::to_string(j) +
                                " are closer than the margin (gap " +
                                std::to_string(gap) + ")");
                    }
    }

    bool contains(int factor, const Flag& xi) const {
        for (const FlagBall& b : sets[static_cast<std::size_t>(factor)])
            if (flag_distance(b.center, xi) <= b.radius) return true;
        return false;
    }

    /// Largest (radius - distance) over the factor's balls: positive inside.
    double inclusion_slack(int factor, const Flag& xi) const {
        double slack = -std::numeric_limits<double>::infinity();
        for (const FlagBall& b : sets[static_cast<std::size_t>(factor)])
            slack = std::max(slack, b.radius - flag_distance(b.center, xi));
        return slack;
    }
};

namespace detail {

/// Deterministic low-discrepancy flag sample.  d = 2: golden-angle lines.
/// d >= 3: seeded gaussian (line, orthogonalized normal) pairs.
inline Flag sample_flag(int dim, std::uint64_t seed, std::size_t k) {
    if (dim == 2) {
        CounterRng rng(seed, 17);
        const double offset = rng.uniform();
        const double golden = 0.6180339887498949;
        const double t = std::fmod(offset + golden * static_cast<double>(k), 1.0);
        const double theta = 3.141592653589793 * t;
        Vector u(2);
        u << std::cos(theta), std::sin(theta);
        return Flag::from_line2(u);
    }
    CounterRng rng(seed, 1000 + static_cast<std::uint64_t>(k));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vector u(dim), n(dim);
        for (int i = 0; i < dim; ++i) u(i) = rng.normal();
        for (int i = 0; i < dim; ++i) n(i) = rng.normal();
        const double un = u.norm();
        if (!(un > 1e-8)) continue;
        u /= un;
        n -= u * u.dot(n);
        if (!(n.norm() > 1e-6)) continue;
        return Flag(u, n);
    }
    throw NumericalFailure("flag sampling failed to produce a transverse pair");
}

/// Nontrivial factor elements up to a small cap, with printable names.
inline std::vector<std::pair<std::string, ProjMatrix>> factor_elements(
    const GroupSpec& spec, int factor_id, int cap) {
    const FactorSpec& fac = spec.factors[static_cast<std::size_t>(factor_id)];
    std::vector<std::pair<std::string, ProjMatrix>> out;
    EnumCaps caps;
    caps.max_cyclic_exponent =
        fac.kind == FactorSpec::Kind::Cyclic ? cap : std::min(cap, 3);
    EnumStats stats;
    extend_core(spec, ProjMatrix::identity(spec.dim), 0.0, factor_id,
                std::numeric_limits<double>::infinity(), caps, stats,
                [&](Syllable&& syl, ProjMatrix&& m, CartanVector&&, double) {
                    std::string name = "f" + std::to_string(factor_id) + ":";
                    for (const auto& [g, e] : syl.letters)
                        name += fac.generators[static_cast<std::size_t>(g)]
                                    .first +
                                "^" + std::to_string(e) + " ";
                    out.emplace_back(std::move(name), std::move(m));
                });
    return out;
}

}  // namespace detail

struct PingPongWitness {
    int factor = 0;
    std::string element;
    std::vector<double> line;  // sample flag line coordinates
    double slack = 0.0;
};

struct PingPongReport {
    bool ok = false;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::vector<PingPongWitness> witnesses;
    std::size_t checks = 0;
};

/// Sampling check of the ping-pong inclusions: every nontrivial factor
/// element must map each sample flag outside that factor's set into the
/// set.  ok is evidence from a deterministic quasi-uniform sample, not a
/// proof, and is labeled so wherever it is reported.
inline PingPongReport ping_pong_check(const GroupSpec& spec,
                                      const SchottkyData& data, int grid_size,
                                      std::uint64_t seed,
                                      int element_cap = 6) {
    spec.validate();
    if (data.sets.size() != spec.factors.size())
        throw ConfigError("schottky data must list one set per factor");
    if (grid_size < 10000)
        throw ConfigError("ping-pong grid must have >= 10^4 sample flags");
    PingPongReport rep;
    rep.ok = true;
    for (const FactorSpec& fac : spec.factors) {
        const std::size_t fi = static_cast<std::size_t>(fac.id);
        if (data.sets[fi].empty()) continue;  // vacuous: factor unchecked
        const auto elements = detail::factor_elements(spec, fac.id, element_cap);
        for (std::size_t k = 0; k < static_cast<std::size_t>(grid_size); ++k) {
            const Flag xi = detail::sample_flag(spec.dim, seed, k);
            if (data.contains(fac.id, xi)) continue;
            for (const auto& [name, m] : elements) {
                const Flag image = act(m, xi);
                const double slack = data.inclusion_slack(fac.id, image);
                ++rep.checks;
                rep.worst_margin = std::min(rep.worst_margin, slack);
                if (slack <= 0.0) {
                    rep.ok = false;
                    if (rep.witnesses.size() < 10) {
                        PingPongWitness w;
                        w.factor = fac.id;
                        w.element = name;
                        w.slack = slack;
                        w.line.assign(xi.line().data(),
                                      xi.line().data() + xi.line().size());
                        rep.witnesses.push_back(std::move(w));
                    }
                }
            }
        }
    }
    if (rep.checks == 0) rep.worst_margin = 0.0;
    return rep;
}

/// Stand-in for the "outside a large compact set" part of the group:
/// single-syllable elements of the peripheral factors (peripheral mode) or
/// of any factor (factor mode), beyond the excluded magnitude ball.
struct GammaKProxy {
    enum class Mode { Peripheral, Factor };

    Mode mode = Mode::Peripheral;
    double excluded_ball = 0.0;

    bool factor_eligible(const GroupSpec& spec, int factor_id) const {
        return mode == Mode::Factor ||
               spec.factors[static_cast<std::size_t>(factor_id)].peripheral;
    }
};

inline const char* proxy_mode_name(GammaKProxy::Mode m) {
    return m == GammaKProxy::Mode::Peripheral ? "peripheral" : "factor";
}

namespace detail {

/// Per-power growth rate lim log sigma_1(g^n) / n, via repeated squaring
/// with Frobenius renormalization.  Parabolic generators decay like
/// log(n)/n ~ 1e-5 at 2^20 powers; genuinely loxodromic ones converge to
/// the translation length.  (An eigensolver is unusable here: eigenvalues
/// of defective matrices carry O(sqrt(machine eps)) noise.)
inline double translation_length(const ProjMatrix& g, int doublings = 20) {
    Matrix m = g.entries();
    double acc = 0.0;  // log of the scale factored out of m so far
    for (int i = 0; i < doublings; ++i) {
        m = m * m;
        const double s = m.norm();
        if (!(s > 0.0) || !m.allFinite())
            throw NumericalFailure("translation-length power iteration failed");
        m /= s;
        acc = 2.0 * acc + std::log(s);
    }
    return acc / std::pow(2.0, doublings);
}

/// A cyclic factor with positive translation length has linear magnitude
/// growth, hence restricted exponent 0; no enumeration needed.
inline bool loxodromic_cyclic(const GroupSpec& spec, int factor_id) {
    const FactorSpec& fac = spec.factors[static_cast<std::size_t>(factor_id)];
    return fac.kind == FactorSpec::Kind::Cyclic &&
           translation_length(fac.generators[0].second) > 1e-4;
}

}  // namespace detail

struct FactorExponent {
    int factor_id = 0;
    ExponentEstimate estimate;
    bool loxodromic_elementary = false;
};

struct EntropyReport {
    ExponentEstimate estimate;  // the maximum over eligible factors
    std::vector<FactorExponent> per_factor;
    bool convex_cocompact = false;  // no eligible factor: estimate 0 by convention
    std::vector<Warning> warnings;
};

/// Entropy at infinity through the structural reduction: the restricted
/// critical exponent of each eligible factor subgroup, maximized.
/// Loxodromic cyclic factors contribute 0 without enumeration; a spec with
/// no eligible factor yields 0 with the convex-cocompact flag set.
inline EntropyReport entropy_at_infinity(const GroupSpec& spec,
                                         const GammaKProxy& proxy, double R,
                                         const EnumCaps& caps,
                                         double width = 0.5) {
    spec.validate();
    EntropyReport rep;
    for (const FactorSpec& fac : spec.factors) {
        if (!proxy.factor_eligible(spec, fac.id)) continue;
        FactorExponent fe;
        fe.factor_id = fac.id;
        if (detail::loxodromic_cyclic(spec, fac.id)) {
            fe.loxodromic_elementary = true;
            fe.estimate.delta = 0.0;
            fe.estimate.method = ExponentMethod::Growth;
            fe.estimate.window_lo = R / 2.0;
            fe.estimate.window_hi = R;
        } else {
            MagnitudeHistogram hist(R, width);
            stream_factor_elements(
                spec, fac.id, R, caps,
                [&](const ProjMatrix&, const CartanVector&, double mag) {
                    if (mag > proxy.excluded_ball) hist.add(mag);
                });
            hist.add(0.0);  // the factor's identity
            fe.estimate = critical_exponent(hist, ExponentMethod::Growth);
        }
        rep.per_factor.push_back(fe);
    }
    if (rep.per_factor.empty()) {
        rep.convex_cocompact = true;
        rep.estimate.delta = 0.0;
        rep.estimate.window_lo = R / 2.0;
        rep.estimate.window_hi = R;
        rep.warnings.push_back(
            {WarningCode::NoPeripheralFactor,
             "no eligible factor: entropy at infinity set to 0 by the "
             "convex-cocompact convention"});
        return rep;
    }
    const FactorExponent* best = &rep.per_factor.front();
    for (const FactorExponent& fe : rep.per_factor)
        if (fe.estimate.delta > best->estimate.delta) best = &fe;
    rep.estimate = best->estimate;
    return rep;
}

struct RecurrenceRow {
    double R = 0.0;
    double partial_sum = 0.0;
    double increment = 0.0;
};

struct RecurrenceReport {
    std::vector<RecurrenceRow> rows;
    double tail_slope = 0.0;
};

/// Positive-recurrence sum over the proxy set:
///   sum of |gamma|_{sigma'} * exp(-delta_hat * |gamma|_sigma),
/// tabulated by sigma-magnitude annuli.  tail_slope regresses
/// log(annulus increment) against the annulus midpoint over the upper
/// half window; under an entropy gap it should be negative.
inline RecurrenceReport recurrence_sum(const GroupSpec& spec,
                                       const GammaKProxy& proxy,
                                       double delta_hat, double R,
                                       const EnumCaps& caps,
                                       double width = 0.5) {
    spec.validate();
    MagnitudeHistogram layout(R, width);
    std::vector<double> increments(layout.bins.size(), 0.0);
    const WeightFunctional phi_prime = spec.phi_prime;
    for (const FactorSpec& fac : spec.factors) {
        if (!proxy.factor_eligible(spec, fac.id)) continue;
        stream_factor_elements(
            spec, fac.id, R, caps,
            [&](const ProjMatrix&, const CartanVector& kv, double mag) {
                if (mag <= proxy.excluded_ball) return;
                increments[layout.index(mag)] +=
                    phi_prime.evaluate(kv) * std::exp(-delta_hat * mag);
            });
    }
    RecurrenceReport rep;
    double acc = 0.0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        acc += increments[i];
        const double hi = width * static_cast<double>(i + 1);
        rep.rows.push_back({hi, acc, increments[i]});
        const double mid = width * (static_cast<double>(i) + 0.5);
        if (mid >= R / 2.0 && mid <= R && increments[i] > 0.0) {
            xs.push_back(mid);
            ys.push_back(std::log(increments[i]));
        }
    }
    if (xs.size() < 5)
        throw InsufficientData(
            "fewer than 5 nonempty recurrence annuli in the window");
    rep.tail_slope = fit_line(xs, ys).slope;
    return rep;
}

struct MagComparison {
    double eps = 0.0;
    double max_value = 0.0;  // max over the ball of log|g|_{sigma'} - eps*|g|_sigma
};

struct SPRReport {
    ExponentEstimate delta_hat;          // growth method (or override)
    ExponentEstimate delta_hat_annulus;  // cross-check
    bool estimators_agree = false;
    bool delta_overridden = false;
    EntropyReport delta_inf;
    double gap = 0.0;
    bool verdict = false;
    bool elementary = false;
    RecurrenceReport recurrence;
    std::vector<MagComparison> mag_comparison;
    std::vector<Annulus> annuli;
    std::vector<std::string> implications;
    std::vector<Warning> warnings;
    EnumStats enum_stats;
};

/// Assembles the full positive-recurrence picture at truncation R.  The
/// verdict is numerical evidence for a strict entropy gap, never a proof;
/// the implication strings state what a strict gap would yield.
inline SPRReport spr_verdict(
    const GroupSpec& spec, const GammaKProxy& proxy, double R,
    const EnumCaps& caps, double width = 0.5, int workers = 1,
    double delta_override = std::numeric_limits<double>::quiet_NaN()) {
    spec.validate();
    SPRReport rep;
    rep.elementary = spec.elementary();

    BallScan scan = scan_ball(spec, R, caps, width, -1.0, {}, workers);
    rep.enum_stats = scan.stats;
    rep.annuli = scan.hist.annuli();
    for (const Warning& w : scan.stats.warnings) rep.warnings.push_back(w);

    ExponentPair pair = critical_exponent_both(scan.hist);
    rep.delta_hat = pair.growth;
    rep.delta_hat_annulus = pair.annulus;
    rep.estimators_agree = pair.agree;
    for (const Warning& w : pair.warnings) rep.warnings.push_back(w);
    if (std::isfinite(delta_override)) {
        rep.delta_overridden = true;
        rep.delta_hat.delta = delta_override;
        rep.delta_hat.stderr_ = 0.0;
    }

    rep.delta_inf = entropy_at_infinity(spec, proxy, R, caps, width);
    for (const Warning& w : rep.delta_inf.warnings) rep.warnings.push_back(w);

    rep.gap = rep.delta_hat.delta - rep.delta_inf.estimate.delta;
    const double combined_stderr =
        rep.delta_hat.stderr_ + rep.delta_inf.estimate.stderr_;
    rep.verdict = !rep.elementary && rep.gap > combined_stderr;
    if (rep.elementary)
        rep.warnings.push_back(
            {WarningCode::ElementaryGroup,
             "elementary group: the limit set has at most 2 points, so no "
             "entropy-gap verdict applies"});

    rep.recurrence =
        recurrence_sum(spec, proxy, rep.delta_hat.delta, R, caps, width);

    rep.mag_comparison.push_back({0.1, scan.cmp_eps_10});
    rep.mag_comparison.push_back({0.01, scan.cmp_eps_100});

    if (rep.verdict) {
        rep.implications = {
            "Numerical evidence of a strict entropy gap: the restricted "
            "exponent at infinity lies below the critical exponent at this "
            "truncation (evidence, not a proof).",
            "Under a strict entropy gap, the Poincare series diverges at "
            "its critical exponent.",
            "Under a strict entropy gap, the Bowen-Margulis-Sullivan "
            "measure built from the Patterson-Sullivan pair is finite."};
    } else {
        rep.implications = {
            "No strict entropy gap detected at this truncation; neither "
            "divergence at the critical exponent nor finiteness of the "
            "Bowen-Margulis-Sullivan measure is indicated by this data."};
    }
    return rep;
}

}  // namespace gpslab
