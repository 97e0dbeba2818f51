#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "gpslab/config.hpp"
#include "gpslab/measures.hpp"
#include "gpslab/report.hpp"
#include "gpslab/rng.hpp"
#include "gpslab/series.hpp"
#include "gpslab/spr.hpp"
#include "gpslab/zoo.hpp"

namespace gpslab {

struct CmdOptions {
    std::string out_dir;                // empty: no files written
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int workers = 0;                    // 0: resolve from env / hardware
    std::string format = "both";        // json | csv | both
};

inline int resolve_workers(const CmdOptions& opts) {
    if (opts.workers > 0) return opts.workers;
    if (const char* env = std::getenv("GPSLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void emit(const Report& rep, const CmdOptions& opts,
                 const std::vector<std::pair<std::string, std::string>>& csvs) {
    if (opts.out_dir.empty()) return;
    const std::string dir = opts.out_dir + "/";
    if (opts.format == "json" || opts.format == "both")
        write_text_file(dir + "report.json", rep.to_json().dump(2) + "\n");
    if (opts.format == "csv" || opts.format == "both")
        for (const auto& [name, content] : csvs)
            write_text_file(dir + name, content);
}

/// Random group element: 1..max_depth alternating syllables, generators and
/// exponent signs drawn from the counter rng.
inline ProjMatrix random_element(const GroupSpec& spec, CounterRng& rng,
                                 int max_depth) {
    const int depth = 1 + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(max_depth)));
    ProjMatrix m = ProjMatrix::identity(spec.dim);
    int last = -1;
    for (int i = 0; i < depth; ++i) {
        int f = static_cast<int>(rng.below(spec.factors.size()));
        if (spec.factors.size() > 1)
            while (f == last)
                f = static_cast<int>(rng.below(spec.factors.size()));
        const auto& gens = spec.factors[static_cast<std::size_t>(f)].generators;
        const auto& g =
            gens[static_cast<std::size_t>(rng.below(gens.size()))].second;
        m = m * (rng.below(2) == 0 ? g : g.inverse());
        last = f;
    }
    return m;
}

/// Transverse flag pair with pairing margin >= margin on both sides.
inline std::pair<Flag, Flag> random_transverse_pair(int dim, CounterRng& rng,
                                                    double margin) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Flag xi = [&] {
            if (dim == 2) {
                const double theta = rng.uniform(0.0, 3.141592653589793);
                Vector u(2);
                u << std::cos(theta), std::sin(theta);
                return Flag::from_line2(u);
            }
            Vector u(dim), n(dim);
            for (int i = 0; i < dim; ++i) u(i) = rng.normal();
            for (int i = 0; i < dim; ++i) n(i) = rng.normal();
            u /= u.norm();
            n -= u * u.dot(n);
            return Flag(u, n);
        }();
        Flag eta = [&] {
            if (dim == 2) {
                const double theta = rng.uniform(0.0, 3.141592653589793);
                Vector u(2);
                u << std::cos(theta), std::sin(theta);
                return Flag::from_line2(u);
            }
            Vector u(dim), n(dim);
            for (int i = 0; i < dim; ++i) u(i) = rng.normal();
            for (int i = 0; i < dim; ++i) n(i) = rng.normal();
            u /= u.norm();
            n -= u * u.dot(n);
            return Flag(u, n);
        }();
        if (std::abs(xi.line().dot(eta.normal())) >= margin &&
            std::abs(eta.line().dot(xi.normal())) >= margin)
            return {xi, eta};
    }
    throw NumericalFailure("failed to sample a transverse flag pair");
}

}  // namespace detail

/// Runs the structural identity suites at configured sample sizes and
/// reports the worst residuals: the GPS identity, the cocycle identity,
/// Cartan antisymmetry, and the dual-magnitude equality.
inline Report cmd_check_gps(const Config& cfg, const CmdOptions& opts,
                            int samples = 400, int max_depth = 6) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    const GPSContext ctx = spec.ctx();
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    CounterRng rng(seed, 2);

    double gps_max = 0.0, cocycle_max = 0.0, cartan_max = 0.0, dual_max = 0.0;
    for (int i = 0; i < samples; ++i) {
        const ProjMatrix g = detail::random_element(spec, rng, max_depth);
        const ProjMatrix h = detail::random_element(spec, rng, max_depth);
        const auto [xi, eta] =
            detail::random_transverse_pair(spec.dim, rng, 0.1);

        const double lhs =
            dual_cocycle(ctx, g, eta) + busemann_cocycle(ctx, g, xi);
        const double rhs = gromov_product(ctx, act(g, xi), act(g, eta)) -
                           gromov_product(ctx, xi, eta);
        gps_max = std::max(gps_max, std::abs(lhs - rhs));

        const double coc = busemann_cocycle(ctx, g * h, xi) -
                           busemann_cocycle(ctx, g, act(h, xi)) -
                           busemann_cocycle(ctx, h, xi);
        cocycle_max = std::max(cocycle_max, std::abs(coc));

        const CartanVector kg = cartan_project(g);
        const CartanVector kgi = cartan_project(g.inverse());
        for (int k = 0; k < spec.dim; ++k)
            cartan_max = std::max(
                cartan_max,
                std::abs(kgi.kappa(k) + kg.kappa(spec.dim - 1 - k)));

        dual_max = std::max(dual_max,
                            std::abs(dual_magnitude(ctx, g) -
                                     magnitude(ctx, g.inverse())));
    }

    Report rep;
    rep.command = "check-gps";
    rep.config_digest = config_digest(cfg);
    rep.results = {{"samples", samples},
                   {"max_depth", max_depth},
                   {"seed", seed},
                   {"max_gps_residual", gps_max},
                   {"max_cocycle_residual", cocycle_max},
                   {"max_cartan_antisymmetry_residual", cartan_max},
                   {"max_dual_magnitude_residual", dual_max}};
    rep.seconds = timer.seconds();
    detail::emit(rep, opts, {});
    return rep;
}

inline Report cmd_enumerate(const Config& cfg, const CmdOptions& opts) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    BallScan scan = scan_ball(spec, cfg.cutoffs.R, to_caps(cfg),
                              cfg.cutoffs.annulus_width, -1.0, {},
                              resolve_workers(opts));
    Report rep;
    rep.command = "enumerate";
    rep.config_digest = config_digest(cfg);
    rep.warnings = scan.stats.warnings;
    rep.results = {{"R", cfg.cutoffs.R},
                   {"count", scan.hist.total},
                   {"exponent_cap_binding", scan.stats.exponent_cap_binding},
                   {"syllable_cap_binding", scan.stats.syllable_cap_binding},
                   {"annuli", annuli_json(scan.hist.annuli())}};
    rep.seconds = timer.seconds();
    detail::emit(rep, opts, {{"annuli.csv", csv_annuli(scan.hist.annuli())}});
    return rep;
}

inline Report cmd_exponent(const Config& cfg, const CmdOptions& opts) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    const int workers = resolve_workers(opts);
    BallScan scan = scan_ball(spec, cfg.cutoffs.R, to_caps(cfg),
                              cfg.cutoffs.annulus_width, -1.0, {}, workers);
    ExponentPair pair = critical_exponent_both(scan.hist);
    DivergenceReport div =
        divergence_diagnostic(spec, pair.growth.delta, cfg.cutoffs.R,
                              to_caps(cfg), cfg.cutoffs.annulus_width, workers);
    Report rep;
    rep.command = "exponent";
    rep.config_digest = config_digest(cfg);
    rep.warnings = scan.stats.warnings;
    for (const Warning& w : pair.warnings) rep.warnings.push_back(w);
    rep.results = {
        {"growth", exponent_json(pair.growth)},
        {"annulus", exponent_json(pair.annulus)},
        {"estimators_agree", pair.agree},
        {"divergence_heuristic",
         {{"note", "heuristic truncation diagnostic, not a proof"},
          {"s", div.s},
          {"verdict", divergence_verdict_name(div.verdict)},
          {"slope", div.slope},
          {"stderr", div.stderr_}}},
        {"annuli", annuli_json(scan.hist.annuli())}};
    rep.seconds = timer.seconds();
    std::vector<std::tuple<double, double, double>> series_rows;
    for (const auto& [r, q] : div.points)
        series_rows.emplace_back(div.s, r, q);
    detail::emit(rep, opts,
                 {{"annuli.csv", csv_annuli(scan.hist.annuli())},
                  {"series.csv", csv_series(series_rows)}});
    return rep;
}

inline Report cmd_spr(const Config& cfg, const CmdOptions& opts) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    const double override_value =
        cfg.delta_override ? *cfg.delta_override
                           : std::numeric_limits<double>::quiet_NaN();
    SPRReport spr = spr_verdict(spec, to_proxy(cfg), cfg.cutoffs.R,
                                to_caps(cfg), cfg.cutoffs.annulus_width,
                                resolve_workers(opts), override_value);
    Report rep;
    rep.command = "spr";
    rep.config_digest = config_digest(cfg);
    rep.warnings = spr.warnings;

    nlohmann::ordered_json per_factor = nlohmann::ordered_json::array();
    for (const FactorExponent& fe : spr.delta_inf.per_factor)
        per_factor.push_back(
            {{"factor", fe.factor_id},
             {"loxodromic_elementary", fe.loxodromic_elementary},
             {"estimate", exponent_json(fe.estimate)}});
    nlohmann::ordered_json cmp = nlohmann::ordered_json::array();
    for (const MagComparison& m : spr.mag_comparison)
        cmp.push_back({{"eps", m.eps}, {"max_value", json_number(m.max_value)}});

    rep.results = {
        {"delta_hat", exponent_json(spr.delta_hat)},
        {"delta_hat_annulus", exponent_json(spr.delta_hat_annulus)},
        {"estimators_agree", spr.estimators_agree},
        {"delta_overridden", spr.delta_overridden},
        {"delta_inf",
         {{"estimate", exponent_json(spr.delta_inf.estimate)},
          {"proxy_mode", cfg.proxy.mode},
          {"excluded_ball", cfg.proxy.excluded_ball},
          {"per_factor", std::move(per_factor)},
          {"convex_cocompact", spr.delta_inf.convex_cocompact}}},
        {"gap", spr.gap},
        {"verdict", spr.verdict},
        {"elementary", spr.elementary},
        {"recurrence",
         {{"tail_slope", spr.recurrence.tail_slope},
          {"final_partial_sum", spr.recurrence.rows.empty()
                                    ? 0.0
                                    : spr.recurrence.rows.back().partial_sum}}},
        {"magnitude_comparison", std::move(cmp)},
        {"implications", spr.implications},
        {"annuli", annuli_json(spr.annuli)}};
    rep.seconds = timer.seconds();
    detail::emit(rep, opts,
                 {{"annuli.csv", csv_annuli(spr.annuli)},
                  {"recurrence.csv", csv_recurrence(spr.recurrence.rows)}});
    return rep;
}

inline Report cmd_shadow_lemma(const Config& cfg, const CmdOptions& opts) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    const Config::Audit audit = cfg.audit.value_or(Config::Audit{});
    const int workers = resolve_workers(opts);
    const EnumCaps caps = to_caps(cfg);
    const double R_audit = audit.mag_hi + audit.r_pad;

    BallScan scan = scan_ball(spec, R_audit, caps, cfg.cutoffs.annulus_width,
                              -1.0, {}, workers);
    const ExponentEstimate delta =
        critical_exponent(scan.hist, ExponentMethod::Growth);
    const double s = delta.delta + audit.s_offset;

    // sample: magnitude-sorted candidates, evenly spaced picks (no rng
    // needed; fully deterministic and independent of enumeration order)
    std::vector<Word> candidates = enumerate_ball(spec, audit.mag_hi, caps,
                                                  nullptr, workers);
    std::erase_if(candidates, [&](const Word& w) {
        return w.is_identity() || w.magnitude < audit.mag_lo ||
               w.magnitude > audit.mag_hi;
    });
    std::sort(candidates.begin(), candidates.end(),
              [](const Word& a, const Word& b) {
                  if (a.magnitude != b.magnitude)
                      return a.magnitude < b.magnitude;
                  return a.normal_form_key() < b.normal_form_key();
              });
    if (candidates.size() < static_cast<std::size_t>(audit.sample_size))
        throw InsufficientData("not enough words in the sample magnitude band");
    std::vector<Word> sample;
    const std::size_t n = candidates.size();
    const std::size_t k = static_cast<std::size_t>(audit.sample_size);
    for (std::size_t i = 0; i < k; ++i)
        sample.push_back(candidates[i * (n - 1) / (k > 1 ? k - 1 : 1)]);

    ShadowAuditReport aud = shadow_lemma_audit(
        spec, sample, s, delta.delta, audit.epsilon, R_audit, caps, workers);

    Report rep;
    rep.command = "shadow-lemma";
    rep.config_digest = config_digest(cfg);
    rep.warnings = scan.stats.warnings;
    for (const Warning& w : aud.warnings) rep.warnings.push_back(w);
    std::size_t empty_count = 0;
    for (const ShadowAuditEntry& e : aud.entries)
        if (e.empty_shadow) ++empty_count;
    rep.results = {{"epsilon", audit.epsilon},
                   {"s", s},
                   {"delta_hat", delta.delta},
                   {"R", R_audit},
                   {"sample_size", aud.entries.size()},
                   {"c_hat", aud.c_hat},
                   {"Z", aud.Z},
                   {"atoms", aud.atom_count},
                   {"dropped", aud.dropped},
                   {"empty_shadows", empty_count},
                   {"elementary", aud.elementary}};
    rep.seconds = timer.seconds();
    detail::emit(rep, opts, {{"shadows.csv", csv_shadows(aud.entries)}});
    return rep;
}

inline Report cmd_schottky_check(const Config& cfg, const CmdOptions& opts) {
    detail::Stopwatch timer;
    const GroupSpec spec = to_group_spec(cfg);
    const SchottkyData data = to_schottky(cfg, spec);
    const int grid = cfg.schottky ? cfg.schottky->grid_size : 20000;
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);
    PingPongReport pp = ping_pong_check(spec, data, grid, seed);

    nlohmann::ordered_json witnesses = nlohmann::ordered_json::array();
    for (const PingPongWitness& w : pp.witnesses)
        witnesses.push_back({{"factor", w.factor},
                             {"element", w.element},
                             {"line", w.line},
                             {"slack", w.slack}});
    Report rep;
    rep.command = "schottky-check";
    rep.config_digest = config_digest(cfg);
    rep.results = {{"note", "sampling evidence, not a proof"},
                   {"ok", pp.ok},
                   {"worst_margin", json_number(pp.worst_margin)},
                   {"checks", pp.checks},
                   {"grid_size", grid},
                   {"seed", seed},
                   {"witnesses", std::move(witnesses)}};
    rep.seconds = timer.seconds();
    detail::emit(rep, opts, {});
    return rep;
}

}  // namespace gpslab
