// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.  Runtime bounds are part of the criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "gpslab/gpslab.hpp"

using namespace gpslab;

namespace {

int g_failures = 0;

void report(int n, const char* what, bool pass, double seconds,
            const std::string& detail) {
    std::printf("Criterion %2d: %s  %-34s (%.2fs)  %s\n", n,
                pass ? "PASS" : "FAIL", what, seconds, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run(int n, const char* what,
         const std::function<bool(std::string&)>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    report(n, what, pass, secs, detail);
}

int hw_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 4;
}

ProjMatrix random_near_identity(int dim, CounterRng& rng) {
    Matrix m = Matrix::Identity(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) += 0.3 * rng.normal();
    return ProjMatrix::normalize(m);
}

GroupSpec random_two_factor_spec(int dim, CounterRng& rng) {
    GroupSpec spec;
    spec.dim = dim;
    for (int i = 0; i < 2; ++i) {
        FactorSpec f;
        f.id = i;
        f.kind = FactorSpec::Kind::Cyclic;
        f.generators.emplace_back(i == 0 ? "a" : "b",
                                  random_near_identity(dim, rng));
        spec.factors.push_back(std::move(f));
    }
    return spec;
}

ProjMatrix random_word(const GroupSpec& spec, CounterRng& rng, int max_depth) {
    const int depth = 1 + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(max_depth)));
    ProjMatrix m = ProjMatrix::identity(spec.dim);
    int last = -1;
    for (int i = 0; i < depth; ++i) {
        int f = static_cast<int>(rng.below(2));
        if (f == last) f = 1 - f;
        const ProjMatrix& g = spec.factors[f].generators[0].second;
        m = m * (rng.below(2) == 0 ? g : g.inverse());
        last = f;
    }
    return m;
}

Flag random_flag(int dim, CounterRng& rng) {
    if (dim == 2) {
        Vector u(2);
        const double t = rng.uniform(0.0, 3.141592653589793);
        u << std::cos(t), std::sin(t);
        return Flag::from_line2(u);
    }
    Vector u(dim), n(dim);
    for (int i = 0; i < dim; ++i) u(i) = rng.normal();
    for (int i = 0; i < dim; ++i) n(i) = rng.normal();
    u /= u.norm();
    n -= u * u.dot(n);
    return Flag(u, n);
}

struct SampleResiduals {
    double gps = 0.0;
    double cocycle = 0.0;
    double cartan = 0.0;
    double dual = 0.0;
};

/// 1000 samples per dimension with transversality margin >= 0.1.
SampleResiduals sampled_residuals() {
    SampleResiduals out;
    for (int dim : {2, 3, 4}) {
        CounterRng rng(2024 + static_cast<std::uint64_t>(dim), 0);
        GPSContext ctx{dim, {1.0, 1.0}, 1e-10};
        const GroupSpec spec = random_two_factor_spec(dim, rng);
        int accepted = 0;
        while (accepted < 1000) {
            const ProjMatrix g = random_word(spec, rng, 6);
            const ProjMatrix h = random_word(spec, rng, 6);
            const Flag xi = random_flag(dim, rng);
            const Flag eta = random_flag(dim, rng);
            if (std::abs(xi.line().dot(eta.normal())) < 0.1 ||
                std::abs(eta.line().dot(xi.normal())) < 0.1)
                continue;
            ++accepted;
            const double lhs =
                dual_cocycle(ctx, g, eta) + busemann_cocycle(ctx, g, xi);
            const double rhs = gromov_product(ctx, act(g, xi), act(g, eta)) -
                               gromov_product(ctx, xi, eta);
            out.gps = std::max(out.gps, std::abs(lhs - rhs));
            out.cocycle = std::max(
                out.cocycle, std::abs(busemann_cocycle(ctx, g * h, xi) -
                                      busemann_cocycle(ctx, g, act(h, xi)) -
                                      busemann_cocycle(ctx, h, xi)));
            const CartanVector kg = cartan_project(g);
            const CartanVector kgi = cartan_project(g.inverse());
            for (int k = 0; k < dim; ++k)
                out.cartan = std::max(
                    out.cartan,
                    std::abs(kgi.kappa(k) + kg.kappa(dim - 1 - k)));
            out.dual = std::max(out.dual,
                                std::abs(dual_magnitude(ctx, g) -
                                         magnitude(ctx, g.inverse())));
        }
    }
    return out;
}

std::string fmt(const char* pattern, double a, double b = 0.0,
                double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return std::string(buf);
}

}  // namespace

int main() {
    const int workers = hw_workers();
    SampleResiduals res;

    run(1, "GPS identity residual <= 1e-8", [&](std::string& detail) {
        const auto start = std::chrono::steady_clock::now();
        res = sampled_residuals();
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        detail = fmt("max residual %.2e", res.gps);
        return res.gps <= 1e-8 && secs < 10.0;
    });

    run(2, "cocycle / Cartan / dual residuals", [&](std::string& detail) {
        detail = fmt("cocycle %.1e cartan %.1e dual %.1e", res.cocycle,
                     res.cartan, res.dual);
        return res.cocycle <= 1e-8 && res.cartan <= 1e-9 && res.dual <= 1e-9;
    });

    run(3, "enumeration exactness (41 / 5)", [&](std::string& detail) {
        const auto start = std::chrono::steady_clock::now();
        EnumCaps caps_ab;
        caps_ab.max_syllables = 2;
        caps_ab.max_cyclic_exponent = 2;
        const auto ab = enumerate_ball(
            to_group_spec(zoo_config("hecke3")),
            std::numeric_limits<double>::infinity(), caps_ab);
        const auto lox = enumerate_ball(to_group_spec(zoo_config("lox2")), 5.0,
                                        EnumCaps{});
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        detail = fmt("counts %.0f and %.0f", double(ab.size()),
                     double(lox.size()));
        return ab.size() == 41 && lox.size() == 5 && secs < 1.0;
    });

    run(4, "parabolic exponent 0.5 +- 0.05", [&](std::string& detail) {
        const auto start = std::chrono::steady_clock::now();
        const Config cfg = zoo_config("parabolic2");
        BallScan scan = scan_ball(to_group_spec(cfg), cfg.cutoffs.R,
                                  to_caps(cfg), cfg.cutoffs.annulus_width,
                                  -1.0, {}, workers);
        const ExponentPair pair = critical_exponent_both(scan.hist);
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        detail = fmt("growth %.3f annulus %.3f", pair.growth.delta,
                     pair.annulus.delta);
        return pair.growth.delta >= 0.45 && pair.growth.delta <= 0.55 &&
               pair.annulus.delta >= 0.45 && pair.annulus.delta <= 0.55 &&
               std::abs(pair.growth.delta - pair.annulus.delta) <= 0.05 &&
               secs < 5.0;
    });

    run(5, "loxodromic exponent in [0, 0.02]", [&](std::string& detail) {
        const Config cfg = zoo_config("lox2");
        BallScan scan = scan_ball(to_group_spec(cfg), cfg.cutoffs.R,
                                  to_caps(cfg), cfg.cutoffs.annulus_width,
                                  -1.0, {}, 1);
        const ExponentPair pair = critical_exponent_both(scan.hist);
        detail = fmt("growth %.4f annulus %.4f", pair.growth.delta,
                     pair.annulus.delta);
        return pair.growth.delta >= 0.0 && pair.growth.delta <= 0.02 &&
               pair.annulus.delta >= 0.0 && pair.annulus.delta <= 0.02;
    });

    run(6, "entropy-gap detection (mixed zoo)", [&](std::string& detail) {
        const auto start = std::chrono::steady_clock::now();
        const Config cfg = zoo_config("cusped-mixed");
        const GroupSpec spec = to_group_spec(cfg);
        const SchottkyData data = to_schottky(cfg, spec);
        const PingPongReport pp =
            ping_pong_check(spec, data, cfg.schottky->grid_size, cfg.seed);
        const SPRReport spr = spr_verdict(spec, to_proxy(cfg), cfg.cutoffs.R,
                                          to_caps(cfg),
                                          cfg.cutoffs.annulus_width, workers);
        const RecurrenceReport pinned = recurrence_sum(
            spec, to_proxy(cfg), 0.5, cfg.cutoffs.R, to_caps(cfg),
            cfg.cutoffs.annulus_width);
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        const double dinf = spr.delta_inf.estimate.delta;
        // non-plateau at the pinned exponent: the tail keeps accumulating
        const double total = pinned.rows.back().partial_sum;
        double at_80 = 0.0;
        for (const RecurrenceRow& r : pinned.rows)
            if (r.R <= 0.8 * cfg.cutoffs.R) at_80 = r.partial_sum;
        const bool non_plateau =
            pinned.tail_slope > 0.0 && total > 1.05 * at_80;
        detail = fmt("delta %.3f dinf %.3f slope %.3f", spr.delta_hat.delta,
                     dinf, spr.recurrence.tail_slope);
        return pp.ok && dinf >= 0.45 && dinf <= 0.55 &&
               spr.delta_hat.delta > dinf + 0.05 && spr.verdict &&
               spr.recurrence.tail_slope < 0.0 && non_plateau && secs < 60.0;
    });

    run(7, "factor-mode entropy consistency", [&](std::string& detail) {
        EnumCaps caps;
        caps.max_cyclic_exponent = 50000;
        GammaKProxy factor_mode;
        factor_mode.mode = GammaKProxy::Mode::Factor;
        const EntropyReport prod = entropy_at_infinity(
            to_group_spec(zoo_config("product-of-hecke")), factor_mode, 14.0,
            caps);
        GammaKProxy peripheral;
        const EntropyReport base = entropy_at_infinity(
            to_group_spec(zoo_config("hecke3")), peripheral, 14.0, caps);
        detail = fmt("product %.3f standalone max %.3f", prod.estimate.delta,
                     base.estimate.delta);
        return std::abs(prod.estimate.delta - base.estimate.delta) <= 0.05;
    });

    run(8, "shadow-lemma audit bounded and stable", [&](std::string& detail) {
        const GroupSpec spec = to_group_spec(zoo_config("hecke3"));
        EnumCaps caps;
        caps.max_cyclic_exponent = 200000;

        // fixed sample: 50 words with magnitude in [5, 15], evenly spaced
        // through the magnitude-sorted candidate list
        const auto all = enumerate_ball(spec, 15.0, caps, nullptr, workers);
        std::vector<Word> candidates;
        for (const Word& w : all)
            if (!w.is_identity() && w.magnitude >= 5.0) candidates.push_back(w);
        std::sort(candidates.begin(), candidates.end(),
                  [](const Word& a, const Word& b) {
                      if (a.magnitude != b.magnitude)
                          return a.magnitude < b.magnitude;
                      return a.normal_form_key() < b.normal_form_key();
                  });
        std::vector<Word> sample;
        for (std::size_t i = 0; i < 50; ++i)
            sample.push_back(candidates[i * (candidates.size() - 1) / 49]);

        BallScan scan = scan_ball(spec, 20.0, caps, 0.5, -1.0, {}, workers);
        const double delta_hat =
            critical_exponent(scan.hist, ExponentMethod::Growth).delta;
        const double s = delta_hat + 0.05;

        const ShadowAuditReport a = shadow_lemma_audit(
            spec, sample, s, delta_hat, 0.3, 20.0, caps, workers);
        const ShadowAuditReport b = shadow_lemma_audit(
            spec, sample, s, delta_hat, 0.3, 24.0, caps, workers);
        bool all_in_band = a.c_hat > 0.0;
        for (const ShadowAuditEntry& e : a.entries)
            all_in_band = all_in_band && !e.empty_shadow &&
                          e.ratio >= 1.0 / a.c_hat - 1e-12 &&
                          e.ratio <= a.c_hat + 1e-12;
        const double drift = b.c_hat / a.c_hat;
        detail = fmt("c_hat %.2f -> %.2f (delta %.3f)", a.c_hat, b.c_hat,
                     delta_hat);
        return all_in_band && a.c_hat <= 100.0 && drift <= 2.0 &&
               drift >= 0.5;
    });

    run(9, "divergence diagnostic at 0.5 / 0.8", [&](std::string& detail) {
        const Config cfg = zoo_config("parabolic2");
        const GroupSpec spec = to_group_spec(cfg);
        const DivergenceReport lo = divergence_diagnostic(
            spec, 0.5, cfg.cutoffs.R, to_caps(cfg), 0.5, workers);
        const DivergenceReport hi = divergence_diagnostic(
            spec, 0.8, cfg.cutoffs.R, to_caps(cfg), 0.5, workers);
        detail = fmt("slopes %.3f / %.3f", lo.slope, hi.slope);
        return lo.verdict == DivergenceVerdict::DivergesLike &&
               hi.verdict == DivergenceVerdict::ConvergesLike;
    });

    run(10, "determinism across worker counts", [&](std::string& detail) {
        const Config cfg = zoo_config("cusped-mixed");
        CmdOptions one, eight;
        one.workers = 1;
        eight.workers = 8;
        const Report a = cmd_spr(cfg, one);
        const Report b = cmd_spr(cfg, eight);
        const bool same = a.results.dump() == b.results.dump() &&
                          a.config_digest == b.config_digest;
        detail = same ? "payloads byte-identical" : "payloads differ";
        return same;
    });

    std::printf("%s (%d/10 criteria passed)\n",
                g_failures == 0 ? "ALL PASS" : "FAILURES", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
