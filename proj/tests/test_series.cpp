#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gpslab/series.hpp"
#include "gpslab/zoo.hpp"
#include "gpslab/config.hpp"

using namespace gpslab;

namespace {

GroupSpec lox_spec() { return to_group_spec(zoo_config("lox2")); }
GroupSpec parabolic_spec() { return to_group_spec(zoo_config("parabolic2")); }

}  // namespace

TEST_CASE("line fit recovers an exact line with zero stderr") {
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(0.5 * i);
        y.push_back(3.0 - 0.7 * 0.5 * i);
    }
    const LineFit fit = fit_line(x, y);
    CHECK(fit.slope == doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(fit.stderr_ < 1e-10);
    CHECK_THROWS_AS(fit_line({1.0}, {2.0}), InsufficientData);
    CHECK_THROWS_AS(fit_line({1.0, 1.0}, {2.0, 3.0}), InsufficientData);
}

TEST_CASE("histogram bookkeeping") {
    MagnitudeHistogram h(10.0, 0.5);
    h.add(0.1);
    h.add(0.6);
    h.add(0.7);
    h.add(9.99);
    CHECK(h.total == 4);
    CHECK(h.bins[0] == 1);
    CHECK(h.bins[1] == 2);
    const auto cum = h.cumulative();
    CHECK(cum.back() == 4);
    const auto annuli = h.annuli();
    CHECK(annuli[1].lo == doctest::Approx(0.5));
    CHECK(annuli[1].hi == doctest::Approx(1.0));
    CHECK(annuli[1].count == 2);

    MagnitudeHistogram other(10.0, 0.5);
    other.add(0.6);
    h.merge(other);
    CHECK(h.bins[1] == 3);
    CHECK(h.total == 5);
}

TEST_CASE("partial Poincare series: geometric closed form") {
    // magnitudes of g^n are exactly 2|n|:
    // Q(1, 10) = 1 + 2 sum_{n=1..5} e^{-2n}
    double oracle = 1.0;
    for (int n = 1; n <= 5; ++n) oracle += 2.0 * std::exp(-2.0 * n);
    EnumCaps caps;
    caps.max_cyclic_exponent = 200;
    const SeriesEstimate est = partial_poincare(lox_spec(), 1.0, 10.0, caps);
    CHECK(est.partial_sum == doctest::Approx(oracle).epsilon(1e-10));
    CHECK_THROWS_AS(partial_poincare(lox_spec(), -0.5, 10.0, caps), ConfigError);
}

TEST_CASE("critical exponent on a synthetic exponential histogram") {
    // plant counts N(annulus) = round(exp(2 + 0.3 mid)); both estimators
    // must recover slope 0.3 on this noiseless input
    MagnitudeHistogram h(30.0, 0.5);
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        const double mid = 0.5 * (static_cast<double>(i) + 0.5);
        h.bins[i] = static_cast<std::size_t>(
            std::llround(std::exp(2.0 + 0.3 * mid)));
        h.total += h.bins[i];
    }
    const ExponentEstimate ann = critical_exponent(h, ExponentMethod::Annulus);
    CHECK(ann.delta == doctest::Approx(0.3).epsilon(0.01));
    const ExponentEstimate gro = critical_exponent(h, ExponentMethod::Growth);
    CHECK(gro.delta == doctest::Approx(0.3).epsilon(0.1));
    const ExponentPair pair = critical_exponent_both(h);
    CHECK(pair.agree);
    CHECK(pair.warnings.empty());
}

TEST_CASE("negative trends clamp to zero and sparse data is rejected") {
    MagnitudeHistogram h(30.0, 0.5);
    for (std::size_t i = 0; i < h.bins.size(); ++i) {
        const double mid = 0.5 * (static_cast<double>(i) + 0.5);
        h.bins[i] = static_cast<std::size_t>(
                        std::llround(1000.0 * std::exp(-0.2 * mid))) + 1;
        h.total += h.bins[i];
    }
    CHECK(critical_exponent(h, ExponentMethod::Annulus).delta == 0.0);

    MagnitudeHistogram sparse(30.0, 0.5);
    sparse.bins[1] = 5;
    sparse.bins[40] = 5;
    sparse.total = 10;
    CHECK_THROWS_AS(critical_exponent(sparse, ExponentMethod::Annulus),
                    InsufficientData);
}

TEST_CASE("parabolic cyclic group has exponent one half") {
    EnumCaps caps;
    caps.max_cyclic_exponent = 2000000;
    BallScan scan = scan_ball(parabolic_spec(), 20.0, caps, 0.5, -1.0, {}, 2);
    const ExponentPair pair = critical_exponent_both(scan.hist);
    CHECK(pair.growth.delta == doctest::Approx(0.5).epsilon(0.1));
    CHECK(pair.annulus.delta == doctest::Approx(0.5).epsilon(0.1));
    CHECK(pair.agree);
}

TEST_CASE("loxodromic cyclic group has exponent zero") {
    EnumCaps caps;
    caps.max_cyclic_exponent = 200;
    BallScan scan = scan_ball(lox_spec(), 100.0, caps, 0.5, -1.0, {}, 1);
    const ExponentEstimate est =
        critical_exponent(scan.hist, ExponentMethod::Growth);
    CHECK(est.delta >= 0.0);
    CHECK(est.delta < 0.02);
}

TEST_CASE("scan_ball filter and weight bins") {
    EnumCaps caps;
    caps.max_cyclic_exponent = 200;
    // keep only even magnitudes >= 4 (i.e. |n| >= 2)
    BallScan scan = scan_ball(
        lox_spec(), 10.0, caps, 0.5, 1.0,
        [](const ProjMatrix&, const CartanVector&, double mag) {
            return mag >= 4.0;
        });
    // identity always included, then |n| in {2..5} on both sides
    CHECK(scan.hist.total == 9);
    double oracle = 1.0;
    for (int n = 2; n <= 5; ++n) oracle += 2.0 * std::exp(-2.0 * n);
    CHECK(scan.partial_sum() == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("divergence diagnostic separates the two regimes") {
    EnumCaps caps;
    caps.max_cyclic_exponent = 2000000;
    const GroupSpec spec = parabolic_spec();
    const DivergenceReport at_half =
        divergence_diagnostic(spec, 0.5, 27.0, caps, 0.5, 2);
    CHECK(at_half.verdict == DivergenceVerdict::DivergesLike);
    CHECK(at_half.slope > 0.5);
    const DivergenceReport above =
        divergence_diagnostic(spec, 0.8, 27.0, caps, 0.5, 2);
    CHECK(above.verdict == DivergenceVerdict::ConvergesLike);
    CHECK(above.slope < 0.02);
}

TEST_CASE("scan_ball results are identical across worker counts") {
    const GroupSpec spec = to_group_spec(zoo_config("hecke3"));
    EnumCaps caps;
    caps.max_cyclic_exponent = 5000;
    BallScan a = scan_ball(spec, 10.0, caps, 0.5, 0.7, {}, 1);
    BallScan b = scan_ball(spec, 10.0, caps, 0.5, 0.7, {}, 8);
    CHECK(a.hist.bins == b.hist.bins);
    REQUIRE(a.weight_bins.size() == b.weight_bins.size());
    for (std::size_t i = 0; i < a.weight_bins.size(); ++i)
        CHECK(a.weight_bins[i] == b.weight_bins[i]);  // bitwise equality
    CHECK(a.cmp_eps_10 == b.cmp_eps_10);
    CHECK(a.cmp_eps_100 == b.cmp_eps_100);
}
