#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <string>

#include "gpslab/words.hpp"
#include "gpslab/zoo.hpp"
#include "gpslab/config.hpp"

using namespace gpslab;

namespace {

GroupSpec two_parabolic_spec() {
    return to_group_spec(zoo_config("hecke3"));
}

GroupSpec cyclic_spec(const Matrix& m, bool peripheral = false) {
    GroupSpec spec;
    spec.dim = static_cast<int>(m.rows());
    FactorSpec f;
    f.id = 0;
    f.kind = FactorSpec::Kind::Cyclic;
    f.peripheral = peripheral;
    f.generators.emplace_back("g", ProjMatrix::normalize(m));
    spec.factors.push_back(std::move(f));
    return spec;
}

}  // namespace

TEST_CASE("free product of two cyclic groups: 41 words at caps 2/2") {
    // 1 identity + 2 factors * 4 one-syllable words + 8 * 4 two-syllable
    GroupSpec spec = two_parabolic_spec();
    EnumCaps caps;
    caps.max_syllables = 2;
    caps.max_cyclic_exponent = 2;
    EnumStats stats;
    const auto words = enumerate_ball(
        spec, std::numeric_limits<double>::infinity(), caps, &stats);
    CHECK(words.size() == 41);
    CHECK(stats.count == 41);
    std::set<std::string> keys;
    for (const Word& w : words) keys.insert(w.normal_form_key());
    CHECK(keys.size() == 41);  // normal forms are pairwise distinct
}

TEST_CASE("loxodromic cyclic ball: 5 words at R = 5") {
    const double e = std::exp(1.0);
    Matrix m(2, 2);
    m << e, 0, 0, 1 / e;
    GroupSpec spec = cyclic_spec(m);
    EnumCaps caps;
    const auto words = enumerate_ball(spec, 5.0, caps);
    CHECK(words.size() == 5);  // identity, g^{+-1}, g^{+-2} (mag 2|n|)
}

TEST_CASE("parabolic cyclic ball count matches the arcsinh closed form") {
    Matrix m(2, 2);
    m << 1, 1, 0, 1;
    GroupSpec spec = cyclic_spec(m, true);
    EnumCaps caps;
    caps.max_cyclic_exponent = 1000000;
    for (double R : {6.0, 8.0, 10.0}) {
        // mag(p^n) = 2 asinh(|n|/2) <= R  <=>  |n| <= 2 sinh(R/2)
        const auto oracle =
            1 + 2 * static_cast<std::size_t>(std::floor(2.0 * std::sinh(R / 2.0)));
        EnumStats stats;
        const auto words = enumerate_ball(spec, R, caps, &stats);
        CHECK(words.size() == oracle);
        CHECK(!stats.exponent_cap_binding);
    }
}

TEST_CASE("magnitude cache agrees with direct evaluation") {
    GroupSpec spec = two_parabolic_spec();
    EnumCaps caps;
    const auto words = enumerate_ball(spec, 8.0, caps);
    const GPSContext ctx = spec.ctx();
    for (const Word& w : words) {
        CHECK(w.magnitude == doctest::Approx(magnitude(ctx, w.matrix)).epsilon(1e-12));
        CHECK(w.magnitude <= 8.0);
        // normal-form matrix equals the product of its syllables
        const Word rebuilt = make_word(spec, w.syllables);
        CHECK((rebuilt.matrix.entries() - w.matrix.entries())
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
    }
}

TEST_CASE("no element below the cutoff is missed near annulus boundaries") {
    // brute-force oracle: all alternating words with exponents in [-14, 14]
    // and <= 3 syllables, intersected with the ball (a single syllable
    // already needs |n| <= 11 at R = 7, and cancellation cannot buy more)
    GroupSpec spec = two_parabolic_spec();
    const GPSContext ctx = spec.ctx();
    const double R = 7.0;
    std::set<std::string> oracle;
    std::function<void(int, int, const ProjMatrix&, std::string)> rec =
        [&](int depth, int last, const ProjMatrix& m, std::string key) {
            if (depth > 0 && magnitude(ctx, m) <= R) oracle.insert(key);
            if (depth == 3) return;
            for (int f = 0; f < 2; ++f) {
                if (f == last) continue;
                for (int e = -14; e <= 14; ++e) {
                    if (e == 0) continue;
                    ProjMatrix step = detail::generator_power(
                        spec.factors[f].generators[0].second, e);
                    rec(depth + 1, f, m * step,
                        key + std::to_string(f) + "^" + std::to_string(e) + ".");
                }
            }
        };
    rec(0, -1, ProjMatrix::identity(2), "");

    EnumCaps caps;
    caps.max_syllables = 3;
    const auto words = enumerate_ball(spec, R, caps);
    std::size_t nontrivial = 0;
    for (const Word& w : words)
        if (!w.is_identity()) ++nontrivial;
    CHECK(nontrivial == oracle.size());
}

TEST_CASE("concat_reduce cancels and merges correctly") {
    GroupSpec spec = two_parabolic_spec();
    EnumCaps caps;
    caps.max_syllables = 3;
    const auto words = enumerate_ball(spec, 7.0, caps);
    for (std::size_t i = 0; i < words.size(); i += 7) {
        const Word inv = word_inverse(spec, words[i]);
        const Word prod = concat_reduce(spec, words[i], inv);
        CHECK(prod.is_identity());
        CHECK(prod.matrix.is_identity(1e-8));
    }
    // partial cancellation: (p^2 q) * (q^-1 p) = p^3
    const Word a = make_word(spec, {{0, {{0, 2}}}, {1, {{0, 1}}}});
    const Word b = make_word(spec, {{1, {{0, -1}}}, {0, {{0, 1}}}});
    const Word c = concat_reduce(spec, a, b);
    REQUIRE(c.syllable_count() == 1);
    CHECK(c.syllables[0].factor == 0);
    CHECK(c.syllables[0].letters == std::vector<std::pair<int, long long>>{{0, 3}});
}

TEST_CASE("streaming, collecting, and sharded enumeration agree") {
    GroupSpec spec = two_parabolic_spec();
    EnumCaps caps;
    const double R = 9.0;
    std::set<std::string> streamed;
    enumerate_ball_stream(spec, R, caps, [&](const Word& w) {
        streamed.insert(w.normal_form_key());
    });
    const auto collected = enumerate_ball(spec, R, caps);
    CHECK(collected.size() == streamed.size());
    std::set<std::string> collected_keys;
    for (const Word& w : collected) collected_keys.insert(w.normal_form_key());
    CHECK(collected_keys == streamed);

    std::size_t light_count = 1;  // sharded streaming skips the identity
    EnumStats stats;
    stream_ball_sharded(spec, R, caps, 1,
                        [&](int, const ProjMatrix&, const CartanVector&,
                            double mag) {
                            ++light_count;
                            CHECK(mag <= R);
                        },
                        &stats);
    CHECK(light_count == collected.size());
    CHECK(stats.count == collected.size());
}

TEST_CASE("worker count does not change the enumeration output") {
    GroupSpec spec = two_parabolic_spec();
    EnumCaps caps;
    const auto w1 = enumerate_ball(spec, 9.0, caps, nullptr, 1);
    const auto w8 = enumerate_ball(spec, 9.0, caps, nullptr, 8);
    REQUIRE(w1.size() == w8.size());
    for (std::size_t i = 0; i < w1.size(); ++i)
        CHECK(w1[i].normal_form_key() == w8[i].normal_form_key());
}

TEST_CASE("exponent cap truncation is detected, not silent") {
    Matrix m(2, 2);
    m << 1, 1, 0, 1;
    GroupSpec spec = cyclic_spec(m, true);
    EnumCaps caps;
    caps.max_cyclic_exponent = 10;  // far too small for R = 10
    EnumStats stats;
    enumerate_ball(spec, 10.0, caps, &stats);
    CHECK(stats.exponent_cap_binding);
    REQUIRE(!stats.warnings.empty());
    CHECK(stats.warnings[0].code == WarningCode::CapTooSmall);
}

TEST_CASE("stream_factor_elements matches the cyclic closed form") {
    GroupSpec spec = two_parabolic_spec();  // shear parameter 3
    const double R = 10.0;
    std::size_t count = 0;
    EnumCaps caps;
    stream_factor_elements(spec, 0, R, caps,
                           [&](const ProjMatrix&, const CartanVector&,
                               double mag) {
                               ++count;
                               CHECK(mag <= R);
                           });
    // mag(p^n) = 2 asinh(3|n|/2) <= R  <=>  |n| <= (2/3) sinh(R/2)
    const auto oracle = 2 * static_cast<std::size_t>(
                                std::floor(2.0 / 3.0 * std::sinh(R / 2.0)));
    CHECK(count == oracle);
}

TEST_CASE("finitely-generated factor enumerates reduced letter words") {
    GroupSpec spec;
    spec.dim = 2;
    FactorSpec f;
    f.id = 0;
    f.kind = FactorSpec::Kind::FinitelyGenerated;
    Matrix a(2, 2), b(2, 2);
    const double e = std::exp(1.0);
    a << e, 0, 0, 1 / e;
    b << std::cosh(1.0), std::sinh(1.0), std::sinh(1.0), std::cosh(1.0);
    f.generators.emplace_back("a", ProjMatrix::normalize(a));
    f.generators.emplace_back("b", ProjMatrix::normalize(b));
    spec.factors.push_back(std::move(f));
    EnumCaps caps;
    caps.max_cyclic_exponent = 2;  // letter budget
    std::set<std::string> seen;
    stream_factor_elements(
        spec, 0, 100.0, caps,
        [&](const ProjMatrix& m, const CartanVector&, double) {
            // identify elements by their matrices
            std::string key;
            for (int i = 0; i < 4; ++i)
                key += std::to_string(std::lround(
                           m.entries()(i / 2, i % 2) * 1e6)) + ",";
            CHECK(!m.is_identity(1e-9));
            seen.insert(key);
        });
    // reduced words of length 1: 4; length 2: 4 * 3 = 12 (no undoing)
    CHECK(seen.size() == 16);
}

TEST_CASE("faithfulness probe flags a redundant presentation") {
    // two cyclic factors carrying the same matrix: a b^-1 is the identity
    Matrix m(2, 2);
    m << 1, 3, 0, 1;
    GroupSpec spec;
    spec.dim = 2;
    for (int i = 0; i < 2; ++i) {
        FactorSpec f;
        f.id = i;
        f.kind = FactorSpec::Kind::Cyclic;
        f.generators.emplace_back(i == 0 ? "a" : "b", ProjMatrix::normalize(m));
        spec.factors.push_back(std::move(f));
    }
    CHECK(!faithfulness_probe(spec, 2, 1e-9).empty());
    // honest free product: no relations at shallow depth
    CHECK(faithfulness_probe(two_parabolic_spec(), 3, 1e-6).empty());
}

TEST_CASE("group spec validation rejects malformed input") {
    GroupSpec empty;
    empty.factors.clear();
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    GroupSpec dup = two_parabolic_spec();
    dup.factors[1].generators[0].first = dup.factors[0].generators[0].first;
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    GroupSpec badw = two_parabolic_spec();
    badw.phi = {0.0, 0.0};
    CHECK_THROWS_AS(badw.validate(), ConfigError);
}
