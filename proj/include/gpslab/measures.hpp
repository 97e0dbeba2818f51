#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gpslab/errors.hpp"
#include "gpslab/series.hpp"
#include "gpslab/words.hpp"

namespace gpslab {

/// Truncated orbital (Patterson-style) measure: one atom per enumerated
/// element with a resolvable attracting flag, weighted by exp(-s*magnitude)
/// and normalized to total mass 1.  Backward measures use inverse elements,
/// realizing the opposite-cocycle measure without separate machinery.
struct OrbitalMeasure {
    enum class Side { Forward, Backward };

    double s = 0.0;
    double R = 0.0;
    Side side = Side::Forward;
    std::vector<std::pair<Flag, double>> atoms;
    double Z = 0.0;          // unnormalized mass of the kept atoms
    std::size_t dropped = 0; // elements without a singular gap (incl. identity)
};

inline OrbitalMeasure build_orbital_measure(const GroupSpec& spec,
                                            const std::vector<Word>& words,
                                            double s, double R,
                                            OrbitalMeasure::Side side,
                                            double gap_floor = 1e-6) {
    OrbitalMeasure mu;
    mu.s = s;
    mu.R = R;
    mu.side = side;
    for (const Word& w : words) {
        if (w.magnitude > R) continue;
        const ProjMatrix m = side == OrbitalMeasure::Side::Forward
                                 ? w.matrix
                                 : w.matrix.inverse();
        const double mag = side == OrbitalMeasure::Side::Forward
                               ? w.magnitude
                               : magnitude(spec.ctx(), m);
        try {
            Flag xi = attracting_flag(m, gap_floor);
            const double weight = std::exp(-s * mag);
            mu.atoms.emplace_back(std::move(xi), weight);
            mu.Z += weight;
        } catch (const NoSingularGap&) {
            ++mu.dropped;
        }
    }
    if (mu.atoms.empty())
        throw InsufficientData("no atoms with resolvable attracting flags");
    for (auto& [flag, weight] : mu.atoms) weight /= mu.Z;
    return mu;
}

/// Shadow of gamma at aperture epsilon: the image under gamma of the
/// complement of the epsilon-ball around the attracting flag of gamma^{-1}.
/// Membership is tested on the preimage side.
struct Shadow {
    ProjMatrix g;
    ProjMatrix g_inv;
    Flag repelling;  // attracting flag of g^{-1}
    double epsilon = 0.1;
    double magnitude = 0.0;

    Shadow(const GroupSpec& spec, const ProjMatrix& gamma, double eps)
        : g(gamma),
          g_inv(gamma.inverse()),
          repelling(attracting_flag(g_inv, spec.gap_floor)),
          epsilon(eps),
          magnitude(gpslab::magnitude(spec.ctx(), gamma)) {
        if (!(eps > 0.0 && eps < 1.0))
            throw ConfigError("shadow aperture must lie in (0, 1)");
    }
};

inline bool shadow_contains(const Shadow& sh, const Flag& xi) {
    return flag_distance(act(sh.g_inv, xi), sh.repelling) >= sh.epsilon;
}

inline double shadow_mass(const OrbitalMeasure& mu, const Shadow& sh) {
    double mass = 0.0;
    for (const auto& [flag, weight] : mu.atoms)
        if (shadow_contains(sh, flag)) mass += weight;
    return mass;
}

struct ShadowAuditEntry {
    std::string gamma_id;
    double magnitude = 0.0;
    double mass = 0.0;   // normalized shadow mass
    double ratio = 0.0;  // mass * exp(delta_hat * magnitude)
    bool empty_shadow = false;
};

struct ShadowAuditReport {
    std::vector<ShadowAuditEntry> entries;
    double c_hat = 0.0;
    double Z = 0.0;
    std::size_t atom_count = 0;
    std::size_t dropped = 0;
    bool elementary = false;
    std::vector<Warning> warnings;
};

namespace detail {

/// d = 2 fast path for the audit inner loop: attracting line of a 2x2
/// matrix by the closed form, shadow membership by a single cross product.
struct FastShadow2 {
    Eigen::Matrix2d ginv;
    Eigen::Vector2d repelling;
    double epsilon;
};

inline Eigen::Vector2d top_line2(const Matrix& m) {
    const double a00 = m(0, 0) * m(0, 0) + m(0, 1) * m(0, 1);
    const double a11 = m(1, 0) * m(1, 0) + m(1, 1) * m(1, 1);
    const double a01 = m(0, 0) * m(1, 0) + m(0, 1) * m(1, 1);
    const double theta = 0.5 * std::atan2(2.0 * a01, a00 - a11);
    Eigen::Vector2d u(std::cos(theta), std::sin(theta));
    const double q = u(0) * (a00 * u(0) + a01 * u(1)) +
                     u(1) * (a01 * u(0) + a11 * u(1));
    if (q < (a00 + a11) - q - 1e-15) {
        const double t2 = theta + 1.5707963267948966;
        u << std::cos(t2), std::sin(t2);
    }
    return u;
}

inline bool fast_shadow_contains2(const FastShadow2& sh,
                                  const Eigen::Vector2d& u) {
    const Eigen::Vector2d v = sh.ginv * u;
    const double cross =
        std::abs(v(0) * sh.repelling(1) - v(1) * sh.repelling(0));
    return cross >= sh.epsilon * v.norm();
}

}  // namespace detail

/// Shadow Lemma audit over a large ball without materializing the measure:
/// one sharded streaming pass accumulates the normalizer Z and the mass of
/// each sample shadow, merged in fixed shard order for determinism.
/// Requires R to exceed the largest sample magnitude by >= 5 so shadows are
/// resolved by atoms beyond the sample depth.
inline ShadowAuditReport shadow_lemma_audit(const GroupSpec& spec,
                                            const std::vector<Word>& sample,
                                            double s, double delta_hat,
                                            double epsilon, double R,
                                            const EnumCaps& caps,
                                            int workers = 1) {
    if (sample.empty()) throw InsufficientData("empty shadow-lemma sample");
    double max_mag = 0.0;
    for (const Word& w : sample) {
        if (w.is_identity())
            throw NoSingularGap(
                "identity has no attracting flag and no shadow");
        max_mag = std::max(max_mag, w.magnitude);
    }
    if (R < max_mag + 5.0)
        throw ConfigError(
            "audit truncation must exceed the sample magnitudes by >= 5");

    std::vector<Shadow> shadows;
    shadows.reserve(sample.size());
    for (const Word& w : sample) shadows.emplace_back(spec, w.matrix, epsilon);

    const std::size_t k = shadows.size();
    const bool fast2 = spec.dim == 2;
    std::vector<detail::FastShadow2> fast;
    if (fast2) {
        fast.reserve(k);
        for (const Shadow& sh : shadows)
            fast.push_back({sh.g_inv.entries(), sh.repelling.line(),
                            sh.epsilon});
    }

    struct ShardAcc {
        double Z = 0.0;
        std::vector<double> mass;
        std::size_t atoms = 0;
        std::size_t dropped = 0;
    };
    std::vector<ShardAcc> accs(detail::kEnumShards);
    for (auto& a : accs) a.mass.assign(k, 0.0);

    const double gap_floor = spec.gap_floor;
    stream_ball_sharded(
        spec, R, caps, workers,
        [&](int shard, const ProjMatrix& m, const CartanVector& kv,
            double mag) {
            ShardAcc& a = accs[static_cast<std::size_t>(shard)];
            if (kv.top() - kv.kappa(1) < gap_floor ||
                kv.kappa(kv.kappa.size() - 2) - kv.bottom() < gap_floor) {
                ++a.dropped;
                return;
            }
            const double w = std::exp(-s * mag);
            a.Z += w;
            ++a.atoms;
            if (fast2) {
                const Eigen::Vector2d u = detail::top_line2(m.entries());
                for (std::size_t j = 0; j < k; ++j)
                    if (detail::fast_shadow_contains2(fast[j], u))
                        a.mass[j] += w;
            } else {
                const Flag xi = attracting_flag(m, gap_floor);
                for (std::size_t j = 0; j < k; ++j)
                    if (shadow_contains(shadows[j], xi)) a.mass[j] += w;
            }
        });

    ShadowAuditReport rep;
    rep.elementary = spec.elementary();
    std::vector<double> mass(k, 0.0);
    for (const ShardAcc& a : accs) {  // fixed shard order
        rep.Z += a.Z;
        rep.atom_count += a.atoms;
        rep.dropped += a.dropped;
        for (std::size_t j = 0; j < k; ++j) mass[j] += a.mass[j];
    }
    ++rep.dropped;  // identity
    if (!(rep.Z > 0.0))
        throw InsufficientData("no atoms with resolvable attracting flags");

    double max_ratio = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        ShadowAuditEntry e;
        e.gamma_id = sample[j].normal_form_key();
        e.magnitude = shadows[j].magnitude;
        e.mass = mass[j] / rep.Z;
        e.ratio = e.mass * std::exp(delta_hat * e.magnitude);
        e.empty_shadow = !(mass[j] > 0.0);
        if (e.empty_shadow) {
            rep.warnings.push_back(
                {WarningCode::EmptyShadow,
                 "no atom fell in the shadow of " + e.gamma_id});
        } else {
            max_ratio = std::max(max_ratio, e.ratio);
            min_ratio = std::min(min_ratio, e.ratio);
        }
        rep.entries.push_back(std::move(e));
    }
    if (rep.elementary)
        rep.warnings.push_back(
            {WarningCode::ElementaryGroup,
             "elementary group: the limit set has at most 2 points and "
             "shadow ratios degenerate"});
    rep.c_hat = min_ratio < std::numeric_limits<double>::infinity()
                    ? std::max(max_ratio, 1.0 / min_ratio)
                    : 0.0;
    return rep;
}

/// Discrepancy between the pushforward of mu by g and the density
/// exp(-s*sigma(g^{-1}, .)) prescription, evaluated against a test
/// function over the atoms and normalized by sum |f| d(mu).  Truncation
/// breaks exactness at the orbit frontier, so this is a diagnostic number
/// expected to shrink as R grows, not a hard invariant.
inline double quasi_invariance_residual(
    const GPSContext& ctx, const OrbitalMeasure& mu, const ProjMatrix& g,
    const std::function<double(const Flag&)>& f) {
    double pushed = 0.0, density = 0.0, norm = 0.0;
    const ProjMatrix g_inv = g.inverse();
    for (const auto& [xi, w] : mu.atoms) {
        pushed += f(act(g, xi)) * w;
        density += f(xi) * std::exp(-mu.s * busemann_cocycle(ctx, g_inv, xi)) * w;
        norm += std::abs(f(xi)) * w;
    }
    if (!(norm > 0.0)) return 0.0;
    return std::abs(pushed - density) / norm;
}

/// Truncated Bowen-Margulis-Sullivan box mass
///   |I| * sum_{xi in A, eta in B} exp(delta * G(xi, eta)) w(xi) wbar(eta).
/// Non-transverse atom pairs are dropped and counted.
struct BoxMass {
    double mass = 0.0;
    std::size_t dropped_pairs = 0;
};

inline BoxMass bms_box_mass(const GPSContext& ctx, const OrbitalMeasure& fwd,
                            const OrbitalMeasure& bwd, double delta,
                            const std::function<bool(const Flag&)>& in_A,
                            const std::function<bool(const Flag&)>& in_B,
                            double interval_len) {
    BoxMass out;
    if (interval_len < 0.0)
        throw ConfigError("interval length must be >= 0");
    if (interval_len == 0.0) return out;
    for (const auto& [xi, w] : fwd.atoms) {
        if (!in_A(xi)) continue;
        for (const auto& [eta, wb] : bwd.atoms) {
            if (!in_B(eta)) continue;
            try {
                out.mass +=
                    std::exp(delta * gromov_product(ctx, xi, eta)) * w * wb;
            } catch (const NonTransverse&) {
                ++out.dropped_pairs;
            }
        }
    }
    out.mass *= interval_len;
    return out;
}

}  // namespace gpslab
