#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gpslab/config.hpp"
#include "gpslab/errors.hpp"

namespace gpslab {

/// Built-in example groups.  Each entry is a complete, ready-to-run
/// configuration; cutoffs are sized so the default run finishes at desk
/// scale.
inline std::vector<std::string> zoo_names() {
    return {"parabolic2", "lox2",       "hecke3",
            "cusped-mixed", "sym2-lox3", "product-of-hecke"};
}

namespace detail {

inline Config::Factor cyclic_factor(const std::string& name,
                                    std::vector<std::vector<double>> m,
                                    bool peripheral) {
    Config::Factor f;
    f.kind = "cyclic";
    f.peripheral = peripheral;
    f.generators.emplace_back(name, std::move(m));
    return f;
}

inline std::vector<std::vector<double>> rot_conj2(
    const std::vector<std::vector<double>>& m, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    // r * m * r^T with r the rotation by theta
    const double a = m[0][0], b = m[0][1], cc = m[1][0], d = m[1][1];
    const double t00 = c * a - s * cc, t01 = c * b - s * d;
    const double t10 = s * a + c * cc, t11 = s * b + c * d;
    return {{t00 * c - t01 * s, t00 * s + t01 * c},
            {t10 * c - t11 * s, t10 * s + t11 * c}};
}

inline Config::SchottkyBall line_ball2(double x, double y, double r) {
    Config::SchottkyBall b;
    b.line = {x, y};
    b.radius = r;
    return b;
}

}  // namespace detail

inline Config zoo_config(const std::string& name) {
    Config c;
    c.seed = 7;
    if (name == "parabolic2") {
        // single parabolic cyclic group; critical exponent 1/2
        c.dim = 2;
        c.factors.push_back(
            detail::cyclic_factor("p", {{1.0, 1.0}, {0.0, 1.0}}, true));
        c.cutoffs.R = 27.0;
        c.cutoffs.max_cyclic_exponent = 2000000;
        return c;
    }
    if (name == "lox2") {
        // single loxodromic cyclic group; linear growth, exponent 0
        c.dim = 2;
        const double e = std::exp(1.0);
        c.factors.push_back(
            detail::cyclic_factor("g", {{e, 0.0}, {0.0, 1.0 / e}}, false));
        c.cutoffs.R = 100.0;
        c.cutoffs.max_cyclic_exponent = 200;
        return c;
    }
    if (name == "hecke3") {
        // two opposite parabolic shears with parameter 3
        c.dim = 2;
        c.factors.push_back(
            detail::cyclic_factor("p", {{1.0, 3.0}, {0.0, 1.0}}, true));
        c.factors.push_back(
            detail::cyclic_factor("q", {{1.0, 0.0}, {3.0, 1.0}}, true));
        c.cutoffs.R = 14.0;
        c.cutoffs.max_cyclic_exponent = 5000;
        Config::Schottky s;
        s.margin = 0.02;
        s.grid_size = 20000;
        s.sets = {{detail::line_ball2(1.0, 0.0, 0.35)},
                  {detail::line_ball2(0.0, 1.0, 0.35)}};
        c.schottky = s;
        Config::Audit a;
        c.audit = a;  // defaults: epsilon 0.3, 50 samples in [5, 15], pad 5
        return c;
    }
    if (name == "cusped-mixed") {
        // parabolic * loxodromic free product with verified ping-pong data
        c.dim = 2;
        const double t = 5.0, a = 1.25;
        c.factors.push_back(
            detail::cyclic_factor("p", {{1.0, t}, {0.0, 1.0}}, true));
        c.factors.push_back(detail::cyclic_factor(
            "h",
            {{std::cosh(a), std::sinh(a)}, {std::sinh(a), std::cosh(a)}},
            false));
        c.cutoffs.R = 25.0;
        c.cutoffs.max_cyclic_exponent = 200000;
        Config::Schottky s;
        s.margin = 0.02;
        s.grid_size = 20000;
        const double inv = 1.0 / std::sqrt(2.0);
        s.sets = {{detail::line_ball2(1.0, 0.0, 0.385)},
                  {detail::line_ball2(inv, inv, 0.30),
                   detail::line_ball2(-inv, inv, 0.30)}};
        c.schottky = s;
        return c;
    }
    if (name == "sym2-lox3") {
        // symmetric-square embedding of diag(e, 1/e): weights 2, 0, -2
        c.dim = 3;
        const double e2 = std::exp(2.0);
        Config::Factor f;
        f.kind = "cyclic";
        f.peripheral = false;
        f.generators.emplace_back(
            "g", std::vector<std::vector<double>>{{e2, 0.0, 0.0},
                                                  {0.0, 1.0, 0.0},
                                                  {0.0, 0.0, 1.0 / e2}});
        c.factors.push_back(std::move(f));
        c.cutoffs.R = 40.0;
        c.cutoffs.max_cyclic_exponent = 100;
        return c;
    }
    if (name == "product-of-hecke") {
        // free product of the two shear pairs, one pair rotated by 45 deg
        c.dim = 2;
        const std::vector<std::vector<double>> p = {{1.0, 3.0}, {0.0, 1.0}};
        const std::vector<std::vector<double>> q = {{1.0, 0.0}, {3.0, 1.0}};
        const double th = std::atan(1.0);  // pi/4
        c.factors.push_back(detail::cyclic_factor("p", p, true));
        c.factors.push_back(detail::cyclic_factor("q", q, true));
        c.factors.push_back(
            detail::cyclic_factor("pr", detail::rot_conj2(p, th), true));
        c.factors.push_back(
            detail::cyclic_factor("qr", detail::rot_conj2(q, th), true));
        c.cutoffs.R = 10.0;
        c.cutoffs.max_cyclic_exponent = 50000;
        c.proxy.mode = "factor";
        Config::Schottky s;
        s.margin = 0.05;
        s.grid_size = 20000;
        const double inv = 1.0 / std::sqrt(2.0);
        s.sets = {{detail::line_ball2(1.0, 0.0, 0.3)},
                  {detail::line_ball2(0.0, 1.0, 0.3)},
                  {detail::line_ball2(inv, inv, 0.3)},
                  {detail::line_ball2(-inv, inv, 0.3)}};
        c.schottky = s;
        return c;
    }
    throw UnknownZooName("unknown zoo name: " + name);
}

}  // namespace gpslab
