#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gpslab/errors.hpp"
#include "gpslab/spr.hpp"
#include "gpslab/words.hpp"

namespace gpslab {

using Json = nlohmann::ordered_json;

/// Declarative description of one run: group presentation, weight
/// functionals, cutoffs, proxy mode, and the optional Schottky / audit
/// sections.  Matrices are row-major arrays of decimal numbers; there is
/// no expression language.  parse(serialize(c)) == c field-for-field.
struct Config {
    struct Factor {
        std::string kind = "cyclic";  // "cyclic" | "finitely-generated"
        bool peripheral = false;
        // name -> row-major matrix, order-preserving
        std::vector<std::pair<std::string, std::vector<std::vector<double>>>>
            generators;
    };
    struct Cutoffs {
        double R = 10.0;
        int max_syllables = 16;
        long long max_cyclic_exponent = 1000000;
        double annulus_width = 0.5;
    };
    struct Proxy {
        std::string mode = "peripheral";  // "peripheral" | "factor"
        double excluded_ball = 0.0;
    };
    struct SchottkyBall {
        std::vector<double> line;
        std::vector<double> normal;  // empty for d = 2 (implied perpendicular)
        double radius = 0.0;
    };
    struct Schottky {
        double margin = 0.02;
        int grid_size = 20000;
        std::vector<std::vector<SchottkyBall>> sets;  // one list per factor
    };
    struct Audit {
        double epsilon = 0.3;
        int sample_size = 50;
        double mag_lo = 5.0;
        double mag_hi = 15.0;
        double r_pad = 5.0;
        double s_offset = 0.05;
    };

    int dim = 2;
    double phi_c1 = 1.0, phi_c2 = 1.0;
    double phi_prime_c1 = 1.0, phi_prime_c2 = 1.0;
    std::vector<Factor> factors;
    Cutoffs cutoffs;
    std::uint64_t seed = 1;
    Proxy proxy;
    std::optional<Schottky> schottky;
    std::optional<Audit> audit;
    std::optional<double> delta_override;
};

namespace detail {

inline double require_number(const Json& j, const std::string& path) {
    if (!j.is_number())
        throw ConfigError("expected a number at " + path);
    return j.get<double>();
}

inline const Json& require_field(const Json& j, const std::string& key,
                                 const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError("missing field " + path + "." + key);
    return j.at(key);
}

inline std::vector<std::vector<double>> parse_matrix(const Json& j,
                                                     const std::string& path) {
    if (!j.is_array() || j.empty())
        throw ConfigError("expected a matrix (array of rows) at " + path);
    std::vector<std::vector<double>> m;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Json& row = j.at(r);
        if (!row.is_array())
            throw ConfigError("expected a row array at " + path + "[" +
                              std::to_string(r) + "]");
        std::vector<double> out;
        for (std::size_t c = 0; c < row.size(); ++c)
            out.push_back(require_number(row.at(c), path + "[" +
                                                        std::to_string(r) +
                                                        "][" +
                                                        std::to_string(c) +
                                                        "]"));
        m.push_back(std::move(out));
    }
    return m;
}

}  // namespace detail

inline Config parse_config(const Json& j) {
    Config c;
    c.dim = static_cast<int>(
        detail::require_number(detail::require_field(j, "dim", "$"), "$.dim"));
    {
        const Json& phi = detail::require_field(j, "phi", "$");
        c.phi_c1 = detail::require_number(
            detail::require_field(phi, "c1", "$.phi"), "$.phi.c1");
        c.phi_c2 = detail::require_number(
            detail::require_field(phi, "c2", "$.phi"), "$.phi.c2");
    }
    if (j.contains("phi_prime")) {
        const Json& pp = j.at("phi_prime");
        c.phi_prime_c1 = detail::require_number(
            detail::require_field(pp, "c1", "$.phi_prime"), "$.phi_prime.c1");
        c.phi_prime_c2 = detail::require_number(
            detail::require_field(pp, "c2", "$.phi_prime"), "$.phi_prime.c2");
    } else {
        c.phi_prime_c1 = c.phi_c1;
        c.phi_prime_c2 = c.phi_c2;
    }
    const Json& factors = detail::require_field(j, "factors", "$");
    if (!factors.is_array() || factors.empty())
        throw ConfigError("$.factors must be a non-empty array");
    for (std::size_t i = 0; i < factors.size(); ++i) {
        const std::string path = "$.factors[" + std::to_string(i) + "]";
        const Json& fj = factors.at(i);
        Config::Factor f;
        f.kind = detail::require_field(fj, "kind", path).get<std::string>();
        if (f.kind != "cyclic" && f.kind != "finitely-generated")
            throw ConfigError(path + ".kind must be cyclic or finitely-generated");
        f.peripheral = fj.value("peripheral", false);
        const Json& gens = detail::require_field(fj, "generators", path);
        if (!gens.is_array() || gens.empty())
            throw ConfigError(path + ".generators must be a non-empty array");
        for (std::size_t g = 0; g < gens.size(); ++g) {
            const std::string gpath =
                path + ".generators[" + std::to_string(g) + "]";
            const Json& gj = gens.at(g);
            const std::string name =
                detail::require_field(gj, "name", gpath).get<std::string>();
            f.generators.emplace_back(
                name, detail::parse_matrix(
                          detail::require_field(gj, "matrix", gpath),
                          gpath + ".matrix"));
        }
        c.factors.push_back(std::move(f));
    }
    if (j.contains("cutoffs")) {
        const Json& cj = j.at("cutoffs");
        c.cutoffs.R = cj.value("R", c.cutoffs.R);
        c.cutoffs.max_syllables =
            cj.value("max_syllables", c.cutoffs.max_syllables);
        c.cutoffs.max_cyclic_exponent =
            cj.value("max_cyclic_exponent", c.cutoffs.max_cyclic_exponent);
        c.cutoffs.annulus_width =
            cj.value("annulus_width", c.cutoffs.annulus_width);
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("proxy")) {
        const Json& pj = j.at("proxy");
        c.proxy.mode = pj.value("mode", c.proxy.mode);
        if (c.proxy.mode != "peripheral" && c.proxy.mode != "factor")
            throw ConfigError("$.proxy.mode must be peripheral or factor");
        c.proxy.excluded_ball = pj.value("excluded_ball", 0.0);
    }
    if (j.contains("schottky")) {
        const Json& sj = j.at("schottky");
        Config::Schottky s;
        s.margin = sj.value("margin", s.margin);
        s.grid_size = sj.value("grid_size", s.grid_size);
        const Json& sets = detail::require_field(sj, "sets", "$.schottky");
        if (!sets.is_array())
            throw ConfigError("$.schottky.sets must be an array");
        for (std::size_t i = 0; i < sets.size(); ++i) {
            std::vector<Config::SchottkyBall> balls;
            const Json& bl = sets.at(i);
            for (std::size_t b = 0; b < bl.size(); ++b) {
                const std::string bpath = "$.schottky.sets[" +
                                          std::to_string(i) + "][" +
                                          std::to_string(b) + "]";
                const Json& bj = bl.at(b);
                Config::SchottkyBall ball;
                for (const Json& v : detail::require_field(bj, "line", bpath))
                    ball.line.push_back(
                        detail::require_number(v, bpath + ".line"));
                if (bj.contains("normal"))
                    for (const Json& v : bj.at("normal"))
                        ball.normal.push_back(
                            detail::require_number(v, bpath + ".normal"));
                ball.radius = detail::require_number(
                    detail::require_field(bj, "radius", bpath),
                    bpath + ".radius");
                balls.push_back(std::move(ball));
            }
            s.sets.push_back(std::move(balls));
        }
        c.schottky = std::move(s);
    }
    if (j.contains("audit")) {
        const Json& aj = j.at("audit");
        Config::Audit a;
        a.epsilon = aj.value("epsilon", a.epsilon);
        a.sample_size = aj.value("sample_size", a.sample_size);
        a.mag_lo = aj.value("mag_lo", a.mag_lo);
        a.mag_hi = aj.value("mag_hi", a.mag_hi);
        a.r_pad = aj.value("r_pad", a.r_pad);
        a.s_offset = aj.value("s_offset", a.s_offset);
        c.audit = a;
    }
    if (j.contains("delta_override"))
        c.delta_override = detail::require_number(j.at("delta_override"),
                                                  "$.delta_override");
    return c;
}

inline Config parse_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline Json serialize_config(const Config& c) {
    Json j;
    j["dim"] = c.dim;
    j["phi"] = {{"c1", c.phi_c1}, {"c2", c.phi_c2}};
    j["phi_prime"] = {{"c1", c.phi_prime_c1}, {"c2", c.phi_prime_c2}};
    Json factors = Json::array();
    for (const Config::Factor& f : c.factors) {
        Json fj;
        fj["kind"] = f.kind;
        fj["peripheral"] = f.peripheral;
        Json gens = Json::array();
        for (const auto& [name, m] : f.generators)
            gens.push_back({{"name", name}, {"matrix", m}});
        fj["generators"] = std::move(gens);
        factors.push_back(std::move(fj));
    }
    j["factors"] = std::move(factors);
    j["cutoffs"] = {{"R", c.cutoffs.R},
                    {"max_syllables", c.cutoffs.max_syllables},
                    {"max_cyclic_exponent", c.cutoffs.max_cyclic_exponent},
                    {"annulus_width", c.cutoffs.annulus_width}};
    j["seed"] = c.seed;
    j["proxy"] = {{"mode", c.proxy.mode},
                  {"excluded_ball", c.proxy.excluded_ball}};
    if (c.schottky) {
        Json sets = Json::array();
        for (const auto& balls : c.schottky->sets) {
            Json bl = Json::array();
            for (const Config::SchottkyBall& b : balls) {
                Json bj;
                bj["line"] = b.line;
                if (!b.normal.empty()) bj["normal"] = b.normal;
                bj["radius"] = b.radius;
                bl.push_back(std::move(bj));
            }
            sets.push_back(std::move(bl));
        }
        j["schottky"] = {{"margin", c.schottky->margin},
                         {"grid_size", c.schottky->grid_size},
                         {"sets", std::move(sets)}};
    }
    if (c.audit)
        j["audit"] = {{"epsilon", c.audit->epsilon},
                      {"sample_size", c.audit->sample_size},
                      {"mag_lo", c.audit->mag_lo},
                      {"mag_hi", c.audit->mag_hi},
                      {"r_pad", c.audit->r_pad},
                      {"s_offset", c.audit->s_offset}};
    if (c.delta_override) j["delta_override"] = *c.delta_override;
    return j;
}

/// FNV-1a over the canonical serialization; stamped on every report so a
/// result can be traced to the exact configuration that produced it.
inline std::string config_digest(const Config& c) {
    const std::string dump = serialize_config(c).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline GroupSpec to_group_spec(const Config& c) {
    GroupSpec spec;
    spec.dim = c.dim;
    spec.phi = {c.phi_c1, c.phi_c2};
    spec.phi_prime = {c.phi_prime_c1, c.phi_prime_c2};
    for (std::size_t i = 0; i < c.factors.size(); ++i) {
        const Config::Factor& f = c.factors[i];
        FactorSpec fs;
        fs.id = static_cast<int>(i);
        fs.kind = f.kind == "cyclic" ? FactorSpec::Kind::Cyclic
                                     : FactorSpec::Kind::FinitelyGenerated;
        fs.peripheral = f.peripheral;
        for (const auto& [name, rows] : f.generators) {
            if (static_cast<int>(rows.size()) != c.dim)
                throw ConfigError("generator " + name + " is not " +
                                  std::to_string(c.dim) + "x" +
                                  std::to_string(c.dim));
            Matrix m(c.dim, c.dim);
            for (int r = 0; r < c.dim; ++r) {
                if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) !=
                    c.dim)
                    throw ConfigError("generator " + name + " row " +
                                      std::to_string(r) + " has wrong length");
                for (int col = 0; col < c.dim; ++col)
                    m(r, col) =
                        rows[static_cast<std::size_t>(r)]
                            [static_cast<std::size_t>(col)];
            }
            try {
                fs.generators.emplace_back(name, ProjMatrix::normalize(m));
            } catch (const SingularMatrix& e) {
                throw ConfigError("generator " + name + ": " + e.what());
            }
        }
        spec.factors.push_back(std::move(fs));
    }
    spec.validate();
    return spec;
}

inline EnumCaps to_caps(const Config& c) {
    EnumCaps caps;
    caps.max_syllables = c.cutoffs.max_syllables;
    caps.max_cyclic_exponent = c.cutoffs.max_cyclic_exponent;
    return caps;
}

inline GammaKProxy to_proxy(const Config& c) {
    GammaKProxy p;
    p.mode = c.proxy.mode == "factor" ? GammaKProxy::Mode::Factor
                                      : GammaKProxy::Mode::Peripheral;
    p.excluded_ball = c.proxy.excluded_ball;
    return p;
}

inline SchottkyData to_schottky(const Config& c, const GroupSpec& spec) {
    if (!c.schottky)
        throw ConfigError("config has no schottky section");
    std::vector<std::vector<FlagBall>> sets(spec.factors.size());
    const auto& s = *c.schottky;
    if (s.sets.size() != spec.factors.size())
        throw ConfigError("schottky.sets must list one set per factor");
    for (std::size_t i = 0; i < s.sets.size(); ++i) {
        for (const Config::SchottkyBall& b : s.sets[i]) {
            if (static_cast<int>(b.line.size()) != spec.dim)
                throw ConfigError("schottky ball line has wrong dimension");
            Vector u(spec.dim);
            for (int k = 0; k < spec.dim; ++k)
                u(k) = b.line[static_cast<std::size_t>(k)];
            Flag center = [&] {
                if (b.normal.empty()) {
                    if (spec.dim != 2)
                        throw ConfigError(
                            "schottky ball needs an explicit normal for dim > 2");
                    return Flag::from_line2(u);
                }
                if (static_cast<int>(b.normal.size()) != spec.dim)
                    throw ConfigError(
                        "schottky ball normal has wrong dimension");
                Vector n(spec.dim);
                for (int k = 0; k < spec.dim; ++k)
                    n(k) = b.normal[static_cast<std::size_t>(k)];
                return Flag(u, n);
            }();
            if (!(b.radius > 0.0 && b.radius < 1.0))
                throw ConfigError("schottky ball radius must lie in (0, 1)");
            sets[i].push_back({std::move(center), b.radius});
        }
    }
    return SchottkyData(std::move(sets), s.margin);
}

}  // namespace gpslab
