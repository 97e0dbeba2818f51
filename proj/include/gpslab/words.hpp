#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gpslab/core.hpp"
#include "gpslab/errors.hpp"

namespace gpslab {

/// One syllable of a free-product normal form: a nontrivial element of a
/// single factor, written as a reduced letter sequence (generator index,
/// exponent).  Cyclic factors always have a single letter.
struct Syllable {
    int factor = 0;
    std::vector<std::pair<int, long long>> letters;

    bool trivial() const { return letters.empty(); }
};

struct FactorSpec {
    enum class Kind { Cyclic, FinitelyGenerated };

    int id = 0;
    Kind kind = Kind::Cyclic;
    std::vector<std::pair<std::string, ProjMatrix>> generators;
    bool peripheral = false;
};

struct GroupSpec {
    int dim = 2;
    std::vector<FactorSpec> factors;
    WeightFunctional phi;
    WeightFunctional phi_prime;
    double gap_floor = 1e-6;
    double transversality_floor = 1e-8;

    GPSContext ctx() const { return {dim, phi, transversality_floor}; }
    GPSContext ctx_prime() const { return {dim, phi_prime, transversality_floor}; }

    void validate() const {
        if (dim < 2) throw ConfigError("dim must be >= 2");
        if (factors.empty()) throw ConfigError("at least one factor required");
        if (!phi.valid() || !phi_prime.valid())
            throw ConfigError("weight functionals must have c1, c2 >= 0 and c1 + c2 > 0");
        std::vector<std::string> names;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            const FactorSpec& f = factors[i];
            if (f.id != static_cast<int>(i))
                throw ConfigError("factor ids must be 0..k-1 in order");
            if (f.generators.empty())
                throw ConfigError("factor has no generators");
            if (f.kind == FactorSpec::Kind::Cyclic && f.generators.size() != 1)
                throw ConfigError("cyclic factor must have exactly one generator");
            for (const auto& [name, g] : f.generators) {
                if (g.dim() != dim)
                    throw ConfigError("generator dimension mismatch: " + name);
                names.push_back(name);
            }
        }
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw ConfigError("generator names must be unique");
    }

    /// Elementary means the whole group is a single cyclic factor.
    bool elementary() const {
        return factors.size() == 1 &&
               factors[0].kind == FactorSpec::Kind::Cyclic;
    }

    bool has_peripheral() const {
        return std::any_of(factors.begin(), factors.end(),
                           [](const FactorSpec& f) { return f.peripheral; });
    }
};

/// Group element in alternating normal form, with cached matrix and cached
/// sigma-magnitude.  Adjacent syllables have distinct factors and no
/// syllable is trivial, so distinct normal forms are distinct elements.
struct Word {
    std::vector<Syllable> syllables;
    ProjMatrix matrix;
    double magnitude = 0.0;

    bool is_identity() const { return syllables.empty(); }

    int syllable_count() const { return static_cast<int>(syllables.size()); }

    std::string normal_form_key() const {
        std::string key;
        for (const Syllable& s : syllables) {
            key += std::to_string(s.factor);
            key += ':';
            for (const auto& [g, e] : s.letters) {
                key += std::to_string(g);
                key += '^';
                key += std::to_string(e);
                key += ',';
            }
            key += '|';
        }
        return key;
    }
};

namespace detail {

inline ProjMatrix generator_power(const ProjMatrix& g, long long e) {
    ProjMatrix base = e >= 0 ? g : g.inverse();
    unsigned long long n = static_cast<unsigned long long>(e >= 0 ? e : -e);
    ProjMatrix acc = ProjMatrix::identity(g.dim());
    while (n > 0) {
        if (n & 1ull) acc = acc * base;
        base = base * base;
        n >>= 1;
    }
    return acc;
}

inline ProjMatrix syllable_matrix(const GroupSpec& spec, const Syllable& s) {
    ProjMatrix acc = ProjMatrix::identity(spec.dim);
    for (const auto& [g, e] : s.letters)
        acc = acc * generator_power(spec.factors[s.factor].generators[g].second, e);
    return acc;
}

/// Reduce a letter sequence within one free factor: merge adjacent powers of
/// the same generator, drop zero exponents.
inline void reduce_letters(std::vector<std::pair<int, long long>>& letters) {
    std::vector<std::pair<int, long long>> out;
    for (const auto& [g, e] : letters) {
        if (e == 0) continue;
        if (!out.empty() && out.back().first == g) {
            out.back().second += e;
            if (out.back().second == 0) out.pop_back();
        } else {
            out.emplace_back(g, e);
        }
    }
    letters = std::move(out);
}

}  // namespace detail

inline Word identity_word(const GroupSpec& spec) {
    return Word{{}, ProjMatrix::identity(spec.dim), 0.0};
}

inline Word make_word(const GroupSpec& spec, std::vector<Syllable> syllables) {
    ProjMatrix m = ProjMatrix::identity(spec.dim);
    for (const Syllable& s : syllables) m = m * detail::syllable_matrix(spec, s);
    const double mag = magnitude(spec.ctx(), m);
    return Word{std::move(syllables), m, mag};
}

/// Normal form of the product.  Boundary syllables of the same factor are
/// merged and reduced; full cancellation cascades.
inline Word concat_reduce(const GroupSpec& spec, const Word& w1, const Word& w2) {
    std::vector<Syllable> left = w1.syllables;
    std::size_t j = 0;
    while (!left.empty() && j < w2.syllables.size() &&
           left.back().factor == w2.syllables[j].factor) {
        Syllable merged = left.back();
        merged.letters.insert(merged.letters.end(),
                              w2.syllables[j].letters.begin(),
                              w2.syllables[j].letters.end());
        detail::reduce_letters(merged.letters);
        left.pop_back();
        ++j;
        if (!merged.trivial()) {
            left.push_back(std::move(merged));
            break;
        }
    }
    left.insert(left.end(),
                w2.syllables.begin() + static_cast<std::ptrdiff_t>(j),
                w2.syllables.end());
    ProjMatrix m = left.empty() ? ProjMatrix::identity(spec.dim)
                                : w1.matrix * w2.matrix;
    return Word{std::move(left), m, magnitude(spec.ctx(), m)};
}

inline Word word_inverse(const GroupSpec& spec, const Word& w) {
    std::vector<Syllable> syl;
    syl.reserve(w.syllables.size());
    for (auto it = w.syllables.rbegin(); it != w.syllables.rend(); ++it) {
        Syllable s;
        s.factor = it->factor;
        for (auto lt = it->letters.rbegin(); lt != it->letters.rend(); ++lt)
            s.letters.emplace_back(lt->first, -lt->second);
        syl.push_back(std::move(s));
    }
    ProjMatrix m = w.matrix.inverse();
    return Word{std::move(syl), m, magnitude(spec.ctx(), m)};
}

struct EnumCaps {
    int max_syllables = 16;
    long long max_cyclic_exponent = 1000000;
};

struct EnumStats {
    std::size_t count = 0;
    bool exponent_cap_binding = false;
    bool syllable_cap_binding = false;
    std::vector<Warning> warnings;

    void absorb(const EnumStats& other) {
        exponent_cap_binding |= other.exponent_cap_binding;
        syllable_cap_binding |= other.syllable_cap_binding;
    }

    void finalize() {
        if (exponent_cap_binding)
            warnings.push_back({WarningCode::CapTooSmall,
                                "max_cyclic_exponent truncated words near the cutoff"});
        if (syllable_cap_binding)
            warnings.push_back({WarningCode::CapTooSmall,
                                "max_syllables truncated words near the cutoff"});
    }
};

namespace detail {

/// Extends `parent` by every syllable of factor `f` that keeps the product
/// magnitude <= R, in a fixed deterministic order.  The sink receives
/// (syllable, child matrix, child Cartan vector, child magnitude).
///
/// Pruning is two-layered.  Sound layer: mag(parent * s) >= mag(s) -
/// (c1+c2)*kappa_1(parent), so a syllable with mag(s) beyond R + that slack
/// can be skipped outright.  Practical layer (cyclic exponent ramps would
/// otherwise run to exp(R) for parabolic factors): stop after three
/// consecutive over-R children with nondecreasing magnitude.  Magnitudes of
/// ping-pong products are coarsely additive, so the streak rule is safe in
/// practice but heuristic; truncation at the caps is detected and reported,
/// never silent.
template <typename Sink>
void extend_core(const GroupSpec& spec, const ProjMatrix& parent_m,
                 double parent_k1, int f, double R, const EnumCaps& caps,
                 EnumStats& stats, Sink&& sink) {
    const FactorSpec& fac = spec.factors[f];
    const GPSContext ctx = spec.ctx();
    const double slack = (ctx.phi.c1 + ctx.phi.c2) * parent_k1;
    if (fac.kind == FactorSpec::Kind::Cyclic) {
        const ProjMatrix& gen = fac.generators[0].second;
        for (int sign : {+1, -1}) {
            const ProjMatrix step = sign > 0 ? gen : gen.inverse();
            ProjMatrix syl_m = ProjMatrix::identity(spec.dim);
            int over_streak = 0;
            double prev_child_mag = -1.0;
            for (long long n = 1; n <= caps.max_cyclic_exponent; ++n) {
                syl_m = syl_m * step;
                if (magnitude(ctx, syl_m) - slack > R) break;  // sound bound
                ProjMatrix child_m = parent_m * syl_m;
                CartanVector kv = cartan_project(child_m);
                const double child_mag = ctx.phi.evaluate(kv);
                if (child_mag <= R) {
                    over_streak = 0;
                    if (n == caps.max_cyclic_exponent)
                        stats.exponent_cap_binding = true;
                    sink(Syllable{f, {{0, sign * n}}}, std::move(child_m),
                         std::move(kv), child_mag);
                } else {
                    if (child_mag >= prev_child_mag) {
                        if (++over_streak >= 3) break;
                    } else {
                        over_streak = 0;
                    }
                }
                prev_child_mag = child_mag;
            }
        }
    } else {
        // Reduced words in a free factor, enumerated by letters with a total
        // letter budget; exponents move by +-1 per letter step.
        struct Item {
            ProjMatrix syl_m;
            std::vector<std::pair<int, long long>> letters;
        };
        std::vector<Item> frontier;
        frontier.push_back({ProjMatrix::identity(spec.dim), {}});
        const int ngen = static_cast<int>(fac.generators.size());
        for (long long depth = 1; depth <= caps.max_cyclic_exponent; ++depth) {
            std::vector<Item> next;
            for (const Item& it : frontier) {
                for (int g = 0; g < ngen; ++g) {
                    for (int e : {+1, -1}) {
                        // stay reduced: never undo the previous letter
                        if (!it.letters.empty() && it.letters.back().first == g &&
                            ((it.letters.back().second > 0) != (e > 0)))
                            continue;
                        Item child;
                        child.syl_m =
                            it.syl_m * (e > 0 ? fac.generators[g].second
                                              : fac.generators[g].second.inverse());
                        child.letters = it.letters;
                        if (!child.letters.empty() &&
                            child.letters.back().first == g)
                            child.letters.back().second += e;
                        else
                            child.letters.emplace_back(g, e);
                        if (magnitude(ctx, child.syl_m) - slack > R) continue;
                        ProjMatrix child_m = parent_m * child.syl_m;
                        CartanVector kv = cartan_project(child_m);
                        const double child_mag = ctx.phi.evaluate(kv);
                        if (child_mag <= R) {
                            if (depth == caps.max_cyclic_exponent)
                                stats.exponent_cap_binding = true;
                            sink(Syllable{f, child.letters}, std::move(child_m),
                                 std::move(kv), child_mag);
                        }
                        next.push_back(std::move(child));
                    }
                }
            }
            frontier = std::move(next);
            if (frontier.empty()) break;
        }
    }
}

/// Word-building depth-first expansion: sink(Word&&) for each descendant of
/// `word` with magnitude <= R.
template <typename Sink>
void dfs_words(const GroupSpec& spec, const Word& word, double R,
               const EnumCaps& caps, EnumStats& stats, Sink&& sink) {
    if (word.syllable_count() >= caps.max_syllables) {
        if (word.magnitude <= 0.95 * R) stats.syllable_cap_binding = true;
        return;
    }
    const int last = word.is_identity() ? -1 : word.syllables.back().factor;
    const double parent_k1 = cartan_project(word.matrix).top();
    for (const FactorSpec& fac : spec.factors) {
        if (fac.id == last) continue;
        extend_core(spec, word.matrix, parent_k1, fac.id, R, caps, stats,
                    [&](Syllable&& syl, ProjMatrix&& m, CartanVector&&,
                        double mag) {
                        Word child;
                        child.syllables = word.syllables;
                        child.syllables.push_back(std::move(syl));
                        child.matrix = std::move(m);
                        child.magnitude = mag;
                        sink(Word(child));
                        dfs_words(spec, child, R, caps, stats, sink);
                    });
    }
}

/// Matrix-only depth-first expansion (no syllable bookkeeping):
/// sink(matrix, kappa, magnitude) for each strict descendant.
template <typename Sink>
void dfs_light(const GroupSpec& spec, const ProjMatrix& m, double k1,
               double mag, int last_factor, int nsyl, double R,
               const EnumCaps& caps, EnumStats& stats, Sink&& sink) {
    if (nsyl >= caps.max_syllables) {
        if (mag <= 0.95 * R) stats.syllable_cap_binding = true;
        return;
    }
    for (const FactorSpec& fac : spec.factors) {
        if (fac.id == last_factor) continue;
        extend_core(spec, m, k1, fac.id, R, caps, stats,
                    [&](Syllable&&, ProjMatrix&& cm, CartanVector&& kv,
                        double cmag) {
                        const double ck1 = kv.top();
                        sink(cm, kv, cmag);
                        dfs_light(spec, cm, ck1, cmag, fac.id, nsyl + 1, R,
                                  caps, stats, sink);
                    });
    }
}

constexpr int kEnumShards = 64;

struct FirstLevelEntry {
    ProjMatrix m;
    CartanVector kv;
    double mag;
    int factor;
    Syllable syl;
};

inline std::vector<FirstLevelEntry> first_level(const GroupSpec& spec,
                                                double R, const EnumCaps& caps,
                                                EnumStats& stats) {
    std::vector<FirstLevelEntry> out;
    const ProjMatrix id = ProjMatrix::identity(spec.dim);
    for (const FactorSpec& fac : spec.factors)
        extend_core(spec, id, 0.0, fac.id, R, caps, stats,
                    [&](Syllable&& syl, ProjMatrix&& m, CartanVector&& kv,
                        double mag) {
                        out.push_back({std::move(m), std::move(kv), mag,
                                       fac.id, std::move(syl)});
                    });
    return out;
}

}  // namespace detail

/// Streams every enumerated word (identity first) with magnitude <= R, in a
/// deterministic single-threaded depth-first order.
inline void enumerate_ball_stream(const GroupSpec& spec, double R,
                                  const EnumCaps& caps,
                                  const std::function<void(const Word&)>& visit,
                                  EnumStats* stats_out = nullptr) {
    spec.validate();
    EnumStats stats;
    Word id = identity_word(spec);
    visit(id);
    stats.count = 1;
    detail::dfs_words(spec, id, R, caps, stats, [&](Word&& child) {
        ++stats.count;
        visit(child);
    });
    stats.finalize();
    if (stats_out) *stats_out = stats;
}

/// Collecting enumeration with deterministic sharding: the identity's
/// children are dealt round-robin into a fixed number of shards (independent
/// of the worker count) and shard outputs are concatenated in shard order,
/// so the result is identical for any number of workers.
inline std::vector<Word> enumerate_ball(const GroupSpec& spec, double R,
                                        const EnumCaps& caps,
                                        EnumStats* stats_out = nullptr,
                                        int workers = 1) {
    spec.validate();
    EnumStats root_stats;
    std::vector<detail::FirstLevelEntry> first =
        detail::first_level(spec, R, caps, root_stats);

    std::vector<std::vector<Word>> shard_words(detail::kEnumShards);
    std::vector<EnumStats> shard_stats(detail::kEnumShards);
    std::atomic<int> next_shard{0};
    auto run_shard = [&](int s) {
        for (std::size_t i = static_cast<std::size_t>(s); i < first.size();
             i += detail::kEnumShards) {
            const auto& fl = first[i];
            Word w{{fl.syl}, fl.m, fl.mag};
            shard_words[s].push_back(w);
            detail::dfs_words(spec, w, R, caps, shard_stats[s],
                              [&](Word&& child) {
                                  shard_words[s].push_back(std::move(child));
                              });
        }
    };
    const int nworkers = std::clamp(workers, 1, detail::kEnumShards);
    if (nworkers <= 1) {
        for (int s = 0; s < detail::kEnumShards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nworkers; ++t)
            pool.emplace_back([&] {
                for (int s = next_shard.fetch_add(1); s < detail::kEnumShards;
                     s = next_shard.fetch_add(1))
                    run_shard(s);
            });
        for (std::thread& t : pool) t.join();
    }

    std::vector<Word> out;
    std::size_t total = 1;
    for (const auto& sw : shard_words) total += sw.size();
    out.reserve(total);
    out.push_back(identity_word(spec));
    for (auto& sw : shard_words)
        for (Word& w : sw) out.push_back(std::move(w));

    if (stats_out) {
        EnumStats stats = root_stats;
        for (const EnumStats& s : shard_stats) stats.absorb(s);
        stats.count = out.size();
        stats.finalize();
        *stats_out = stats;
    }
    return out;
}

/// Sharded matrix-only streaming enumeration for large balls.  The sink is
/// called as sink(shard, matrix, kappa, magnitude); calls for distinct
/// shards may run concurrently, so the sink must write only shard-local
/// state.  The identity is NOT visited.  Shard assignment is fixed
/// (first-level index mod 64), so per-shard aggregates are independent of
/// the worker count.
template <typename Sink>
void stream_ball_sharded(const GroupSpec& spec, double R, const EnumCaps& caps,
                         int workers, Sink&& sink,
                         EnumStats* stats_out = nullptr) {
    spec.validate();
    EnumStats root_stats;
    std::vector<detail::FirstLevelEntry> first =
        detail::first_level(spec, R, caps, root_stats);

    std::vector<EnumStats> shard_stats(detail::kEnumShards);
    std::vector<std::size_t> shard_counts(detail::kEnumShards, 0);
    std::atomic<int> next_shard{0};
    auto run_shard = [&](int s) {
        for (std::size_t i = static_cast<std::size_t>(s); i < first.size();
             i += detail::kEnumShards) {
            const auto& fl = first[i];
            ++shard_counts[s];
            sink(s, fl.m, fl.kv, fl.mag);
            detail::dfs_light(spec, fl.m, fl.kv.top(), fl.mag, fl.factor, 1, R,
                              caps, shard_stats[s],
                              [&](const ProjMatrix& m, const CartanVector& kv,
                                  double mag) {
                                  ++shard_counts[s];
                                  sink(s, m, kv, mag);
                              });
        }
    };
    const int nworkers = std::clamp(workers, 1, detail::kEnumShards);
    if (nworkers <= 1) {
        for (int s = 0; s < detail::kEnumShards; ++s) run_shard(s);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nworkers; ++t)
            pool.emplace_back([&] {
                for (int s = next_shard.fetch_add(1); s < detail::kEnumShards;
                     s = next_shard.fetch_add(1))
                    run_shard(s);
            });
        for (std::thread& t : pool) t.join();
    }
    if (stats_out) {
        EnumStats stats = root_stats;
        std::size_t n = 1;  // identity
        for (int s = 0; s < detail::kEnumShards; ++s) {
            stats.absorb(shard_stats[s]);
            n += shard_counts[s];
        }
        stats.count = n;
        stats.finalize();
        *stats_out = stats;
    }
}

/// Restricted enumeration: single-syllable words of one factor only (the
/// nontrivial factor-subgroup elements), streamed in deterministic order.
template <typename Sink>  // sink(matrix, kappa, magnitude)
void stream_factor_elements(const GroupSpec& spec, int factor_id, double R,
                            const EnumCaps& caps, Sink&& sink,
                            EnumStats* stats_out = nullptr) {
    spec.validate();
    EnumStats stats;
    const ProjMatrix id = ProjMatrix::identity(spec.dim);
    detail::extend_core(spec, id, 0.0, factor_id, R, caps, stats,
                        [&](Syllable&&, ProjMatrix&& m, CartanVector&& kv,
                            double mag) {
                            ++stats.count;
                            sink(m, kv, mag);
                        });
    stats.finalize();
    if (stats_out) *stats_out = stats;
}

/// Scans normal-form words up to `depth` syllables (letter budget 2 per
/// syllable) for matrices within tol of +-identity: evidence that the
/// declared presentation is not faithful.  Diagnostic only.
inline std::vector<Word> faithfulness_probe(const GroupSpec& spec, int depth,
                                            double tol) {
    spec.validate();
    EnumCaps caps;
    caps.max_syllables = depth;
    caps.max_cyclic_exponent = 2;
    std::vector<Word> suspicious;
    EnumStats stats;
    Word id = identity_word(spec);
    const Matrix eye = Matrix::Identity(spec.dim, spec.dim);
    detail::dfs_words(spec, id, std::numeric_limits<double>::infinity(), caps,
                      stats, [&](Word&& child) {
                          const Matrix& m = child.matrix.entries();
                          const double dplus = (m - eye).cwiseAbs().maxCoeff();
                          const double dminus = (m + eye).cwiseAbs().maxCoeff();
                          if (std::min(dplus, dminus) <= tol)
                              suspicious.push_back(std::move(child));
                      });
    return suspicious;
}

}  // namespace gpslab
