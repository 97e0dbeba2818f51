#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gpslab/errors.hpp"
#include "gpslab/measures.hpp"
#include "gpslab/series.hpp"
#include "gpslab/spr.hpp"

namespace gpslab {

/// Shortest round-trippable decimal representation.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

/// JSON cannot carry infinities; degrade them to null.
inline nlohmann::ordered_json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

struct Report {
    std::string command;
    std::string config_digest;
    nlohmann::ordered_json results;
    std::vector<Warning> warnings;
    double seconds = 0.0;  // timing lives outside the deterministic payload

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config_digest"] = config_digest;
        j["results"] = results;
        nlohmann::ordered_json ws = nlohmann::ordered_json::array();
        for (const Warning& w : warnings)
            ws.push_back({{"code", warning_code_name(w.code)},
                          {"message", w.message}});
        j["warnings"] = std::move(ws);
        j["timing"] = {{"seconds", seconds}};
        return j;
    }
};

inline void write_text_file(const std::string& path,
                            const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary: keep LF endings
    if (!out) throw Error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path);
}

// --- CSV builders: UTF-8, header row, '.' decimals, LF line endings ---

inline std::string csv_annuli(const std::vector<Annulus>& annuli) {
    std::string out = "R_lo,R_hi,count\n";
    for (const Annulus& a : annuli) {
        out += format_double(a.lo);
        out += ',';
        out += format_double(a.hi);
        out += ',';
        out += std::to_string(a.count);
        out += '\n';
    }
    return out;
}

inline std::string csv_series(
    const std::vector<std::tuple<double, double, double>>& rows) {
    std::string out = "s,R,partial_sum\n";
    for (const auto& [s, R, q] : rows) {
        out += format_double(s);
        out += ',';
        out += format_double(R);
        out += ',';
        out += format_double(q);
        out += '\n';
    }
    return out;
}

inline std::string csv_shadows(const std::vector<ShadowAuditEntry>& entries) {
    std::string out = "gamma_id,magnitude,mass,ratio\n";
    for (const ShadowAuditEntry& e : entries) {
        out += e.gamma_id;
        out += ',';
        out += format_double(e.magnitude);
        out += ',';
        out += format_double(e.mass);
        out += ',';
        out += format_double(e.ratio);
        out += '\n';
    }
    return out;
}

inline std::string csv_recurrence(const std::vector<RecurrenceRow>& rows) {
    std::string out = "R,partial_sum,increment\n";
    for (const RecurrenceRow& r : rows) {
        out += format_double(r.R);
        out += ',';
        out += format_double(r.partial_sum);
        out += ',';
        out += format_double(r.increment);
        out += '\n';
    }
    return out;
}

// --- JSON fragments shared by several commands ---

inline nlohmann::ordered_json exponent_json(const ExponentEstimate& e) {
    return {{"delta", e.delta},
            {"stderr", e.stderr_},
            {"method", exponent_method_name(e.method)},
            {"window", {e.window_lo, e.window_hi}},
            {"sample_size", e.sample_size}};
}

inline nlohmann::ordered_json annuli_json(const std::vector<Annulus>& annuli) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const Annulus& a : annuli)
        if (a.count > 0)
            out.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
    return out;
}

}  // namespace gpslab
