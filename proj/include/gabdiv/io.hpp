#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gabdiv/divergence.hpp"
#include "gabdiv/entropy.hpp"
#include "gabdiv/error.hpp"
#include "gabdiv/maxent.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/validity.hpp"

namespace gabdiv::io {

using Json = nlohmann::ordered_json;

/// %.17g; non-finite values as "inf", "-inf", "nan".
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v + 0.0); // no "-0"
    return buf;
}

inline Json number(double v) {
    if (!std::isfinite(v)) return format_number(v);
    return v;
}

template <class Range>
Json numbers(const Range& r) {
    Json a = Json::array();
    for (double v : r) a.push_back(number(v));
    return a;
}

namespace detail {

inline void write(std::ostringstream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
            write(os, it.value(), indent, depth + 1);
        }
        os << nl << close << '}';
        return;
    }
    case Json::value_t::array: {
        // Flat numeric arrays stay on one line.
        bool flat = true;
        for (const Json& v : j) flat = flat && !v.is_structured();
        if (j.empty() || flat) {
            os << '[';
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) os << (indent > 0 ? ", " : ",");
                write(os, j[i], indent, depth + 1);
            }
            os << ']';
            return;
        }
        os << '[' << nl;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ',' << nl;
            os << pad;
            write(os, j[i], indent, depth + 1);
        }
        os << nl << close << ']';
        return;
    }
    case Json::value_t::number_float: os << format_number(j.get<double>()); return;
    default: os << j.dump(); return;
    }
}

inline double as_number(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::nan("");
    }
    fail(ErrorKind::BadParams, what + " must be a number");
}

inline std::vector<double> as_numbers(const Json& j, const std::string& what) {
    if (!j.is_array()) fail(ErrorKind::BadParams, what + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const Json& v : j) out.push_back(as_number(v, what));
    return out;
}

inline const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) fail(ErrorKind::BadParams, std::string("missing field '") + key + "'");
    return j.at(key);
}

} // namespace detail

inline std::string dump(const Json& j, int indent = 2) {
    std::ostringstream os;
    detail::write(os, j, indent, 0);
    return os.str();
}

inline Json parse(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::BadParams, std::string("malformed JSON: ") + e.what());
    }
}

inline Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::BadParams, "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

// ---------------------------------------------------------------------------
// Measures

inline Measure measure_from_json(const Json& j) {
    std::vector<double> density = detail::as_numbers(detail::field(j, "density"), "density");
    std::vector<std::string> labels;
    if (j.contains("labels")) {
        if (!j.at("labels").is_array()) fail(ErrorKind::BadParams, "labels must be an array of strings");
        for (const Json& l : j.at("labels")) {
            if (!l.is_string()) fail(ErrorKind::BadParams, "labels must be an array of strings");
            labels.push_back(l.get<std::string>());
        }
    }
    std::vector<double> weight;
    if (j.contains("base_weight")) weight = detail::as_numbers(j.at("base_weight"), "base_weight");
    return Measure::create(std::move(labels), std::move(density), std::move(weight));
}

inline Measure read_measure(const std::string& path) { return measure_from_json(read_json(path)); }

inline Json to_json(const Measure& m) {
    Json j;
    j["labels"] = m.labels();
    j["density"] = numbers(m.density());
    j["base_weight"] = numbers(m.base_weight());
    return j;
}

// ---------------------------------------------------------------------------
// Results

inline Json to_json(const DivergenceValue& d) {
    Json j;
    j["value"] = number(d.value);
    j["regime"] = to_string(d.regime);
    j["scale"] = number(d.scale);
    j["warnings"] = d.warnings;
    return j;
}

inline Json to_json(const EntropyValue& e) {
    Json j;
    j["value"] = number(e.value);
    j["scaled_value"] = number(e.scaled_value);
    j["regime"] = to_string(e.regime);
    return j;
}

inline Json to_json(const ValidityReport& r, const Hyper& h, const std::string& psi) {
    Json j;
    j["psi"] = psi;
    j["alpha"] = number(h.alpha());
    j["beta"] = number(h.beta());
    j["regime"] = to_string(h.regime());
    j["verdict"] = to_string(r.verdict);
    j["failed_condition"] = r.failed_condition ? Json(*r.failed_condition) : Json(nullptr);
    j["evaluations"] = r.evaluations;
    if (r.witness) {
        Json w;
        w["construction"] = r.witness->construction;
        w["value"] = number(r.witness->value);
        w["scale"] = number(r.witness->scale);
        w["p"] = to_json(r.witness->p);
        w["q"] = to_json(r.witness->q);
        j["witness"] = w;
    } else {
        j["witness"] = nullptr;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Maxent

inline MaxEntProblem problem_from_json(const Json& j) {
    MaxEntProblem pr;
    const double n = detail::as_number(detail::field(j, "n"), "n");
    if (!(n >= 1.0) || n != std::floor(n)) fail(ErrorKind::BadParams, "n must be a positive integer");
    pr.n = static_cast<std::size_t>(n);
    const Json& g = j.contains("g") ? j.at("g") : Json::array();
    if (!g.is_array()) fail(ErrorKind::BadParams, "g must be an array of arrays");
    pr.g.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(pr.n));
    for (std::size_t r = 0; r < g.size(); ++r) {
        const std::vector<double> row = detail::as_numbers(g[r], "g row");
        if (row.size() != pr.n)
            fail(ErrorKind::DimensionMismatch, "g row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                                   " entries, n = " + std::to_string(pr.n));
        for (std::size_t i = 0; i < pr.n; ++i) pr.g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = row[i];
    }
    const std::vector<double> targets = j.contains("G") ? detail::as_numbers(j.at("G"), "G") : std::vector<double>{};
    pr.G = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
    pr.h = Hyper(detail::as_number(detail::field(j, "alpha"), "alpha"), detail::as_number(detail::field(j, "beta"), "beta"));
    const Json& psi = j.contains("psi") ? j.at("psi") : Json("log");
    if (!psi.is_string()) fail(ErrorKind::BadParams, "psi must be a spec string");
    pr.f = parse_psi(psi.get<std::string>());
    return pr;
}

inline MaxEntProblem read_problem(const std::string& path) { return problem_from_json(read_json(path)); }

inline Json to_json(const MaxEntSolution& s) {
    Json j;
    j["p"] = numbers(s.p);
    j["q"] = numbers(s.q);
    j["lambda"] = numbers(s.lambda);
    j["nu"] = number(s.nu);
    Json res;
    res["constraint"] = number(s.constraint_residual);
    res["fixed_point"] = number(s.fixed_point_residual);
    j["residuals"] = res;
    j["iterations"] = s.iterations;
    j["trace"] = numbers(s.trace);
    return j;
}

// ---------------------------------------------------------------------------
// Curve

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
    std::string out = "p,entropy_scaled\n";
    for (const CurvePoint& c : pts) out += format_number(c.p) + "," + format_number(c.entropy_scaled) + "\n";
    return out;
}

} // namespace gabdiv::io
