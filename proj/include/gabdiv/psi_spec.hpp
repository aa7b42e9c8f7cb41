#pragma once

#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "gabdiv/error.hpp"
#include "gabdiv/psi.hpp"

namespace gabdiv {

// Text form of a generating function:
//   identity | log | cdf-exp | cdf-normal | power:PHI | bridge:C1,C2
//   pwl:a1,b1,c1;...;a_{k+1},b_{k+1} | lin:W1*S1+W2*S2 | comp:S1,S2
// Parentheses may wrap any nested spec.

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string_view strip_parens(std::string_view s) {
    s = trim(s);
    while (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
        int depth = 0;
        bool wraps = true;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '(') ++depth;
            if (s[i] == ')') --depth;
            if (depth == 0 && i + 1 < s.size()) {
                wraps = false;
                break;
            }
        }
        if (!wraps) break;
        s = trim(s.substr(1, s.size() - 2));
    }
    return s;
}

inline double parse_number(std::string_view s) {
    const std::string t(trim(s));
    if (t.empty()) fail(ErrorKind::BadParams, "empty number in psi spec");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) fail(ErrorKind::BadParams, "bad number '" + t + "' in psi spec");
    return v;
}

inline std::vector<double> parse_numbers(std::string_view s, std::string_view seps) {
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
            out.push_back(parse_number(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

/// Positions of `sep` outside parentheses. A '+' that is an exponent sign is skipped.
inline std::vector<std::size_t> top_level(std::string_view s, char sep) {
    std::vector<std::size_t> pos;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char ch = s[i];
        if (ch == '(') ++depth;
        else if (ch == ')') --depth;
        else if (ch == sep && depth == 0) {
            if (sep == '+' && i >= 2 && (s[i - 1] == 'e' || s[i - 1] == 'E') &&
                (std::isdigit(static_cast<unsigned char>(s[i - 2])) || s[i - 2] == '.'))
                continue;
            pos.push_back(i);
        }
    }
    return pos;
}

} // namespace detail

inline GenFn parse_psi(std::string_view spec) {
    using namespace detail;
    spec = strip_parens(spec);
    const std::size_t colon = spec.find(':');
    const std::string head(trim(spec.substr(0, colon)));
    const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);

    if (colon == std::string_view::npos) return builtin(head);
    if (head == "power" || head == "bridge") return builtin(head, parse_numbers(rest, ","));
    if (head == "pwl") return builtin(head, parse_numbers(rest, ",;"));
    if (head == "lin") {
        std::vector<GenFn> fs;
        std::vector<double> ws;
        std::size_t start = 0;
        auto terms = top_level(rest, '+');
        terms.push_back(rest.size());
        for (std::size_t end : terms) {
            const std::string_view term = trim(rest.substr(start, end - start));
            const auto star = top_level(term, '*');
            if (star.empty()) fail(ErrorKind::BadParams, "lin terms must look like W*SPEC");
            ws.push_back(parse_number(term.substr(0, star.front())));
            fs.push_back(parse_psi(term.substr(star.front() + 1)));
            start = end + 1;
        }
        return combine_linear(std::move(fs), std::move(ws));
    }
    if (head == "comp") {
        // The outer spec may itself contain commas, so try each split point.
        for (std::size_t cut : top_level(rest, ',')) {
            try {
                GenFn outer = parse_psi(rest.substr(0, cut));
                GenFn inner = parse_psi(rest.substr(cut + 1));
                return compose(std::move(outer), std::move(inner));
            } catch (const Error&) {
            }
        }
        fail(ErrorKind::BadParams, "comp expects two specs separated by a comma: '" + std::string(rest) + "'");
    }
    fail(ErrorKind::BadParams, "unknown psi spec '" + std::string(spec) + "'");
}

} // namespace gabdiv
