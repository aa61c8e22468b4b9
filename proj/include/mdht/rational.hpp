#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace mdht {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using Point = std::vector<Rational>;

inline Rational make_rational(long long p, long long q = 1) {
    require(q != 0, "zero denominator");
    return Rational(BigInt(p), BigInt(q));
}

// Accepts "p", "p/q" and "-p/q". Anything else is rejected rather than
// silently rounded.
inline Rational parse_rational(std::string_view s) {
    auto digits_ok = [](std::string_view t) {
        if (!t.empty() && (t.front() == '-' || t.front() == '+')) t.remove_prefix(1);
        if (t.empty()) return false;
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };
    auto slash = s.find('/');
    std::string_view num = s.substr(0, slash);
    require(digits_ok(num), "malformed rational '" + std::string(s) + "'");
    if (num.front() == '+') num.remove_prefix(1);
    BigInt p{std::string(num)};
    BigInt q = 1;
    if (slash != std::string_view::npos) {
        std::string_view den = s.substr(slash + 1);
        require(digits_ok(den) && den.front() != '-', "malformed rational '" + std::string(s) + "'");
        if (den.front() == '+') den.remove_prefix(1);
        q = BigInt(std::string(den));
        require(q != 0, "zero denominator in '" + std::string(s) + "'");
    }
    return Rational(p, q);
}

inline std::string to_string(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::vector<double> to_double(const Point& p) {
    std::vector<double> out;
    out.reserve(p.size());
    for (const auto& c : p) out.push_back(to_double(c));
    return out;
}

inline Rational pow2(long long e) {
    BigInt one = 1;
    if (e >= 0) return Rational(one << static_cast<unsigned>(e));
    return Rational(one, one << static_cast<unsigned>(-e));
}

}  // namespace mdht
