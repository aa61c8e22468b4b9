#pragma once

#include <cmath>
#include <limits>

namespace mdht {

// Arithmetic rounded toward +infinity built from round-to-nearest plus an
// exact error term: if the nearest result fell below the true value, step
// one ulp up. Exact results stay exact, so integer recursions remain
// integers.

inline double up_add(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return err > 0 ? std::nextafter(s, std::numeric_limits<double>::infinity()) : s;
}

inline double up_mul(double a, double b) {
    double p = a * b;
    double err = std::fma(a, b, -p);
    return err > 0 ? std::nextafter(p, std::numeric_limits<double>::infinity()) : p;
}

inline double up_sqrt(double x) {
    double r = std::sqrt(x);
    double err = std::fma(r, r, -x);
    return err < 0 ? std::nextafter(r, std::numeric_limits<double>::infinity()) : r;
}

// value of an almost-orthogonality step: o + sqrt(e) * (m + 1)
inline double ortho_value(double o, double e, double m) { return up_add(o, up_mul(up_sqrt(e), up_add(m, 1.0))); }

}  // namespace mdht
