#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rational.hpp"

namespace mdht {

// Finite set of directions v in Q^n. The line direction used by the
// transforms is the lift <v,1>. Points keep their construction order,
// which curve covers rely on.
class DirectionSet {
public:
    DirectionSet() = default;

    DirectionSet(std::size_t dim, std::vector<Point> pts, std::string label)
        : dim_(dim), points_(std::move(pts)), label_(std::move(label)) {
        require(dim_ >= 1, "direction set dimension must be at least 1");
        for (const auto& p : points_)
            require(p.size() == dim_, "point has " + std::to_string(p.size()) +
                                          " coordinates, expected " + std::to_string(dim_));
        auto sorted = points_;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                "direction set contains repeated points");
    }

    // Same as the constructor but drops repeats (first occurrence wins)
    // and records how many were dropped.
    static DirectionSet merging(std::size_t dim, const std::vector<Point>& pts, std::string label) {
        std::vector<std::size_t> idx(pts.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
        std::vector<bool> keep(pts.size(), true);
        std::size_t dropped = 0;
        for (std::size_t k = 1; k < idx.size(); ++k)
            if (pts[idx[k]] == pts[idx[k - 1]]) {
                keep[idx[k]] = false;
                ++dropped;
            }
        std::vector<Point> out;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (keep[i]) out.push_back(pts[i]);
        DirectionSet d(dim, std::move(out), std::move(label));
        d.merged_ = dropped;
        return d;
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<Point>& points() const { return points_; }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    const std::string& label() const { return label_; }
    std::size_t merged_duplicates() const { return merged_; }

    DirectionSet relabeled(std::string label) const {
        DirectionSet d = *this;
        d.label_ = std::move(label);
        return d;
    }

    std::vector<std::vector<double>> as_doubles() const {
        std::vector<std::vector<double>> out;
        out.reserve(points_.size());
        for (const auto& p : points_) out.push_back(to_double(p));
        return out;
    }

    bool contains(const Point& p) const {
        return std::find(points_.begin(), points_.end(), p) != points_.end();
    }

private:
    std::size_t dim_ = 1;
    std::vector<Point> points_;
    std::string label_;
    std::size_t merged_ = 0;
};

inline bool is_subset(const DirectionSet& a, const DirectionSet& b) {
    if (a.dim() != b.dim()) return false;
    auto sb = b.points();
    std::sort(sb.begin(), sb.end());
    return std::all_of(a.points().begin(), a.points().end(),
                       [&](const Point& p) { return std::binary_search(sb.begin(), sb.end(), p); });
}

inline DirectionSet uniform(long long M) {
    require(M >= 1, "uniform set needs M >= 1");
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(M));
    for (long long j = 1; j <= M; ++j) pts.push_back({make_rational(j, M)});
    return DirectionSet(1, std::move(pts), "U_" + std::to_string(M));
}

inline DirectionSet product(const std::vector<DirectionSet>& factors) {
    require(!factors.empty(), "product needs at least one factor");
    std::vector<Point> pts{Point{}};
    std::string label;
    for (const auto& f : factors) {
        require(f.dim() == 1, "product factors must be one-dimensional");
        std::vector<Point> next;
        next.reserve(pts.size() * f.size());
        for (const auto& p : pts)
            for (const auto& q : f.points()) {
                Point r = p;
                r.push_back(q[0]);
                next.push_back(std::move(r));
            }
        pts = std::move(next);
        label += (label.empty() ? "" : "x") + f.label();
    }
    return DirectionSet(factors.size(), std::move(pts), label);
}

// Union over j = 1..R of the block 2^-j + 2^-j * U_M.
inline DirectionSet lacunary_uniform(long long R, long long M) {
    require(R >= 1 && M >= 1, "lacunary_uniform needs R, M >= 1");
    std::vector<Point> pts;
    for (long long j = 1; j <= R; ++j) {
        Rational s = pow2(-j);
        for (long long k = 1; k <= M; ++k) pts.push_back({s + s * make_rational(k, M)});
    }
    return DirectionSet::merging(1, pts, "Theta(R=" + std::to_string(R) + ",M=" + std::to_string(M) + ")");
}

struct GrowthSchedule {
    double alpha = 1.0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> entries;  // (M_N, R_N)
};

inline constexpr std::uint64_t kIntegerCap = std::uint64_t(1) << 62;

// Bounds on log M implied by R: [ (log R)^a / 2, (log R)^a ].
inline std::pair<double, double> sandwich_bounds(double alpha, double R) {
    double t = std::pow(std::log(R), alpha);
    return {0.5 * t, t};
}

inline bool sandwich_holds(double alpha, std::uint64_t M, std::uint64_t R) {
    auto [lo, hi] = sandwich_bounds(alpha, static_cast<double>(R));
    double lm = std::log(static_cast<double>(M));
    return lo <= lm && lm <= hi;
}

inline std::string check_growth_schedule(const GrowthSchedule& s) {
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        auto [M, R] = s.entries[i];
        if (M < 1 || R < 1) return "entry " + std::to_string(i) + " is not positive";
        if (!sandwich_holds(s.alpha, M, R)) return "entry " + std::to_string(i) + " violates the log sandwich";
        if (i > 0) {
            auto [Mp, Rp] = s.entries[i - 1];
            if (!(M > Mp) || M % Mp != 0) return "M does not grow by divisibility at entry " + std::to_string(i);
            if (!(R > Rp)) return "R not strictly increasing at entry " + std::to_string(i);
        }
    }
    return {};
}

inline GrowthSchedule growth_schedule(double alpha, std::size_t count) {
    require(alpha >= 0.5 && alpha <= 1.0, "growth_schedule needs alpha in [1/2, 1]");
    require(count >= 1, "growth_schedule needs count >= 1");
    GrowthSchedule s;
    s.alpha = alpha;
    std::uint64_t Mprev = 1, Rprev = 0;
    const long double cap = static_cast<long double>(kIntegerCap);
    while (s.entries.size() < count) {
        bool placed = false;
        for (std::uint64_t k = 2; !placed; ++k) {
            require(Mprev <= kIntegerCap / k, "growth_schedule: M exceeds the 2^62 cap after " +
                                                  std::to_string(s.entries.size()) + " entries");
            std::uint64_t M = Mprev * k;
            long double lm = std::log(static_cast<long double>(M));
            long double rlo = std::exp(std::pow(lm, 1.0L / alpha));
            long double rhi = std::exp(std::pow(2.0L * lm, 1.0L / alpha));
            require(rlo < cap, "growth_schedule: R exceeds the 2^62 cap after " +
                                   std::to_string(s.entries.size()) + " entries");
            if (rhi > cap) rhi = cap;
            auto R = static_cast<std::uint64_t>(std::ceil(rlo));
            R = std::max(R, Rprev + 1);
            // Nudge across floating boundaries; the checker has the final word.
            for (int t = 0; t < 4 && R <= static_cast<std::uint64_t>(rhi); ++t, ++R)
                if (sandwich_holds(alpha, M, R)) {
                    s.entries.emplace_back(M, R);
                    Mprev = M;
                    Rprev = R;
                    placed = true;
                    break;
                }
        }
    }
    return s;
}

struct GrowthSizes {
    long long N1 = 0, N2 = 0;
};

// Smallest N1, N2 with N_j/2 <= target_j <= 2 N_j.
inline GrowthSizes prescribed_growth_sizes(int n, double alpha, double beta, long long N) {
    require(n >= 2, "prescribed_growth_product needs n >= 2");
    double top = static_cast<double>(n - 1) / (2.0 * n);
    require(alpha > 0 && alpha < top, "alpha must lie in (0, (n-1)/(2n))");
    require(beta >= 0, "beta must be nonnegative");
    require(N >= 2, "N must be at least 2");
    double lN = std::log(static_cast<double>(N));
    double lhs = std::pow(static_cast<double>(N), top - alpha);
    double rhs = std::pow(4.0, top) * std::pow(lN, beta - 1.0);
    if (!(lhs > rhs)) {
        std::ostringstream os;
        os << "N too small: largeness condition N^((n-1)/(2n)-alpha) > 4^((n-1)/(2n)) (log N)^(beta-1) fails ("
           << lhs << " <= " << rhs << ")";
        throw PreconditionError(os.str());
    }
    double t1 = std::pow(static_cast<double>(N), 1.0 - 2.0 * alpha) * std::pow(lN, 2.0 * (1.0 - beta));
    double t2 = std::pow(static_cast<double>(N), 2.0 * alpha / (n - 1)) * std::pow(lN, 2.0 * (beta - 1.0) / (n - 1));
    auto pick = [](double t, const char* name) {
        auto v = std::max<long long>(1, static_cast<long long>(std::ceil(t / 2.0)));
        if (!(v / 2.0 <= t && t <= 2.0 * v))
            throw PreconditionError(std::string("no integer ") + name + " with " + name + "/2 <= target <= 2*" + name);
        return v;
    };
    GrowthSizes g{pick(t1, "N1"), pick(t2, "N2")};
    double card = static_cast<double>(g.N1) * std::pow(static_cast<double>(g.N2), n - 1);
    double scale = std::pow(2.0, n);
    require(card >= N / scale && card <= scale * N, "cardinality outside [N/2^n, 2^n N]");
    return g;
}

inline DirectionSet prescribed_growth_product(int n, double alpha, double beta, long long N) {
    auto g = prescribed_growth_sizes(n, alpha, beta, N);
    std::vector<DirectionSet> f{uniform(g.N1)};
    for (int k = 1; k < n; ++k) f.push_back(uniform(g.N2));
    return product(f);
}

// U_M x U_M listed along the serpentine polyline: odd rows left to right,
// even rows right to left, rows joined by vertical unit steps.
struct CurveSamples {
    DirectionSet omega;
    long long crossing_degree = 1;
    std::vector<Point> polyline;  // breakpoints in curve order
};

inline CurveSamples boustrophedon_curve_samples(long long M) {
    require(M >= 1, "boustrophedon needs M >= 1");
    std::vector<Point> pts;
    for (long long j = 1; j <= M; ++j)
        for (long long i = 1; i <= M; ++i) {
            long long x = (j % 2 == 1) ? i : M + 1 - i;
            pts.push_back({make_rational(x, M), make_rational(j, M)});
        }
    CurveSamples c;
    c.polyline = pts;
    c.omega = DirectionSet(2, std::move(pts), "boustrophedon(M=" + std::to_string(M) + ")");
    c.crossing_degree = M;
    return c;
}

inline DirectionSet affine_image(const DirectionSet& omega, const Point& c, const Point& w) {
    require(c.size() == omega.dim() && w.size() == omega.dim(), "affine_image: vector length mismatch");
    for (const auto& ci : c) require(ci > 0, "affine_image: scale factors must be positive");
    std::vector<Point> pts;
    pts.reserve(omega.size());
    for (const auto& p : omega.points()) {
        Point q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[i] = c[i] * p[i] + w[i];
        pts.push_back(std::move(q));
    }
    return DirectionSet(omega.dim(), std::move(pts), "affine(" + omega.label() + ")");
}

inline DirectionSet embed_slice(const DirectionSet& omega, const Point& w) {
    if (w.empty()) return omega;
    std::vector<Point> pts;
    pts.reserve(omega.size());
    for (auto p : omega.points()) {
        p.insert(p.end(), w.begin(), w.end());
        pts.push_back(std::move(p));
    }
    return DirectionSet(omega.dim() + w.size(), std::move(pts), "slice(" + omega.label() + ")");
}

// Distinct sorted coordinates along one axis.
inline std::vector<Rational> axis_values(const DirectionSet& omega, std::size_t axis) {
    std::vector<Rational> v;
    v.reserve(omega.size());
    for (const auto& p : omega.points()) v.push_back(p[axis]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Omega is a product set iff it fills the product of its projections.
inline bool is_product_set(const DirectionSet& omega) {
    BigInt total = 1;
    for (std::size_t a = 0; a < omega.dim(); ++a) total *= axis_values(omega, a).size();
    return total == omega.size();
}

inline nlohmann::json to_json(const DirectionSet& d) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : d.points()) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& c : p) row.push_back(to_string(c));
        pts.push_back(std::move(row));
    }
    return {{"dim", d.dim()}, {"label", d.label()}, {"points", std::move(pts)}};
}

inline DirectionSet direction_set_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("dim") && j.contains("points"), "direction set JSON needs dim and points");
    auto dim = j.at("dim").get<std::size_t>();
    std::vector<Point> pts;
    for (const auto& row : j.at("points")) {
        Point p;
        for (const auto& c : row) {
            if (c.is_string()) p.push_back(parse_rational(c.get<std::string>()));
            else if (c.is_number_integer()) p.push_back(Rational(c.get<long long>()));
            else throw PreconditionError("coordinates must be \"p/q\" strings or integers");
        }
        pts.push_back(std::move(p));
    }
    return DirectionSet(dim, std::move(pts), j.value("label", std::string("unnamed")));
}

}  // namespace mdht
