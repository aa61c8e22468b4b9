#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/integer.hpp>
#include <json.hpp>

#include "direction_sets.hpp"

namespace mdht {

enum class CellKind { Interval, ConvexPolygon, Box, CurveArc, Point };

inline const char* kind_name(CellKind k) {
    switch (k) {
        case CellKind::Interval: return "interval";
        case CellKind::ConvexPolygon: return "convex-polygon";
        case CellKind::Box: return "box";
        case CellKind::CurveArc: return "curve-arc";
        case CellKind::Point: return "point";
    }
    return "?";
}

inline CellKind kind_from_name(const std::string& s) {
    for (auto k : {CellKind::Interval, CellKind::ConvexPolygon, CellKind::Box, CellKind::CurveArc, CellKind::Point})
        if (s == kind_name(k)) return k;
    throw PreconditionError("unknown cell kind '" + s + "'");
}

// Convex cells (interval, polygon, box, point) are the convex hull of their
// vertices; a curve arc is the polyline through its breakpoints in order.
// Boxes list all 2^n corners.
struct Cell {
    CellKind kind = CellKind::Point;
    std::vector<Point> vertices;
    std::vector<std::size_t> members;
};

struct CellCover {
    DirectionSet omega;
    std::vector<Cell> cells;
    std::vector<std::size_t> representatives;  // one Omega index per cell
    std::string description;
    long long degree = 0;  // number of cutting lines, when built by a partitioner
};

// Hyperplane {y : u . <y,1> = 0}; only the sign of P_u matters, so u is
// kept as an unnormalized integer vector.
struct HyperplaneParam {
    std::vector<BigInt> u;
};

inline int sign_at(const HyperplaneParam& h, const Point& y) {
    Rational s = Rational(h.u.back());
    for (std::size_t a = 0; a < y.size(); ++a) s += Rational(h.u[a]) * y[a];
    return s > 0 ? 1 : (s < 0 ? -1 : 0);
}

// Closed semantics: the cell meets Z(P_u). For a convex hull and for a
// connected polyline this happens exactly when some vertex is on the
// hyperplane or vertices sit on both sides.
inline bool cell_hits_hyperplane(const Cell& c, const HyperplaneParam& h) {
    require(!c.vertices.empty(), "cell has no vertices");
    bool pos = false, neg = false;
    for (const auto& v : c.vertices) {
        int s = sign_at(h, v);
        if (s == 0) return true;
        (s > 0 ? pos : neg) = true;
        if (pos && neg) return true;
    }
    return false;
}

inline long long stab_count(const CellCover& cover, const HyperplaneParam& h) {
    long long n = 0;
    for (const auto& c : cover.cells) n += cell_hits_hyperplane(c, h);
    return n;
}

namespace detail {

inline Rational cross2(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

inline bool on_segment(const Point& p, const Point& a, const Point& b) {
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] < std::min(a[k], b[k]) || p[k] > std::max(a[k], b[k])) return false;
    }
    if (p.size() == 1) return true;
    // collinearity in every coordinate plane
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if ((b[i] - a[i]) * (p[j] - a[j]) != (b[j] - a[j]) * (p[i] - a[i])) return false;
    return true;
}

}  // namespace detail

inline bool cell_contains(const Cell& c, const Point& p) {
    const auto& V = c.vertices;
    switch (c.kind) {
        case CellKind::Point: return V.front() == p;
        case CellKind::Interval:
        case CellKind::Box:
            for (std::size_t a = 0; a < p.size(); ++a) {
                auto [lo, hi] = std::minmax_element(V.begin(), V.end(),
                                                    [a](const Point& x, const Point& y) { return x[a] < y[a]; });
                if (p[a] < (*lo)[a] || p[a] > (*hi)[a]) return false;
            }
            return true;
        case CellKind::CurveArc:
            if (V.size() == 1) return V.front() == p;
            for (std::size_t i = 0; i + 1 < V.size(); ++i)
                if (detail::on_segment(p, V[i], V[i + 1])) return true;
            return false;
        case CellKind::ConvexPolygon: {
            if (V.size() == 1) return V.front() == p;
            if (V.size() == 2) return detail::on_segment(p, V[0], V[1]);
            int orient = 0;
            for (std::size_t i = 0; i < V.size(); ++i) {
                Rational c2 = detail::cross2(V[i], V[(i + 1) % V.size()], p);
                int s = c2 > 0 ? 1 : (c2 < 0 ? -1 : 0);
                if (s == 0) continue;
                if (orient == 0) orient = s;
                else if (s != orient) return false;
            }
            return true;
        }
    }
    return false;
}

// Empty string when the cover is valid, otherwise the first problem found.
inline std::string check_cover(const CellCover& cover) {
    if (cover.representatives.size() != cover.cells.size()) return "one representative per cell required";
    std::vector<bool> seen(cover.omega.size(), false);
    for (std::size_t j = 0; j < cover.cells.size(); ++j) {
        const auto& c = cover.cells[j];
        if (c.members.empty()) return "cell " + std::to_string(j) + " is empty";
        for (auto m : c.members) {
            if (m >= cover.omega.size()) return "member index out of range";
            if (!cell_contains(c, cover.omega[m])) return "member " + std::to_string(m) + " outside cell " + std::to_string(j);
            seen[m] = true;
        }
        auto r = cover.representatives[j];
        if (std::find(c.members.begin(), c.members.end(), r) == c.members.end())
            return "representative of cell " + std::to_string(j) + " is not a member";
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) return "point " + std::to_string(i) + " is not covered";
    return {};
}

struct StabResult {
    long long e_sup = 0;
    HyperplaneParam witness;
    std::string provenance;  // "exact" or "sampled"
};

namespace detail {

// All cell vertices mapped to a common integer lattice X = D * x.
struct Lattice {
    BigInt D = 1;
    std::vector<Point> unique;              // distinct vertices
    std::vector<std::vector<BigInt>> X;     // lattice coordinates
    std::vector<std::vector<int>> cell_ids; // per cell, distinct vertex ids
    std::size_t bits = 0;                   // max bit length of |X|
};

inline Lattice make_lattice(const CellCover& cover) {
    Lattice L;
    std::map<Point, int> id;
    for (const auto& c : cover.cells) {
        std::vector<int> ids;
        for (const auto& v : c.vertices) {
            auto [it, fresh] = id.emplace(v, static_cast<int>(L.unique.size()));
            if (fresh) L.unique.push_back(v);
            ids.push_back(it->second);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        L.cell_ids.push_back(std::move(ids));
    }
    for (const auto& v : L.unique)
        for (const auto& c : v) L.D = boost::multiprecision::lcm(L.D, denominator(c));
    for (const auto& v : L.unique) {
        std::vector<BigInt> x;
        for (const auto& c : v) {
            BigInt q = numerator(c) * (L.D / denominator(c));
            std::size_t b = q == 0 ? 0 : boost::multiprecision::msb(abs(q)) + 1;
            L.bits = std::max(L.bits, b);
            x.push_back(std::move(q));
        }
        L.X.push_back(std::move(x));
    }
    return L;
}

template <class I>
I narrow(const BigInt& b) {
    if constexpr (std::is_same_v<I, BigInt>) return b;
    else return static_cast<I>(b.convert_to<long long>());
}

inline BigInt widen(const BigInt& b) { return b; }
inline BigInt widen(__int128 v) {
    bool neg = v < 0;
    unsigned __int128 m = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1 : static_cast<unsigned __int128>(v);
    BigInt r = static_cast<unsigned long long>(m >> 64);
    r <<= 64;
    r += static_cast<unsigned long long>(m & ~0ULL);
    return neg ? BigInt(-r) : r;
}

template <class I>
int sgn(const I& v) {
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
}

struct BestLine {
    long long count = -1;
    int i = -1, j = -1;
    int sigma = 1;
    BigInt tau2;  // doubled threshold along the line
};

// Lines through vertex pairs, each perturbed to every generic sign pattern
// of the vertices lying on it.
template <class I>
BestLine search_plane(const Lattice& L) {
    const int V = static_cast<int>(L.unique.size());
    std::vector<std::array<I, 2>> P(V);
    for (int r = 0; r < V; ++r) P[r] = {narrow<I>(L.X[r][0]), narrow<I>(L.X[r][1])};
    const int C = static_cast<int>(L.cell_ids.size());
    std::vector<int> side(V);
    std::vector<I> t(V);
    std::vector<char> posOff(C), negOff(C), hasOn(C);
    std::vector<I> mn(C), mx(C);
    BestLine best;
    std::vector<I> ts;
    std::vector<int> var;
    for (int i = 0; i < V; ++i)
        for (int j = i + 1; j < V; ++j) {
            const I dx = P[j][0] - P[i][0], dy = P[j][1] - P[i][1];
            for (int r = 0; r < V; ++r) {
                const I rx = P[r][0] - P[i][0], ry = P[r][1] - P[i][1];
                side[r] = sgn<I>(dx * ry - dy * rx);
                if (side[r] == 0) t[r] = dx * rx + dy * ry;
            }
            long long base = 0;
            var.clear();
            ts.clear();
            for (int c = 0; c < C; ++c) {
                posOff[c] = negOff[c] = hasOn[c] = 0;
                for (int r : L.cell_ids[c]) {
                    if (side[r] > 0) posOff[c] = 1;
                    else if (side[r] < 0) negOff[c] = 1;
                    else {
                        if (!hasOn[c]) mn[c] = mx[c] = t[r];
                        else {
                            if (t[r] < mn[c]) mn[c] = t[r];
                            if (t[r] > mx[c]) mx[c] = t[r];
                        }
                        hasOn[c] = 1;
                    }
                }
                if (posOff[c] && negOff[c]) ++base;
                else if (hasOn[c]) var.push_back(c);
            }
            if (base + static_cast<long long>(var.size()) <= best.count) continue;
            for (int r = 0; r < V; ++r)
                if (side[r] == 0) ts.push_back(t[r]);
            std::sort(ts.begin(), ts.end());
            ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
            std::vector<I> taus{I(2) * ts.front() - I(2)};
            for (std::size_t m = 0; m + 1 < ts.size(); ++m) taus.push_back(ts[m] + ts[m + 1]);
            for (int sigma : {1, -1})
                for (const I& tau2 : taus) {
                    long long cnt = base;
                    for (int c : var) {
                        bool above = I(2) * mx[c] > tau2, below = I(2) * mn[c] < tau2;
                        bool plusOn = sigma > 0 ? above : below;
                        bool minusOn = sigma > 0 ? below : above;
                        cnt += (posOff[c] || plusOn) && (negOff[c] || minusOn);
                    }
                    if (cnt > best.count) {
                        best.count = cnt;
                        best.i = i;
                        best.j = j;
                        best.sigma = sigma;
                        best.tau2 = widen(tau2);
                    }
                }
        }
    return best;
}

// F(X) = 2K L(X) + sigma (2 d.(X - P_i) - tau2), with K large enough that
// off-line vertices keep the sign of L. Returned in original coordinates.
inline HyperplaneParam plane_witness(const Lattice& L, const BestLine& b) {
    const auto& Pi = L.X[b.i];
    const auto& Pj = L.X[b.j];
    BigInt dx = Pj[0] - Pi[0], dy = Pj[1] - Pi[1];
    BigInt K = 0;
    for (const auto& r : L.X) {
        BigInt v = abs(BigInt(2) * (dx * (r[0] - Pi[0]) + dy * (r[1] - Pi[1])) - b.tau2);
        if (v > K) K = v;
    }
    K += 1;
    // L(X) = dx (Y - Piy) - dy (X - Pix)
    BigInt a = BigInt(2) * K * (-dy) + b.sigma * BigInt(2) * dx;
    BigInt bb = BigInt(2) * K * dx + b.sigma * BigInt(2) * dy;
    BigInt c = BigInt(2) * K * (dy * Pi[0] - dx * Pi[1]) -
               b.sigma * (BigInt(2) * (dx * Pi[0] + dy * Pi[1]) + b.tau2);
    return {{a * L.D, bb * L.D, c}};
}

}  // namespace detail

// Essential supremum of E over hyperplanes. Lines through vertices are
// measure zero, so only generic hyperplanes count; the witness is generic
// and re-verified with the closed-semantics stab_count.
inline StabResult stab_sup_exact(const CellCover& cover) {
    const std::size_t n = cover.omega.dim();
    require(n <= 2, "exact stab_sup is available for n <= 2 only");
    require(!cover.cells.empty(), "stab_sup needs a nonempty cover");
    StabResult res;
    res.provenance = "exact";
    auto L = detail::make_lattice(cover);
    const std::size_t V = L.unique.size();
    if (n == 1) {
        std::vector<Rational> xs;
        for (const auto& v : L.unique) xs.push_back(v[0]);
        std::sort(xs.begin(), xs.end());
        std::vector<Rational> cand{xs.front() - 1};
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) cand.push_back((xs[i] + xs[i + 1]) / 2);
        res.e_sup = -1;
        for (const auto& y : cand) {
            HyperplaneParam h{{denominator(y), -numerator(y)}};
            long long c = stab_count(cover, h);
            if (c > res.e_sup) {
                res.e_sup = c;
                res.witness = h;
            }
        }
    } else if (V < 2) {
        // a generic line misses a lone point
        const auto& p = L.unique.front();
        res.e_sup = 0;
        res.witness = {{0, denominator(p[1]), -numerator(p[1]) - denominator(p[1])}};
    } else {
        detail::BestLine b = L.bits < 40 ? detail::search_plane<__int128>(L) : detail::search_plane<BigInt>(L);
        res.e_sup = b.count;
        res.witness = detail::plane_witness(L, b);
    }
    if (stab_count(cover, res.witness) != res.e_sup)
        throw std::logic_error("stab_sup witness failed re-verification");
    for (const auto& v : L.unique)
        if (sign_at(res.witness, v) == 0) throw std::logic_error("stab_sup witness is not generic");
    return res;
}

// Lower estimate from random generic hyperplanes (any n). All lattice
// coordinates are doubled and offsets are odd, so no vertex is ever hit.
inline StabResult stab_sup_sampled(const CellCover& cover, std::size_t samples = 10000, std::uint64_t seed = 1) {
    require(!cover.cells.empty(), "stab_sup needs a nonempty cover");
    auto L = detail::make_lattice(cover);
    const std::size_t n = cover.omega.dim();
    std::mt19937_64 g(seed);
    StabResult res;
    res.provenance = "sampled";
    res.e_sup = -1;
    std::vector<BigInt> nrm(n);
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& c : nrm) c = static_cast<long long>(g() % 131073) - 65536;
        const auto& r1 = L.X[g() % L.X.size()];
        const auto& r2 = L.X[g() % L.X.size()];
        BigInt p1 = 0, p2 = 0;
        for (std::size_t a = 0; a < n; ++a) {
            p1 += nrm[a] * 2 * r1[a];
            p2 += nrm[a] * 2 * r2[a];
        }
        BigInt mid = (p1 + p2) / 2;
        if (g() % 2) mid = p1 + static_cast<long long>(g() % 7) * 2 - 6;
        BigInt c = -mid;
        if (c % 2 == 0) c += 1;
        long long cnt = 0;
        for (const auto& ids : L.cell_ids) {
            bool pos = false, neg = false;
            for (int r : ids) {
                BigInt F = c;
                for (std::size_t a = 0; a < n; ++a) F += nrm[a] * 2 * L.X[r][a];
                (F > 0 ? pos : neg) = true;
            }
            cnt += pos && neg;
        }
        if (cnt > res.e_sup) {
            res.e_sup = cnt;
            HyperplaneParam h;
            for (std::size_t a = 0; a < n; ++a) h.u.push_back(nrm[a] * 2 * L.D);
            h.u.push_back(c);
            res.witness = h;
        }
    }
    return res;
}

inline StabResult stab_sup(const CellCover& cover, bool exact = true) {
    return exact ? stab_sup_exact(cover) : stab_sup_sampled(cover);
}

namespace detail {

inline std::vector<Point> box_corners(const std::vector<std::array<Rational, 2>>& iv) {
    std::vector<Point> out{Point{}};
    for (const auto& [lo, hi] : iv) {
        std::vector<Point> next;
        for (const auto& p : out)
            for (const auto& x : {lo, hi}) {
                Point q = p;
                q.push_back(x);
                next.push_back(std::move(q));
            }
        out = std::move(next);
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::size_t lexmin_member(const DirectionSet& omega, const std::vector<std::size_t>& members) {
    return *std::min_element(members.begin(), members.end(),
                             [&](std::size_t a, std::size_t b) { return omega[a] < omega[b]; });
}

// Bounding box with the extent doubled about its centre.
inline std::vector<std::array<Rational, 2>> padded_bounds(const DirectionSet& omega) {
    std::vector<std::array<Rational, 2>> b;
    for (std::size_t a = 0; a < omega.dim(); ++a) {
        auto v = axis_values(omega, a);
        Rational w = v.back() - v.front();
        if (w == 0) w = 1;
        b.push_back({v.front() - w / 2, v.back() + w / 2});
    }
    return b;
}

}  // namespace detail

// Splits each axis into groups of consecutive coordinates: floor(N/s)
// groups whose sizes differ by at most one, larger groups first. Cells are
// the products of the group slabs, slab boundaries at midpoints between
// neighbouring groups and the outer ends clipped to the padded box.
inline CellCover grid_cover_for_product(const DirectionSet& omega, const std::vector<long long>& group_sizes) {
    require(is_product_set(omega), "grid cover needs a product direction set");
    const std::size_t n = omega.dim();
    require(group_sizes.size() == n, "one group size per axis required");
    auto pad = detail::padded_bounds(omega);
    std::vector<std::vector<std::array<Rational, 2>>> slabs(n);
    std::vector<std::map<Rational, std::size_t>> group_of(n);
    std::string desc = "grid(";
    for (std::size_t a = 0; a < n; ++a) {
        require(group_sizes[a] >= 1, "group sizes must be positive");
        auto vals = axis_values(omega, a);
        const std::size_t N = vals.size();
        std::size_t G = std::max<std::size_t>(1, N / static_cast<std::size_t>(group_sizes[a]));
        std::size_t Q = N / G, rem = N % G, pos = 0;
        std::vector<std::pair<std::size_t, std::size_t>> span;  // [first, last]
        for (std::size_t gi = 0; gi < G; ++gi) {
            std::size_t sz = Q + (gi < rem ? 1 : 0);
            span.emplace_back(pos, pos + sz - 1);
            for (std::size_t k = pos; k < pos + sz; ++k) group_of[a][vals[k]] = gi;
            pos += sz;
        }
        for (std::size_t gi = 0; gi < G; ++gi) {
            Rational lo = gi == 0 ? pad[a][0] : (vals[span[gi - 1].second] + vals[span[gi].first]) / 2;
            Rational hi = gi + 1 == G ? pad[a][1] : (vals[span[gi].second] + vals[span[gi + 1].first]) / 2;
            slabs[a].push_back({lo, hi});
        }
        desc += (a ? "," : "") + std::to_string(G);
    }
    desc += ")";
    // cell index = mixed radix over group indices, first axis slowest
    std::vector<std::size_t> radix(n);
    std::size_t cells = 1;
    for (std::size_t a = n; a-- > 0;) {
        radix[a] = cells;
        cells *= slabs[a].size();
    }
    CellCover cover;
    cover.omega = omega;
    cover.description = desc;
    cover.cells.resize(cells);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        std::size_t id = 0;
        for (std::size_t a = 0; a < n; ++a) id += group_of[a].at(omega[i][a]) * radix[a];
        cover.cells[id].members.push_back(i);
    }
    for (std::size_t id = 0; id < cells; ++id) {
        std::vector<std::array<Rational, 2>> iv(n);
        for (std::size_t a = 0; a < n; ++a) iv[a] = slabs[a][(id / radix[a]) % slabs[a].size()];
        auto& c = cover.cells[id];
        c.kind = n == 1 ? CellKind::Interval : CellKind::Box;
        c.vertices = detail::box_corners(iv);
        cover.representatives.push_back(detail::lexmin_member(omega, c.members));
    }
    return cover;
}

// Position of each sample along the polyline as segment index plus
// fraction; positions must strictly increase or the input is unordered.
inline std::vector<Rational> curve_positions(const std::vector<Point>& poly, const DirectionSet& samples) {
    require(!poly.empty(), "curve polyline is empty");
    std::vector<Rational> pos;
    for (const auto& p : samples.points()) {
        std::optional<Rational> found;
        std::size_t s0 = pos.empty() ? 0 : static_cast<std::size_t>(numerator(pos.back()) / denominator(pos.back()));
        for (std::size_t s = s0; s < poly.size() && !found; ++s) {
            std::optional<Rational> here;
            if (s + 1 < poly.size() && detail::on_segment(p, poly[s], poly[s + 1])) {
                std::size_t ax = 0;
                while (ax < p.size() && poly[s][ax] == poly[s + 1][ax]) ++ax;
                Rational t = ax == p.size() ? Rational(0) : (p[ax] - poly[s][ax]) / (poly[s + 1][ax] - poly[s][ax]);
                here = Rational(static_cast<long long>(s)) + t;
            } else if (s + 1 == poly.size() && poly[s] == p) {
                here = Rational(static_cast<long long>(s));
            }
            if (here && (pos.empty() || *here > pos.back())) found = here;
        }
        if (!found) throw PreconditionError("curve samples are not in curve order");
        pos.push_back(*found);
    }
    return pos;
}

// Consecutive groups of pair_size samples; each cell is the piece of the
// polyline from the group's first sample to its last.
inline CellCover curve_cover(const DirectionSet& samples, const std::vector<Point>& polyline, long long pair_size) {
    require(pair_size >= 1, "pair_size must be positive");
    require(!samples.empty(), "curve cover needs samples");
    auto pos = curve_positions(polyline, samples);
    CellCover cover;
    cover.omega = samples;
    cover.description = "curve(pair=" + std::to_string(pair_size) + ")";
    for (std::size_t first = 0; first < samples.size(); first += static_cast<std::size_t>(pair_size)) {
        std::size_t last = std::min(samples.size(), first + static_cast<std::size_t>(pair_size)) - 1;
        Cell c;
        c.kind = first == last ? CellKind::Point : CellKind::CurveArc;
        c.vertices.push_back(samples[first]);
        for (std::size_t k = 0; k < polyline.size(); ++k) {
            Rational rk(static_cast<long long>(k));
            if (rk > pos[first] && rk < pos[last]) c.vertices.push_back(polyline[k]);
        }
        if (last != first) c.vertices.push_back(samples[last]);
        for (std::size_t m = first; m <= last; ++m) c.members.push_back(m);
        cover.cells.push_back(std::move(c));
        cover.representatives.push_back(first);
    }
    return cover;
}

inline CellCover curve_cover(const CurveSamples& cs, long long pair_size) {
    return curve_cover(cs.omega, cs.polyline, pair_size);
}

// Oriented line a x + b y + c = 0; the positive side is where the form is > 0.
struct OrientedLine {
    Rational a, b, c;
    int side(const Point& p) const {
        Rational v = a * p[0] + b * p[1] + c;
        return v > 0 ? 1 : (v < 0 ? -1 : 0);
    }
};

namespace detail {

struct HamCandidate {
    bool ok = false;
    BigInt nx, ny, c;  // nx X + ny Y = c in lattice coordinates
};

template <class I>
HamCandidate ham_search(const std::vector<std::array<I, 2>>& A, const std::vector<std::array<I, 2>>& B,
                        const std::vector<std::array<I, 2>>& pts) {
    std::vector<I> pa(A.size()), pb(B.size());
    auto bisect = [](std::vector<I>& v, I& lo, I& hi) {
        const std::size_t m = v.size(), h = m / 2;
        // lo = v_(m - h), hi = v_(h + 1), one-based order statistics
        std::nth_element(v.begin(), v.begin() + static_cast<long>(m - h - 1), v.end());
        lo = v[m - h - 1];
        std::nth_element(v.begin(), v.begin() + static_cast<long>(h), v.end());
        hi = v[h];
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const I nx = -(pts[j][1] - pts[i][1]), ny = pts[j][0] - pts[i][0];
            for (std::size_t k = 0; k < A.size(); ++k) pa[k] = nx * A[k][0] + ny * A[k][1];
            for (std::size_t k = 0; k < B.size(); ++k) pb[k] = nx * B[k][0] + ny * B[k][1];
            bool hasA = !pa.empty(), hasB = !pb.empty();
            I loA{}, hiA{}, loB{}, hiB{};
            if (hasA) bisect(pa, loA, hiA);
            if (hasB) bisect(pb, loB, hiB);
            I c;
            if (hasA && hasB) {
                I lo = std::max(loA, loB), hi = std::min(hiA, hiB);
                if (lo > hi) continue;
                c = lo;
            } else {
                c = hasA ? loA : loB;
            }
            return {true, widen(nx), widen(ny), widen(c)};
        }
    return {};
}

}  // namespace detail

// Exact ham-sandwich cut: both open sides hold at most floor(|A|/2) points
// of A and floor(|B|/2) of B. Some optimal line has a normal perpendicular
// to a difference of two input points, so those directions are scanned.
inline OrientedLine ham_sandwich_line(const std::vector<Point>& A, const std::vector<Point>& B) {
    for (const auto& p : A) require(p.size() == 2, "ham-sandwich points must be planar");
    for (const auto& p : B) require(p.size() == 2, "ham-sandwich points must be planar");
    std::vector<Point> pts(A);
    pts.insert(pts.end(), B.begin(), B.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.empty()) return {1, 0, 0};
    if (pts.size() == 1) return {1, 0, -pts[0][0]};
    BigInt D = 1;
    for (const auto& p : pts)
        for (const auto& c : p) D = boost::multiprecision::lcm(D, denominator(c));
    std::size_t bits = 0;
    auto lat = [&](const Point& p) {
        std::array<BigInt, 2> x;
        for (int k = 0; k < 2; ++k) {
            x[k] = numerator(p[k]) * (D / denominator(p[k]));
            if (x[k] != 0) bits = std::max<std::size_t>(bits, boost::multiprecision::msb(abs(x[k])) + 1);
        }
        return x;
    };
    std::vector<std::array<BigInt, 2>> LA, LB, LP;
    for (const auto& p : A) LA.push_back(lat(p));
    for (const auto& p : B) LB.push_back(lat(p));
    for (const auto& p : pts) LP.push_back(lat(p));
    auto run = [&](auto tag) {
        using I = decltype(tag);
        auto conv = [](const std::vector<std::array<BigInt, 2>>& v) {
            std::vector<std::array<I, 2>> o;
            for (const auto& x : v) o.push_back({detail::narrow<I>(x[0]), detail::narrow<I>(x[1])});
            return o;
        };
        return detail::ham_search<I>(conv(LA), conv(LB), conv(LP));
    };
    auto h = bits < 40 ? run(__int128{}) : run(BigInt{});
    if (!h.ok) throw std::logic_error("ham-sandwich search found no cut");
    return {Rational(h.nx * D), Rational(h.ny * D), Rational(-h.c)};
}

namespace detail {

using Polygon = std::vector<Point>;

// Part of a convex polygon where s * (a x + b y + c) >= 0.
inline Polygon clip(const Polygon& poly, const OrientedLine& l, int s) {
    Polygon out;
    auto val = [&](const Point& p) { return Rational(s) * (l.a * p[0] + l.b * p[1] + l.c); };
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point& P = poly[i];
        const Point& Q = poly[(i + 1) % m];
        Rational vp = val(P), vq = val(Q);
        if (vp >= 0) out.push_back(P);
        if ((vp > 0 && vq < 0) || (vp < 0 && vq > 0)) {
            Rational t = vp / (vp - vq);
            out.push_back({P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])});
        }
    }
    Polygon dedup;
    for (auto& p : out)
        if (dedup.empty() || dedup.back() != p) dedup.push_back(p);
    while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
    return dedup;
}

inline Rational area2(const Polygon& p) {
    Rational s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto& b = p[(i + 1) % p.size()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    return s;
}

}  // namespace detail

struct Partition {
    CellCover cover;
    long long degree = 0;
    std::vector<OrientedLine> lines;
};

// Iterated ham-sandwich cuts. Each round pairs up the current cells, cuts
// every pair with one line, and splits every cell by all of the round's
// lines. Points on a line are dealt to whichever side of their own cell is
// lighter, which keeps each piece within ceil(|cell|/2).
inline Partition partition_points_2d(const DirectionSet& omega, int rounds) {
    require(omega.dim() == 2, "partition_points_2d needs a planar direction set");
    require(rounds >= 1, "rounds must be at least 1");
    require(!omega.empty(), "cannot partition an empty set");
    auto pad = detail::padded_bounds(omega);
    struct Piece {
        detail::Polygon poly;
        std::vector<std::size_t> members;
    };
    std::vector<Piece> cells{{{{pad[0][0], pad[1][0]}, {pad[0][1], pad[1][0]},
                               {pad[0][1], pad[1][1]}, {pad[0][0], pad[1][1]}},
                              {}}};
    for (std::size_t i = 0; i < omega.size(); ++i) cells[0].members.push_back(i);
    Partition out;
    for (int r = 0; r < rounds; ++r) {
        std::vector<OrientedLine> fresh;
        std::vector<std::size_t> owner_line(cells.size());
        for (std::size_t c = 0; c < cells.size(); c += 2) {
            std::vector<Point> A, B;
            for (auto m : cells[c].members) A.push_back(omega[m]);
            std::size_t d = c + 1 < cells.size() ? c + 1 : c;
            for (auto m : cells[d].members) B.push_back(omega[m]);
            owner_line[c] = owner_line[d] = fresh.size();
            fresh.push_back(ham_sandwich_line(A, B));
        }
        std::vector<Piece> next;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& cell = cells[c];
            // side labels, balanced per (cell, line)
            std::vector<std::vector<int>> lab(cell.members.size(), std::vector<int>(fresh.size()));
            for (std::size_t L = 0; L < fresh.size(); ++L) {
                long long plus = 0, minus = 0;
                std::vector<std::size_t> on;
                for (std::size_t k = 0; k < cell.members.size(); ++k) {
                    int s = fresh[L].side(omega[cell.members[k]]);
                    lab[k][L] = s;
                    if (s > 0) ++plus;
                    else if (s < 0) ++minus;
                    else on.push_back(k);
                }
                for (auto k : on) {
                    int s = plus <= minus ? 1 : -1;
                    lab[k][L] = s;
                    (s > 0 ? plus : minus) += 1;
                }
            }
            std::map<std::vector<int>, std::vector<std::size_t>> groups;
            for (std::size_t k = 0; k < cell.members.size(); ++k) {
                const Point& p = omega[cell.members[k]];
                auto key = lab[k];
                auto region = [&](const std::vector<int>& kk) {
                    detail::Polygon poly = cell.poly;
                    for (std::size_t L = 0; L < fresh.size() && poly.size() >= 3; ++L) poly = detail::clip(poly, fresh[L], kk[L]);
                    return poly;
                };
                auto good = [&](const std::vector<int>& kk) {
                    auto poly = region(kk);
                    return poly.size() >= 3 && detail::area2(poly) != 0 &&
                           cell_contains({CellKind::ConvexPolygon, poly, {}}, p);
                };
                if (!good(key)) {
                    // p sits on several lines or on the cell boundary; try the
                    // other sides of the lines through p
                    std::vector<std::size_t> through;
                    for (std::size_t L = 0; L < fresh.size(); ++L)
                        if (fresh[L].side(p) == 0) through.push_back(L);
                    bool fixed = false;
                    for (std::size_t mask = 1; mask < (std::size_t(1) << through.size()) && !fixed; ++mask) {
                        auto kk = key;
                        for (std::size_t b = 0; b < through.size(); ++b)
                            if (mask >> b & 1) kk[through[b]] = -kk[through[b]];
                        if (good(kk)) {
                            key = kk;
                            fixed = true;
                        }
                    }
                    if (!fixed) throw std::logic_error("partition: no cell of positive area contains a point");
                }
                groups[key].push_back(cell.members[k]);
            }
            for (auto& [key, mem] : groups) {
                detail::Polygon poly = cell.poly;
                for (std::size_t L = 0; L < fresh.size(); ++L) poly = detail::clip(poly, fresh[L], key[L]);
                next.push_back({std::move(poly), std::move(mem)});
            }
        }
        cells = std::move(next);
        out.lines.insert(out.lines.end(), fresh.begin(), fresh.end());
    }
    out.degree = static_cast<long long>(out.lines.size());
    out.cover.omega = omega;
    out.cover.degree = out.degree;
    out.cover.description = "hamsandwich(rounds=" + std::to_string(rounds) + ")";
    for (auto& c : cells) {
        Cell cell{CellKind::ConvexPolygon, std::move(c.poly), std::move(c.members)};
        out.cover.representatives.push_back(detail::lexmin_member(omega, cell.members));
        out.cover.cells.push_back(std::move(cell));
    }
    return out;
}

inline nlohmann::json to_json(const CellCover& cover) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t j = 0; j < cover.cells.size(); ++j) {
        const auto& c = cover.cells[j];
        nlohmann::json verts = nlohmann::json::array();
        for (const auto& v : c.vertices) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& x : v) row.push_back(to_string(x));
            verts.push_back(row);
        }
        cells.push_back({{"kind", kind_name(c.kind)},
                         {"vertices", verts},
                         {"members", c.members},
                         {"representative", cover.representatives[j]}});
    }
    return {{"omega", to_json(cover.omega)},
            {"description", cover.description},
            {"degree", cover.degree},
            {"cells", cells}};
}

inline CellCover cover_from_json(const nlohmann::json& j) {
    CellCover cover;
    cover.omega = direction_set_from_json(j.at("omega"));
    cover.description = j.value("description", std::string());
    cover.degree = j.value("degree", 0LL);
    for (const auto& cj : j.at("cells")) {
        Cell c;
        c.kind = kind_from_name(cj.at("kind").get<std::string>());
        for (const auto& row : cj.at("vertices")) {
            Point p;
            for (const auto& x : row) p.push_back(parse_rational(x.get<std::string>()));
            require(p.size() == cover.omega.dim(), "cell vertex has the wrong dimension");
            c.vertices.push_back(std::move(p));
        }
        c.members = cj.at("members").get<std::vector<std::size_t>>();
        cover.representatives.push_back(cj.at("representative").get<std::size_t>());
        cover.cells.push_back(std::move(c));
    }
    auto problem = check_cover(cover);
    require(problem.empty(), "invalid cover: " + problem);
    return cover;
}

}  // namespace mdht
