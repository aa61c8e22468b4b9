#include <gtest/gtest.h>

#include <set>

#include <mdht/cell_geometry.hpp>

using namespace mdht;

namespace {

Rational q(long long p, long long d = 1) { return make_rational(p, d); }

Cell square(Rational x0, Rational y0, Rational s, std::vector<std::size_t> members = {}) {
    return {CellKind::Box, {{x0, y0}, {x0 + s, y0}, {x0, y0 + s}, {x0 + s, y0 + s}}, std::move(members)};
}

// Generic-line sampler on integer data: a cell counts only if its vertices
// lie strictly on both sides, so lines through vertices never over-count.
struct IntCover {
    std::vector<std::vector<std::array<long long, 2>>> cells;
};

long long sampled_max(const IntCover& c, int lines, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_int_distribution<long long> coef(-1000, 1000), off(-30000, 30000);
    long long best = 0;
    for (int i = 0; i < lines; ++i) {
        long long a = coef(g), b = coef(g), k = off(g);
        long long cnt = 0;
        for (const auto& cell : c.cells) {
            bool pos = false, neg = false;
            for (auto [x, y] : cell) {
                long long s = a * x + b * y + k;
                pos |= s > 0;
                neg |= s < 0;
            }
            cnt += pos && neg;
        }
        best = std::max(best, cnt);
    }
    return best;
}

// Random cover: each cell is a random (possibly degenerate) triangle and
// its single member is one of its vertices.
std::pair<CellCover, IntCover> random_cover(std::mt19937_64& g, int cells) {
    std::uniform_int_distribution<int> d(-12, 12);
    CellCover cover;
    IntCover ic;
    std::vector<Point> pts;
    std::set<Point> used;
    for (int j = 0; j < cells; ++j) {
        std::vector<Point> V;
        std::vector<std::array<long long, 2>> iv;
        for (int t = 0; t < 3; ++t) {
            long long x = d(g), y = d(g);
            V.push_back({q(x), q(y)});
            iv.push_back({x, y});
        }
        // member: a vertex not used by another cell
        std::size_t pick = 0;
        while (pick < V.size() && used.count(V[pick])) ++pick;
        if (pick == V.size()) {
            --j;
            continue;
        }
        used.insert(V[pick]);
        pts.push_back(V[pick]);
        cover.cells.push_back({CellKind::ConvexPolygon, V, {pts.size() - 1}});
        cover.representatives.push_back(pts.size() - 1);
        ic.cells.push_back(iv);
    }
    cover.omega = DirectionSet(2, pts, "random");
    return {cover, ic};
}

std::size_t strict_side(const OrientedLine& l, const std::vector<Point>& S, int sign) {
    std::size_t n = 0;
    for (const auto& p : S) n += l.side(p) == sign;
    return n;
}

}  // namespace

TEST(CellHits, PointsBoxesAndTheDiagonalExample) {
    HyperplaneParam diag{{-10, 10, 1}};  // y = x - 1/10
    Cell pt{CellKind::Point, {{q(1, 10), q(0)}}, {}};
    EXPECT_TRUE(cell_hits_hyperplane(pt, diag));
    EXPECT_TRUE(cell_hits_hyperplane(square(q(0), q(0), q(1)), diag));
    EXPECT_FALSE(cell_hits_hyperplane(square(q(5), q(-10), q(1)), HyperplaneParam{{0, 1, -1}}));
}

TEST(StabCount, TwoByTwoGridAgainstTheDiagonal) {
    CellCover c;
    c.omega = uniform(1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c.cells.push_back(square(q(i, 2), q(j, 2), q(1, 2)));
    EXPECT_EQ(stab_count(c, HyperplaneParam{{-10, 10, 1}}), 3);
    // the horizontal line through the bottom row meets exactly that row
    EXPECT_EQ(stab_count(c, HyperplaneParam{{0, 4, -1}}), 2);
}

TEST(StabSup, DisjointIntervalsStabOnce) {
    auto u = uniform(8);
    auto cover = grid_cover_for_product(u, {2});
    EXPECT_EQ(cover.cells.size(), 4u);
    EXPECT_EQ(stab_sup_exact(cover).e_sup, 1);
}

TEST(StabSup, SingleCellAndLonePoint) {
    auto u = product({uniform(2), uniform(2)});
    auto one = grid_cover_for_product(u, {2, 2});
    ASSERT_EQ(one.cells.size(), 1u);
    EXPECT_EQ(stab_sup_exact(one).e_sup, 1);
    CellCover lone;
    lone.omega = DirectionSet(2, {{q(1), q(2)}}, "p");
    lone.cells.push_back({CellKind::Point, {{q(1), q(2)}}, {0}});
    lone.representatives = {0};
    EXPECT_EQ(stab_sup_exact(lone).e_sup, 0);
}

TEST(StabSup, PairGridStaysBelowSideCount) {
    for (long long N1 : {4, 8, 16}) {
        auto u = uniform(N1);
        auto cover = grid_cover_for_product(product({u, u}), {2, 2});
        EXPECT_EQ(check_cover(cover), "");
        auto r = stab_sup_exact(cover);
        EXPECT_LE(r.e_sup, N1 - 1) << N1;
        EXPECT_EQ(stab_count(cover, r.witness), r.e_sup);
    }
}

TEST(StabSup, ExactDominatesSampledOnRandomCovers) {
    std::mt19937_64 g(2024);
    for (int t = 0; t < 40; ++t) {
        auto [cover, ic] = random_cover(g, 1 + static_cast<int>(g() % 12));
        auto r = stab_sup_exact(cover);
        EXPECT_GE(r.e_sup, sampled_max(ic, 20000, t));
        EXPECT_EQ(check_cover(cover), "");
        EXPECT_EQ(stab_count(cover, r.witness), r.e_sup);
        EXPECT_GE(r.e_sup, stab_sup_sampled(cover, 2000, t).e_sup);
    }
}

TEST(StabSup, ExactModeRejectsThreeDimensions) {
    auto p = product({uniform(2), uniform(2), uniform(2)});
    auto cover = grid_cover_for_product(p, {1, 1, 1});
    EXPECT_THROW(stab_sup_exact(cover), PreconditionError);
    auto s = stab_sup_sampled(cover, 500, 3);
    EXPECT_EQ(s.provenance, "sampled");
    EXPECT_LE(s.e_sup, 8);
    EXPECT_GE(s.e_sup, 1);
}

TEST(GridCover, PairsAndRemainders) {
    auto u4 = uniform(4);
    auto c = grid_cover_for_product(product({u4, u4}), {2, 2});
    ASSERT_EQ(c.cells.size(), 4u);
    for (const auto& cell : c.cells) EXPECT_EQ(cell.members.size(), 4u);
    auto single = grid_cover_for_product(product({u4, u4}), {1, 1});
    EXPECT_EQ(single.cells.size(), 16u);

    auto p = product({uniform(6), uniform(4), uniform(2)});
    auto g = grid_cover_for_product(p, {2, 2, 2});
    EXPECT_EQ(check_cover(g), "");
    EXPECT_EQ(g.cells.size(), 3u * 2 * 1);
    for (const auto& cell : g.cells) {
        EXPECT_GE(cell.members.size(), 2u * 2 * 2);
        EXPECT_LE(cell.members.size(), 3u * 3 * 3);
    }
    auto odd = grid_cover_for_product(uniform(7), {2});
    std::vector<std::size_t> sizes;
    for (const auto& cell : odd.cells) sizes.push_back(cell.members.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2}));
    DirectionSet stairs(2, {{q(0), q(0)}, {q(1), q(1)}}, "s");
    EXPECT_THROW(grid_cover_for_product(stairs, {1, 1}), PreconditionError);
}

TEST(CurveCover, PairsWholeArcAndOrderCheck) {
    std::vector<Point> poly;
    for (int i = 0; i < 8; ++i) poly.push_back({q(i), q(i * i)});
    DirectionSet om(2, poly, "parabola");
    auto c = curve_cover(om, poly, 2);
    EXPECT_EQ(c.cells.size(), 4u);
    EXPECT_EQ(check_cover(c), "");
    EXPECT_EQ(curve_cover(om, poly, 8).cells.size(), 1u);
    auto shuffled = poly;
    std::swap(shuffled[2], shuffled[5]);
    DirectionSet bad(2, shuffled, "bad");
    EXPECT_THROW(curve_cover(bad, poly, 2), PreconditionError);
}

TEST(CurveCover, BoustrophedonStabbingBoundedByRows) {
    for (long long M : {2, 3, 4}) {
        auto cs = boustrophedon_curve_samples(M);
        auto cover = curve_cover(cs, 2);
        EXPECT_EQ(check_cover(cover), "");
        EXPECT_LE(stab_sup_exact(cover).e_sup, M);
    }
}

TEST(HamSandwich, SymmetricAndSingletonCases) {
    std::vector<Point> A{{q(0), q(0)}, {q(1), q(0)}}, B{{q(0), q(1)}, {q(1), q(1)}};
    auto l = ham_sandwich_line(A, B);
    for (int s : {1, -1}) {
        EXPECT_LE(strict_side(l, A, s), 1u);
        EXPECT_LE(strict_side(l, B, s), 1u);
    }
    std::vector<Point> a1{{q(3), q(-2)}}, b1{{q(-1), q(5, 2)}};
    auto m = ham_sandwich_line(a1, b1);
    for (int s : {1, -1}) {
        EXPECT_EQ(strict_side(m, a1, s) + strict_side(m, b1, s), 0u);
    }
}

TEST(HamSandwich, BalancedOnRandomInstances) {
    std::mt19937_64 g(77);
    std::uniform_int_distribution<int> d(-30, 30), sz(1, 50);
    for (int t = 0; t < 100; ++t) {
        std::vector<Point> A, B;
        int na = sz(g), nb = sz(g);
        for (int i = 0; i < na; ++i) A.push_back({q(d(g)), q(d(g), 1 + t % 3)});
        for (int i = 0; i < nb; ++i) B.push_back({q(d(g), 2), q(d(g))});
        auto l = ham_sandwich_line(A, B);
        ASSERT_FALSE(l.a == 0 && l.b == 0);
        for (int s : {1, -1}) {
            EXPECT_LE(strict_side(l, A, s), (A.size() + 1) / 2);
            EXPECT_LE(strict_side(l, B, s), (B.size() + 1) / 2);
        }
    }
}

TEST(Partition, OneRoundIsAMedianCut) {
    std::mt19937_64 g(8);
    std::uniform_int_distribution<int> d(0, 1000);
    std::vector<Point> pts;
    std::set<Point> seen;
    while (pts.size() < 21) {
        Point p{q(d(g), 1000), q(d(g), 1000)};
        if (seen.insert(p).second) pts.push_back(p);
    }
    DirectionSet om(2, pts, "r");
    auto p = partition_points_2d(om, 1);
    EXPECT_EQ(p.degree, 1);
    EXPECT_EQ(p.cover.cells.size(), 2u);
    for (const auto& c : p.cover.cells) EXPECT_LE(c.members.size(), 11u + 1);
    EXPECT_EQ(check_cover(p.cover), "");
}

TEST(Partition, ThreeRoundsOnSixtyFourPoints) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 g(seed);
        std::uniform_int_distribution<int> d(-500, 500);
        std::vector<Point> pts;
        std::set<Point> seen;
        while (pts.size() < 64) {
            Point p{q(d(g), 7), q(d(g), 11)};
            if (seen.insert(p).second) pts.push_back(p);
        }
        auto p = partition_points_2d(DirectionSet(2, pts, "r"), 3);
        EXPECT_EQ(check_cover(p.cover), "");
        std::size_t covered = 0;
        for (const auto& c : p.cover.cells) {
            EXPECT_LE(c.members.size(), 9u);
            covered += c.members.size();
        }
        EXPECT_EQ(covered, 64u);
        EXPECT_LE(stab_sup_exact(p.cover).e_sup, p.degree + 1);
    }
}

TEST(CoverJson, RoundTripAndValidation) {
    auto cs = boustrophedon_curve_samples(3);
    auto cover = curve_cover(cs, 2);
    auto back = cover_from_json(to_json(cover));
    EXPECT_EQ(back.cells.size(), cover.cells.size());
    EXPECT_EQ(back.representatives, cover.representatives);
    EXPECT_EQ(stab_sup_exact(back).e_sup, stab_sup_exact(cover).e_sup);
    auto j = to_json(cover);
    j["cells"][0]["members"] = {99};
    EXPECT_THROW(cover_from_json(j), PreconditionError);
    EXPECT_THROW(kind_from_name("blob"), PreconditionError);
}
