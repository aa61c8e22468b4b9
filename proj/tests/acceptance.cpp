// One line per criterion; exit status is nonzero if any fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <mdht/mdht.hpp>

using namespace mdht;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Rational q(long long p, long long d = 1) { return make_rational(p, d); }

std::string fmt(double x) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", x);
    return b;
}

SampledField white(std::vector<std::size_t> shape, std::mt19937_64& g) {
    std::vector<double> box;
    for (auto n : shape) box.push_back(double(n) / 4.0);
    auto f = SampledField::zeros(shape, box);
    for (auto& x : f.values) x = unit_uniform(g);
    return f;
}

std::vector<double> random_dir(std::size_t n, std::mt19937_64& g) {
    std::vector<double> v(n);
    for (auto& x : v) x = 2.0 * unit_uniform(g);
    return v;
}

DirectionSet random_rationals(std::size_t dim, std::size_t count, std::mt19937_64& g) {
    std::set<Point> seen;
    std::vector<Point> pts;
    while (pts.size() < count) {
        Point p;
        for (std::size_t a = 0; a < dim; ++a) p.push_back(q(static_cast<long long>(g() % 41) - 20, 1 + static_cast<long long>(g() % 7)));
        if (seen.insert(p).second) pts.push_back(p);
    }
    return DirectionSet(dim, pts, "random");
}

// Sweep rows shared by criteria 3, 4 and 5.
struct Sweeps {
    std::vector<SweepRow> uniform_all, uniform_fit, uniform2, lacunary, boustrophedon;
};

std::vector<SweepRow> sweep(const std::string& family, const std::string& grid) {
    SweepPlan p;
    p.family = family;
    p.grid = parse_param_grid(grid);
    return run_sweep_rows(p);
}

const Sweeps& sweeps() {
    static Sweeps s = [] {
        Sweeps r;
        std::string all = "N=";
        for (int N = 1; N <= 64; ++N) all += (N > 1 ? "," : "") + std::to_string(N);
        r.uniform_all = sweep("uniform", all);
        for (const auto& row : r.uniform_all)
            if (row.N >= 4 && std::has_single_bit(row.N)) r.uniform_fit.push_back(row);
        r.uniform2 = sweep("uniform2", "M=2,3,4,5,6,7,8");
        r.lacunary = sweep("lacunary", "R=1,2,3;M=2,4");
        r.boustrophedon = sweep("boustrophedon", "M=2,3,4");
        return r;
    }();
    return s;
}

// 1. The difference of two multipliers lives on the wedge.
Outcome wedge_support() {
    std::mt19937_64 g(101);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        auto f2 = white({128, 128}, g);
        worst = std::max(worst, wedge_energy_outside(f2, random_dir(1, g), random_dir(1, g)) / f2.norm2());
        auto f3 = white({32, 32, 32}, g);
        worst = std::max(worst, wedge_energy_outside(f3, random_dir(2, g), random_dir(2, g)) / f3.norm2());
    }
    return {worst <= 1e-12, "max outside/|f|^2 = " + fmt(worst)};
}

// 2. |H_v f|^2 + |P_0 f|^2 = |f|^2.
Outcome energy_identity() {
    std::mt19937_64 g(202);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        std::vector<std::size_t> shape = i % 2 ? std::vector<std::size_t>{32, 16} : std::vector<std::size_t>{8, 16, 8};
        auto f = white(shape, g);
        auto v = random_dir(shape.size() - 1, g);
        if (i % 5 == 0) v[0] = std::round(v[0]);  // include directions with exact frequency ties
        double lhs = apply_hv(f, v).norm2() + null_projection(f, v).norm2();
        worst = std::max(worst, std::abs(lhs - f.norm2()) / f.norm2());
    }
    return {worst <= 1e-10, "max relative defect = " + fmt(worst)};
}

// 3. Certificates never undercut the measured quotient.
Outcome soundness() {
    const auto& s = sweeps();
    std::size_t checked = 0, bad = 0;
    std::string first;
    for (const auto* set : {&s.uniform_all, &s.uniform2, &s.lacunary, &s.boustrophedon})
        for (const auto& r : *set) {
            ++checked;
            if (!r.error.empty() || !(r.certified_upper >= r.rayleigh_lower)) {
                ++bad;
                if (first.empty()) first = "; first: " + r.family + " " + r.params + " " + r.error;
            }
        }
    return {bad == 0, std::to_string(checked) + " direction sets, " + std::to_string(bad) + " violations" + first};
}

// 4. Logarithmic growth in one dimension.
Outcome log_growth() {
    const auto& rows = sweeps().uniform_fit;
    bool increasing = true;
    std::string vals;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i && !(rows[i].rayleigh_lower > rows[i - 1].rayleigh_lower)) increasing = false;
        vals += (i ? " " : "") + fmt(rows[i].rayleigh_lower);
    }
    auto fit = fit_growth(rows, "logN");
    bool exact = true;
    for (const auto& r : sweeps().uniform_all)
        if (r.certified_upper != 1.0 + 3.0 * std::ceil(std::log2(static_cast<double>(r.N)))) exact = false;
    bool ok = rows.size() == 5 && increasing && fit.slope > 0 && fit.residual < fit.constant_residual && exact;
    return {ok, "R = [" + vals + "], slope " + fmt(fit.slope) + ", residual " + fmt(fit.residual) + " vs " +
                    fmt(fit.constant_residual) + ", dyadic values " + (exact ? "exact" : "WRONG")};
}

// 5. The product sharpness construction.
Outcome sharpness_machinery() {
    std::string detail;
    bool ok = true;

    SharpnessSpec s1{1, {4}}, s2{2, {4, 2}};
    double e1 = std::abs(build_sharpness_field(s1, {512, 512}).norm2() / f_norm_exact(s1) - 1.0);
    double e2 = std::abs(build_sharpness_field(s2, {256, 256, 256}).norm2() / f_norm_exact(s2) - 1.0);
    ok &= e1 <= 0.02 && e2 <= 0.02;
    detail += "quadrature err " + fmt(e1) + "/" + fmt(e2);

    SharpnessSpec sd{2, {8, 4}};
    auto om = sd.directions().as_doubles();
    std::mt19937_64 g(505);
    std::size_t pairs = 0, overlaps = 0;
    while (pairs < 10000) {
        auto i = g() % om.size(), j = g() % om.size();
        if (i == j) continue;
        ++pairs;
        overlaps += !sv_disjointness_check(sd, om[i], om[j], 4, g());
    }
    ok &= overlaps == 0;
    detail += "; S_v overlaps " + std::to_string(overlaps) + "/" + std::to_string(pairs);

    double lo = INFINITY, hi = 0;
    for (long long N1 : {4, 8, 16}) {
        SharpnessSpec s{2, {N1, 2}};
        double c = INFINITY;
        for (const auto& v : s.directions().as_doubles()) c = std::min(c, sv_restricted_energy_exact(s, v).c_hat);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    ok &= lo > 0 && hi <= 2.0 * lo;
    detail += "; c_hat in [" + fmt(lo) + ", " + fmt(hi) + "]";

    auto fit = fit_growth(sweeps().uniform2, "power");
    bool slope_ok = fit.slope >= 0.15 && fit.slope <= 0.35;
    ok &= slope_ok;
    detail += "; U_M^2 power slope " + fmt(fit.slope) + " (95% CI " + fmt(fit.ci_low) + ".." + fmt(fit.ci_high) +
              ", target [0.15, 0.35])";
    return {ok, detail};
}

// 6. Exact stabbing numbers.
Outcome exact_stabbing() {
    bool ok = true;
    std::string detail = "grid E_sup:";
    for (long long N1 : {4, 8, 16}) {
        auto u = uniform(N1);
        auto r = stab_sup_exact(grid_cover_for_product(product({u, u}), {2, 2}));
        ok &= r.e_sup <= N1 - 1;
        detail += " " + std::to_string(r.e_sup) + "<=" + std::to_string(N1 - 1);
    }
    std::mt19937_64 g(606);
    std::uniform_int_distribution<long long> d(-12, 12);
    std::size_t under = 0, witness_bad = 0;
    for (int t = 0; t < 200; ++t) {
        int cells = 1 + static_cast<int>(g() % 12);
        CellCover cover;
        std::vector<std::vector<std::array<long long, 2>>> raw;
        std::vector<Point> pts;
        std::set<Point> used;
        while (static_cast<int>(cover.cells.size()) < cells) {
            std::vector<Point> V;
            std::vector<std::array<long long, 2>> iv;
            for (int k = 0; k < 3; ++k) {
                long long x = d(g), y = d(g);
                V.push_back({q(x), q(y)});
                iv.push_back({x, y});
            }
            if (used.count(V[0])) continue;
            used.insert(V[0]);
            pts.push_back(V[0]);
            cover.cells.push_back({CellKind::ConvexPolygon, V, {pts.size() - 1}});
            cover.representatives.push_back(pts.size() - 1);
            raw.push_back(iv);
        }
        cover.omega = DirectionSet(2, pts, "random");
        auto r = stab_sup_exact(cover);
        if (stab_count(cover, r.witness) != r.e_sup) ++witness_bad;
        // generic integer lines; a cell counts when it has vertices strictly on both sides
        std::uniform_int_distribution<long long> coef(-1000, 1000), off(-30000, 30000);
        long long best = 0;
        for (int i = 0; i < 100000; ++i) {
            long long a = coef(g), b = coef(g), k = off(g);
            long long cnt = 0;
            for (const auto& cell : raw) {
                bool pos = false, neg = false;
                for (auto [x, y] : cell) {
                    long long sv = a * x + b * y + k;
                    pos |= sv > 0;
                    neg |= sv < 0;
                }
                cnt += pos && neg;
            }
            best = std::max(best, cnt);
        }
        if (best > r.e_sup) ++under;
    }
    ok &= under == 0 && witness_bad == 0;
    detail += "; random covers: " + std::to_string(under) + " sampled>exact, " + std::to_string(witness_bad) +
              " bad witnesses of 200";
    return {ok, detail};
}

// 7. Ham-sandwich cuts.
Outcome ham_sandwich() {
    std::mt19937_64 g(707);
    std::size_t bad = 0;
    for (int t = 0; t < 500; ++t) {
        std::vector<Point> A, B;
        std::size_t na = 1 + g() % 50, nb = 1 + g() % 50;
        for (std::size_t i = 0; i < na; ++i) A.push_back({q(static_cast<long long>(g() % 61) - 30, 1 + static_cast<long long>(g() % 4)), q(static_cast<long long>(g() % 61) - 30)});
        for (std::size_t i = 0; i < nb; ++i) B.push_back({q(static_cast<long long>(g() % 61) - 30), q(static_cast<long long>(g() % 61) - 30, 1 + static_cast<long long>(g() % 3))});
        auto l = ham_sandwich_line(A, B);
        if (l.a == 0 && l.b == 0) {
            ++bad;
            continue;
        }
        for (const auto* S : {&A, &B})
            for (int side : {1, -1}) {
                std::size_t n = 0;
                for (const auto& p : *S) n += l.side(p) == side;
                if (n > (S->size() + 1) / 2) ++bad;
            }
    }
    return {bad == 0, "500 instances, " + std::to_string(bad) + " unbalanced sides"};
}

// 8. Recursion replays.
Outcome replays() {
    bool ok = replay_curve_recursion(16, 4) == 25.0;
    double p4 = replay_product_recursion(4).value;
    ok &= std::abs(p4 - (31.0 + 15.0 * std::sqrt(2.0))) <= 1e-12;
    std::size_t mismatches = 0;
    for (int k = 0; k <= 7; ++k)
        mismatches += certify(uniform(1LL << k), parse_strategy("dyadic-1d")).value != replay_dyadic(1LL << k);
    for (int R = 0; R <= 4; ++R) {
        auto u = uniform(1LL << R);
        mismatches += certify(product({u, u}), parse_strategy("product-grid")).value != replay_product_recursion(R).value;
    }
    for (long long M : {2, 4}) {
        auto m = family_member("boustrophedon", {{"M", M}});
        mismatches += certify(m.omega, m.strategy).value != replay_curve_recursion(M * M, M);
    }
    ok &= mismatches == 0;
    std::size_t ineq_bad = 0;
    for (double A1 : {0.5, 1.0, 4.0})
        for (double A2 : {0.5, 1.0, 3.0}) {
            auto k = replay_thm3d_constants(A1, A2);
            // c0 and c re-substituted into the three requirements on A
            ineq_bad += !(std::abs(4096.0 * A1 * k.c0 * k.c0 - k.c) <= 1e-15 * k.c);
            ineq_bad += !(2.0 * A2 * k.c < 0.25);
            ineq_bad += !(k.A_min >= 2.0 * A1 / (k.c0 * k.c0) && k.A_min >= 5.0 / std::log(2.0) &&
                          k.A_min >= 2.0 * (A1 / (k.c0 * k.c0) + 1.0));
        }
    ok &= ineq_bad == 0;
    return {ok, "product(4) = " + fmt(p4) + ", engine/replay mismatches " + std::to_string(mismatches) +
                    ", constant checks failed " + std::to_string(ineq_bad)};
}

// 9. Shear and slice invariance of measured quotients.
Outcome invariance() {
    std::mt19937_64 g(909);
    double shear_worst = 0, slice_worst = 0;
    for (int t = 0; t < 20; ++t) {
        if (t % 2 == 0) {
            auto f = random_bandlimited_field({32, 32}, {8.0, 8.0}, {0.0, 0.0}, {3, 3}, g());
            auto om = random_rationals(1, 1 + g() % 6, g);
            long long w = static_cast<long long>(g() % 5) - 2;
            double a = rayleigh_quotient(f, affine_image(om, {q(1)}, {q(w)}));
            double b = rayleigh_quotient(shear_transport(f, {w}), om);
            shear_worst = std::max(shear_worst, std::abs(a - b));
        } else {
            auto f = random_bandlimited_field({16, 16, 16}, {4.0, 4.0, 4.0}, {0.0, 0.0, 0.0}, {2, 2, 2}, g());
            auto om = random_rationals(2, 1 + g() % 5, g);
            long long w0 = static_cast<long long>(g() % 3) - 1, w1 = static_cast<long long>(g() % 3) - 1;
            double a = rayleigh_quotient(f, affine_image(om, {q(1), q(1)}, {q(w0), q(w1)}));
            double b = rayleigh_quotient(shear_transport(f, {w0, w1}), om);
            shear_worst = std::max(shear_worst, std::abs(a - b));
        }

        auto core = random_bandlimited_field({32, 32}, {8.0, 8.0}, {0.0, 0.0}, {6, 6}, g());
        auto chi = SampledField::zeros({8}, {2.0});
        for (auto& x : chi.values) x = unit_uniform(g);
        auto om = random_rationals(1, 1 + g() % 6, g);
        double a = rayleigh_quotient(core, om);
        double b = rayleigh_quotient(separable_extension(core, chi), embed_slice(om, {q(0)}));
        slice_worst = std::max(slice_worst, std::abs(a - b));
    }
    return {shear_worst <= 1e-10 && slice_worst <= 1e-10,
            "max |dR| shear " + fmt(shear_worst) + ", slice " + fmt(slice_worst)};
}

// 10. Sweeps through the command line are reproducible byte for byte.
Outcome determinism(const std::string& cli) {
    if (cli.empty()) return {false, "no mdht binary given"};
    auto dir = std::filesystem::temp_directory_path();
    auto a = (dir / "mdht_accept_a.csv").string(), b = (dir / "mdht_accept_b.csv").string();
    auto run = [&](const std::string& out) {
        std::string cmd = cli + " sweep --family uniform --params N=3,4,8 --seed 7 -o " + out + " > /dev/null";
        return std::system(cmd.c_str());
    };
    if (run(a) != 0 || run(b) != 0) return {false, "sweep command failed"};
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string x = slurp(a), y = slurp(b);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
    return {!x.empty() && x == y, std::to_string(x.size()) + " bytes, " + (x == y ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";
    std::vector<std::pair<int, std::function<Outcome()>>> all{
        {1, wedge_support},  {2, energy_identity}, {3, soundness},      {4, log_growth},
        {5, sharpness_machinery}, {6, exact_stabbing}, {7, ham_sandwich}, {8, replays},
        {9, invariance},     {10, [&] { return determinism(cli); }},
    };
    int failed = 0;
    for (auto& [k, fn] : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
                  << fmt(secs) << " s]" << std::endl;
        failed += !o.pass;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
}
