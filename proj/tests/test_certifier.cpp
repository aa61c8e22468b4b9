#include <gtest/gtest.h>

#include <cmath>

#include <mdht/certifier.hpp>

using namespace mdht;

namespace {

Rational q(long long p, long long d = 1) { return make_rational(p, d); }

Certificate cert(const DirectionSet& om, const std::string& s) { return certify(om, parse_strategy(s)); }

Certificate curve_cert(long long M) {
    auto cs = boustrophedon_curve_samples(M);
    auto st = parse_strategy("curve-pairs(" + std::to_string(M) + ")");
    st.polyline = cs.polyline;
    return certify(cs.omega, st);
}

const Certificate* find_rule(const Certificate& c, const std::string& rule) {
    if (c.rule == rule) return &c;
    for (const auto& k : c.children)
        if (auto* r = find_rule(k, rule)) return r;
    return nullptr;
}

}  // namespace

TEST(RoundUp, ExactResultsStayAndInexactOnesRoundUp) {
    EXPECT_EQ(up_add(1.0, 2.0), 3.0);
    EXPECT_EQ(up_mul(3.0, 0.5), 1.5);
    EXPECT_EQ(up_sqrt(16.0), 4.0);
    double s = up_add(1.0, 1e-30);
    EXPECT_GT(s, 1.0);
    double r = up_sqrt(2.0);
    EXPECT_GE(static_cast<long double>(r) * r, 2.0L);
    double m = up_mul(0.1, 3.0);
    EXPECT_GE(static_cast<long double>(m), 0.1L * 3.0L - 1e-30L);
}

TEST(Certify, SingletonIsOne) {
    auto c = cert(uniform(1), "dyadic-1d");
    EXPECT_EQ(c.rule, "SINGLE");
    EXPECT_EQ(c.value, 1.0);
    EXPECT_EQ(cert(product({uniform(1), uniform(1)}), "product-grid").value, 1.0);
}

TEST(Certify, DyadicMatchesThreeCeilLog) {
    EXPECT_EQ(cert(uniform(8), "dyadic-1d").value, 10.0);
    EXPECT_EQ(cert(uniform(16), "dyadic-1d").value, 13.0);
    for (long long N = 1; N <= 70; ++N) {
        double expect = 1.0 + 3.0 * std::ceil(std::log2(static_cast<double>(N)));
        auto c = cert(uniform(N), "dyadic-1d");
        EXPECT_EQ(c.value, expect) << N;
        EXPECT_EQ(c.value, replay_dyadic(N));
        EXPECT_EQ(verify_certificate(c), "");
        if (N >= 16) {
            EXPECT_LT(c.value, cert(uniform(N), "trivial").value);
        }
    }
}

TEST(Certify, ProductGridEqualsReplay) {
    for (int R = 0; R <= 5; ++R) {
        auto u = uniform(1LL << R);
        auto c = cert(product({u, u}), "product-grid");
        EXPECT_EQ(c.value, replay_product_recursion(R).value) << R;
        EXPECT_EQ(verify_certificate(c), "");
    }
}

TEST(Certify, ProductGridSlicesSingletonAxes) {
    auto flat = cert(product({uniform(4), uniform(4)}), "product-grid");
    auto thick = cert(product({uniform(4), uniform(1), uniform(4)}), "product-grid");
    EXPECT_EQ(thick.rule, "SLICE");
    EXPECT_EQ(thick.value, flat.value);
    EXPECT_THROW(cert(product({uniform(2), uniform(2), uniform(2)}), "product-grid"), PreconditionError);
    DirectionSet stairs(2, {{q(0), q(0)}, {q(1), q(1)}}, "s");
    EXPECT_THROW(cert(stairs, "product-grid"), PreconditionError);
}

TEST(Certify, CurvePairsEqualsReplay) {
    EXPECT_EQ(curve_cert(4).value, 25.0);
    EXPECT_EQ(curve_cert(4).value, replay_curve_recursion(16, 4));
    EXPECT_EQ(curve_cert(2).value, replay_curve_recursion(4, 2));
    EXPECT_EQ(curve_cert(8).value, replay_curve_recursion(64, 8));
    auto cs = boustrophedon_curve_samples(4);
    auto st = parse_strategy("curve-pairs(1)");
    st.polyline = cs.polyline;
    EXPECT_THROW(certify(cs.omega, st), PreconditionError);
}

TEST(Certify, LacunarySplitsOffNonPositiveDirections) {
    auto t = lacunary_uniform(3, 4);
    auto pts = t.points();
    pts.push_back({q(0)});
    pts.push_back({q(-1, 2)});
    auto c = cert(DirectionSet(1, pts, "mixed"), "lacunary-mixed");
    EXPECT_EQ(c.rule, "SPLIT");
    EXPECT_EQ(c.cardinality, 14u);
    EXPECT_EQ(verify_certificate(c), "");
    EXPECT_EQ(c.value, up_add(cert(t, "lacunary-mixed").value, cert(uniform(2), "dyadic-1d").value));
    auto one_shell = cert(lacunary_uniform(1, 8), "lacunary-mixed");
    EXPECT_EQ(one_shell.rule, "AFFINE");
    EXPECT_EQ(one_shell.value, cert(uniform(8), "dyadic-1d").value);
}

TEST(Certify, AffineImagesKeepTheBound) {
    auto a = cert(uniform(12), "dyadic-1d");
    auto b = cert(affine_image(uniform(12), {q(7, 3)}, {q(-5)}), "dyadic-1d");
    EXPECT_EQ(a.value, b.value);
}

TEST(Certify, HamSandwichNeverWorseThanTrivial) {
    std::mt19937_64 g(4);
    std::uniform_int_distribution<int> d(-100, 100);
    for (int t = 0; t < 3; ++t) {
        std::vector<Point> pts;
        std::set<Point> seen;
        while (pts.size() < 24) {
            Point p{q(d(g), 10), q(d(g), 10)};
            if (seen.insert(p).second) pts.push_back(p);
        }
        DirectionSet om(2, pts, "cloud");
        auto c = cert(om, "hamsandwich-2d(2)");
        EXPECT_LE(c.value, 24.0);
        EXPECT_EQ(verify_certificate(c), "");
        if (auto* o = find_rule(c, "ORTHO")) EXPECT_EQ(o->e_sup->provenance, "exact");
    }
}

TEST(Strategy, ParsingAndErrors) {
    EXPECT_EQ(parse_strategy("curve-pairs(3)").D, 3);
    EXPECT_EQ(parse_strategy("hamsandwich-2d(4)").rounds, 4);
    EXPECT_EQ(parse_strategy("hamsandwich-2d").id(), "hamsandwich-2d(2)");
    EXPECT_THROW(parse_strategy("curve-pairs"), PreconditionError);
    EXPECT_THROW(parse_strategy("dyadic-1d(2)"), PreconditionError);
    EXPECT_THROW(parse_strategy("spiral"), PreconditionError);
    EXPECT_THROW(cert(product({uniform(2), uniform(2)}), "dyadic-1d"), PreconditionError);
}

TEST(Verify, CatchesTampering) {
    auto c = cert(uniform(16), "dyadic-1d");
    EXPECT_EQ(verify_certificate(c), "");
    auto low = c;
    low.value = 12.0;
    EXPECT_NE(verify_certificate(low), "");
    auto child = c;
    child.children[1].value = 1.0;
    EXPECT_NE(verify_certificate(child), "");
    auto sampled = c;
    sampled.e_sup->provenance = "sampled";
    EXPECT_NE(verify_certificate(sampled), "");
    auto rule = c;
    rule.children[0].rule = "MAGIC";
    EXPECT_NE(verify_certificate(rule), "");
}

TEST(Verify, JsonRoundTripKeepsBits) {
    auto cs = boustrophedon_curve_samples(3);
    auto st = parse_strategy("curve-pairs(3)");
    st.polyline = cs.polyline;
    CertificateFile f{cs.omega.label(), st.id(), certify(cs.omega, st)};
    auto back = certificate_file_from_json(nlohmann::json::parse(to_json(f).dump()));
    EXPECT_EQ(back.root.value, f.root.value);
    EXPECT_EQ(back.omega_label, f.omega_label);
    EXPECT_EQ(verify_certificate(back.root), "");
}

TEST(Audit, SoundnessAndNegativeControl) {
    CertificateFile f{"U_16", "dyadic-1d", cert(uniform(16), "dyadic-1d")};
    ProbeReport rep;
    rep.omega_label = "U_16";
    rep.max_rayleigh = 1.6;
    EXPECT_TRUE(soundness_audit(f, rep).sound);
    CertificateFile triv{"U_16", "trivial", cert(uniform(16), "trivial")};
    EXPECT_TRUE(soundness_audit(triv, rep).sound);
    auto bad = f;
    bad.root.value = 1.0;
    EXPECT_FALSE(soundness_audit(bad, rep).sound);
    rep.omega_label = "U_8";
    EXPECT_THROW(soundness_audit(f, rep), PreconditionError);
}

TEST(Replay, CurveRecursion) {
    EXPECT_EQ(replay_curve_recursion(1, 7), 1.0);
    EXPECT_EQ(replay_curve_recursion(16, 4), 25.0);
    double worst = 0, best = 1e9;
    for (int k = 1; k <= 30; ++k)
        for (long long D : {1, 2, 5, 9}) {
            double r = replay_curve_recursion(1LL << k, D) / (std::sqrt(D) * std::log(std::ldexp(1.0, k)));
            worst = std::max(worst, r);
            best = std::min(best, r);
        }
    EXPECT_LT(worst, 10.0);
    EXPECT_GT(best, 3.0 / std::log(2.0) - 1e-9);
}

TEST(Replay, ProductRecursion) {
    EXPECT_EQ(replay_product_recursion(0).value, 1.0);
    EXPECT_NEAR(replay_product_recursion(4).value, 31.0 + 15.0 * std::sqrt(2.0), 1e-12);
    EXPECT_DOUBLE_EQ(replay_product_recursion(4).C, 5.0 / (1.0 - 1.0 / std::sqrt(2.0)));
    for (int R = 0; R <= 40; ++R) EXPECT_TRUE(replay_product_recursion(R).within_closed) << R;
}

TEST(Replay, AlgebraicRecursion) {
    for (int k = 0; k <= 20; ++k) {
        auto r = replay_algebraic_recursion(1LL << k, 1, 1.0);
        EXPECT_EQ(r.value, 1.0 + 5.0 * k);
        EXPECT_EQ(r.floor_used, 1);
    }
    auto below = replay_algebraic_recursion(8, 1);
    EXPECT_EQ(below.value, 8.0);
    EXPECT_NE(below.note.find("conditional"), std::string::npos);
    // fitted A in A sqrt(d) log N stays finite over a sweep
    for (long long d : {1, 2, 4}) {
        double a = replay_algebraic_recursion(1LL << 40, d).value / (std::sqrt(d) * 40 * std::log(2.0));
        EXPECT_LT(a, 20.0);
        EXPECT_GT(a, 1.0);
    }
}

TEST(Replay, ThreeDimConstantsResubstitute) {
    auto k = replay_thm3d_constants(1.0, 1.0);
    EXPECT_EQ(k.c, 1.0 / 16.0);
    EXPECT_NEAR(4096.0 * k.c0 * k.c0, k.c, 1e-15);
    EXPECT_LT(2.0 * 1.0 * k.c, 0.25);
    EXPECT_GE(k.A_min, 2.0 / (k.c0 * k.c0));
    EXPECT_GE(k.A_min, 5.0 / std::log(2.0));
    EXPECT_GE(k.A_min, 2.0 * (1.0 / (k.c0 * k.c0) + 1.0));
    double prev = 0;
    for (double a : {0.5, 1.0, 2.0, 8.0}) {
        double m = replay_thm3d_constants(a, 1.0).A_min;
        EXPECT_GE(m, prev);
        prev = m;
    }
    EXPECT_GT(replay_thm3d_constants(1.0, 3.0).A_min, k.A_min);
    EXPECT_THROW(replay_thm3d_constants(0.0, 1.0), PreconditionError);
}

TEST(Replay, GeneralStepArithmetic) {
    const double A1 = 2.0, A = 50.0;
    const double eps = 1.0 / (20.0 * std::pow(A1, 0.25));
    auto h = named_growth("sqrtlog");
    auto s = replay_3dgen_step(1e6, h, A1, A, eps);
    EXPECT_LT(s.contraction, 0.5);
    EXPECT_LT(s.contraction_bound, 0.5);
    EXPECT_NEAR(s.log_star_star, std::log(A) + 1e6 / 4.0 + std::log(h(1e6)), 1e-6);
    EXPECT_NEAR(s.per_cell, A1 * std::pow(s.omega, -4.0), 1e-9 * s.per_cell);

    auto ll = named_growth("loglog");
    double prev = 1e9;
    for (double L : {1e2, 1e4, 1e8, 1e16, 1e32}) {
        auto e = evaluate_3dgen_step(L, ll, A1, A, eps);
        EXPECT_LT(e.omega, prev);
        prev = e.omega;
    }
    EXPECT_TRUE(replay_3dgen_step(std::exp(200.0), ll, A1, A, eps).violations.empty());

    try {
        replay_3dgen_step(50.0, h, A1, A, eps);
        FAIL();
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("h(N) > 1/eps"), std::string::npos);
    }
}
