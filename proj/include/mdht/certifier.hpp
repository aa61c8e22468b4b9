#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "cell_geometry.hpp"
#include "direction_sets.hpp"
#include "norm_probe.hpp"
#include "roundup.hpp"

namespace mdht {

struct ESup {
    long long value = 0;
    std::string provenance;  // "exact" or "structured:<rule>"
};

// One node of a bound certificate.
//   SINGLE   one direction, value 1
//   TRIVIAL  triangle inequality, value #Omega
//   ORTHO    children = [representatives, cell_1, ..., cell_k]
//   SPLIT    children partition Omega, value = sum
//   AFFINE   child is an affine image of Omega, same value
//   SLICE    child drops coordinates that are constant on Omega, same value
struct Certificate {
    std::string rule;
    double value = 0;
    std::size_t cardinality = 0;
    std::optional<ESup> e_sup;
    std::string cover;
    std::vector<Certificate> children;
};

struct CertificateFile {
    std::string omega_label;
    std::string strategy;
    Certificate root;
};

namespace detail {

inline Certificate leaf(std::size_t card) {
    Certificate c;
    c.cardinality = card;
    if (card == 1) {
        c.rule = "SINGLE";
        c.value = 1.0;
    } else {
        c.rule = "TRIVIAL";
        c.value = static_cast<double>(card);
    }
    return c;
}

inline Certificate ortho(Certificate o, std::vector<Certificate> cells, ESup e, std::size_t card, std::string cover) {
    double m = 0;
    for (const auto& c : cells) m = std::max(m, c.value);
    Certificate n;
    n.rule = "ORTHO";
    n.cardinality = card;
    n.value = ortho_value(o.value, static_cast<double>(e.value), m);
    n.e_sup = std::move(e);
    n.cover = std::move(cover);
    n.children.push_back(std::move(o));
    for (auto& c : cells) n.children.push_back(std::move(c));
    return n;
}

inline Certificate unary(const char* rule, Certificate child, std::string note) {
    Certificate n;
    n.rule = rule;
    n.cardinality = child.cardinality;
    n.value = child.value;
    n.cover = std::move(note);
    n.children.push_back(std::move(child));
    return n;
}

inline Certificate split(std::vector<Certificate> parts) {
    Certificate n;
    n.rule = "SPLIT";
    n.value = 0;
    for (const auto& p : parts) {
        n.value = up_add(n.value, p.value);
        n.cardinality += p.cardinality;
    }
    n.children = std::move(parts);
    return n;
}

inline DirectionSet subset(const DirectionSet& omega, const std::vector<std::size_t>& idx, const std::string& tag) {
    std::vector<Point> pts;
    for (auto i : idx) pts.push_back(omega[i]);
    return DirectionSet(omega.dim(), std::move(pts), omega.label() + tag);
}

inline std::vector<Certificate> cell_leaves(const CellCover& cover) {
    std::vector<Certificate> out;
    for (const auto& c : cover.cells) out.push_back(leaf(c.members.size()));
    return out;
}

// Omega listed in increasing order along the line.
inline Certificate certify_dyadic(const DirectionSet& omega) {
    if (omega.size() <= 1) return leaf(omega.size());
    std::vector<std::size_t> ord(omega.size());
    for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return omega[a][0] < omega[b][0]; });
    std::vector<std::size_t> reps;
    std::vector<Certificate> cells;
    for (std::size_t k = 0; k < ord.size(); k += 2) {
        reps.push_back(ord[k]);
        cells.push_back(leaf(k + 1 < ord.size() ? 2 : 1));
    }
    auto o = certify_dyadic(subset(omega, reps, ""));
    return ortho(std::move(o), std::move(cells), {1, "structured:disjoint-intervals"}, omega.size(),
                 "pairs(" + std::to_string(cells.size()) + ")");
}

inline Certificate certify_curve(const DirectionSet& omega, const std::vector<Point>& polyline, long long D) {
    if (omega.size() <= 1) return leaf(omega.size());
    auto cover = curve_cover(omega, polyline, 2);
    std::vector<std::size_t> reps = cover.representatives;
    auto o = certify_curve(subset(omega, reps, ""), polyline, D);
    return ortho(std::move(o), cell_leaves(cover), {D, "structured:curve-degree"}, omega.size(), cover.description);
}

inline DirectionSet drop_axis(const DirectionSet& omega, std::size_t axis) {
    std::vector<Point> pts;
    for (auto p : omega.points()) {
        p.erase(p.begin() + static_cast<long>(axis));
        pts.push_back(std::move(p));
    }
    return DirectionSet(omega.dim() - 1, std::move(pts), omega.label());
}

inline Certificate certify_product(const DirectionSet& omega) {
    if (omega.size() <= 1) return leaf(omega.size());
    require(is_product_set(omega), "product-grid strategy needs a product direction set");
    for (std::size_t a = 0; a < omega.dim(); ++a)
        if (axis_values(omega, a).size() == 1)
            return unary("SLICE", certify_product(drop_axis(omega, a)), "drop axis " + std::to_string(a));
    const std::size_t n = omega.dim();
    require(n <= 2, "product-grid has no structured stabbing rule for three free axes");
    auto cover = grid_cover_for_product(omega, std::vector<long long>(n, 2));
    ESup e;
    if (n == 1) {
        e = {1, "structured:disjoint-intervals"};
    } else {
        // a generic line crosses at most k1 + k2 - 1 cells of a k1 x k2 grid;
        // the recursion charges k1 + k2
        long long k1 = static_cast<long long>(std::max<std::size_t>(1, axis_values(omega, 0).size() / 2));
        long long k2 = static_cast<long long>(std::max<std::size_t>(1, axis_values(omega, 1).size() / 2));
        e = {k1 + k2, "structured:grid-lemma"};
    }
    auto o = certify_product(subset(omega, cover.representatives, ""));
    return ortho(std::move(o), cell_leaves(cover), e, omega.size(), cover.description);
}

// Dyadic shell index k with 2^k < x <= 2^(k+1), for x > 0.
inline long long shell_of(const Rational& x) {
    long long k = 0;
    Rational lo = 1;
    while (x <= lo) {
        lo /= 2;
        --k;
    }
    while (x > 2 * lo) {
        lo *= 2;
        ++k;
    }
    return k;
}

inline Certificate certify_positive_lacunary(const DirectionSet& omega) {
    std::map<long long, std::vector<std::size_t>> shells;
    for (std::size_t i = 0; i < omega.size(); ++i) shells[shell_of(omega[i][0])].push_back(i);
    auto shell_cert = [&](long long k, const std::vector<std::size_t>& idx) {
        auto sub = subset(omega, idx, "");
        Rational s = pow2(-k);
        auto scaled = affine_image(sub, {s}, {Rational(0)});
        return unary("AFFINE", certify_dyadic(scaled), "scale by 2^" + std::to_string(-k));
    };
    if (shells.size() == 1) return shell_cert(shells.begin()->first, shells.begin()->second);
    std::vector<std::size_t> reps;
    std::vector<Certificate> cells;
    for (auto& [k, idx] : shells) {
        reps.push_back(idx.front());
        cells.push_back(shell_cert(k, idx));
    }
    auto o = certify_dyadic(subset(omega, reps, ""));
    return ortho(std::move(o), std::move(cells), {1, "structured:disjoint-intervals"}, omega.size(),
                 "dyadic-shells(" + std::to_string(shells.size()) + ")");
}

inline Certificate certify_lacunary(const DirectionSet& omega) {
    require(omega.dim() == 1, "lacunary-mixed strategy needs a one-dimensional set");
    std::vector<std::size_t> pos, rest;
    for (std::size_t i = 0; i < omega.size(); ++i) (omega[i][0] > 0 ? pos : rest).push_back(i);
    if (rest.empty()) return certify_positive_lacunary(omega);
    if (pos.empty()) return certify_dyadic(omega);
    std::vector<Certificate> parts;
    parts.push_back(certify_positive_lacunary(subset(omega, pos, "")));
    parts.push_back(certify_dyadic(subset(omega, rest, "")));
    return split(std::move(parts));
}

// Take the ORTHO step only when it beats the triangle inequality.
inline Certificate certify_hamsandwich(const DirectionSet& omega, int rounds) {
    if (omega.size() <= 2) return leaf(omega.size());
    auto part = partition_points_2d(omega, rounds);
    const auto& cover = part.cover;
    if (cover.cells.size() >= omega.size() || cover.cells.size() <= 1) return leaf(omega.size());
    auto e = stab_sup_exact(cover);
    auto o = certify_hamsandwich(subset(omega, cover.representatives, ""), rounds);
    std::vector<Certificate> cells;
    for (const auto& c : cover.cells) cells.push_back(certify_hamsandwich(subset(omega, c.members, ""), rounds));
    auto node = ortho(std::move(o), std::move(cells), {e.e_sup, "exact"}, omega.size(), cover.description);
    if (node.value < static_cast<double>(omega.size())) return node;
    return leaf(omega.size());
}

}  // namespace detail

struct Strategy {
    std::string name;  // dyadic-1d, curve-pairs, product-grid, hamsandwich-2d, lacunary-mixed, trivial
    long long D = 1;
    int rounds = 2;
    std::vector<Point> polyline;  // curve-pairs: defaults to Omega's own order

    std::string id() const {
        if (name == "curve-pairs") return name + "(" + std::to_string(D) + ")";
        if (name == "hamsandwich-2d") return name + "(" + std::to_string(rounds) + ")";
        return name;
    }
};

inline Strategy parse_strategy(const std::string& s) {
    static const std::regex re(R"(^([a-z0-9\-]+)(?:\((\d+)\))?$)");
    std::smatch m;
    require(std::regex_match(s, m, re), "malformed strategy '" + s + "'");
    Strategy st;
    st.name = m[1];
    long long arg = m[2].matched ? std::stoll(m[2]) : -1;
    if (st.name == "curve-pairs") {
        require(arg >= 1, "curve-pairs needs a crossing degree, e.g. curve-pairs(4)");
        st.D = arg;
    } else if (st.name == "hamsandwich-2d") {
        if (arg >= 1) st.rounds = static_cast<int>(arg);
    } else {
        require(arg < 0, "strategy '" + st.name + "' takes no argument");
        require(st.name == "dyadic-1d" || st.name == "product-grid" || st.name == "lacunary-mixed" ||
                    st.name == "trivial",
                "unknown strategy '" + st.name + "'");
    }
    return st;
}

inline Certificate certify(const DirectionSet& omega, const Strategy& st) {
    require(!omega.empty(), "certify needs a nonempty direction set");
    if (st.name == "trivial") return detail::leaf(omega.size());
    if (st.name == "dyadic-1d") {
        require(omega.dim() == 1, "dyadic-1d needs a one-dimensional set");
        return detail::certify_dyadic(omega);
    }
    if (st.name == "curve-pairs") {
        require(omega.dim() <= 2, "curve-pairs supports curves in dimension 1 or 2");
        auto poly = st.polyline.empty() ? omega.points() : st.polyline;
        if (omega.size() >= 2) {
            // the declared degree must dominate the exact stabbing number
            auto e = stab_sup_exact(curve_cover(omega, poly, 2));
            require(e.e_sup <= st.D, "declared crossing degree " + std::to_string(st.D) +
                                         " is below the exact stabbing number " + std::to_string(e.e_sup));
        }
        return detail::certify_curve(omega, poly, st.D);
    }
    if (st.name == "product-grid") return detail::certify_product(omega);
    if (st.name == "lacunary-mixed") return detail::certify_lacunary(omega);
    if (st.name == "hamsandwich-2d") {
        require(omega.dim() == 2, "hamsandwich-2d needs a planar set");
        return detail::certify_hamsandwich(omega, st.rounds);
    }
    throw PreconditionError("unknown strategy '" + st.name + "'");
}

// Empty when every node's arithmetic and provenance checks out.
inline std::string verify_certificate(const Certificate& c, const std::string& path = "root") {
    auto fail = [&](const std::string& why) { return path + ": " + why; };
    if (!(c.value >= 0) || !std::isfinite(c.value)) return fail("value is not a finite nonnegative number");
    if (c.rule == "SINGLE") {
        if (c.cardinality != 1 || c.value != 1.0) return fail("SINGLE leaf must have one direction and value 1");
        if (!c.children.empty()) return fail("leaf has children");
        return {};
    }
    if (c.rule == "TRIVIAL") {
        if (c.value != static_cast<double>(c.cardinality)) return fail("TRIVIAL value differs from cardinality");
        if (!c.children.empty()) return fail("leaf has children");
        return {};
    }
    for (std::size_t i = 0; i < c.children.size(); ++i) {
        auto e = verify_certificate(c.children[i], path + "/" + std::to_string(i));
        if (!e.empty()) return e;
    }
    if (c.rule == "ORTHO") {
        if (c.children.size() < 2) return fail("ORTHO needs representatives and at least one cell");
        if (!c.e_sup) return fail("ORTHO without stabbing number");
        const auto& p = c.e_sup->provenance;
        if (!(p == "exact" || p.rfind("structured:", 0) == 0)) return fail("stabbing provenance '" + p + "' not accepted");
        if (c.e_sup->value < 0) return fail("negative stabbing number");
        std::size_t cells = c.children.size() - 1, covered = 0;
        double m = 0;
        for (std::size_t i = 1; i < c.children.size(); ++i) {
            m = std::max(m, c.children[i].value);
            covered += c.children[i].cardinality;
        }
        if (c.children[0].cardinality > cells) return fail("more representatives than cells");
        if (covered < c.cardinality) return fail("cells do not cover the set");
        double v = ortho_value(c.children[0].value, static_cast<double>(c.e_sup->value), m);
        if (v != c.value) return fail("ORTHO value does not reproduce from its children");
        return {};
    }
    if (c.rule == "SPLIT") {
        double v = 0;
        std::size_t card = 0;
        for (const auto& ch : c.children) {
            v = up_add(v, ch.value);
            card += ch.cardinality;
        }
        if (c.children.empty() || v != c.value) return fail("SPLIT value is not the sum of its parts");
        if (card != c.cardinality) return fail("SPLIT parts do not partition the set");
        return {};
    }
    if (c.rule == "AFFINE" || c.rule == "SLICE") {
        if (c.children.size() != 1) return fail(c.rule + " needs exactly one child");
        if (c.children[0].value != c.value || c.children[0].cardinality != c.cardinality)
            return fail(c.rule + " must not change value or cardinality");
        return {};
    }
    return fail("unknown rule '" + c.rule + "'");
}

struct AuditResult {
    bool sound = false;
    std::string problem;
};

inline AuditResult soundness_audit(const CertificateFile& cert, const ProbeReport& report) {
    require(cert.omega_label == report.omega_label,
            "certificate is for '" + cert.omega_label + "' but the report is for '" + report.omega_label + "'");
    AuditResult r;
    r.problem = verify_certificate(cert.root);
    if (!r.problem.empty()) return r;
    if (!(cert.root.value >= report.max_rayleigh)) {
        r.problem = "certified value " + std::to_string(cert.root.value) + " is below measured " +
                    std::to_string(report.max_rayleigh);
        return r;
    }
    r.sound = true;
    return r;
}

inline nlohmann::json to_json(const Certificate& c) {
    nlohmann::json j{{"rule", c.rule}, {"value", c.value}, {"cardinality", c.cardinality}};
    if (c.e_sup) j["e_sup"] = {{"value", c.e_sup->value}, {"provenance", c.e_sup->provenance}};
    if (!c.cover.empty()) j["cover"] = c.cover;
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& k : c.children) ch.push_back(to_json(k));
    j["children"] = std::move(ch);
    return j;
}

inline Certificate certificate_from_json(const nlohmann::json& j) {
    Certificate c;
    c.rule = j.at("rule").get<std::string>();
    c.value = j.at("value").get<double>();
    c.cardinality = j.at("cardinality").get<std::size_t>();
    if (j.contains("e_sup"))
        c.e_sup = ESup{j["e_sup"].at("value").get<long long>(), j["e_sup"].at("provenance").get<std::string>()};
    c.cover = j.value("cover", std::string());
    for (const auto& k : j.at("children")) c.children.push_back(certificate_from_json(k));
    return c;
}

inline nlohmann::json to_json(const CertificateFile& f) {
    nlohmann::json j = to_json(f.root);
    j["omega_label"] = f.omega_label;
    j["strategy"] = f.strategy;
    return j;
}

inline CertificateFile certificate_file_from_json(const nlohmann::json& j) {
    return {j.at("omega_label").get<std::string>(), j.value("strategy", std::string()), certificate_from_json(j)};
}

// ---- closed-form replays ------------------------------------------------

inline bool is_pow2(long long N) { return N >= 1 && (N & (N - 1)) == 0; }

// c(N) = c(N/2) + 3 sqrt(D), c(1) = 1
inline double replay_curve_recursion(long long N, long long D) {
    require(is_pow2(N), "replay_curve_recursion needs N a power of two");
    require(D >= 1, "replay_curve_recursion needs D >= 1");
    double v = 1.0;
    for (long long m = N; m > 1; m /= 2) v = ortho_value(v, static_cast<double>(D), 2.0);
    return v;
}

// 1 + 3 ceil(log2 N), the same arithmetic as the dyadic engine
inline double replay_dyadic(long long N) {
    require(N >= 1, "replay_dyadic needs N >= 1");
    double v = 1.0;
    for (long long m = N; m > 1; m = (m + 1) / 2) v = ortho_value(v, 1.0, 2.0);
    return v;
}

struct ProductReplay {
    double value = 0;
    double C = 0;           // 5 / (1 - 2^{-1/2})
    bool within_closed = false;  // value <= C 2^{R/2}
};

inline ProductReplay replay_product_recursion(int R) {
    require(R >= 0 && R < 62, "replay_product_recursion needs 0 <= R < 62");
    ProductReplay p;
    p.value = 1.0;
    for (int r = 1; r <= R; ++r) p.value = ortho_value(p.value, std::ldexp(1.0, r), 4.0);
    p.C = 5.0 / (1.0 - 1.0 / std::numbers::sqrt2);
    p.within_closed = p.value <= p.C * std::pow(2.0, R / 2.0);
    return p;
}

struct AlgebraicReplay {
    double value = 0;
    long long floor_used = 1;  // size at which the trivial base case took over
    double c = 1.0 / 16.0;
    std::string note;
};

// c2*(N) <= c2*(N/2) + 5 sqrt(d) while N >= d^2 / c, then the triangle bound.
inline AlgebraicReplay replay_algebraic_recursion(long long N, long long d, double c = 1.0 / 16.0) {
    require(is_pow2(N), "replay_algebraic_recursion needs N a power of two");
    require(d >= 1 && c > 0, "replay_algebraic_recursion needs d >= 1 and c > 0");
    const double floor = static_cast<double>(d) * static_cast<double>(d) / c;
    long long m = N;
    long long steps = 0;
    while (m >= 2 && static_cast<double>(m) >= floor) {
        m /= 2;
        ++steps;
    }
    AlgebraicReplay r;
    r.c = c;
    r.floor_used = m;
    r.value = static_cast<double>(m);
    const double step = up_mul(5.0, up_sqrt(static_cast<double>(d)));
    for (long long s = 0; s < steps; ++s) r.value = up_add(r.value, step);
    r.note = "conditional on c = " + std::to_string(c);
    return r;
}

struct Thm3dConstants {
    double c = 0, c0 = 0, C0 = 0, A_min = 0;
    double bound_c0 = 0, bound_log = 0, bound_C0 = 0;  // the three lower bounds on A
};

inline Thm3dConstants replay_thm3d_constants(double A1, double A2) {
    require(A1 > 0 && A2 > 0, "replay_thm3d_constants needs positive A1, A2");
    Thm3dConstants k;
    k.c = 1.0 / (16.0 * A2);  // strictly inside c < 1/(8 A2)
    k.c0 = std::sqrt(k.c / (4096.0 * A1));
    k.bound_c0 = 2.0 * A1 / (k.c0 * k.c0);
    k.bound_log = 5.0 / std::numbers::ln2;
    k.C0 = 2.0 * (A1 / (k.c0 * k.c0) + 1.0);
    k.bound_C0 = k.C0;
    k.A_min = std::max({k.bound_c0, k.bound_log, k.bound_C0});
    return k;
}

// h supplied through its logarithmic argument: hl(log x) = h(x). This keeps
// the regime where the step closes (log N in the thousands) representable.
using LogGrowth = std::function<double(double)>;

inline LogGrowth named_growth(const std::string& name) {
    if (name == "loglog") return [](double l) { return std::log(l); };
    if (name == "sqrtlog") return [](double l) { return std::sqrt(l); };
    if (name == "log^0.75") return [](double l) { return std::pow(l, 0.75); };
    throw PreconditionError("unknown growth function '" + name + "'");
}

struct GenStep {
    double log_N = 0;
    double omega = 0;           // h(N) / log N
    double log_d0 = 0;          // log(sqrt(N) omega^2)
    double log_components = 0;  // log(A1 d0^2)
    double per_cell = 0;        // A1 omega^-4
    double log_star_star = 0;   // log(A sqrt(d0) log N) = log(A N^{1/4} h(N))
    double h_ratio = 0;         // h((log N)^4) / h(N)
    double contraction = 0;     // A1^{1/4} eps + 4 A1^{1/4} h_ratio
    double contraction_bound = 0;  // 5 A1^{1/4} eps
    std::vector<std::string> violations;
};

inline GenStep evaluate_3dgen_step(double log_N, const LogGrowth& hl, double A1, double A, double eps) {
    require(log_N > 1 && A1 > 0 && A > 0 && eps > 0 && eps < 1, "3dgen step needs log N > 1, A1, A > 0, 0 < eps < 1");
    GenStep s;
    s.log_N = log_N;
    const double hN = hl(log_N);
    s.omega = hN / log_N;
    s.log_d0 = 0.5 * log_N + 2.0 * std::log(s.omega);
    s.log_components = std::log(A1) + 2.0 * s.log_d0;
    s.per_cell = A1 * std::pow(s.omega, -4.0);
    s.log_star_star = std::log(A) + 0.5 * s.log_d0 + std::log(log_N);
    s.h_ratio = hl(4.0 * std::log(log_N)) / hN;
    const double q = std::pow(A1, 0.25);
    s.contraction = q * eps + 4.0 * q * s.h_ratio;
    s.contraction_bound = 5.0 * q * eps;
    if (!(s.omega <= eps)) s.violations.push_back("omega(N) <= eps");
    if (!(log_N + 4.0 * std::log(s.omega) > -std::log(eps))) s.violations.push_back("N omega(N)^4 > 1/eps");
    if (!(hN > 1.0 / eps)) s.violations.push_back("h(N) > 1/eps");
    if (!(s.h_ratio < eps)) s.violations.push_back("h((log N)^4) < eps h(N)");
    if (!(10.0 * q * eps < 1.0)) s.violations.push_back("10 A1^{1/4} eps < 1");
    if (!(s.contraction_bound < 0.5)) s.violations.push_back("contraction below 1/2");
    return s;
}

inline GenStep replay_3dgen_step(double log_N, const LogGrowth& hl, double A1, double A, double eps) {
    auto s = evaluate_3dgen_step(log_N, hl, A1, A, eps);
    if (!s.violations.empty()) {
        std::string msg = "epsilon conditions violated:";
        for (const auto& v : s.violations) msg += " [" + v + "]";
        throw PreconditionError(msg);
    }
    return s;
}

}  // namespace mdht
