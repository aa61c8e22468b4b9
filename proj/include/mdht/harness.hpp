#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "certifier.hpp"
#include "norm_probe.hpp"

namespace mdht {

using SweepPoint = std::map<std::string, long long>;

struct SweepPlan {
    std::string family;    // uniform, uniform2, lacunary, boustrophedon
    std::vector<SweepPoint> grid;
    std::string suite = "sharpness+random";
    std::string strategy;  // empty: the family's natural strategy
    std::uint64_t seed = 1;
    std::size_t random_count = 2;
    double spacing = 0.5;
};

struct FamilyMember {
    DirectionSet omega;
    Strategy strategy;
};

inline FamilyMember family_member(const std::string& family, const SweepPoint& p) {
    auto get = [&](const char* k) {
        auto it = p.find(k);
        require(it != p.end(), "family '" + family + "' needs parameter " + k);
        return it->second;
    };
    if (family == "uniform") return {uniform(get("N")), parse_strategy("dyadic-1d")};
    if (family == "uniform2") {
        auto u = uniform(get("M"));
        return {product({u, u}), parse_strategy("product-grid")};
    }
    if (family == "lacunary") return {lacunary_uniform(get("R"), get("M")), parse_strategy("lacunary-mixed")};
    if (family == "boustrophedon") {
        auto cs = boustrophedon_curve_samples(get("M"));
        auto st = parse_strategy("curve-pairs(" + std::to_string(cs.crossing_degree) + ")");
        st.polyline = cs.polyline;
        return {cs.omega, st};
    }
    throw PreconditionError("unknown family '" + family + "'");
}

// "N=4,8,16" or "R=1,2;M=4": the cartesian product of the listed values.
inline std::vector<SweepPoint> parse_param_grid(const std::string& text) {
    std::vector<SweepPoint> out{SweepPoint{}};
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        require(eq != std::string::npos && eq > 0, "malformed parameter grid entry '" + part + "'");
        std::string key = part.substr(0, eq);
        std::vector<long long> vals;
        std::stringstream vs(part.substr(eq + 1));
        std::string v;
        while (std::getline(vs, v, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stoll(v, &used));
                require(used == v.size(), "");
            } catch (const std::exception&) {
                throw PreconditionError("malformed value '" + v + "' for parameter " + key);
            }
        }
        require(!vals.empty(), "parameter " + key + " has no values");
        std::vector<SweepPoint> next;
        for (const auto& p : out)
            for (auto x : vals) {
                auto q = p;
                q[key] = x;
                next.push_back(std::move(q));
            }
        out = std::move(next);
    }
    require(!out.front().empty(), "parameter grid is empty");
    return out;
}

inline std::string format_params(const SweepPoint& p) {
    std::string s;
    for (const auto& [k, v] : p) s += (s.empty() ? "" : ";") + k + "=" + std::to_string(v);
    return s;
}

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct SweepRow {
    std::string family, params;
    std::size_t N = 0;
    double rayleigh_lower = std::nan("");
    double certified_upper = std::nan("");
    std::string grid_meta;
    std::uint64_t seed = 0;
    std::string error;
};

inline const char* kSweepHeader = "family,params,N,rayleigh_lower,certified_upper,grid_meta,seed";

inline SweepRow run_sweep_point(const SweepPlan& plan, const SweepPoint& p) {
    SweepRow row;
    row.family = plan.family;
    row.params = format_params(p);
    row.seed = plan.seed;
    try {
        auto m = family_member(plan.family, p);
        if (!plan.strategy.empty()) {
            auto st = parse_strategy(plan.strategy);
            if (st.name == "curve-pairs" && st.polyline.empty()) st.polyline = m.strategy.polyline;
            m.strategy = st;
        }
        row.N = m.omega.size();
        SuiteOptions opt;
        opt.seed = plan.seed;
        opt.random_count = plan.random_count;
        opt.spacing = plan.spacing;
        auto probes = build_probe_suite(m.omega, plan.suite, opt);
        auto rep = estimate_lower_bound(m.omega, probes);
        row.rayleigh_lower = rep.max_rayleigh;
        const auto& f = probes.front().field;
        std::string shape, box;
        for (std::size_t a = 0; a < f.dim(); ++a) {
            shape += (a ? "x" : "") + std::to_string(f.shape[a]);
            box += (a ? "x" : "") + format_double(f.box[a]);
        }
        row.grid_meta = "shape=" + shape + ";box=" + box;
        row.certified_upper = certify(m.omega, m.strategy).value;
    } catch (const std::exception& e) {
        row.error = e.what();
        // keep the CSV one line per row
        for (char& c : row.error)
            if (c == ',' || c == '\n') c = ' ';
        row.grid_meta = "error=" + row.error;
    }
    return row;
}

inline std::vector<SweepRow> run_sweep_rows(const SweepPlan& plan) {
    require(!plan.grid.empty(), "sweep plan has an empty parameter grid");
    static const std::set<std::string> families{"uniform", "uniform2", "lacunary", "boustrophedon"};
    require(families.count(plan.family) > 0, "unknown family '" + plan.family + "'");
    if (!plan.strategy.empty()) parse_strategy(plan.strategy);
    require(plan.suite == "sharpness" || plan.suite == "random" || plan.suite == "sharpness+random",
            "unknown probe suite '" + plan.suite + "'");
    auto points = plan.grid;
    std::sort(points.begin(), points.end());
    std::vector<SweepRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < points.size();) rows[i] = run_sweep_point(plan, points[i]);
    };
    unsigned w = worker_count(points.size());
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < w; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) {
        out += r.family + "," + r.params + "," + std::to_string(r.N) + "," + format_double(r.rayleigh_lower) + "," +
               format_double(r.certified_upper) + "," + r.grid_meta + "," + std::to_string(r.seed) + "\n";
    }
    return out;
}

inline std::string run_sweep(const SweepPlan& plan) { return sweep_csv(run_sweep_rows(plan)); }

// Rows back from CSV text; '#' lines are comments.
inline std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::vector<SweepRow> rows;
    std::stringstream ss(text);
    std::string line;
    bool header = false;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            require(line == kSweepHeader, "unexpected CSV header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        require(f.size() == 7, "CSV row has " + std::to_string(f.size()) + " fields, expected 7");
        SweepRow r;
        r.family = f[0];
        r.params = f[1];
        r.N = std::stoull(f[2]);
        r.rayleigh_lower = std::stod(f[3]);
        r.certified_upper = std::stod(f[4]);
        r.grid_meta = f[5];
        r.seed = std::stoull(f[6]);
        rows.push_back(std::move(r));
    }
    require(header, "CSV has no header");
    return rows;
}

struct GrowthFit {
    std::string model;
    double slope = 0, intercept = 0;
    double residual = 0;           // sum of squared residuals in the model's y-space
    double constant_residual = 0;  // same data, intercept-only model
    double slope_stderr = 0;
    double ci_low = 0, ci_high = 0;  // 95% for the slope
    std::size_t rows = 0;

    nlohmann::json to_json() const {
        return {{"model", model},         {"slope", slope},
                {"intercept", intercept}, {"residual", residual},
                {"constant_residual", constant_residual},
                {"slope_stderr", slope_stderr}, {"ci95", {ci_low, ci_high}},
                {"rows", rows}};
    }
};

// logN:     y = a + b log N
// sqrtlogN: y = a + b sqrt(log N)
// power:    log y = a + b log N
inline GrowthFit fit_growth(const std::vector<SweepRow>& rows, const std::string& model) {
    require(model == "logN" || model == "sqrtlogN" || model == "power", "unknown growth model '" + model + "'");
    std::vector<double> x, y;
    for (const auto& r : rows) {
        if (!r.error.empty() || !std::isfinite(r.rayleigh_lower)) continue;
        require(r.N >= 1, "fit rows need N >= 1");
        double l = std::log(static_cast<double>(r.N));
        if (model == "power") {
            require(r.rayleigh_lower > 0, "power model needs positive Rayleigh values");
            x.push_back(l);
            y.push_back(std::log(r.rayleigh_lower));
        } else {
            x.push_back(model == "logN" ? l : std::sqrt(l));
            y.push_back(r.rayleigh_lower);
        }
    }
    require(x.size() >= 4, "fit needs at least 4 usable rows");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0, "degenerate fit data: all N equal");
    GrowthFit g;
    g.model = model;
    g.rows = x.size();
    g.slope = sxy / sxx;
    g.intercept = my - g.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (g.intercept + g.slope * x[i]);
        g.residual += e * e;
    }
    g.constant_residual = syy;
    g.slope_stderr = std::sqrt(g.residual / (n - 2.0) / sxx);
    boost::math::students_t t(n - 2.0);
    double q = boost::math::quantile(boost::math::complement(t, 0.025));
    g.ci_low = g.slope - q * g.slope_stderr;
    g.ci_high = g.slope + q * g.slope_stderr;
    return g;
}

struct CheckItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Compact runs of every module's invariants at small sizes. Failures are
// reported, never thrown.
inline std::vector<CheckItem> check_all(std::uint64_t seed = 1) {
    std::vector<CheckItem> out;
    auto run = [&](const std::string& name, auto&& fn) {
        CheckItem c{name, false, {}};
        try {
            c.detail = fn();
            c.pass = c.detail.empty();
        } catch (const std::exception& e) {
            c.detail = std::string("exception: ") + e.what();
        }
        out.push_back(std::move(c));
    };
    std::mt19937_64 g(seed);
    auto f = random_bandlimited_field({32, 32}, {8.0, 8.0}, {-4.0, -4.0}, {8, 8}, seed);
    auto f2 = random_bandlimited_field({32, 32}, {8.0, 8.0}, {-4.0, -4.0}, {8, 8}, seed + 1);
    const std::vector<double> v{0.375};

    run("spectral/contraction", [&]() -> std::string {
        auto h = apply_hv(f, v);
        return h.norm2() <= f.norm2() * (1 + 1e-12) ? "" : "norm grew";
    });
    run("spectral/involution", [&]() -> std::string {
        auto hh = apply_hv(apply_hv(f, v), v);
        auto p = null_projection(f, v);
        double err = 0;
        for (std::size_t i = 0; i < f.total(); ++i) err = std::max(err, std::abs(hh.values[i] + f.values[i] - p.values[i]));
        return err <= 1e-10 ? "" : "max deviation " + std::to_string(err);
    });
    run("spectral/wedge-support", [&]() -> std::string {
        double e = wedge_energy_outside(f, {0.25}, {0.75});
        return e <= 1e-12 * f.norm2() * f.norm2() ? "" : "energy outside wedge " + std::to_string(e);
    });
    auto om = uniform(4);
    run("spectral/sublinearity", [&]() -> std::string {
        auto sum = detail::like(f, f.values);
        for (std::size_t i = 0; i < f.total(); ++i) sum.values[i] += f2.values[i];
        auto a = apply_maximal(sum, om), b = apply_maximal(f, om), c = apply_maximal(f2, om);
        for (std::size_t i = 0; i < f.total(); ++i)
            if (a.values[i] > b.values[i] + c.values[i] + 1e-12) return "pointwise bound fails";
        return "";
    });
    run("spectral/permutation-invariance", [&]() -> std::string {
        auto pts = om.points();
        std::reverse(pts.begin(), pts.end());
        DirectionSet rev(1, pts, om.label());
        return apply_maximal(f, om).values == apply_maximal(f, rev).values ? "" : "maximal function depends on order";
    });
    run("geometry/cover-validity", [&]() -> std::string {
        auto u = uniform(4);
        return check_cover(grid_cover_for_product(product({u, u}), {2, 2}));
    });
    run("geometry/grid-lemma", [&]() -> std::string {
        auto u = uniform(8);
        auto e = stab_sup_exact(grid_cover_for_product(product({u, u}), {2, 2}));
        return e.e_sup <= 7 ? "" : "E_sup " + std::to_string(e.e_sup);
    });
    run("geometry/ham-sandwich", [&]() -> std::string {
        std::uniform_int_distribution<int> d(-20, 20);
        for (int t = 0; t < 20; ++t) {
            std::vector<Point> A, B;
            for (int i = 0; i < 9; ++i) A.push_back({Rational(d(g)), Rational(d(g))});
            for (int i = 0; i < 6; ++i) B.push_back({Rational(d(g)), Rational(d(g))});
            auto l = ham_sandwich_line(A, B);
            for (const auto* S : {&A, &B}) {
                std::size_t pos = 0, neg = 0, cap = (S->size() + 1) / 2;
                for (const auto& p : *S) {
                    int s = l.side(p);
                    pos += s > 0;
                    neg += s < 0;
                }
                if (pos > cap || neg > cap) return "unbalanced cut";
            }
        }
        return "";
    });
    run("certifier/node-arithmetic", [&]() -> std::string {
        return verify_certificate(certify(product({uniform(8), uniform(8)}), parse_strategy("product-grid")));
    });
    run("certifier/dyadic-dominance", [&]() -> std::string {
        for (long long N : {16, 32, 64}) {
            double v = certify(uniform(N), parse_strategy("dyadic-1d")).value;
            if (!(v < static_cast<double>(N))) return "no gain at N=" + std::to_string(N);
        }
        return "";
    });
    run("certifier/closed-form", [&]() -> std::string {
        auto u = uniform(8);
        double a = certify(product({u, u}), parse_strategy("product-grid")).value;
        if (a != replay_product_recursion(3).value) return "product-grid differs from replay";
        auto cs = boustrophedon_curve_samples(4);
        auto st = parse_strategy("curve-pairs(4)");
        st.polyline = cs.polyline;
        if (certify(cs.omega, st).value != replay_curve_recursion(16, 4)) return "curve-pairs differs from replay";
        return "";
    });
    run("certifier/affine-invariance", [&]() -> std::string {
        auto a = certify(uniform(16), parse_strategy("dyadic-1d")).value;
        auto b = certify(affine_image(uniform(16), {Rational(3)}, {Rational(-1)}), parse_strategy("dyadic-1d")).value;
        return a == b ? "" : "affine image changed the bound";
    });
    run("certifier/negative-control", [&]() -> std::string {
        CertificateFile cf{"U_4", "dyadic-1d", certify(uniform(4), parse_strategy("dyadic-1d"))};
        cf.root.value = 0.5;
        ProbeReport rep;
        rep.omega_label = "U_4";
        rep.max_rayleigh = 1.0;
        return soundness_audit(cf, rep).sound ? "corrupted certificate passed the audit" : "";
    });
    return out;
}

inline nlohmann::json to_json(const std::vector<CheckItem>& items) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& c : items) {
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        all = all && c.pass;
    }
    return {{"all_pass", all}, {"checks", arr}};
}

}  // namespace mdht
