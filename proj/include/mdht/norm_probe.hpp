#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "direction_sets.hpp"
#include "spectral_transform.hpp"

namespace mdht {

// Parameters of the product sharpness construction. For n = 1 there is
// no second size; the construction then uses N2 = 1.
struct SharpnessSpec {
    int n = 1;
    std::vector<long long> N;

    void validate() const {
        require(n >= 1, "sharpness spec needs n >= 1");
        require(N.size() == static_cast<std::size_t>(n), "sharpness spec needs one size per axis");
        for (std::size_t k = 0; k < N.size(); ++k) {
            require(N[k] >= 1, "sharpness sizes must be positive");
            if (k) require(N[k] <= N[k - 1], "sharpness sizes must be nonincreasing");
        }
    }
    long long N1() const { return N[0]; }
    long long N2() const { return n >= 2 ? N[1] : 1; }
    double shift() const { return static_cast<double>(N2()) / static_cast<double>(N1()); }
    // Side lengths of the rectangle [0,5] x [0,2]^{n-1} x [0,1].
    double side(std::size_t axis) const {
        if (axis == 0) return 5.0;
        if (axis + 1 == static_cast<std::size_t>(n) + 1) return 1.0;
        return 2.0;
    }
    DirectionSet directions() const {
        std::vector<DirectionSet> f;
        for (auto k : N) f.push_back(uniform(k));
        return product(f);
    }
};

inline double sharpness_value(const SharpnessSpec& s, const std::vector<double>& y) {
    const std::size_t d = y.size();
    for (std::size_t a = 0; a < d; ++a)
        if (y[a] < 0.0 || y[a] > s.side(a)) return 0.0;
    return 1.0 / (s.shift() + y[0] + y[d - 1]);
}

inline double f_norm_exact(const SharpnessSpec& s) {
    s.validate();
    const double a = s.shift();
    const double r = static_cast<double>(s.N1()) / static_cast<double>(s.N2());
    return std::pow(2.0, s.n - 1) * (std::log1p(r) - std::log((a + 6.0) / (a + 5.0)));
}

// Per-axis [lo, hi] covering the rectangle and every S_v.
inline std::vector<std::array<double, 2>> sharpness_extent(const SharpnessSpec& s) {
    const double reach = 4.0 * static_cast<double>(s.N1());
    std::vector<std::array<double, 2>> e;
    for (int a = 0; a <= s.n; ++a) e.push_back({-reach, s.side(static_cast<std::size_t>(a))});
    return e;
}

struct ProbeGrid {
    std::vector<std::size_t> shape;
    std::vector<double> box;
    std::vector<double> origin;

    nlohmann::json to_json() const { return {{"shape", shape}, {"box", box}, {"origin", origin}}; }
};

// Default box: smallest power of two covering the content, doubled, with
// the content centred and the rectangle's faces on cell boundaries.
inline ProbeGrid sharpness_grid(const SharpnessSpec& s, double spacing = 0.5,
                                std::vector<std::size_t> shape = {}, std::vector<double> box = {}) {
    s.validate();
    auto ext = sharpness_extent(s);
    const std::size_t d = ext.size();
    ProbeGrid g;
    for (std::size_t a = 0; a < d; ++a) {
        double need = ext[a][1] - ext[a][0];
        double L;
        if (box.empty()) {
            L = 2.0 * static_cast<double>(std::bit_ceil(static_cast<std::size_t>(std::ceil(need))));
        } else {
            require(box.size() == d, "probe box rank mismatch");
            if (box[a] < need)
                throw PreconditionError("probe box too small on axis " + std::to_string(a) + ": need at least " +
                                        std::to_string(need) + ", got " + std::to_string(box[a]));
            L = box[a];
        }
        std::size_t n = shape.empty() ? static_cast<std::size_t>(std::llround(L / spacing)) : shape.at(a);
        require(n >= 1 && std::has_single_bit(n), "probe grid shape must be powers of two");
        double h = L / static_cast<double>(n);
        double m = std::floor((L - need) / (2.0 * h));
        g.shape.push_back(n);
        g.box.push_back(L);
        g.origin.push_back(ext[a][0] - m * h);
    }
    return g;
}

inline SampledField build_sharpness_field(const SharpnessSpec& s, const ProbeGrid& g) {
    auto ext = sharpness_extent(s);
    for (std::size_t a = 0; a < ext.size(); ++a)
        if (g.origin[a] > ext[a][0] || g.origin[a] + g.box[a] < ext[a][1])
            throw PreconditionError("probe box does not cover the test rectangle and regions on axis " +
                                    std::to_string(a) + "; required [" + std::to_string(ext[a][0]) + ", " +
                                    std::to_string(ext[a][1]) + "]");
    return sample_field(g.shape, g.box, g.origin, [&](const std::vector<double>& y) { return sharpness_value(s, y); });
}

inline SampledField build_sharpness_field(const SharpnessSpec& s, std::vector<std::size_t> shape = {},
                                          std::vector<double> box = {}) {
    return build_sharpness_field(s, sharpness_grid(s, 0.5, std::move(shape), std::move(box)));
}

enum class RegionKind { Wv, Xv, Sv };

struct RegionSpec {
    RegionKind kind = RegionKind::Sv;
    std::vector<double> v;
    SharpnessSpec params;
};

inline bool region_membership(const std::vector<double>& x, const RegionSpec& r) {
    const auto& s = r.params;
    const std::size_t n = static_cast<std::size_t>(s.n);
    if (x.size() != n + 1 || r.v.size() != n) return false;
    for (double c : x)
        if (!(c < 0.0)) return false;
    const double xl = x[n], z = -xl;
    const double N1 = static_cast<double>(s.N1()), N2 = static_cast<double>(s.N2());
    if (!(2.0 * N2 < z && z < 4.0 * N1)) return false;
    switch (r.kind) {
        case RegionKind::Wv:
            for (std::size_t k = 0; k < n; ++k) {
                double q = x[k] / xl - r.v[k];
                if (!(-1.0 / static_cast<double>(s.N[k]) < q && q < 0.0)) return false;
            }
            return true;
        case RegionKind::Xv:
        case RegionKind::Sv: {
            double u1 = x[0] - r.v[0] * xl;
            double lo = r.kind == RegionKind::Sv ? N2 / N1 : 0.0;
            if (!(lo < u1 && u1 < z / N1)) return false;
            for (std::size_t k = 1; k < n; ++k) {
                double u = x[k] - r.v[k] * xl;
                if (!(0.0 < u && u < s.side(k) - r.v[k])) return false;
            }
            return true;
        }
    }
    return false;
}

// Uniform sample from S_v through the shear coordinates
// z = |x_last|, u_k = x_k - v_k x_last.
inline std::vector<double> sample_sv(const SharpnessSpec& s, const std::vector<double>& v, std::mt19937_64& g) {
    const std::size_t n = static_cast<std::size_t>(s.n);
    const double N1 = static_cast<double>(s.N1()), N2 = static_cast<double>(s.N2());
    auto u01 = [&] { return 0.5 * (unit_uniform(g) + 1.0); };
    std::vector<double> x(n + 1);
    for (;;) {
        double z = 2.0 * N2 + (4.0 * N1 - 2.0 * N2) * u01();
        double u1 = N2 / N1 + (z / N1 - N2 / N1) * u01();
        if (!(u1 > N2 / N1 && u1 < z / N1)) continue;
        x[n] = -z;
        x[0] = u1 + v[0] * x[n];
        for (std::size_t k = 1; k < n; ++k) x[k] = (2.0 - v[k]) * u01() + v[k] * x[n];
        if (region_membership(x, {RegionKind::Sv, v, s})) return x;
    }
}

// Disjointness check by sampling each region and probing the
// other, plus the exact projection argument on the coordinate that differs.
inline bool sv_disjointness_check(const SharpnessSpec& s, const std::vector<double>& v, const std::vector<double>& w,
                                  std::size_t samples = 64, std::uint64_t seed = 7) {
    require(v != w, "sv_disjointness_check needs distinct directions");
    std::mt19937_64 g(seed);
    RegionSpec rv{RegionKind::Sv, v, s}, rw{RegionKind::Sv, w, s};
    for (std::size_t i = 0; i < samples; ++i) {
        if (region_membership(sample_sv(s, v, g), rw)) return false;
        if (region_membership(sample_sv(s, w, g), rv)) return false;
    }
    return true;
}

// Exact line integral (1/pi) p.v. int f(x - t<v,1>) dt / t for the test
// function, using the closed-form antiderivative of 1/(t(alpha - beta t)).
inline double hv_sharpness_exact(const SharpnessSpec& s, const std::vector<double>& v, const std::vector<double>& x) {
    const std::size_t d = x.size();
    double t0 = -INFINITY, t1 = INFINITY;
    for (std::size_t a = 0; a < d; ++a) {
        double c = a + 1 == d ? 1.0 : v[a];
        double lo = x[a] - s.side(a), hi = x[a];  // need lo <= c t <= hi
        if (c == 0.0) {
            if (lo > 0.0 || hi < 0.0) return 0.0;
            continue;
        }
        double p = lo / c, q = hi / c;
        if (c < 0) std::swap(p, q);
        t0 = std::max(t0, p);
        t1 = std::min(t1, q);
    }
    if (!(t0 < t1)) return 0.0;
    const double alpha = s.shift() + x[0] + x[d - 1];
    const double beta = v[0] + 1.0;
    auto F = [&](double t) {
        if (alpha == 0.0) return 1.0 / (beta * t);
        return (std::log(std::abs(t)) - std::log(std::abs(alpha - beta * t))) / alpha;
    };
    return (F(t1) - F(t0)) / std::numbers::pi;
}

struct RestrictedEnergy {
    double energy = 0;
    double c_hat = 0;
    std::size_t points = 0;
};

inline double energy_scale(const SharpnessSpec& s) {
    double l = std::log(static_cast<double>(s.N1()) / static_cast<double>(s.N2()) + 1.0);
    return l * l * l / static_cast<double>(s.N1());
}

// Grid quadrature of |H_v f|^2 over the grid points that fall in S_v.
inline RestrictedEnergy sv_restricted_energy(const SharpnessSpec& s, const std::vector<double>& v,
                                             const SampledField& f, const SampledField* hv = nullptr) {
    auto ext = sharpness_extent(s);
    for (std::size_t a = 0; a < ext.size(); ++a)
        require(f.origin[a] <= ext[a][0] && f.origin[a] + f.box[a] >= ext[a][1], "S_v leaves the field box");
    SampledField local;
    if (!hv) {
        local = apply_hv(f, v);
        hv = &local;
    }
    RegionSpec r{RegionKind::Sv, v, s};
    RestrictedEnergy out;
    const std::size_t d = f.dim();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    long double acc = 0;
    for (std::size_t lin = 0; lin < f.values.size(); ++lin) {
        for (std::size_t a = 0; a < d; ++a) x[a] = f.coordinate(a, idx[a]);
        if (region_membership(x, r)) {
            acc += static_cast<long double>(hv->values[lin]) * hv->values[lin];
            ++out.points;
        }
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < f.shape[a]) break;
            idx[a] = 0;
        }
    }
    out.energy = static_cast<double>(acc) * f.cell_volume();
    out.c_hat = out.energy / energy_scale(s);
    return out;
}

// Continuum version: Gauss-Legendre on log-spaced panels in the shear
// coordinates of S_v, with H_v f from the exact line integral.
inline RestrictedEnergy sv_restricted_energy_exact(const SharpnessSpec& s, const std::vector<double>& v,
                                                   int panels = 48) {
    s.validate();
    static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                     0.8611363115940526};
    static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};
    const std::size_t n = static_cast<std::size_t>(s.n);
    const double N1 = static_cast<double>(s.N1()), N2 = static_cast<double>(s.N2());
    // integrate g over [lo, hi] in log coordinates
    auto log_quad = [&](double lo, double hi, auto&& g) {
        double a = std::log(lo), b = std::log(hi), w = (b - a) / panels;
        long double acc = 0;
        for (int p = 0; p < panels; ++p)
            for (int q = 0; q < 4; ++q) {
                double t = a + w * (p + 0.5 * (gx[q] + 1.0));
                double y = std::exp(t);
                acc += 0.5 * w * gw[q] * y * g(y);
            }
        return static_cast<double>(acc);
    };
    std::vector<double> x(n + 1);
    std::vector<std::size_t> node(n > 1 ? n - 1 : 0, 0);
    double energy = log_quad(2.0 * N2, 4.0 * N1, [&](double z) {
        return log_quad(N2 / N1, z / N1, [&](double u1) {
            // the remaining shear coordinates: tensor Gauss rule
            long double acc = 0;
            std::size_t combos = 1;
            for (std::size_t k = 1; k < n; ++k) combos *= 4;
            for (std::size_t c = 0; c < combos; ++c) {
                double w = 1.0;
                std::size_t cc = c;
                x[n] = -z;
                x[0] = u1 + v[0] * x[n];
                for (std::size_t k = 1; k < n; ++k) {
                    std::size_t q = cc % 4;
                    cc /= 4;
                    double len = s.side(k) - v[k];
                    x[k] = 0.5 * len * (gx[q] + 1.0) + v[k] * x[n];
                    w *= 0.5 * len * gw[q];
                }
                double h = hv_sharpness_exact(s, v, x);
                acc += w * h * h;
            }
            return static_cast<double>(acc);
        });
    });
    return {energy, energy / energy_scale(s), 0};
}

// min over samples of |H_v f(x)| |x_last| / log(4 N1 / |x_last|) on S_v.
inline double pointwise_constant(const SharpnessSpec& s, const std::vector<double>& v, std::size_t samples,
                                 std::uint64_t seed) {
    std::mt19937_64 g(seed);
    double best = INFINITY;
    for (std::size_t i = 0; i < samples; ++i) {
        auto x = sample_sv(s, v, g);
        double z = -x.back();
        double r = std::abs(hv_sharpness_exact(s, v, x)) * z / std::log(4.0 * static_cast<double>(s.N1()) / z);
        best = std::min(best, r);
    }
    return best;
}

// {t : x + <v,1> t in R} as a closed interval; empty when lo > hi.
inline std::array<double, 2> hit_set(const std::vector<double>& x, const std::vector<double>& v,
                                     const SharpnessSpec& s) {
    double lo = -INFINITY, hi = INFINITY;
    for (std::size_t a = 0; a < x.size(); ++a) {
        double c = a + 1 == x.size() ? 1.0 : v[a];
        double p = -x[a], q = s.side(a) - x[a];  // need p <= c t <= q
        if (c == 0.0) {
            if (p > 0.0 || q < 0.0) return {1.0, 0.0};
            continue;
        }
        double tp = p / c, tq = q / c;
        if (c < 0) std::swap(tp, tq);
        lo = std::max(lo, tp);
        hi = std::min(hi, tq);
    }
    return {lo, hi};
}

inline bool in_rectangle(const SharpnessSpec& s, const std::vector<double>& y) {
    for (std::size_t a = 0; a < y.size(); ++a)
        if (y[a] < 0.0 || y[a] > s.side(a)) return false;
    return true;
}

// Scan t and compare membership of x + <v,1> t in R with 0 < x_last + t < 1.
inline bool interval_hit_check(const std::vector<double>& x, const std::vector<double>& v, const SharpnessSpec& s,
                               std::size_t samples = 1000) {
    require(region_membership(x, {RegionKind::Xv, v, s}), "interval_hit_check needs x in X_v");
    const double xl = x.back();
    const double a = -xl - 2.0, b = 1.0 - xl + 2.0;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < samples; ++i) {
        double t = a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(samples);
        double e = xl + t;
        if (std::abs(e) < 1e-9 || std::abs(e - 1.0) < 1e-9) continue;
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + (k + 1 == x.size() ? 1.0 : v[k]) * t;
        if (in_rectangle(s, y) != (0.0 < e && e < 1.0)) return false;
    }
    return true;
}

struct ProbeResult {
    std::string name;
    double rayleigh = 0;
    std::uint64_t seed = 0;
};

struct ProbeReport {
    std::string omega_label;
    nlohmann::json grid = nlohmann::json::object();
    std::vector<ProbeResult> probes;
    double max_rayleigh = 0;
    nlohmann::json regions;  // null unless computed

    nlohmann::json to_json() const {
        nlohmann::json p = nlohmann::json::array();
        for (const auto& r : probes) p.push_back({{"name", r.name}, {"rayleigh", r.rayleigh}, {"seed", r.seed}});
        nlohmann::json j{{"omega_label", omega_label}, {"grid", grid}, {"probes", p}, {"max_rayleigh", max_rayleigh}};
        if (!regions.is_null()) j["regions"] = regions;
        return j;
    }

    static ProbeReport from_json(const nlohmann::json& j) {
        ProbeReport r;
        r.omega_label = j.at("omega_label").get<std::string>();
        r.grid = j.value("grid", nlohmann::json::object());
        for (const auto& p : j.at("probes"))
            r.probes.push_back({p.at("name").get<std::string>(), p.at("rayleigh").get<double>(),
                                p.value("seed", std::uint64_t{0})});
        r.max_rayleigh = j.at("max_rayleigh").get<double>();
        if (j.contains("regions")) r.regions = j.at("regions");
        return r;
    }
};

struct Probe {
    std::string name;
    SampledField field;
    std::uint64_t seed = 0;
};

inline ProbeReport estimate_lower_bound(const DirectionSet& omega, const std::vector<Probe>& probes) {
    require(!probes.empty(), "estimate_lower_bound needs at least one probe");
    ProbeReport rep;
    rep.omega_label = omega.label();
    const auto& f0 = probes.front().field;
    rep.grid = {{"shape", f0.shape}, {"box", f0.box}, {"origin", f0.origin}};
    for (const auto& p : probes) {
        require(p.field.dim() == omega.dim() + 1, "probe dimension does not match the direction set");
        double n2 = p.field.norm2();
        require(n2 > 0, "probe '" + p.name + "' has zero norm");
        double r = rayleigh_quotient(p.field, omega);
        rep.probes.push_back({p.name, r, p.seed});
        rep.max_rayleigh = std::max(rep.max_rayleigh, r);
    }
    return rep;
}

// Sharpness parameters matched to Omega: per-axis cardinalities, largest
// first, for product sets; the cardinality itself for other 1D sets.
inline SharpnessSpec sharpness_spec_for(const DirectionSet& omega) {
    SharpnessSpec s;
    s.n = static_cast<int>(omega.dim());
    if (omega.dim() == 1 || !is_product_set(omega)) {
        for (std::size_t a = 0; a < omega.dim(); ++a)
            s.N.push_back(static_cast<long long>(a == 0 ? omega.size() : axis_values(omega, a).size()));
    } else {
        for (std::size_t a = 0; a < omega.dim(); ++a) s.N.push_back(static_cast<long long>(axis_values(omega, a).size()));
    }
    std::sort(s.N.begin(), s.N.end(), std::greater<>());
    return s;
}

struct SuiteOptions {
    std::size_t random_count = 8;
    std::uint64_t seed = 1;
    double spacing = 0.5;
    std::vector<std::size_t> shape;  // overrides spacing when set
    std::vector<double> box;
    std::size_t max_points = std::size_t(1) << 24;
};

// Probe suites: "sharpness", "random", "sharpness+random". All probes of a
// suite share one grid so their quotients are comparable.
inline std::vector<Probe> build_probe_suite(const DirectionSet& omega, const std::string& suite,
                                            const SuiteOptions& opt) {
    bool sharp = suite == "sharpness" || suite == "sharpness+random";
    bool rnd = suite == "random" || suite == "sharpness+random";
    require(sharp || rnd, "unknown probe suite '" + suite + "'");
    auto spec = sharpness_spec_for(omega);
    double h = opt.spacing;
    ProbeGrid g = sharpness_grid(spec, h, opt.shape, opt.box);
    while (opt.shape.empty()) {
        std::size_t tot = 1;
        for (auto n : g.shape) tot *= n;
        if (tot <= opt.max_points) break;
        h *= 2.0;
        g = sharpness_grid(spec, h, opt.shape, opt.box);
    }
    std::vector<Probe> out;
    if (sharp) out.push_back({"sharpness", build_sharpness_field(spec, g), 0});
    if (rnd) {
        std::vector<std::size_t> band;
        for (auto n : g.shape) band.push_back(std::max<std::size_t>(1, n / 8));
        for (std::size_t i = 0; i < opt.random_count; ++i) {
            std::uint64_t sd = opt.seed * 1000003ULL + i;
            out.push_back({"random#" + std::to_string(i),
                           random_bandlimited_field(g.shape, g.box, g.origin, band, sd), sd});
        }
    }
    return out;
}

}  // namespace mdht
