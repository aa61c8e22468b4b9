#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <thread>
#include <vector>

#include "direction_sets.hpp"
#include "fft.hpp"
#include "field.hpp"

namespace mdht {

namespace detail {

inline long long signed_index(std::size_t k, std::size_t n) {
    return 2 * k < n ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
}

inline bool is_nyquist(std::size_t k, std::size_t n) { return n >= 2 && n % 2 == 0 && 2 * k == n; }

// Calls fn(linear_index, sign) for every half-spectrum mode, where sign is
// sgn(xi . <v,1>) and xi_a = k_a / L_a. A Nyquist index is ambiguous (+-n/2)
// so the multiplier is set to zero there whenever that axis enters the dot
// product with a nonzero weight.
template <class Fn>
void visit_signs(const HalfSpectrum& h, const std::vector<double>& v, Fn&& fn) {
    const std::size_t d = h.shape.size();
    if (v.size() + 1 != d)
        throw PreconditionError("direction has " + std::to_string(v.size()) + " components, field needs " +
                                std::to_string(d - 1));
    std::vector<double> coef(d);
    for (std::size_t a = 0; a + 1 < d; ++a) coef[a] = v[a] / h.box[a];
    coef[d - 1] = 1.0 / h.box[d - 1];
    const std::size_t nl = h.shape.back();
    std::vector<std::size_t> idx(d - 1, 0);
    for (std::size_t r = 0; r < h.rows; ++r) {
        double base = 0, scale = 0;
        bool dead = false;
        for (std::size_t a = 0; a + 1 < d; ++a) {
            double t = coef[a] * static_cast<double>(signed_index(idx[a], h.shape[a]));
            base += t;
            scale += std::abs(t);
            if (coef[a] != 0 && is_nyquist(idx[a], h.shape[a])) dead = true;
        }
        for (std::size_t kl = 0; kl < h.last; ++kl) {
            int sg = 0;
            if (!dead && !is_nyquist(kl, nl)) {
                double t = coef[d - 1] * static_cast<double>(kl);
                double s = base + t;
                double tol = 1e-12 * (scale + t);
                sg = s > tol ? 1 : (s < -tol ? -1 : 0);
            }
            fn(r * h.last + kl, sg);
        }
        for (std::size_t a = d - 1; a-- > 0;) {
            if (++idx[a] < h.shape[a]) break;
            idx[a] = 0;
        }
    }
}

// (a + ib) * (-i s) = s b - i s a
inline void apply_multiplier(const HalfSpectrum& src, HalfSpectrum& dst, const std::vector<double>& v) {
    visit_signs(src, v, [&](std::size_t i, int s) {
        dst.data[i][0] = s * src.data[i][1];
        dst.data[i][1] = -s * src.data[i][0];
    });
}

inline SampledField like(const SampledField& f, std::vector<double> values) {
    SampledField g;
    g.shape = f.shape;
    g.box = f.box;
    g.origin = f.origin;
    g.values = std::move(values);
    return g;
}

inline double weighted_energy(const HalfSpectrum& h, const std::vector<char>& mask, double cell_volume) {
    long double s = 0;
    for (std::size_t r = 0; r < h.rows; ++r)
        for (std::size_t kl = 0; kl < h.last; ++kl) {
            std::size_t i = r * h.last + kl;
            if (!mask[i]) continue;
            long double m = static_cast<long double>(h.data[i][0]) * h.data[i][0] +
                            static_cast<long double>(h.data[i][1]) * h.data[i][1];
            s += h.column_weight(kl) * m;
        }
    return static_cast<double>(s) * cell_volume / static_cast<double>(h.real_total());
}

}  // namespace detail

inline unsigned worker_count(std::size_t jobs) {
    unsigned t = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MDHT_THREADS")) {
        long e = std::strtol(env, nullptr, 10);
        if (e >= 1) t = static_cast<unsigned>(e);
    }
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(jobs, 1)));
}

inline SampledField apply_hv(const SampledField& f, const std::vector<double>& v) {
    f.validate();
    auto spec = forward_fft(f);
    auto out = spec.clone();
    detail::apply_multiplier(spec, out, v);
    return detail::like(f, inverse_fft(std::move(out)));
}

inline SampledField apply_hv(const SampledField& f, const Point& v) { return apply_hv(f, to_double(v)); }

// Projection onto the modes the multiplier annihilates.
inline SampledField null_projection(const SampledField& f, const std::vector<double>& v) {
    f.validate();
    auto spec = forward_fft(f);
    detail::visit_signs(spec, v, [&](std::size_t i, int s) {
        if (s != 0) spec.data[i][0] = spec.data[i][1] = 0.0;
    });
    return detail::like(f, inverse_fft(std::move(spec)));
}

// Pointwise max over Omega of |H_v f|. Directions are dealt round-robin to
// workers, each keeping its own running max; the final merge is a max, so
// the result does not depend on the number of workers.
inline SampledField apply_maximal(const SampledField& f, const DirectionSet& omega, unsigned threads = 0) {
    require(!omega.empty(), "apply_maximal needs a nonempty direction set");
    require(omega.dim() + 1 == f.dim(), "direction dimension does not match field dimension");
    f.validate();
    const auto dirs = omega.as_doubles();
    const auto spec = forward_fft(f);
    const std::size_t total = f.total();
    unsigned T = threads ? threads : worker_count(dirs.size());
    T = std::min<unsigned>(T, static_cast<unsigned>(dirs.size()));
    std::vector<std::vector<double>> partial(T);
    auto work = [&](unsigned t) {
        auto& acc = partial[t];
        acc.assign(total, 0.0);
        auto scratch = spec.clone();
        auto buf = detail::fftw_array<double>(total);
        for (std::size_t k = t; k < dirs.size(); k += T) {
            detail::apply_multiplier(spec, scratch, dirs[k]);
            inverse_fft_into(scratch, buf.get());
            for (std::size_t i = 0; i < total; ++i) acc[i] = std::max(acc[i], std::abs(buf[i]));
        }
    };
    if (T == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < T; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    std::vector<double> out = std::move(partial[0]);
    for (unsigned t = 1; t < T; ++t)
        for (std::size_t i = 0; i < total; ++i) out[i] = std::max(out[i], partial[t][i]);
    return detail::like(f, std::move(out));
}

inline double rayleigh_quotient(const SampledField& f, const DirectionSet& omega, unsigned threads = 0) {
    double n2 = f.norm2();
    require(n2 > 0, "probe has zero norm");
    return std::sqrt(apply_maximal(f, omega, threads).norm2() / n2);
}

// Energy of g = H_{v1} f - H_{v2} f on modes where both multipliers carry
// the same nonzero sign, i.e. outside the frequency wedge between v1 and v2.
inline double wedge_energy_outside(const SampledField& f, const std::vector<double>& v1,
                                   const std::vector<double>& v2) {
    auto a = apply_hv(f, v1);
    auto b = apply_hv(f, v2);
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] -= b.values[i];
    auto g = forward_fft(a);
    std::vector<int> s1(g.size());
    detail::visit_signs(g, v1, [&](std::size_t i, int s) { s1[i] = s; });
    std::vector<char> outside(g.size(), 0);
    detail::visit_signs(g, v2, [&](std::size_t i, int s) { outside[i] = (s != 0 && s == s1[i]); });
    return detail::weighted_energy(g, outside, f.cell_volume());
}

// True if the mode lies in the wedge: the two signs differ or one vanishes.
inline bool wedge_member(int s1, int s2) { return s1 != s2 || s1 == 0 || s2 == 0; }

// g(y', y_last) = f(y' + w y_last, y_last) restricted to the grid. The
// shear must move whole cells per step in y_last and wrap consistently.
// It pivots on the first sample plane, so it agrees with the continuous
// shear up to a translation, which no H_v can see.
inline SampledField shear_transport(const SampledField& f, const std::vector<long long>& w) {
    f.validate();
    const std::size_t d = f.dim();
    require(w.size() + 1 == d, "shear vector length must be the field dimension minus one");
    const std::size_t nl = f.shape.back();
    std::vector<long long> step(d - 1);
    for (std::size_t a = 0; a + 1 < d; ++a) {
        double s = static_cast<double>(w[a]) * f.spacing(d - 1) / f.spacing(a);
        double r = std::round(s);
        require(std::abs(s - r) < 1e-9 * std::max(1.0, std::abs(s)),
                "shear does not map the grid to itself (non-integer cell step)");
        step[a] = static_cast<long long>(r);
        auto n = static_cast<long long>(f.shape[a]);
        require(((step[a] % n) * static_cast<long long>(nl % static_cast<std::size_t>(n))) % n == 0,
                "shear is not periodic on this box");
    }
    SampledField g = f;
    std::vector<std::size_t> idx(d, 0);
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t a = d - 1; a-- > 0;) strides[a] = strides[a + 1] * f.shape[a + 1];
    for (std::size_t lin = 0; lin < f.values.size(); ++lin) {
        std::size_t src = idx[d - 1];
        for (std::size_t a = 0; a + 1 < d; ++a) {
            auto n = static_cast<long long>(f.shape[a]);
            long long j = (static_cast<long long>(idx[a]) + step[a] * static_cast<long long>(idx[d - 1])) % n;
            if (j < 0) j += n;
            src += static_cast<std::size_t>(j) * strides[a];
        }
        g.values[lin] = f.values[src];
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < f.shape[a]) break;
            idx[a] = 0;
        }
    }
    return g;
}

// f~(x', z, x_last) = chi(z) f(x', x_last), with the slice axes inserted
// just before the last axis.
inline SampledField separable_extension(const SampledField& core, const SampledField& chi) {
    const std::size_t d = core.dim();
    SampledField out;
    for (std::size_t a = 0; a + 1 < d; ++a) {
        out.shape.push_back(core.shape[a]);
        out.box.push_back(core.box[a]);
        out.origin.push_back(core.origin[a]);
    }
    for (std::size_t a = 0; a < chi.dim(); ++a) {
        out.shape.push_back(chi.shape[a]);
        out.box.push_back(chi.box[a]);
        out.origin.push_back(chi.origin[a]);
    }
    out.shape.push_back(core.shape.back());
    out.box.push_back(core.box.back());
    out.origin.push_back(core.origin.back());
    const std::size_t nl = core.shape.back();
    const std::size_t lead = core.total() / nl;
    const std::size_t nc = chi.total();
    out.values.resize(lead * nc * nl);
    for (std::size_t i = 0; i < lead; ++i)
        for (std::size_t j = 0; j < nc; ++j)
            for (std::size_t k = 0; k < nl; ++k)
                out.values[(i * nc + j) * nl + k] = chi.values[j] * core.values[i * nl + k];
    return out;
}

// Applies H_{(v,w)} to the separable extension and checks it against
// chi (x) H_v f_core. Only w = 0 is accepted; move the slice there with an
// affine change of variables first.
inline SampledField slice_apply(const SampledField& core, const SampledField& chi, const std::vector<double>& v,
                                const std::vector<double>& w = {}) {
    if (chi.dim() == 0) return apply_hv(core, v);
    chi.validate();
    require(std::abs(chi.norm2() - 1.0) <= 1e-10, "slice profile chi must have unit L2 norm");
    for (double x : w) require(x == 0.0, "slice_apply supports the w = 0 slice only");
    auto ext = separable_extension(core, chi);
    std::vector<double> vt = v;
    vt.resize(v.size() + chi.dim(), 0.0);
    auto lhs = apply_hv(ext, vt);
    auto rhs = separable_extension(apply_hv(core, v), chi);
    double peak = 0, diff = 0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
        peak = std::max(peak, std::abs(rhs.values[i]));
        diff = std::max(diff, std::abs(lhs.values[i] - rhs.values[i]));
    }
    if (diff > 1e-10 * std::max(peak, 1e-300) + 1e-14)
        throw std::logic_error("slice identity violated: max deviation " + std::to_string(diff));
    return lhs;
}

// Deterministic uniform double in [-1, 1) from a 64-bit engine; avoids the
// implementation-defined std distributions.
inline double unit_uniform(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-52 - 1.0;
}

// Real white noise restricted to |k_a| <= band[a] on every axis.
inline SampledField random_bandlimited_field(std::vector<std::size_t> shape, std::vector<double> box,
                                             std::vector<double> origin, const std::vector<std::size_t>& band,
                                             std::uint64_t seed) {
    SampledField f = SampledField::zeros(shape, box, origin);
    require(band.size() == f.dim(), "bandwidth vector rank mismatch");
    std::mt19937_64 gen(seed);
    for (auto& x : f.values) x = unit_uniform(gen);
    auto h = forward_fft(f);
    const std::size_t d = f.dim();
    std::vector<std::size_t> idx(d - 1, 0);
    for (std::size_t r = 0; r < h.rows; ++r) {
        bool keep_row = true;
        for (std::size_t a = 0; a + 1 < d; ++a) {
            auto k = detail::signed_index(idx[a], f.shape[a]);
            if (static_cast<std::size_t>(std::llabs(k)) > band[a] || detail::is_nyquist(idx[a], f.shape[a]))
                keep_row = false;
        }
        for (std::size_t kl = 0; kl < h.last; ++kl) {
            bool keep = keep_row && kl <= band[d - 1] && !detail::is_nyquist(kl, f.shape.back());
            if (!keep) h.data[r * h.last + kl][0] = h.data[r * h.last + kl][1] = 0.0;
        }
        for (std::size_t a = d - 1; a-- > 0;) {
            if (++idx[a] < f.shape[a]) break;
            idx[a] = 0;
        }
    }
    f.values = inverse_fft(std::move(h));
    return f;
}

}  // namespace mdht
