#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "field.hpp"

namespace mdht {

namespace detail {

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <class T>
using FftwArray = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwArray<T> fftw_array(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * (n ? n : 1)));
    if (!p) throw std::bad_alloc();
    return FftwArray<T>(p);
}

// FFTW planning is not thread-safe, execution is. Plans are cached per
// shape and made with FFTW_ESTIMATE so the chosen algorithm, and hence
// every output bit, does not depend on timing.
class PlanCache {
public:
    struct Pair {
        fftw_plan fwd;
        fftw_plan inv;
    };

    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    Pair get(const std::vector<std::size_t>& shape) {
        std::lock_guard lock(mu_);
        auto it = plans_.find(shape);
        if (it != plans_.end()) return it->second;
        std::vector<int> n(shape.begin(), shape.end());
        std::size_t real = 1;
        for (auto s : shape) real *= s;
        std::size_t half = real / shape.back() * (shape.back() / 2 + 1);
        auto r = fftw_array<double>(real);
        auto c = fftw_array<fftw_complex>(half);
        Pair p;
        p.fwd = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), r.get(), c.get(), FFTW_ESTIMATE);
        p.inv = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(), c.get(), r.get(), FFTW_ESTIMATE);
        if (!p.fwd || !p.inv) throw std::runtime_error("FFTW could not plan the transform");
        plans_.emplace(shape, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [k, p] : plans_) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.inv);
        }
    }

private:
    std::mutex mu_;
    std::map<std::vector<std::size_t>, Pair> plans_;
};

}  // namespace detail

// Half spectrum of a real field: full length on the leading axes, n/2+1
// on the last one (FFTW's r2c layout, unnormalized).
struct HalfSpectrum {
    std::vector<std::size_t> shape;  // real-space shape
    std::vector<double> box;
    std::size_t rows = 0;  // product of leading axes
    std::size_t last = 0;  // shape.back()/2 + 1
    detail::FftwArray<fftw_complex> data;

    std::size_t size() const { return rows * last; }
    std::size_t real_total() const { return rows * shape.back(); }

    HalfSpectrum clone() const {
        HalfSpectrum h;
        h.shape = shape;
        h.box = box;
        h.rows = rows;
        h.last = last;
        h.data = detail::fftw_array<fftw_complex>(size());
        std::memcpy(h.data.get(), data.get(), sizeof(fftw_complex) * size());
        return h;
    }

    // Weight of a half-spectrum column in the full-spectrum Parseval sum.
    double column_weight(std::size_t kl) const {
        std::size_t nl = shape.back();
        if (kl == 0) return 1.0;
        if (nl % 2 == 0 && kl == nl / 2) return 1.0;
        return 2.0;
    }
};

inline HalfSpectrum forward_fft(const SampledField& f) {
    HalfSpectrum h;
    h.shape = f.shape;
    h.box = f.box;
    h.last = f.shape.back() / 2 + 1;
    h.rows = f.total() / f.shape.back();
    auto plans = detail::PlanCache::instance().get(f.shape);
    auto in = detail::fftw_array<double>(f.total());
    std::memcpy(in.get(), f.values.data(), sizeof(double) * f.total());
    h.data = detail::fftw_array<fftw_complex>(h.size());
    fftw_execute_dft_r2c(plans.fwd, in.get(), h.data.get());
    return h;
}

// Consumes the spectrum (c2r overwrites its input) and writes the
// normalized inverse into out, which must hold real_total() doubles.
inline void inverse_fft_into(HalfSpectrum& h, double* out_aligned) {
    auto plans = detail::PlanCache::instance().get(h.shape);
    fftw_execute_dft_c2r(plans.inv, h.data.get(), out_aligned);
    const double scale = 1.0 / static_cast<double>(h.real_total());
    for (std::size_t i = 0; i < h.real_total(); ++i) out_aligned[i] *= scale;
}

inline std::vector<double> inverse_fft(HalfSpectrum h) {
    auto buf = detail::fftw_array<double>(h.real_total());
    inverse_fft_into(h, buf.get());
    return std::vector<double>(buf.get(), buf.get() + h.real_total());
}

}  // namespace mdht
