#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace mdht {

// Real samples on a periodic grid. Sample i along axis a sits at the cell
// centre origin[a] + (i + 1/2) * box[a] / shape[a]; the last axis is the
// x_{n+1} axis that every lifted direction <v,1> moves along.
struct SampledField {
    std::vector<std::size_t> shape;
    std::vector<double> box;
    std::vector<double> origin;
    std::vector<double> values;

    std::size_t dim() const { return shape.size(); }
    std::size_t total() const {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }
    double spacing(std::size_t a) const { return box[a] / static_cast<double>(shape[a]); }
    double coordinate(std::size_t a, std::size_t i) const {
        return origin[a] + (static_cast<double>(i) + 0.5) * spacing(a);
    }
    double cell_volume() const {
        double v = 1.0;
        for (std::size_t a = 0; a < dim(); ++a) v *= spacing(a);
        return v;
    }
    double norm2() const {
        long double s = 0;
        for (double x : values) s += static_cast<long double>(x) * x;
        return static_cast<double>(s) * cell_volume();
    }

    void validate() const {
        require(!shape.empty(), "field needs at least one axis");
        require(box.size() == shape.size() && origin.size() == shape.size(), "field box/origin rank mismatch");
        for (std::size_t a = 0; a < dim(); ++a) {
            require(shape[a] >= 1 && std::has_single_bit(shape[a]), "field shape must be powers of two");
            require(box[a] > 0 && std::isfinite(box[a]), "field box lengths must be positive");
            require(std::isfinite(origin[a]), "field origin must be finite");
        }
        require(values.size() == total(), "field value count does not match shape");
        for (double x : values) require(std::isfinite(x), "field contains NaN or infinite samples");
    }

    static SampledField zeros(std::vector<std::size_t> shape, std::vector<double> box,
                              std::vector<double> origin = {}) {
        SampledField f;
        if (origin.empty()) origin.assign(shape.size(), 0.0);
        f.shape = std::move(shape);
        f.box = std::move(box);
        f.origin = std::move(origin);
        f.values.assign(f.total(), 0.0);
        f.validate();
        return f;
    }

    bool same_grid(const SampledField& o) const {
        return shape == o.shape && box == o.box && origin == o.origin;
    }
};

// Sample fn at every grid point. fn receives the physical coordinates.
template <class Fn>
SampledField sample_field(std::vector<std::size_t> shape, std::vector<double> box,
                          std::vector<double> origin, Fn&& fn) {
    SampledField f = SampledField::zeros(std::move(shape), std::move(box), std::move(origin));
    const std::size_t d = f.dim();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    for (std::size_t lin = 0; lin < f.values.size(); ++lin) {
        for (std::size_t a = 0; a < d; ++a) x[a] = f.coordinate(a, idx[a]);
        f.values[lin] = fn(x);
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < f.shape[a]) break;
            idx[a] = 0;
        }
    }
    return f;
}

inline constexpr char kFieldMagic[8] = {'M', 'D', 'H', 'T', 'F', 'L', 'D', '1'};

inline nlohmann::json field_header(const SampledField& f) {
    return {{"dim", f.dim()}, {"shape", f.shape}, {"box", f.box}, {"origin", f.origin}};
}

// Container: 8-byte magic, u64 header length, JSON header, f64 payload.
// Everything on disk is little-endian.
inline void write_field(const std::string& path, const SampledField& f, nlohmann::json extra = {}) {
    static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");
    f.validate();
    nlohmann::json h = field_header(f);
    if (extra.is_object()) h.update(extra);
    std::string hs = h.dump();
    std::ofstream out(path, std::ios::binary);
    require(bool(out), "cannot open '" + path + "' for writing");
    std::uint64_t len = hs.size();
    out.write(kFieldMagic, 8);
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    require(bool(out), "short write to '" + path + "'");
}

inline SampledField read_field(const std::string& path, nlohmann::json* header_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "cannot open field file '" + path + "'");
    char magic[8];
    std::uint64_t len = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&len), 8);
    require(bool(in) && std::memcmp(magic, kFieldMagic, 8) == 0, "'" + path + "' is not a field file");
    require(len < (1u << 24), "field header too large");
    std::string hs(len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(len));
    auto h = nlohmann::json::parse(hs);
    SampledField f;
    f.shape = h.at("shape").get<std::vector<std::size_t>>();
    f.box = h.at("box").get<std::vector<double>>();
    f.origin = h.contains("origin") ? h.at("origin").get<std::vector<double>>()
                                    : std::vector<double>(f.shape.size(), 0.0);
    require(h.at("dim").get<std::size_t>() == f.shape.size(), "field header dim disagrees with shape");
    f.values.resize(f.total());
    in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    require(bool(in), "field payload truncated in '" + path + "'");
    f.validate();
    if (header_out) *header_out = h;
    return f;
}

}  // namespace mdht
