#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dilution/error.hpp"

namespace dilution {

static_assert(std::endian::native == std::endian::little,
              "RVOL/RATT/RACT payloads are little-endian; big-endian hosts are unsupported");

/// 3D scalar field on a regular grid with physical voxel spacing.
/// Linear layout is x-fastest: data[x + nx*(y + ny*z)].
struct Volume {
    std::array<int, 3> shape{0, 0, 0};
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
    std::vector<float> data;

    std::size_t size() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(shape[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(shape[1]) * z);
    }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (shape[a] <= 0) throw DataError("volume shape must be positive");
            if (!(spacing_mm[a] > 0.0)) throw DataError("volume spacing must be positive");
        }
        if (data.size() != size()) throw DataError("payload size mismatch");
    }
};

/// Binary mask on the same grid convention as Volume; values are 0 or 1.
struct MaskVolume {
    std::array<int, 3> shape{0, 0, 0};
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
    std::vector<uint8_t> data;

    std::size_t size() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(shape[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(shape[1]) * z);
    }
    uint8_t& at(int x, int y, int z) { return data[index(x, y, z)]; }
    uint8_t at(int x, int y, int z) const { return data[index(x, y, z)]; }

    std::size_t count() const {
        std::size_t c = 0;
        for (uint8_t v : data) c += v;
        return c;
    }

    void validate() const {
        for (int a = 0; a < 3; ++a) {
            if (shape[a] <= 0) throw DataError("mask shape must be positive");
            if (!(spacing_mm[a] > 0.0)) throw DataError("mask spacing must be positive");
        }
        if (data.size() != size()) throw DataError("payload size mismatch");
        for (uint8_t v : data)
            if (v > 1) throw DataError("mask values must be 0 or 1");
    }

    bool same_grid(const Volume& v) const {
        return shape == v.shape && spacing_mm == v.spacing_mm;
    }
};

// ---------------------------------------------------------------------------
// RVOL on-disk format: <name>.rvol.json header + <name>.rvol.f32 payload.
// ---------------------------------------------------------------------------

namespace detail {

// Accepts ".../scan.rvol.json", ".../scan.rvol.f32" or the bare ".../scan"
// stem and returns {header path, payload path}.
inline std::pair<std::filesystem::path, std::filesystem::path> rvol_paths(
    const std::filesystem::path& path) {
    std::string s = path.string();
    auto strip = [&](const std::string& suffix) {
        if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
            s.resize(s.size() - suffix.size());
    };
    strip(".rvol.json");
    strip(".rvol.f32");
    return {std::filesystem::path(s + ".rvol.json"), std::filesystem::path(s + ".rvol.f32")};
}

inline nlohmann::json read_rvol_header(const std::filesystem::path& header_path,
                                       const char* expected_kind) {
    std::ifstream in(header_path);
    if (!in) throw DataError("missing file: " + header_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad RVOL header " + header_path.string() + ": " + e.what());
    }
    if (!j.contains("shape") || !j.contains("spacing_mm"))
        throw DataError("bad RVOL header " + header_path.string() + ": shape/spacing missing");
    if (j.value("dtype", "f32le") != "f32le")
        throw DataError("unsupported RVOL dtype in " + header_path.string());
    if (j.value("order", "x-fastest") != "x-fastest")
        throw DataError("unsupported RVOL order in " + header_path.string());
    const std::string kind = j.value("kind", "image");
    if (kind != expected_kind)
        throw DataError("RVOL kind mismatch in " + header_path.string() + ": expected " +
                        expected_kind + ", got " + kind);
    return j;
}

inline std::vector<float> read_rvol_payload(const std::filesystem::path& payload_path,
                                            std::size_t expected) {
    std::ifstream in(payload_path, std::ios::binary);
    if (!in) throw DataError("missing file: " + payload_path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * sizeof(float))
        throw DataError("payload size mismatch: " + payload_path.string() + " holds " +
                        std::to_string(bytes / sizeof(float)) + " values, header expects " +
                        std::to_string(expected));
    in.seekg(0, std::ios::beg);
    std::vector<float> out(expected);
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw DataError("failed reading payload: " + payload_path.string());
    return out;
}

inline void write_rvol(const std::filesystem::path& path, const std::array<int, 3>& shape,
                       const std::array<double, 3>& spacing, const char* kind,
                       const float* values, std::size_t n) {
    auto [hp, pp] = rvol_paths(path);
    nlohmann::json j{{"shape", shape},
                     {"spacing_mm", spacing},
                     {"dtype", "f32le"},
                     {"order", "x-fastest"},
                     {"kind", kind}};
    std::ofstream hout(hp);
    if (!hout) throw DataError("cannot write " + hp.string());
    hout << j.dump(2) << "\n";
    std::ofstream pout(pp, std::ios::binary);
    if (!pout) throw DataError("cannot write " + pp.string());
    pout.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(n * sizeof(float)));
    if (!pout) throw DataError("failed writing payload: " + pp.string());
}

}  // namespace detail

inline void save_volume(const Volume& v, const std::filesystem::path& path) {
    v.validate();
    detail::write_rvol(path, v.shape, v.spacing_mm, "image", v.data.data(), v.data.size());
}

inline Volume load_volume(const std::filesystem::path& path) {
    auto [hp, pp] = detail::rvol_paths(path);
    const nlohmann::json j = detail::read_rvol_header(hp, "image");
    Volume v;
    v.shape = j.at("shape").get<std::array<int, 3>>();
    v.spacing_mm = j.at("spacing_mm").get<std::array<double, 3>>();
    for (int a = 0; a < 3; ++a) {
        if (v.shape[a] <= 0) throw DataError("non-positive shape in " + hp.string());
        if (!(v.spacing_mm[a] > 0.0)) throw DataError("non-positive spacing in " + hp.string());
    }
    v.data = detail::read_rvol_payload(pp, v.size());
    return v;
}

inline void save_mask(const MaskVolume& m, const std::filesystem::path& path) {
    m.validate();
    std::vector<float> tmp(m.data.begin(), m.data.end());
    detail::write_rvol(path, m.shape, m.spacing_mm, "mask", tmp.data(), tmp.size());
}

inline MaskVolume load_mask(const std::filesystem::path& path) {
    auto [hp, pp] = detail::rvol_paths(path);
    const nlohmann::json j = detail::read_rvol_header(hp, "mask");
    MaskVolume m;
    m.shape = j.at("shape").get<std::array<int, 3>>();
    m.spacing_mm = j.at("spacing_mm").get<std::array<double, 3>>();
    for (int a = 0; a < 3; ++a) {
        if (m.shape[a] <= 0) throw DataError("non-positive shape in " + hp.string());
        if (!(m.spacing_mm[a] > 0.0)) throw DataError("non-positive spacing in " + hp.string());
    }
    const std::vector<float> raw = detail::read_rvol_payload(pp, m.size());
    m.data.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != 0.0f && raw[i] != 1.0f)
            throw DataError("mask payload has non-binary value in " + pp.string());
        m.data[i] = raw[i] != 0.0f ? 1 : 0;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Linear-interpolated empirical percentile (q in [0,1]) over all values.
/// Rank r = q*(n-1); result interpolates the two bracketing order statistics.
inline double percentile(std::vector<float> values, double q) {
    if (values.empty()) throw DataError("percentile of empty set");
    std::sort(values.begin(), values.end());
    const double rank = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return static_cast<double>(values[lo]) * (1.0 - frac) +
           static_cast<double>(values[lo + 1]) * frac;
}

/// Clip at the volume's own 99th-percentile intensity, then min-max scale the
/// clipped values to [0,1]. The minimum maps to 0 and the clip level to 1.
inline Volume preprocess(const Volume& v) {
    v.validate();
    const double hi = percentile(v.data, 0.99);
    const double lo = static_cast<double>(*std::min_element(v.data.begin(), v.data.end()));
    const double range = hi - lo;
    if (!(range > 0.0)) throw DataError("degenerate intensity range");
    Volume out = v;
    for (float& x : out.data) {
        const double clipped = std::min(static_cast<double>(x), hi);
        x = static_cast<float>(std::clamp((clipped - lo) / range, 0.0, 1.0));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

enum class Interp { Linear, Nearest };

namespace detail {

inline std::array<int, 3> resampled_shape(const std::array<int, 3>& shape,
                                          const std::array<double, 3>& spacing,
                                          double target_mm) {
    std::array<int, 3> out{};
    for (int a = 0; a < 3; ++a) {
        out[a] = static_cast<int>(std::llround(shape[a] * spacing[a] / target_mm));
        if (out[a] <= 0) throw DataError("resampled shape would be zero on an axis");
    }
    return out;
}

}  // namespace detail

/// Resample to isotropic target_mm spacing. Grid points are corner-aligned:
/// output voxel i samples input coordinate i * target/spacing, clamped at the
/// edges. Nearest mode rounds half away from zero and never invents values.
inline Volume resample_isotropic(const Volume& v, double target_mm, Interp mode) {
    v.validate();
    if (!(target_mm > 0.0)) throw DataError("target spacing must be positive");
    Volume out;
    out.shape = detail::resampled_shape(v.shape, v.spacing_mm, target_mm);
    out.spacing_mm = {target_mm, target_mm, target_mm};
    out.data.resize(out.size());

    std::array<double, 3> step{};
    for (int a = 0; a < 3; ++a) step[a] = target_mm / v.spacing_mm[a];

    auto clampi = [](int i, int n) { return std::clamp(i, 0, n - 1); };

    std::size_t o = 0;
    for (int z = 0; z < out.shape[2]; ++z) {
        const double pz = z * step[2];
        for (int y = 0; y < out.shape[1]; ++y) {
            const double py = y * step[1];
            for (int x = 0; x < out.shape[0]; ++x, ++o) {
                const double px = x * step[0];
                if (mode == Interp::Nearest) {
                    const int ix = clampi(static_cast<int>(std::llround(px)), v.shape[0]);
                    const int iy = clampi(static_cast<int>(std::llround(py)), v.shape[1]);
                    const int iz = clampi(static_cast<int>(std::llround(pz)), v.shape[2]);
                    out.data[o] = v.at(ix, iy, iz);
                } else {
                    const int x0 = clampi(static_cast<int>(std::floor(px)), v.shape[0]);
                    const int y0 = clampi(static_cast<int>(std::floor(py)), v.shape[1]);
                    const int z0 = clampi(static_cast<int>(std::floor(pz)), v.shape[2]);
                    const int x1 = clampi(x0 + 1, v.shape[0]);
                    const int y1 = clampi(y0 + 1, v.shape[1]);
                    const int z1 = clampi(z0 + 1, v.shape[2]);
                    const double fx = std::clamp(px - x0, 0.0, 1.0);
                    const double fy = std::clamp(py - y0, 0.0, 1.0);
                    const double fz = std::clamp(pz - z0, 0.0, 1.0);
                    const double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
                    const double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
                    const double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
                    const double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
                    const double c0 = c00 * (1 - fy) + c10 * fy;
                    const double c1 = c01 * (1 - fy) + c11 * fy;
                    out.data[o] = static_cast<float>(c0 * (1 - fz) + c1 * fz);
                }
            }
        }
    }
    return out;
}

/// Masks always resample nearest-neighbor, preserving the {0,1} value set.
inline MaskVolume resample_isotropic(const MaskVolume& m, double target_mm) {
    m.validate();
    Volume tmp;
    tmp.shape = m.shape;
    tmp.spacing_mm = m.spacing_mm;
    tmp.data.assign(m.data.begin(), m.data.end());
    const Volume r = resample_isotropic(tmp, target_mm, Interp::Nearest);
    MaskVolume out;
    out.shape = r.shape;
    out.spacing_mm = r.spacing_mm;
    out.data.resize(r.data.size());
    for (std::size_t i = 0; i < r.data.size(); ++i) out.data[i] = r.data[i] != 0.0f ? 1 : 0;
    return out;
}

}  // namespace dilution
