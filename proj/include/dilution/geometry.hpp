#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dilution/error.hpp"
#include "dilution/volume.hpp"

namespace dilution {

enum class CropPolicy {
    CenterPad,   // pad short axes with pad_value, crop long axes centrally
    CenterCrop,  // crop only; refuses inputs smaller than the crop
};

/// Fixed backbone input geometry. Centering puts the extra voxel of an odd
/// difference on the high side, for both padding and cropping.
struct CropPlan {
    std::array<int, 3> crop{128, 128, 128};
    CropPolicy policy = CropPolicy::CenterPad;
    float pad_value = 0.0f;

    void validate() const {
        for (int a = 0; a < 3; ++a)
            if (crop[a] <= 0) throw DataError("crop dims must be positive");
    }
};

/// Backbone geometry profiles. SMIT: 128^3 input, patch 2, window 4.
/// Swin-UNETR: 96^3 input, patch 2, window 7. ACT crop is 128x128x64 for both.
struct BackboneProfile {
    std::string name;
    std::array<int, 3> patch{2, 2, 2};
    std::array<int, 3> window{4, 4, 4};
    std::array<int, 3> cubic_crop{128, 128, 128};
    std::array<int, 3> act_crop{128, 128, 64};
};

inline BackboneProfile smit_profile() {
    return {"smit", {2, 2, 2}, {4, 4, 4}, {128, 128, 128}, {128, 128, 64}};
}

inline BackboneProfile swinunetr_profile() {
    return {"swinunetr", {2, 2, 2}, {7, 7, 7}, {96, 96, 96}, {128, 128, 64}};
}

inline BackboneProfile profile_by_name(const std::string& name) {
    if (name == "smit") return smit_profile();
    if (name == "swinunetr") return swinunetr_profile();
    throw DataError("unknown profile: " + name + " (expected smit|swinunetr)");
}

/// pf = max(1 - L/C, 0): the share of the crop's z-extent filled with zeros.
inline double padding_fraction(int native_extent, int crop_extent) {
    if (native_extent < 1 || crop_extent < 1)
        throw std::invalid_argument("padding_fraction requires positive extents");
    const double pf = 1.0 - static_cast<double>(native_extent) / crop_extent;
    return pf > 0.0 ? pf : 0.0;
}

struct CropResult {
    Volume volume;       // shape == plan.crop
    MaskVolume real;     // 1 where the voxel came from the native volume
};

namespace detail {

// Start offset of the source window (when cropping) or of the destination
// window (when padding). Odd remainders land on the high side.
inline int center_offset(int from, int to) { return (from - to) / 2; }

}  // namespace detail

/// Center the native volume inside plan.crop. Voxels outside the native
/// extent become pad_value and are flagged non-real in the indicator.
inline CropResult apply_crop(const Volume& v, const CropPlan& plan) {
    v.validate();
    plan.validate();
    if (plan.policy == CropPolicy::CenterCrop)
        for (int a = 0; a < 3; ++a)
            if (v.shape[a] < plan.crop[a])
                throw DataError("CenterCrop policy cannot enlarge axis " + std::to_string(a));

    CropResult r;
    r.volume.shape = plan.crop;
    r.volume.spacing_mm = v.spacing_mm;
    r.volume.data.assign(r.volume.size(), plan.pad_value);
    r.real.shape = plan.crop;
    r.real.spacing_mm = v.spacing_mm;
    r.real.data.assign(r.real.size(), 0);

    std::array<int, 3> src0{}, dst0{}, run{};
    for (int a = 0; a < 3; ++a) {
        if (v.shape[a] >= plan.crop[a]) {
            src0[a] = detail::center_offset(v.shape[a], plan.crop[a]);
            dst0[a] = 0;
            run[a] = plan.crop[a];
        } else {
            src0[a] = 0;
            dst0[a] = detail::center_offset(plan.crop[a], v.shape[a]);
            run[a] = v.shape[a];
        }
    }
    for (int z = 0; z < run[2]; ++z)
        for (int y = 0; y < run[1]; ++y) {
            const std::size_t src = v.index(src0[0], src0[1] + y, src0[2] + z);
            const std::size_t dst = r.volume.index(dst0[0], dst0[1] + y, dst0[2] + z);
            std::copy_n(v.data.begin() + src, run[0], r.volume.data.begin() + dst);
            std::fill_n(r.real.data.begin() + dst, run[0], uint8_t{1});
        }
    return r;
}

/// Center a mask the same way (pad with 0); used to bring reference masks
/// onto the crop grid when needed.
inline MaskVolume apply_crop(const MaskVolume& m, const CropPlan& plan) {
    Volume tmp;
    tmp.shape = m.shape;
    tmp.spacing_mm = m.spacing_mm;
    tmp.data.assign(m.data.begin(), m.data.end());
    CropPlan p = plan;
    p.pad_value = 0.0f;
    const CropResult r = apply_crop(tmp, p);
    MaskVolume out;
    out.shape = r.volume.shape;
    out.spacing_mm = r.volume.spacing_mm;
    out.data.resize(r.volume.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = r.volume.data[i] != 0.0f ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Token-grid arithmetic
// ---------------------------------------------------------------------------

/// Per-stage token extents for a hierarchical encoder. Stage 0 is
/// ceil(crop/patch); each later stage halves extents (ceil). The effective
/// window is clamped per axis to the feature extent.
struct TokenGrid {
    std::array<int, 3> patch{2, 2, 2};
    std::array<int, 3> window{4, 4, 4};
    int n_stages = 4;
    std::vector<std::array<int, 3>> extents;  // one per stage
};

struct StageBudget {
    std::array<int, 3> extent{};
    std::array<int, 3> effective_window{};
    std::array<int, 3> padded_extent{};  // extent rounded up to window multiples
    std::int64_t token_count = 0;
    std::int64_t padded_count = 0;
    double window_pad_fraction = 0.0;  // 1 - token_count/padded_count
};

struct TokenBudget {
    TokenGrid grid;
    std::vector<StageBudget> stages;
    std::int64_t total_tokens = 0;
};

namespace detail {

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }
inline int round_up(int a, int b) { return ceil_div(a, b) * b; }

}  // namespace detail

inline TokenGrid make_token_grid(const CropPlan& plan, const std::array<int, 3>& patch,
                                 const std::array<int, 3>& window, int n_stages = 4) {
    plan.validate();
    for (int a = 0; a < 3; ++a)
        if (patch[a] <= 0 || window[a] <= 0)
            throw std::invalid_argument("patch and window must be positive");
    TokenGrid g;
    g.patch = patch;
    g.window = window;
    g.n_stages = n_stages;
    std::array<int, 3> e{};
    for (int a = 0; a < 3; ++a) e[a] = detail::ceil_div(plan.crop[a], patch[a]);
    for (int s = 0; s < n_stages; ++s) {
        g.extents.push_back(e);
        for (int a = 0; a < 3; ++a) e[a] = detail::ceil_div(e[a], 2);
    }
    return g;
}

inline TokenBudget token_budget(const CropPlan& plan, const std::array<int, 3>& patch,
                                const std::array<int, 3>& window, int n_stages = 4) {
    TokenBudget b;
    b.grid = make_token_grid(plan, patch, window, n_stages);
    for (const auto& e : b.grid.extents) {
        StageBudget s;
        s.extent = e;
        s.token_count = 1;
        s.padded_count = 1;
        for (int a = 0; a < 3; ++a) {
            s.effective_window[a] = std::min(window[a], e[a]);
            s.padded_extent[a] = detail::round_up(e[a], s.effective_window[a]);
            s.token_count *= e[a];
            s.padded_count *= s.padded_extent[a];
        }
        s.window_pad_fraction =
            1.0 - static_cast<double>(s.token_count) / static_cast<double>(s.padded_count);
        b.total_tokens += s.token_count;
        b.stages.push_back(s);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Compute estimate
// ---------------------------------------------------------------------------

/// Analytic multiply-accumulate count for the encoder. Accounting:
///   qkv + output projections and the MLP run on the unpadded token grid;
///   attention scores and value aggregation run on the window-rounded grid.
/// Softmax, norms and residuals are not counted. Decoder excluded.
struct StageCompute {
    std::int64_t projection_macs = 0;  // qkv + output projection
    std::int64_t attention_macs = 0;   // q.k scores + alpha.v aggregation
    std::int64_t mlp_macs = 0;
    std::int64_t total() const { return projection_macs + attention_macs + mlp_macs; }
};

struct ComputeEstimate {
    std::vector<StageCompute> stages;
    std::int64_t total_macs = 0;
    std::string assumptions =
        "MAC count, encoder only: projections/MLP on the unpadded token grid, "
        "attention on the window-rounded grid; softmax/norm/residual ops and the "
        "decoder are not counted.";
};

inline ComputeEstimate compute_estimate(const TokenBudget& budget,
                                        const std::vector<int>& embed_dims,
                                        const std::vector<int>& heads, double mlp_ratio,
                                        const std::vector<int>& depths) {
    if (embed_dims.size() != budget.stages.size() || heads.size() != budget.stages.size() ||
        depths.size() != budget.stages.size())
        throw std::invalid_argument("compute_estimate: per-stage vectors must match stage count");
    ComputeEstimate est;
    for (std::size_t s = 0; s < budget.stages.size(); ++s) {
        const auto& sb = budget.stages[s];
        const std::int64_t d = embed_dims[s];
        if (heads[s] <= 0 || d % heads[s] != 0)
            throw std::invalid_argument("compute_estimate: head count must divide embed dim");
        std::int64_t win_tokens = 1;
        for (int a = 0; a < 3; ++a) win_tokens *= sb.effective_window[a];
        const std::int64_t t = sb.token_count;
        const std::int64_t tp = sb.padded_count;
        StageCompute sc;
        sc.projection_macs = depths[s] * (3 * t * d * d + t * d * d);
        sc.attention_macs = depths[s] * (2 * tp * win_tokens * d);
        sc.mlp_macs = depths[s] * static_cast<std::int64_t>(2.0 * mlp_ratio * t * d * d);
        est.total_macs += sc.total();
        est.stages.push_back(sc);
    }
    return est;
}

}  // namespace dilution
