#include <catch2/catch_amalgamated.hpp>

#include "dilution/geometry.hpp"
#include "dilution/rng.hpp"

using namespace dilution;

TEST_CASE("padding_fraction anchors and properties", "[geometry]") {
    // L = 93 is the test-cohort median native z-extent
    REQUIRE(padding_fraction(93, 128) == Catch::Approx(0.2734).margin(1e-4));
    REQUIRE(padding_fraction(128, 128) == 0.0);
    REQUIRE(padding_fraction(150, 128) == 0.0);
    REQUIRE_THROWS_AS(padding_fraction(0, 128), std::invalid_argument);
    REQUIRE_THROWS_AS(padding_fraction(93, 0), std::invalid_argument);

    // non-increasing in L, non-decreasing in C, zero iff L >= C
    double prev = 1.0;
    for (int l = 1; l <= 200; l += 7) {
        const double pf = padding_fraction(l, 128);
        REQUIRE(pf <= prev);
        prev = pf;
        REQUIRE((pf == 0.0) == (l >= 128));
    }
    prev = 0.0;
    for (int c = 1; c <= 300; c += 11) {
        const double pf = padding_fraction(93, c);
        REQUIRE(pf >= prev);
        prev = pf;
    }
}

namespace {

Volume filled_volume(std::array<int, 3> shape, float fill = 1.0f) {
    Volume v;
    v.shape = shape;
    v.spacing_mm = {1, 1, 1};
    v.data.assign(v.size(), fill);
    return v;
}

}  // namespace

TEST_CASE("apply_crop pads and crops with high-side bias", "[geometry]") {
    CropPlan plan;
    plan.crop = {8, 8, 128};

    SECTION("L=93 along z gives 35 padded slices and real fraction 93/128") {
        Volume v = filled_volume({8, 8, 93}, 2.0f);
        const CropResult r = apply_crop(v, plan);
        REQUIRE(r.volume.shape == plan.crop);
        std::size_t pad_slices = 0;
        for (int z = 0; z < 128; ++z)
            if (r.real.at(0, 0, z) == 0) ++pad_slices;
        REQUIRE(pad_slices == 35);
        const double real_fraction =
            static_cast<double>(r.real.count()) / static_cast<double>(r.real.size());
        REQUIRE(real_fraction == Catch::Approx(93.0 / 128.0));
        // centered: 17 low pad slices, 18 high (extra voxel on the high side)
        REQUIRE(r.real.at(0, 0, 16) == 0);
        REQUIRE(r.real.at(0, 0, 17) == 1);
        REQUIRE(r.real.at(0, 0, 109) == 1);
        REQUIRE(r.real.at(0, 0, 110) == 0);
        // padded voxels carry pad_value
        REQUIRE(r.volume.at(0, 0, 0) == 0.0f);
        REQUIRE(r.volume.at(0, 0, 64) == 2.0f);
    }
    SECTION("L=C keeps everything real") {
        Volume v = filled_volume({8, 8, 128});
        const CropResult r = apply_crop(v, plan);
        REQUIRE(r.real.count() == r.real.size());
    }
    SECTION("L=150 central crop") {
        Volume v = filled_volume({8, 8, 150});
        for (int z = 0; z < 150; ++z) v.at(3, 3, z) = static_cast<float>(z);
        const CropResult r = apply_crop(v, plan);
        REQUIRE(r.real.count() == r.real.size());
        // (150-128)/2 = 11 -> central window starts at z=11
        REQUIRE(r.volume.at(3, 3, 0) == 11.0f);
        REQUIRE(r.volume.at(3, 3, 127) == 138.0f);
    }
    SECTION("counting non-real voxels reproduces padding_fraction along z") {
        for (int l : {40, 71, 93, 110, 127, 128, 140}) {
            Volume v = filled_volume({8, 8, l});
            const CropResult r = apply_crop(v, plan);
            const double non_real =
                1.0 - static_cast<double>(r.real.count()) / static_cast<double>(r.real.size());
            REQUIRE(non_real == Catch::Approx(padding_fraction(l, 128)).margin(1e-12));
        }
    }
    SECTION("CenterCrop policy refuses to pad") {
        CropPlan strict;
        strict.crop = {8, 8, 128};
        strict.policy = CropPolicy::CenterCrop;
        Volume v = filled_volume({8, 8, 93});
        REQUIRE_THROWS_AS(apply_crop(v, strict), DataError);
    }
}

TEST_CASE("token_budget window arithmetic", "[geometry]") {
    SECTION("SMIT cubic: 64^3 stage-0 tokens, no window padding anywhere") {
        CropPlan plan;
        plan.crop = {128, 128, 128};
        const TokenBudget b = token_budget(plan, {2, 2, 2}, {4, 4, 4});
        REQUIRE(b.stages[0].token_count == 262144);
        REQUIRE(b.stages[0].extent == std::array<int, 3>{64, 64, 64});
        for (const auto& s : b.stages) REQUIRE(s.window_pad_fraction == 0.0);
    }
    SECTION("ACT with window 7: stage padding per integer arithmetic") {
        CropPlan plan;
        plan.crop = {128, 128, 64};
        const TokenBudget b = token_budget(plan, {2, 2, 2}, {7, 7, 7});
        REQUIRE(b.stages[0].extent == std::array<int, 3>{64, 64, 32});
        REQUIRE(b.stages[0].padded_extent == std::array<int, 3>{70, 70, 35});
        REQUIRE(b.stages[0].window_pad_fraction ==
                Catch::Approx(1.0 - 262144.0 / 2.0 / (70.0 * 70.0 * 35.0)).margin(1e-9));
        REQUIRE(b.stages[0].window_pad_fraction == Catch::Approx(0.2357).margin(5e-4));
        REQUIRE(b.stages[1].window_pad_fraction > 0.0);
        REQUIRE(b.stages[2].window_pad_fraction > 0.0);
        // stage 3 is 8x8x4: window clamps to (7,7,4); z is a single window,
        // padding arises only from 8->14 in x/y
        REQUIRE(b.stages[3].extent == std::array<int, 3>{8, 8, 4});
        REQUIRE(b.stages[3].effective_window == std::array<int, 3>{7, 7, 4});
        REQUIRE(b.stages[3].padded_extent == std::array<int, 3>{14, 14, 4});
    }
    SECTION("SMIT ACT vs cubic token ratio is exactly one half") {
        CropPlan cubic;
        cubic.crop = {128, 128, 128};
        CropPlan act;
        act.crop = {128, 128, 64};
        const TokenBudget bc = token_budget(cubic, {2, 2, 2}, {4, 4, 4});
        const TokenBudget ba = token_budget(act, {2, 2, 2}, {4, 4, 4});
        REQUIRE(ba.total_tokens * 2 == bc.total_tokens);
        for (int s = 0; s < 4; ++s) REQUIRE(ba.stages[s].window_pad_fraction == 0.0);
    }
    SECTION("window padding zero whenever extents divide the effective window") {
        CropPlan act;
        act.crop = {128, 128, 64};
        const TokenBudget b = token_budget(act, {2, 2, 2}, {4, 4, 4});
        for (const auto& s : b.stages) {
            for (int a = 0; a < 3; ++a) REQUIRE(s.extent[a] % s.effective_window[a] == 0);
            REQUIRE(s.window_pad_fraction == 0.0);
        }
    }
}

TEST_CASE("compute_estimate", "[geometry]") {
    CropPlan cubic;
    cubic.crop = {128, 128, 128};
    CropPlan act;
    act.crop = {128, 128, 64};
    const std::vector<int> dims{48, 96, 192, 384};
    const std::vector<int> heads{3, 6, 12, 24};
    const std::vector<int> depths{2, 2, 2, 2};

    SECTION("identical grids give ratio 1") {
        const TokenBudget b = token_budget(cubic, {2, 2, 2}, {4, 4, 4});
        const ComputeEstimate a = compute_estimate(b, dims, heads, 4.0, depths);
        const ComputeEstimate c = compute_estimate(b, dims, heads, 4.0, depths);
        REQUIRE(a.total_macs == c.total_macs);
    }
    SECTION("ACT vs cubic SMIT encoder ratio is about one half") {
        const TokenBudget bc = token_budget(cubic, {2, 2, 2}, {4, 4, 4});
        const TokenBudget ba = token_budget(act, {2, 2, 2}, {4, 4, 4});
        const ComputeEstimate ec = compute_estimate(bc, dims, heads, 4.0, depths);
        const ComputeEstimate ea = compute_estimate(ba, dims, heads, 4.0, depths);
        const double ratio = static_cast<double>(ea.total_macs) / ec.total_macs;
        REQUIRE(ratio == Catch::Approx(0.5).margin(1e-6));
        REQUIRE_FALSE(ea.assumptions.empty());
    }
    SECTION("doubling embed dim multiplies projection MACs by 4") {
        const TokenBudget b = token_budget(cubic, {2, 2, 2}, {4, 4, 4});
        const ComputeEstimate e1 = compute_estimate(b, dims, heads, 4.0, depths);
        std::vector<int> dims2;
        for (int d : dims) dims2.push_back(2 * d);
        const ComputeEstimate e2 = compute_estimate(b, dims2, heads, 4.0, depths);
        for (std::size_t s = 0; s < e1.stages.size(); ++s)
            REQUIRE(e2.stages[s].projection_macs == 4 * e1.stages[s].projection_macs);
    }
}
