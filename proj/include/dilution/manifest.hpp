#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dilution/error.hpp"

namespace dilution {

/// One scan in a cohort. native_z_extent is the z-shape of the stored volume
/// before any crop/pad; predictions maps configuration name -> mask path.
struct ScanRecord {
    std::string scan_id;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;
    int native_z_extent = 0;
    std::optional<std::string> subtype;  // "B" or "D" when known
    std::map<std::string, std::filesystem::path> predictions;
};

struct CohortManifest {
    std::string cohort_id;
    std::vector<ScanRecord> scans;

    const ScanRecord* find(const std::string& scan_id) const {
        for (const auto& s : scans)
            if (s.scan_id == scan_id) return &s;
        return nullptr;
    }

    /// Names of prediction configurations present on every scan that has any.
    std::vector<std::string> prediction_configs() const {
        std::set<std::string> names;
        for (const auto& s : scans)
            for (const auto& [k, v] : s.predictions) names.insert(k);
        return {names.begin(), names.end()};
    }
};

namespace detail {

inline std::filesystem::path resolve_relative(const std::filesystem::path& base,
                                              const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

inline void require_rvol_exists(const std::filesystem::path& p, const std::string& role) {
    const std::filesystem::path header =
        p.extension() == ".json" ? p : std::filesystem::path(p.string() + ".rvol.json");
    if (!std::filesystem::exists(header))
        throw DataError("manifest references missing " + role + ": " + header.string());
}

}  // namespace detail

inline void save_manifest(const CohortManifest& m, const std::filesystem::path& path) {
    nlohmann::json scans = nlohmann::json::array();
    for (const auto& s : m.scans) {
        nlohmann::json js{{"scan_id", s.scan_id},
                          {"image_path", s.image_path.string()},
                          {"mask_path", s.mask_path.string()},
                          {"native_z_extent", s.native_z_extent}};
        if (s.subtype) js["subtype"] = *s.subtype;
        if (!s.predictions.empty()) {
            nlohmann::json preds;
            for (const auto& [cfg, p] : s.predictions) preds[cfg] = p.string();
            js["predictions"] = preds;
        }
        scans.push_back(js);
    }
    nlohmann::json j{{"cohort_id", m.cohort_id}, {"scans", scans}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
}

/// Loads a manifest, resolving relative paths against the manifest directory.
/// Fails if scan ids repeat or any referenced file is absent.
inline CohortManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing manifest: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad manifest " + path.string() + ": " + e.what());
    }
    const std::filesystem::path base = path.parent_path();
    CohortManifest m;
    m.cohort_id = j.value("cohort_id", "");
    std::set<std::string> seen;
    for (const auto& js : j.at("scans")) {
        ScanRecord s;
        s.scan_id = js.at("scan_id").get<std::string>();
        if (!seen.insert(s.scan_id).second)
            throw DataError("duplicate scan_id in manifest: " + s.scan_id);
        s.image_path = detail::resolve_relative(base, js.at("image_path").get<std::string>());
        s.mask_path = detail::resolve_relative(base, js.at("mask_path").get<std::string>());
        s.native_z_extent = js.at("native_z_extent").get<int>();
        if (s.native_z_extent <= 0)
            throw DataError("non-positive native_z_extent for scan " + s.scan_id);
        if (js.contains("subtype")) s.subtype = js.at("subtype").get<std::string>();
        if (js.contains("predictions"))
            for (const auto& [cfg, p] : js.at("predictions").items())
                s.predictions[cfg] = detail::resolve_relative(base, p.get<std::string>());
        detail::require_rvol_exists(s.image_path, "image");
        detail::require_rvol_exists(s.mask_path, "mask");
        for (const auto& [cfg, p] : s.predictions)
            detail::require_rvol_exists(p, "prediction (" + cfg + ")");
        m.scans.push_back(std::move(s));
    }
    return m;
}

}  // namespace dilution
