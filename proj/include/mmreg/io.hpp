// mmreg: persistence — NIfTI-1 subset for volumes and fields, CSV landmarks,
// JSON configuration and report documents.
#pragma once

#include <string>

#include "json.hpp"
#include "mmreg/eval.hpp"
#include "mmreg/types.hpp"

namespace mmreg {

// The supported NIfTI-1 subset: single-file "n+1", 348-byte header plus
// 4-byte extender, float32 little-endian data at vox_offset 352. Volumes
// use dim[0]=3 (dim[4]=channels with dim[0]=4 for multi-channel); fields
// use dim[0]=4 with dim[4]=3 vector components. Every other header field
// is zeroed on write and ignored on read.
Volume read_volume(const std::string& path);
void write_volume(const std::string& path, const Volume& v);

DisplacementField read_field(const std::string& path);
void write_field(const std::string& path, const DisplacementField& u);

// CSV with the exact header line `id,fx,fy,fz,mx,my,mz`, one row per pair,
// coordinates printed at 17 significant digits.
LandmarkSet read_landmarks(const std::string& path);
void write_landmarks(const std::string& path, const LandmarkSet& landmarks);

struct ResolvedConfig {
    LossSpec loss;
    OptimConfig optim;
};

// Paper-derived defaults: MSE+NCC weighted 0.5/0.5, lambda 1.0, lr 1e-3,
// 30 iterations, 3 levels, NCC window 9.
ResolvedConfig default_config();

// JSON config document; omitted keys resolve to the defaults above.
// Unknown keys, unknown metric names, and negative weights are rejected.
ResolvedConfig read_config(const std::string& path);
ResolvedConfig config_from_json(const nlohmann::json& doc, const std::string& context);

nlohmann::json config_to_json(const ResolvedConfig& cfg);
nlohmann::json tre_report_to_json(const TreReport& report);
nlohmann::json hit_rate_to_json(const HitRateCurve& curve);
nlohmann::json t_test_to_json(const PairedTTest& test);
nlohmann::json comparison_to_json(const ComparisonTable& table);

// Pretty-printed JSON with a trailing newline.
void write_report(const std::string& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::string& path);

}  // namespace mmreg
