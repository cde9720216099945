#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "koopman/polyfield.hpp"

namespace koopman {

/// System file layout (components are 1-indexed in files):
///   {"n": 2, "d": 1,
///    "drift":    [{"component": 1, "exponents": [1, 0], "coeff": -1.0}, ...],
///    "controls": [[{"component": 2, "exponents": [0, 1], "coeff": 1.0}], ...],
///    "domain":   {"lo": [-1, -1], "hi": [1, 1]}}
ControlAffineSystem parse_system(const nlohmann::json& doc);
/// Parse errors carry the line/column or the offending field path.
ControlAffineSystem parse_system_text(const std::string& text);
ControlAffineSystem read_system(const std::filesystem::path& path);

nlohmann::json polymap_to_json(const PolyMap& f);
nlohmann::json system_to_json(const ControlAffineSystem& sys);

}  // namespace koopman
