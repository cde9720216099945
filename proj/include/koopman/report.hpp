#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopman/bilinearize.hpp"
#include "koopman/conditions.hpp"
#include "koopman/flow.hpp"
#include "koopman/gedmd.hpp"
#include "koopman/liealg.hpp"
#include "koopman/linearize.hpp"
#include "koopman/spectral.hpp"

namespace koopman {

using Json = nlohmann::json;

/// Two-space indented JSON with every number written to 17 significant digits
/// (integers stay integers; non-finite values become null).
std::string dump_json(const Json& doc);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// [re, im]
Json complex_json(cplx z);
Json vector_json(const Vec& v);
Json matrix_json(const Mat& m);
Json complex_vector_json(const CVec& v);

Json to_json(const Spectrum& s);
Json to_json(const ConditionsReport& r);
Json to_json(const ScanReport& r);
Json to_json(const IntegratorConfig& c);
Json to_json(const ConjugacyMap& psi);
Json to_json(const LinearizationDiagnostics& d);
Json to_json(const LieBasis& b);
Json to_json(const IsomorphismCertificate& c);
Json to_json(const AdjointSpectrum& a);
Json to_json(const BilinearModel& m);
Json to_json(const GeneratorMatrix& g);
Json to_json(const GeneratorEigenfunctions& e, const Dictionary& dict);
Json to_json(const InvarianceReport& r);

/// delta,value_gap,value_ratio,derivative_gap,derivative_ratio
std::string sweep_csv(const std::vector<SweepRow>& rows);
/// u1..ud,ges,gap_at_point,refined_gap,flagged
std::string scan_csv(const ScanReport& r);

}  // namespace koopman
