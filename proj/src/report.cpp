#include "koopman/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "koopman/system_io.hpp"

namespace koopman {

namespace {

std::string number_text(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

void write_value(const Json& j, std::ostringstream& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::number_float: out << number_text(j.get<double>()); return;
    case Json::value_t::array: {
      if (j.empty()) { out << "[]"; return; }
      if (std::all_of(j.begin(), j.end(), is_scalar)) {
        out << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          write_value(j[i], out, indent);
        }
        out << ']';
        return;
      }
      out << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out << pad;
        write_value(j[i], out, indent + 2);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << close << ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) { out << "{}"; return; }
      out << "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out << pad << Json(it.key()).dump() << ": ";
        write_value(it.value(), out, indent + 2);
        out << (i + 1 < j.size() ? ",\n" : "\n");
      }
      out << close << '}';
      return;
    }
    default: out << j.dump(); return;
  }
}

Json double_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json complex_poly_json(const ComplexPoly& p) {
  Json terms = Json::array();
  for (const auto& [m, c] : p.terms())
    terms.push_back({{"exponents", m.exponents()}, {"re", c.real()}, {"im", c.imag()}});
  return terms;
}

Json record_json(const ResonanceRecord& r) {
  return {{"target_index", r.target_index + 1},
          {"witness", r.witness.exponents()},
          {"value_gap", r.value_gap},
          {"kind", to_string(r.kind)}};
}

}  // namespace

std::string dump_json(const Json& doc) {
  std::ostringstream out;
  write_value(doc, out, 0);
  out << '\n';
  return out.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

Json vector_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json matrix_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Json complex_vector_json(const CVec& v) {
  // interleaved [re, im, re, im, ...]
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i].real());
    out.push_back(v[i].imag());
  }
  return out;
}

Json to_json(const Spectrum& s) {
  Json ev = Json::array(), right = Json::array(), left = Json::array();
  for (int i = 0; i < s.dim(); ++i) {
    ev.push_back(complex_json(s.eigenvalues[i]));
    right.push_back(complex_vector_json(s.right.col(i)));
    left.push_back(complex_vector_json(s.left.row(i).transpose()));
  }
  std::vector<int> pairs;
  for (int p : s.conjugate_pair) pairs.push_back(p + 1);
  return {{"eigenvalues", ev},   {"right_vectors", right}, {"left_vectors", left},
          {"conjugate_pair", pairs}, {"simple", s.simple},  {"condition", s.condition}};
}

Json to_json(const ConditionsReport& r) {
  Json idx = Json::array();
  for (int i = 0; i < static_cast<int>(r.nonresonant.size()); ++i)
    idx.push_back({{"index", i + 1},
                   {"eigenvalue", complex_json(r.eigenvalues[i])},
                   {"nonresonant", static_cast<bool>(r.nonresonant[i])},
                   {"spread_ok", static_cast<bool>(r.spread_ok[i])},
                   {"min_gap", double_or_null(r.min_gap[i])},
                   {"spread_margin", double_or_null(r.spread_margin[i])}});
  Json viol = Json::array();
  for (const auto& v : r.violations) viol.push_back(record_json(v));
  return {{"k", r.k == kInfiniteOrder ? Json("infinity") : Json(r.k)},
          {"k_enumerated", r.k_enumerated},
          {"min_order", r.min_order},
          {"tolerance", r.tol},
          {"hurwitz", r.hurwitz},
          {"all_pass", r.all_pass()},
          {"indices", idx},
          {"violations", viol}};
}

Json to_json(const ScanReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json e = {{"u", vector_json(p.u)}, {"ges", p.ges}, {"flagged", p.flagged}};
    if (p.ges) {
      e["gap_at_point"] = double_or_null(p.gap_at_point);
      e["refined_gap"] = double_or_null(p.refined_gap);
      e["refined_u"] = vector_json(p.refined_u);
      e["eigenvalues"] = Json::array();
      for (Eigen::Index i = 0; i < p.report.eigenvalues.size(); ++i)
        e["eigenvalues"].push_back(complex_json(p.report.eigenvalues[i]));
      e["violations"] = Json::array();
      for (const auto& v : p.report.violations) e["violations"].push_back(record_json(v));
    }
    pts.push_back(std::move(e));
  }
  Json flagged = Json::array();
  for (const auto& u : r.flagged_u()) flagged.push_back(vector_json(u));
  return {{"k", r.k}, {"tolerance", r.tol}, {"flagged", flagged}, {"points", pts}};
}

Json to_json(const IntegratorConfig& c) {
  Json j = {{"method", c.method == IntegratorMethod::rk4_fixed ? "rk4-fixed" : "rk45-adaptive"},
            {"max_steps", c.max_steps},
            {"blowup_norm", c.blowup_norm}};
  if (c.method == IntegratorMethod::rk4_fixed) j["step"] = c.step;
  else {
    j["rtol"] = c.rtol;
    j["atol"] = c.atol;
  }
  return j;
}

Json to_json(const ConjugacyMap& psi) {
  Json coords = Json::array();
  for (int i = 0; i < psi.dim(); ++i)
    coords.push_back({{"index", i + 1}, {"terms", complex_poly_json(psi.eigen_coords[i])}});
  Json pairs = Json::array();
  for (int i = 0; i < psi.dim(); ++i)
    if (psi.spectrum.conjugate_pair[i] > i) pairs.push_back({i + 1, psi.spectrum.conjugate_pair[i] + 1});
  return {{"k", psi.k},
          {"A", matrix_json(psi.a)},
          {"spectrum", to_json(psi.spectrum)},
          {"eigen_coordinates", coords},
          {"realification", {{"rule", "psi = Re(sum_i v_i phi_i)"}, {"conjugate_pairs", pairs},
                             {"imag_residue", psi.imag_residue}}},
          {"psi_polynomial", polymap_to_json(psi.psi_poly)},
          {"pullback", {{"horizon", psi.pullback.horizon}, {"integrator", to_json(psi.pullback.integrator)}}},
          {"min_denominator", double_or_null(psi.min_denominator)},
          {"tolerance", psi.tol},
          {"prune_threshold", kPruneThreshold},
          {"warnings", psi.warnings}};
}

Json to_json(const LinearizationDiagnostics& d) {
  return {{"max_conjugacy_residual", d.max_conjugacy_residual},
          {"max_instantaneous_residual", d.max_instantaneous_residual},
          {"homological_residual_by_degree", d.homological_residual},
          {"pullback_horizon", d.pullback_horizon},
          {"horizon", d.horizon},
          {"samples", d.samples},
          {"logged_times", d.logged_times}};
}

Json to_json(const LieBasis& b) {
  Json els = Json::array();
  for (const auto& e : b.elements) {
    Json j = {{"word", e.word}};
    if (e.is_matrix()) j["matrix"] = matrix_json(e.matrix());
    else j["field"] = polymap_to_json(e.field());
    els.push_back(std::move(j));
  }
  Json dec = Json::array();
  for (const auto& d : b.decisions)
    dec.push_back({{"word", d.word}, {"independent", d.independent}, {"residual", d.residual}});
  return {{"dimension", b.dim()},       {"depth", b.depth},
          {"degree_cap", b.degree_cap}, {"rank_tol", b.rank_tol},
          {"closed", b.closed},         {"degree_truncated", b.degree_truncated},
          {"closure_residual", b.closure_residual}, {"singular_ratio", b.singular_ratio},
          {"elements", els},            {"rank_decisions", dec}};
}

Json to_json(const IsomorphismCertificate& c) {
  Json cmp = Json::array();
  for (const auto& w : c.comparisons)
    cmp.push_back({{"word", w.word},
                   {"independent_vector_field", w.independent_vf},
                   {"independent_matrix", w.independent_mat},
                   {"residual_vector_field", w.residual_vf},
                   {"residual_matrix", w.residual_mat},
                   {"coefficient_gap", w.coefficient_gap}});
  return {{"verdict", to_string(c.verdict)},
          {"summary", c.summary()},
          {"dim_vector_field", c.dim_vf},
          {"dim_matrix", c.dim_mat},
          {"witness", c.witness ? Json(*c.witness) : Json(nullptr)},
          {"depth", c.depth},
          {"degree_cap", c.degree_cap},
          {"rank_tol", c.rank_tol},
          {"closed_vector_field", c.closed_vf},
          {"closed_matrix", c.closed_mat},
          {"degree_truncated", c.degree_truncated},
          {"comparisons", cmp},
          {"vector_field_words", c.vf_basis.words},
          {"matrix_words", c.mat_basis.words}};
}

Json to_json(const AdjointSpectrum& a) {
  Json ev = Json::array();
  for (Eigen::Index i = 0; i < a.eigenvalues.size(); ++i) ev.push_back(complex_json(a.eigenvalues[i]));
  return {{"ad_matrix", matrix_json(a.ad_matrix)},
          {"eigenvalues", ev},
          {"distance_to_differences", a.distance_to_differences},
          {"max_distance", a.max_distance}};
}

Json to_json(const BilinearModel& m) {
  Json b = Json::array(), c = Json::array();
  for (const auto& x : m.b) b.push_back(matrix_json(x));
  for (const auto& x : m.fitted) c.push_back(matrix_json(x));
  return {{"A", matrix_json(m.a)},
          {"B", b},
          {"fitted_C", c},
          {"fit_gap", m.fit_gap},
          {"residual", m.residual},
          {"samples", m.samples},
          {"forced", m.forced},
          {"psi", to_json(m.psi)},
          {"certificate", to_json(m.certificate)},
          {"conditions", to_json(m.conditions)},
          {"warnings", m.warnings}};
}

Json to_json(const GeneratorMatrix& g) {
  return {{"L", matrix_json(g.l)}, {"gram_condition", g.gram_condition}, {"samples", g.samples},
          {"residual", g.residual}};
}

Json to_json(const GeneratorEigenfunctions& e, const Dictionary& dict) {
  Json ev = Json::array();
  for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) ev.push_back(complex_json(e.eigenvalues[i]));
  Json monos = Json::array();
  for (const auto& m : dict.monomials) monos.push_back(m.exponents());
  Json matches = Json::array();
  for (const auto& m : e.matches) {
    Json coeffs = Json::array();
    for (Eigen::Index k = 0; k < m.coefficients.size(); ++k) coeffs.push_back(complex_json(m.coefficients[k]));
    matches.push_back({{"index", m.index + 1},
                       {"reference", complex_json(m.reference)},
                       {"recovered", complex_json(m.recovered)},
                       {"distance", m.distance},
                       {"coefficients", coeffs}});
  }
  return {{"dictionary", monos}, {"generator_eigenvalues", ev}, {"eigenfunctions", matches}};
}

Json to_json(const InvarianceReport& r) {
  Json ev = Json::array();
  for (const auto& e : r.events)
    ev.push_back({{"sample", e.sample}, {"time", e.time}, {"point", vector_json(e.point)}, {"blew_up", e.blew_up}});
  return {{"samples", r.samples}, {"horizon", r.horizon}, {"exits", r.exits()},
          {"exit_fraction", r.exit_fraction()}, {"events", ev}};
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "delta,value_gap,value_ratio,derivative_gap,derivative_ratio\n";
  auto cell = [](double v) { return std::isfinite(v) ? number_text(v) : std::string(); };
  for (const auto& r : rows)
    out << number_text(r.delta) << ',' << number_text(r.value_gap) << ',' << cell(r.value_ratio) << ','
        << number_text(r.derivative_gap) << ',' << cell(r.derivative_ratio) << '\n';
  return out.str();
}

std::string scan_csv(const ScanReport& r) {
  std::ostringstream out;
  const auto d = r.points.empty() ? 0 : r.points.front().u.size();
  for (Eigen::Index i = 0; i < d; ++i) out << 'u' << (i + 1) << ',';
  out << "ges,gap_at_point,refined_gap,flagged\n";
  for (const auto& p : r.points) {
    for (Eigen::Index i = 0; i < d; ++i) out << number_text(p.u[i]) << ',';
    out << (p.ges ? 1 : 0) << ',' << (p.ges ? number_text(p.gap_at_point) : "") << ','
        << (p.ges ? number_text(p.refined_gap) : "") << ',' << (p.flagged ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace koopman
