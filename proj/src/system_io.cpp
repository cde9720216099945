#include "koopman/system_io.hpp"

#include <fstream>
#include <sstream>

namespace koopman {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("system file field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

int read_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

double read_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

Vec read_vector(const json& v, int n, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    fail(path, "expected an array of " + std::to_string(n) + " numbers");
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = read_number(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

PolyMap read_terms(const json& terms, int n, const std::string& path) {
  if (!terms.is_array()) fail(path, "expected an array of terms");
  PolyMap f(n);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string tp = path + "[" + std::to_string(t) + "]";
    const int comp = read_int(require(terms[t], "component", tp), tp + ".component");
    if (comp < 1 || comp > n) fail(tp + ".component", "must lie in 1.." + std::to_string(n));
    const json& ex = require(terms[t], "exponents", tp);
    if (!ex.is_array() || static_cast<int>(ex.size()) != n)
      fail(tp + ".exponents", "expected an array of " + std::to_string(n) + " integers");
    std::vector<int> e(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      e[j] = read_int(ex[j], tp + ".exponents[" + std::to_string(j) + "]");
      if (e[j] < 0) fail(tp + ".exponents", "exponents must be non-negative");
    }
    f.add_term(comp - 1, MultiIndex(e), read_number(require(terms[t], "coeff", tp), tp + ".coeff"));
  }
  return f;
}

json terms_json(const PolyMap& f) {
  json out = json::array();
  for (int i = 0; i < f.dim(); ++i)
    for (const auto& [m, c] : f[i].terms())
      out.push_back({{"component", i + 1}, {"exponents", m.exponents()}, {"coeff", c}});
  return out;
}

}  // namespace

ControlAffineSystem parse_system(const json& doc) {
  const int n = read_int(require(doc, "n", ""), "n");
  if (n < 1) fail("n", "must be positive");
  const int d = doc.contains("d") ? read_int(doc["d"], "d") : 0;
  if (d < 0) fail("d", "must be non-negative");
  ControlAffineSystem sys;
  sys.drift = read_terms(require(doc, "drift", ""), n, "drift");
  const json controls = doc.contains("controls") ? doc["controls"] : json::array();
  if (!controls.is_array() || static_cast<int>(controls.size()) != d)
    fail("controls", "expected an array of " + std::to_string(d) + " term lists");
  for (int i = 0; i < d; ++i)
    sys.controls.push_back(read_terms(controls[i], n, "controls[" + std::to_string(i) + "]"));
  const json& dom = require(doc, "domain", "");
  sys.domain.lo = read_vector(require(dom, "lo", "domain"), n, "domain.lo");
  sys.domain.hi = read_vector(require(dom, "hi", "domain"), n, "domain.hi");
  sys.validate();
  return sys;
}

ControlAffineSystem parse_system_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "at line L, column C" in its message.
    throw ConfigError(std::string("system file is not valid JSON: ") + e.what());
  }
  return parse_system(doc);
}

ControlAffineSystem read_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_system_text(buf.str());
}

json polymap_to_json(const PolyMap& f) { return terms_json(f); }

json system_to_json(const ControlAffineSystem& sys) {
  json controls = json::array();
  for (const auto& g : sys.controls) controls.push_back(terms_json(g));
  auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"n", sys.dim()},
          {"d", sys.inputs()},
          {"drift", terms_json(sys.drift)},
          {"controls", controls},
          {"domain", {{"lo", vec(sys.domain.lo)}, {"hi", vec(sys.domain.hi)}}}};
}

}  // namespace koopman
