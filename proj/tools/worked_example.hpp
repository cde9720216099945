#pragma once

#include <string>
#include <vector>

#include "koopman/polyfield.hpp"
#include "koopman/report.hpp"

namespace koopman::cli {

/// x1' = -x1, x2' = -x2 + a x1^2 + u (x2 + x1^2) on [-w, w]^2.
/// Eigenvalues -1 and -1 + u; phi = x2 + (a + u)/(1 + u) x1^2; [F, G] = (0, (a - 1) x1^2).
ControlAffineSystem coupled_quadratic_system(double a, double half_width = 1.0);

/// u in (-inf, 1) where the spectrum (-1, -1 + u) is resonant to order k:
/// 1 - 1/m for m = 1..k and 1 - m for m = 1..k, sorted ascending and deduplicated.
std::vector<double> coupled_quadratic_resonances(int k);

struct ExampleCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExampleReport {
  double a = 0.0;
  std::vector<ExampleCheck> checks;
  Json details;

  bool all_pass() const;
  Json to_json() const;
};

/// Runs the whole pipeline on coupled_quadratic_system(a) and compares it with
/// the closed-form values.
ExampleReport run_worked_example(double a);

}  // namespace koopman::cli
