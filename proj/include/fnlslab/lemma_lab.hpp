#pragma once

#include "fnlslab/field.hpp"

#include <array>
#include <string>
#include <vector>

namespace fnls {

// Result of one exhaustive hyperplane-box scan. min_ratio / max_ratio are
// the extremes of the scanned quantity; witness holds the tuple attaining
// the decisive one (the minimum for lower-bound scans, the maximum for
// upper-bound scans) and re-evaluates to it exactly via scan_ratio().
struct ScanReport {
  std::string lemma_id;
  int n_max = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::array<int, 4> witness{0, 0, 0, 0};
  bool pass = false;
};

// Everything the parameter bookkeeping derives from (alpha, s, gamma).
struct NumerologyReport {
  double alpha = 0, s = 0, gamma = 0;
  double s_star = 0;      // a.s.-GWP regularity threshold
  double theta_star = 0;  // dyadic time-window exponent
  double c_exp = 0;       // level-M growth exponent of the H^s bound
  double growth_A = 0;    // log-density growth exponent (inf if inadmissible)
  double beta = 0;        // stopping-time tail exponent
  bool admissible = false;
};

// Exhaustive scan of the phase lower bound over the nonresonant set
// n2 not in {n1, n3}, |n_j| <= n_max on the hyperplane. Two reports:
//   [0] "phase-ratio":   min |Phi| / (|n4-n1| |n4-n3| (max|n_j|+1)^{2a-2})
//   [1] "phase-min-abs": min |Phi|
std::vector<ScanReport> phase_bound_scan(double alpha, int n_max);

// Exhaustive scan of the four Psi_s upper bounds over the hyperplane box
// with n1 not in {n2, n4} (both denominators' diagonals carry Psi = 0 and
// are skipped). Reports, in order:
//   [0] "psi-min-bound":     |Psi| / min(<n1-n2>^{2s}, <n1-n4>^{2s})
//   [1] "psi-product-bound": |Psi| / (<n1-n2>^s <n1-n4>^s)
//   [2] "psi-smoothing-12":  |Psi| ((<n1>^{1-2s} v <n2>^{1-2s}) ^
//                            (<n3>^{1-2s} v <n4>^{1-2s})) / <n1-n2>
//   [3] "psi-smoothing-14":  same with n2 <-> n4
std::vector<ScanReport> psi_bound_scan(double s, int n_max);

// Re-evaluate a scanned quantity on one tuple; param is alpha for the
// phase ids and s for the psi ids. Same expression the scans use, so a
// stored witness reproduces its report bit-for-bit.
double scan_ratio(const std::string& lemma_id, double param,
                  const std::array<int, 4>& n);

// Exact integer check of the alpha = 1 factorization
// Phi_1 = -2 (n4 - n1)(n4 - n3) over the whole box |n_j| <= n_max.
bool alpha1_factorization_holds(int n_max);

// Almost-sure GWP threshold s_*(alpha), piecewise in alpha with branch
// point alpha0 = (35 + sqrt(105))/32. Throws config_error for alpha <= 1.
double sstar(double alpha);
double sstar_branch1(double alpha);  // valid on (1, alpha0]
double sstar_branch2(double alpha);  // valid on [alpha0, inf)
double sstar_branch_point();

struct ThresholdReport {
  double prob_threshold = 0;  // s_*(alpha) - 1/2: Sobolev reach of the data
  double det_threshold = 0;   // (1 - alpha)/3: deterministic GWP floor
  bool beats_deterministic = false;
};

ThresholdReport threshold_comparison(double alpha);

// alpha where the probabilistic threshold stops beating the deterministic
// one, found by bisection (the closed form is (17 + 3 sqrt(21))/20).
double crossover_alpha();

// theta_*, c, admissibility, A, beta from (alpha, s, gamma); raw gamma is
// accepted (an over-critical gamma simply reports inadmissible).
NumerologyReport numerology(double alpha, double s, double gamma);

// s where admissibility flips at fixed alpha with the near-critical choice
// gamma(s) = (1 - slack)/(1 - 2s); lands on s_*(alpha) as slack -> 0.
double admissibility_flip_s(double alpha, double slack = 1e-6);

}  // namespace fnls
