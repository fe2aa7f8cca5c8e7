#include "fnlslab/lemma_lab.hpp"

#include <cmath>
#include <limits>

#include "fnlslab/phase.hpp"

namespace fnls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One evaluator per scanned quantity. The scans and scan_ratio() both call
// these, so a stored witness reproduces its report exactly.

double ev_phase_ratio(double alpha, int n1, int n2, int n3, int n4) {
  const double phi = phase_function(alpha, n1, n2, n3, n4);
  const double a = std::abs(static_cast<double>(n4 - n1));
  const double b = std::abs(static_cast<double>(n4 - n3));
  const int m = std::max(std::max(std::abs(n1), std::abs(n2)),
                         std::max(std::abs(n3), std::abs(n4)));
  return std::abs(phi) / (a * b * std::pow(m + 1.0, 2.0 * alpha - 2.0));
}

double ev_phase_abs(double alpha, int n1, int n2, int n3, int n4) {
  return std::abs(phase_function(alpha, n1, n2, n3, n4));
}

double ev_psi_min_bound(double s, int n1, int n2, int n3, int n4) {
  const double psi = std::abs(psi_symbol(s, n1, n2, n3, n4));
  return psi / std::min(jb_pow2s(n1 - n2, s), jb_pow2s(n1 - n4, s));
}

double ev_psi_product_bound(double s, int n1, int n2, int n3, int n4) {
  const double psi = std::abs(psi_symbol(s, n1, n2, n3, n4));
  return psi / (jb_pow2s(n1 - n2, 0.5 * s) * jb_pow2s(n1 - n4, 0.5 * s));
}

// <n>^{1-2s} = jb_pow2s(n, 1/2 - s)
double ev_psi_smoothing_12(double s, int n1, int n2, int n3, int n4) {
  const double psi = std::abs(psi_symbol(s, n1, n2, n3, n4));
  const double w = 0.5 - s;
  const double d = std::min(std::max(jb_pow2s(n1, w), jb_pow2s(n2, w)),
                            std::max(jb_pow2s(n3, w), jb_pow2s(n4, w)));
  return psi * d / jb_pow2s(n1 - n2, 0.5);
}

double ev_psi_smoothing_14(double s, int n1, int n2, int n3, int n4) {
  const double psi = std::abs(psi_symbol(s, n1, n2, n3, n4));
  const double w = 0.5 - s;
  const double d = std::min(std::max(jb_pow2s(n1, w), jb_pow2s(n4, w)),
                            std::max(jb_pow2s(n2, w), jb_pow2s(n3, w)));
  return psi * d / jb_pow2s(n1 - n4, 0.5);
}

using Evaluator = double (*)(double, int, int, int, int);

struct ScanDef {
  const char* id;
  Evaluator ev;
  bool track_min;  // witness binds to the min (lower bounds) or max
};

constexpr ScanDef kPhaseScans[] = {
    {"phase-ratio", ev_phase_ratio, true},
    {"phase-min-abs", ev_phase_abs, true},
};

constexpr ScanDef kPsiScans[] = {
    {"psi-min-bound", ev_psi_min_bound, false},
    {"psi-product-bound", ev_psi_product_bound, false},
    {"psi-smoothing-12", ev_psi_smoothing_12, false},
    {"psi-smoothing-14", ev_psi_smoothing_14, false},
};

// Shared exhaustive loop over the hyperplane box. skip_first_pair selects
// the exclusion: n2 in {n1, n3} for the phase scans (the resonant set),
// n1 in {n2, n4} for the psi scans (the vanishing diagonals).
template <typename Skip, typename Visit>
void hyperplane_scan(int n_max, Skip&& skip, Visit&& visit) {
  for (int n1 = -n_max; n1 <= n_max; ++n1)
    for (int n2 = -n_max; n2 <= n_max; ++n2)
      for (int n3 = -n_max; n3 <= n_max; ++n3) {
        const int n4 = n1 - n2 + n3;
        if (n4 < -n_max || n4 > n_max) continue;
        if (skip(n1, n2, n3, n4)) continue;
        visit(n1, n2, n3, n4);
      }
}

template <size_t K, typename Skip>
std::vector<ScanReport> run_scans(const ScanDef (&defs)[K], double param,
                                  int n_max, Skip&& skip) {
  std::vector<ScanReport> out(K);
  for (size_t i = 0; i < K; ++i) {
    out[i].lemma_id = defs[i].id;
    out[i].n_max = n_max;
    out[i].min_ratio = kInf;
    out[i].max_ratio = -kInf;
  }
  hyperplane_scan(n_max, skip, [&](int n1, int n2, int n3, int n4) {
    for (size_t i = 0; i < K; ++i) {
      const double v = defs[i].ev(param, n1, n2, n3, n4);
      const bool extremal = defs[i].track_min ? v < out[i].min_ratio
                                              : v > out[i].max_ratio;
      if (v < out[i].min_ratio) out[i].min_ratio = v;
      if (v > out[i].max_ratio) out[i].max_ratio = v;
      if (extremal) out[i].witness = {n1, n2, n3, n4};
    }
  });
  for (auto& r : out) {
    if (!std::isfinite(r.min_ratio) || !std::isfinite(r.max_ratio))
      throw config_error("scan over an empty tuple set (n_max too small?)");
    r.pass = r.min_ratio > 0.0 && std::isfinite(r.max_ratio);
  }
  return out;
}

// theta_* and the level exponent c share a branch point at
// alpha = 5/4 + s/2; both are continuous across it.
void theta_and_c(double alpha, double s, double gamma, double& theta,
                 double& c) {
  if (alpha <= 1.25 + 0.5 * s) {
    theta = (4.0 * alpha + 2.0 * s - 3.0) / (4.0 * alpha);
    c = 4.0 + (gamma - 1.0) * (5.0 + 2.0 * s - 4.0 * alpha) / (2.0 * s);
  } else {
    theta = (1.0 + 2.0 * s) / (2.0 * alpha);
    c = 4.0;
  }
}

// 2*gamma minus the admissibility right-hand side; admissible iff positive
// (together with gamma < 1/(1-2s)).
double admissibility_margin(double alpha, double s, double gamma) {
  double theta, c;
  theta_and_c(alpha, s, gamma, theta, c);
  return 2.0 * gamma - (4.0 * alpha * theta / (2.0 * alpha - 1.0) + c);
}

}  // namespace

std::vector<ScanReport> phase_bound_scan(double alpha, int n_max) {
  if (!(alpha > 0.5)) throw config_error("phase_bound_scan: alpha must be > 1/2");
  if (n_max < 1) throw config_error("phase_bound_scan: n_max must be >= 1");
  return run_scans(kPhaseScans, alpha, n_max,
                   [](int n1, int n2, int n3, int) {
                     return n2 == n1 || n2 == n3;
                   });
}

std::vector<ScanReport> psi_bound_scan(double s, int n_max) {
  if (!(s > 0.25 && s <= 0.5))
    throw config_error("psi_bound_scan: s must lie in (1/4, 1/2]");
  if (n_max < 1) throw config_error("psi_bound_scan: n_max must be >= 1");
  return run_scans(kPsiScans, s, n_max, [](int n1, int n2, int, int n4) {
    return n1 == n2 || n1 == n4;
  });
}

double scan_ratio(const std::string& lemma_id, double param,
                  const std::array<int, 4>& n) {
  for (const auto& d : kPhaseScans)
    if (lemma_id == d.id) return d.ev(param, n[0], n[1], n[2], n[3]);
  for (const auto& d : kPsiScans)
    if (lemma_id == d.id) return d.ev(param, n[0], n[1], n[2], n[3]);
  throw config_error("scan_ratio: unknown lemma id '" + lemma_id + "'");
}

bool alpha1_factorization_holds(int n_max) {
  bool ok = true;
  hyperplane_scan(n_max, [](int, int, int, int) { return false; },
                  [&](int n1, int n2, int n3, int n4) {
                    const long long lhs = phase_alpha1_exact(n1, n2, n3, n4);
                    const long long rhs = -2LL * (n4 - n1) * (n4 - n3);
                    if (lhs != rhs) ok = false;
                  });
  return ok;
}

double sstar_branch1(double a) {
  return 0.25 * (std::sqrt(68.0 * a * a - 52.0 * a + 9.0) - 10.0 * a + 7.0);
}

double sstar_branch2(double a) {
  return 0.5 * (std::sqrt(4.0 * a * a - 2.0 * a + 1.0) - 2.0 * a + 1.0);
}

double sstar_branch_point() { return (35.0 + std::sqrt(105.0)) / 32.0; }

double sstar(double alpha) {
  if (!(alpha > 1.0)) throw config_error("sstar: requires alpha > 1");
  return alpha <= sstar_branch_point() ? sstar_branch1(alpha)
                                       : sstar_branch2(alpha);
}

ThresholdReport threshold_comparison(double alpha) {
  ThresholdReport r;
  r.prob_threshold = sstar(alpha) - 0.5;
  r.det_threshold = (1.0 - alpha) / 3.0;
  r.beats_deterministic = r.prob_threshold < r.det_threshold;
  return r;
}

double crossover_alpha() {
  // sstar(a) - 1/2 = (1 - a)/3 changes sign on [1.45, 1.7] (checked below);
  // bisect to machine precision.
  auto f = [](double a) { return (sstar(a) - 0.5) - (1.0 - a) / 3.0; };
  double lo = 1.45, hi = 1.7;
  if (!(f(lo) < 0.0 && f(hi) > 0.0))
    throw config_error("crossover_alpha: bracket lost");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NumerologyReport numerology(double alpha, double s, double gamma) {
  if (!(alpha > 1.0)) throw config_error("numerology: requires alpha > 1");
  if (!(s > 0.25 && s <= 0.5))
    throw config_error("numerology: s must lie in (1/4, 1/2]");
  if (!(gamma > 2.0)) throw config_error("numerology: requires gamma > 2");
  NumerologyReport r;
  r.alpha = alpha;
  r.s = s;
  r.gamma = gamma;
  r.s_star = sstar(alpha);
  double c;
  theta_and_c(alpha, s, gamma, r.theta_star, c);
  r.c_exp = c;
  const double margin = admissibility_margin(alpha, s, gamma);
  const double gamma_crit = 1.0 / (1.0 - 2.0 * s);  // +inf at s = 1/2
  r.admissible = gamma < gamma_crit && margin > 0.0;
  r.growth_A = margin > 0.0 ? 2.0 * gamma / margin : kInf;
  r.beta = (2.0 * alpha - 1.0) * gamma / (2.0 * alpha);
  return r;
}

double admissibility_flip_s(double alpha, double slack) {
  if (!(alpha > 1.0))
    throw config_error("admissibility_flip_s: requires alpha > 1");
  if (!(slack > 0.0 && slack < 1.0))
    throw config_error("admissibility_flip_s: slack must lie in (0, 1)");
  // At the near-critical coupling gamma(s) = (1 - slack)/(1 - 2s) the
  // margin is negative just above s = 1/4 and positive just below 1/2.
  auto margin = [&](double s) {
    return admissibility_margin(alpha, s, (1.0 - slack) / (1.0 - 2.0 * s));
  };
  double lo = 0.25 + 1e-9, hi = 0.5 - 1e-9;
  if (!(margin(lo) < 0.0 && margin(hi) > 0.0))
    throw config_error("admissibility_flip_s: no sign change in s");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fnls
