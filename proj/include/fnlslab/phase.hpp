#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "fnlslab/field.hpp"

namespace fnls {

// |n|^{2a} with the continuous extension |0|^{2a} = 0. When 2a is an integer
// the power is accumulated by exact integer multiplication (the resonance
// scans rely on exact cancellation, e.g. the a=1 factorization); otherwise
// a single pow call.
inline double abs_pow_2alpha(int n, double alpha) {
  if (n == 0) return 0.0;
  const double two_a = 2.0 * alpha;
  const long long k = std::llround(two_a);
  if (std::abs(two_a - static_cast<double>(k)) < 1e-12 && k >= 0 && k <= 12) {
    const long long b = std::llabs(static_cast<long long>(n));
    long long acc = 1;
    bool overflow = false;
    for (long long i = 0; i < k; ++i) {
      if (acc > (1LL << 62) / (b == 0 ? 1 : b)) { overflow = true; break; }
      acc *= b;
    }
    if (!overflow) return static_cast<double>(acc);
  }
  return std::pow(static_cast<double>(std::abs(n)), two_a);
}

// Resonance phase |n1|^{2a} - |n2|^{2a} + |n3|^{2a} - |n4|^{2a}.
// The hyperplane constraint n1 - n2 + n3 - n4 = 0 is NOT assumed here.
inline double phase_function(double alpha, int n1, int n2, int n3, int n4) {
  return abs_pow_2alpha(n1, alpha) - abs_pow_2alpha(n2, alpha) +
         abs_pow_2alpha(n3, alpha) - abs_pow_2alpha(n4, alpha);
}

// Exact integer value of the phase at alpha = 1 (plain Laplacian): on the
// hyperplane it factors as -2 (n4 - n1)(n4 - n3).
inline long long phase_alpha1_exact(int n1, int n2, int n3, int n4) {
  auto sq = [](long long n) { return n * n; };
  return sq(n1) - sq(n2) + sq(n3) - sq(n4);
}

// Symmetrized derivative symbol <n1>^{2s} - <n2>^{2s} + <n3>^{2s} - <n4>^{2s}.
inline double psi_symbol(double s, int n1, int n2, int n3, int n4) {
  return jb_pow2s(n1, s) - jb_pow2s(n2, s) + jb_pow2s(n3, s) - jb_pow2s(n4, s);
}

}  // namespace fnls
