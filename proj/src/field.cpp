#include "fnlslab/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fnls {

FourierField project(const FourierField& f, int N) {
  if (N < 0) throw config_error("project: negative truncation");
  FourierField out = f;
  for (int n = -out.n_grid; n <= out.n_grid; ++n)
    if (std::abs(n) > N) out.at(n) = cd(0.0, 0.0);
  return out;
}

double hs_norm_sq(const FourierField& f, double s) {
  double acc = 0.0;
  for (int n = -f.n_grid; n <= f.n_grid; ++n)
    acc += jb_pow2s(n, s) * std::norm(f(n));
  return acc;
}

double fl_norm(const FourierField& f, double s, double p) {
  if (!(p >= 1.0)) throw config_error("fl_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (int n = -f.n_grid; n <= f.n_grid; ++n)
      m = std::max(m, jb_pow2s(n, 0.5 * s) * std::abs(f(n)));
    return m;
  }
  double acc = 0.0;
  for (int n = -f.n_grid; n <= f.n_grid; ++n)
    acc += std::pow(jb_pow2s(n, 0.5 * s) * std::abs(f(n)), p);
  return std::pow(acc, 1.0 / p);
}

double mass(const FourierField& f) { return f.c.squaredNorm(); }

cd inner(const FourierField& f, const FourierField& g) {
  const int n0 = std::min(f.n_grid, g.n_grid);
  cd acc(0.0, 0.0);
  for (int n = -n0; n <= n0; ++n) acc += f(n) * std::conj(g(n));
  return acc;
}

}  // namespace fnls
