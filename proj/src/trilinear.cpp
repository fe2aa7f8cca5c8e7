#include "fnlslab/trilinear.hpp"

#include <unsupported/Eigen/FFT>

#include <map>

namespace fnls {
namespace {

// kissfft plans are cached per length and per thread; all trilinear entry
// points stay pure functions of their arguments.
Eigen::FFT<double>& plan_for(int L) {
  static thread_local std::map<int, Eigen::FFT<double>> plans;
  return plans[L];
}

// Scatter coefficients onto the length-L circle (slot n mod L) and transform
// to physical samples; the result holds u(x_j)/L, which is all the cubic
// needs (scalings are folded together at the end).
void to_phys(const FourierField& f, int N, int L, Eigen::VectorXcd& phys) {
  Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(L);
  for (int n = -N; n <= N; ++n) {
    const cd v = f(n);
    if (v != cd(0.0, 0.0)) spec(((n % L) + L) % L) += v;
  }
  plan_for(L).inv(phys, spec);
}

}  // namespace

FourierField full_cubic(const FourierField& u1, const FourierField& u2,
                        const FourierField& u3, const GridSpec& grid) {
  grid.validate();
  const int N = grid.n_trunc;
  const int L = grid.fft_len();

  Eigen::VectorXcd w1(L), w2(L), w3(L);
  to_phys(u1, N, L, w1);
  to_phys(u2, N, L, w2);
  to_phys(u3, N, L, w3);

  Eigen::VectorXcd prod = w1.array() * w2.array().conjugate() * w3.array();
  Eigen::VectorXcd spec(L);
  plan_for(L).fwd(spec, prod);

  // inv carries 1/L per field and fwd recovers L * coefficient: net L^2.
  const double scale = static_cast<double>(L) * static_cast<double>(L);
  const int n_out = std::min(3 * N, L - 3 * N - 1);
  FourierField out(n_out);
  for (int n = -n_out; n <= n_out; ++n)
    out.at(n) = scale * spec(((n % L) + L) % L);
  return out;
}

FourierField nonres_trilinear(const FourierField& u1, const FourierField& u2,
                              const FourierField& u3, const GridSpec& grid) {
  FourierField out = full_cubic(u1, u2, u3, grid);
  const int N = grid.n_trunc;
  // Pairings restricted to |n| <= N, matching the truncation full_cubic saw.
  cd p12(0, 0), p32(0, 0);
  for (int n = -N; n <= N; ++n) {
    p12 += u1(n) * std::conj(u2(n));  // n2 = n1 stratum -> <u1,u2> u3
    p32 += u3(n) * std::conj(u2(n));  // n2 = n3 stratum -> <u3,u2> u1
  }
  for (int n = -N; n <= N; ++n)
    out.at(n) += -p12 * u3(n) - p32 * u1(n) + u1(n) * std::conj(u2(n)) * u3(n);
  return out;
}

FourierField nonres_trilinear_direct(const FourierField& u1,
                                     const FourierField& u2,
                                     const FourierField& u3,
                                     const GridSpec& grid,
                                     bool exclude_first) {
  grid.validate();
  const int N = grid.n_trunc;
  const int n_out = 3 * N;
  FourierField out(n_out);
  for (int n1 = -N; n1 <= N; ++n1)
    for (int n2 = -N; n2 <= N; ++n2)
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n4 = n1 - n2 + n3;
        if (exclude_first ? (n1 == n2 || n1 == n4) : (n2 == n1 || n2 == n3))
          continue;
        out.at(n4) += u1(n1) * std::conj(u2(n2)) * u3(n3);
      }
  return out;
}

FourierField resonant_trilinear(const FourierField& u1, const FourierField& u2,
                                const FourierField& u3) {
  const int n0 = std::max({u1.n_grid, u2.n_grid, u3.n_grid});
  FourierField out(n0);
  for (int n = -n0; n <= n0; ++n)
    out.at(n) = -u1(n) * std::conj(u2(n)) * u3(n);
  return out;
}

FourierField renormalized_cubic(const FourierField& u, const GridSpec& grid) {
  grid.validate();
  const int N = grid.n_trunc;
  const int L = grid.fft_len();

  Eigen::VectorXcd w(L);
  to_phys(u, N, L, w);
  Eigen::VectorXcd prod = w.array() * w.array().conjugate() * w.array();
  Eigen::VectorXcd spec(L);
  plan_for(L).fwd(spec, prod);

  const double scale = static_cast<double>(L) * static_cast<double>(L);
  double m = 0.0;
  for (int n = -N; n <= N; ++n) m += std::norm(u(n));

  FourierField out(N);
  for (int n = -N; n <= N; ++n)
    out.at(n) = scale * spec(((n % L) + L) % L) - 2.0 * m * u(n);
  return out;
}

}  // namespace fnls
