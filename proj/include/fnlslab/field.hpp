#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace fnls {

using cd = std::complex<double>;

// Thrown for invalid parameter/grid/config combinations (CLI exit code 2).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an integration blows up (CLI exit code 3). Carries the model
// time at which the first non-finite state was produced.
struct integration_error : std::runtime_error {
  double t_fail;
  integration_error(const std::string& msg, double t)
      : std::runtime_error(msg), t_fail(t) {}
};

// <n> = sqrt(1+n^2); powers are taken as (1+n^2)^(s) for <n>^{2s} so no
// square root is ever needed.
inline double jb2(double n) { return 1.0 + n * n; }
inline double jb_pow2s(double n, double s) { return std::pow(jb2(n), s); }

// Fourier coefficients of a function on the torus (convention e^{inx},
// normalized measure, so the L^2 mass is a plain coefficient sum).
// Frequencies n in [-n_grid, n_grid], stored densely; index i <-> n = i - n_grid.
struct FourierField {
  int n_grid = 0;
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(1);

  FourierField() = default;
  explicit FourierField(int n) : n_grid(n), c(Eigen::VectorXcd::Zero(2 * n + 1)) {
    if (n < 0) throw config_error("FourierField: negative truncation");
  }

  int size() const { return 2 * n_grid + 1; }

  // Coefficient at frequency n; reads outside the stored range are 0.
  cd operator()(int n) const {
    return std::abs(n) <= n_grid ? c(n + n_grid) : cd(0.0, 0.0);
  }
  cd& at(int n) { return c(n + n_grid); }

  bool all_finite() const { return c.allFinite(); }
};

struct ModelParams {
  double alpha = 2.0;  // dispersion exponent, > 1
  double s = 0.45;     // Gaussian regularity, (1/4, 1/2]
  double gamma = 3.0;  // weight exponent, > 2 (and < 1/(1-2s) when s < 1/2)
  int sign = +1;       // nonlinearity sign (defocusing convention +1)
  bool gamma_override = false;  // allow gamma outside the admissible window

  void validate() const {
    if (!(alpha > 1.0)) throw config_error("model.alpha must be > 1");
    if (!(s > 0.25 && s <= 0.5)) throw config_error("model.s must lie in (1/4, 1/2]");
    if (sign != 1 && sign != -1) throw config_error("model.sign must be +1 or -1");
    if (!(gamma > 2.0)) throw config_error("model.gamma must be > 2");
    if (!gamma_override && s < 0.5 && !(gamma < 1.0 / (1.0 - 2.0 * s)))
      throw config_error("model.gamma must be < 1/(1-2s); set gamma_override to explore");
  }
};

struct GridSpec {
  int n_trunc = 16;  // Galerkin cutoff N: nonlinear dynamics live on |n| <= N
  int n_pad = 65;    // physical grid size for alias-free cubic products

  void validate() const {
    if (n_trunc < 0) throw config_error("grid.n_trunc must be >= 0");
    // A cubic of data supported in [-N, N] reaches frequency 3N; a circular
    // product of length n_pad folds 3N back onto 3N - n_pad, which stays
    // outside [-N, N] iff n_pad >= 4N + 1.
    if (n_pad < 4 * n_trunc + 1)
      throw config_error("grid.n_pad must be >= 4*n_trunc + 1 (alias-free cubic)");
  }

  // FFT working length (power of two >= n_pad).
  int fft_len() const {
    int L = 1;
    while (L < n_pad) L <<= 1;
    return L;
  }

  static GridSpec for_trunc(int N) { return GridSpec{N, 4 * N + 1}; }
};

// Sharp projection: zero every coefficient with |n| > N (storage unchanged).
FourierField project(const FourierField& f, int N);

// Sum over n of <n>^{2s} |c_n|^2.
double hs_norm_sq(const FourierField& f, double s);

// l^p norm of <n>^s * |c_n|; p may be any real >= 1, or infinity (max).
double fl_norm(const FourierField& f, double s, double p);

// Sum over n of |c_n|^2 (the conserved L^2 mass under the e^{inx} convention).
double mass(const FourierField& f);

// Pairing <f, g> = sum_n f_n * conj(g_n).
cd inner(const FourierField& f, const FourierField& g);

}  // namespace fnls
