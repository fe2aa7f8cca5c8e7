#pragma once

#include "fnlslab/dynamics.hpp"

#include <vector>

namespace fnls {

enum class Window { smooth, sharp };

// Space-time Fourier data on a uniform temporal-frequency grid. Column k
// carries the frequency tau0(n) + tau_value(k) for mode row n + n_grid:
// the absolute-frequency transform stores tau0 = 0, the demodulated one
// stores tau0(n) = |n|^{2 alpha} so the modulation weight <tau - |n|^{2a}>
// is resolved exactly at lambda = tau_value(k) regardless of the grid.
struct SpaceTimeCoefficients {
  int n_grid = 0;
  Eigen::MatrixXcd coeffs;  // (2 n_grid + 1) x n_tau, frequencies ascending
  Eigen::VectorXd tau0;     // per-mode offset, size 2 n_grid + 1
  double dtau = 0.0;
  Window window = Window::smooth;

  double tau_value(int k) const {
    return (k - static_cast<int>(coeffs.cols()) / 2) * dtau;
  }
};

// The standard bump glued into a plateau cutoff: identically 1 on [-1, 1],
// supported in [-2, 2], smooth, even, monotone on [1, 2].
double smooth_window(double x);

// Discrete time-Fourier transform of the windowed trajectory, absolute
// frequencies (tau0 = 0). The smooth window affine-maps the trajectory's
// time span onto [-2, 2] so the data sits under the plateau and tapers to
// zero at both ends; sharp keeps the samples as they are. Requires a
// uniform time grid and a Nyquist range covering max |n|^{2 alpha} of the
// stored modes (both violations throw config_error).
SpaceTimeCoefficients space_time_transform(const Trajectory& traj,
                                           Window window,
                                           const GridSpec& grid);

// Same transform after heterodyning mode n by e^{-i |n|^{2 alpha} t}: the
// spectrum near tau = |n|^{2 alpha} lands near lambda = 0, so coarse time
// grids stay accurate for modulation weights (tau0(n) = |n|^{2 alpha}).
SpaceTimeCoefficients space_time_transform_demodulated(const Trajectory& traj,
                                                       Window window,
                                                       const GridSpec& grid);

// l^p over n of <n>^s times the L^q(d tau) norm of <tau - |n|^{2a}>^b |h|.
// p or q may be infinity; the q-quadrature carries a dtau^{1/q} factor.
double xsb_norm(const SpaceTimeCoefficients& c, double s, double b, double p,
                double q, double alpha);

// Upper-bound surrogate for the infimum-over-extensions localized norm:
// the trajectory restricted to [0, min(1.5 T, horizon)], zero-extended on
// [-T/2, 0), multiplied by the plateau window eta((2t - T)/T) (which is 1
// exactly on [0, T]) and measured with the demodulated transform at p = 2.
// Long recordings are strided down to at most 512 samples before the FFT.
double localized_xsb_norm(const Trajectory& traj, double T, double s, double b,
                          double q, double alpha, const GridSpec& grid);

// Thresholds for the dyadic stopping-time scan. b_slack realizes the "+"
// in the modulation exponent 1/q' + ; eps_dyadic the "-" in the window
// exponent; c0/c1 the hidden constants of the two level-M bounds.
struct TauConfig {
  double q = 3.0;
  double eps_dyadic = 0.01;
  double c0 = 1.0;
  double c1 = 1.0;
  int m_cap = 8;  // largest dyadic level scanned
  double b_slack = 0.01;

  void validate(const ModelParams& params) const;
};

struct TauOutcome {
  double tau = 0.0;  // window length T_M of the smallest passing level
  int m_star = 0;    // that level M, or 0 when none passed
  bool passed = false;
};

// Scan dyadic levels M = 1, 2, ..., m_cap with windows T_M =
// M^{-4a/(2a-1) - eps}. The remainder solution v of u = S(t) u0 + v is run
// once to 1.5 * T_1; level M passes when
//   ||v||_{X^{0, 1/q'+}_{2,q}(T_M)} <= c0 M   and
//   ||v||_{X^{s, 1/q'+}_{2,q}(T_M)} <= c1 M^gamma.
// Returns T at the smallest passing M; if none pass, the cap's (shortest)
// window, flagged. Blow-up after the shortest window marks the unfinished
// levels failed; blow-up inside the shortest window propagates.
TauOutcome tau_outcome(const FourierField& u0, const ModelParams& params,
                       const GridSpec& grid, const TauConfig& tau_cfg,
                       const IntegratorConfig& int_cfg);

double stopping_time_tau(const FourierField& u0, const ModelParams& params,
                         const GridSpec& grid, const TauConfig& tau_cfg,
                         const IntegratorConfig& int_cfg);

// One batched remainder run for all rows of U0 (row = one u0, column = mode
// n - N). Memory grows with rows x recorded steps; keep blocks of at most a
// few hundred rows. A blow-up in a multi-row batch falls back to row-by-row
// scalar scans so one pathological sample cannot poison its block.
std::vector<TauOutcome> stopping_time_tau_batch(const Eigen::MatrixXcd& U0,
                                                const ModelParams& params,
                                                const GridSpec& grid,
                                                const TauConfig& tau_cfg,
                                                const IntegratorConfig& int_cfg);

}  // namespace fnls
