#include "fnlslab/xnorm.hpp"

#include "fnlslab/phase.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>

namespace fnls {
namespace {

Eigen::FFT<double>& plan_for(int L) {
  static thread_local std::map<int, Eigen::FFT<double>> plans;
  return plans[L];
}

int next_pow2_at_least(int m) {
  int L = 1;
  while (L < m) L <<= 1;
  return L;
}

double bump(double y) { return y > 0.0 ? std::exp(-1.0 / y) : 0.0; }

// Uniform-grid guard shared by every trajectory-consuming entry point.
double uniform_dt(const std::vector<double>& times) {
  if (times.size() < 2)
    throw config_error("space_time_transform: need at least two samples");
  const double dt0 = times[1] - times[0];
  for (size_t j = 1; j + 1 < times.size(); ++j) {
    if (std::abs(times[j + 1] - times[j] - dt0) >
        1e-9 * std::max(std::abs(dt0), 1e-30))
      throw config_error("space_time_transform: non-uniform time grid");
  }
  if (dt0 <= 0.0)
    throw config_error("space_time_transform: times must increase");
  return dt0;
}

// Core DFT: rows of W are time series on t_j = t_start + j dt, already
// windowed. Zero-pads to 8x the sample count, demodulates row r by
// e^{-i tau0(r) t}, and stores frequencies ascending.
SpaceTimeCoefficients transform_core(const Eigen::MatrixXcd& W, double t_start,
                                     double dt, const Eigen::VectorXd& tau0,
                                     Window tag) {
  const int rows = static_cast<int>(W.rows());
  const int J = static_cast<int>(W.cols());
  const int L = next_pow2_at_least(8 * J);
  const double dtau = 2.0 * std::numbers::pi / (L * dt);
  const double scale = dt / std::sqrt(2.0 * std::numbers::pi);

  SpaceTimeCoefficients out;
  out.n_grid = (rows - 1) / 2;
  out.tau0 = tau0;
  out.dtau = dtau;
  out.window = tag;
  out.coeffs.resize(rows, L);

  Eigen::FFT<double>& fft = plan_for(L);
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(L), sp(L);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < J; ++j) {
      cd v = W(r, j);
      if (tau0(r) != 0.0)
        v *= std::polar(1.0, -tau0(r) * (t_start + j * dt));
      in(j) = v;
    }
    in.tail(L - J).setZero();
    fft.fwd(sp, in);
    for (int c = 0; c < L; ++c) {
      const int k = c - L / 2;
      out.coeffs(r, c) =
          scale * sp((c + L / 2) % L) * std::polar(1.0, -k * dtau * t_start);
    }
  }
  return out;
}

// Windowed sample matrix of a whole trajectory (rows = modes).
Eigen::MatrixXcd windowed_samples(const Trajectory& traj, Window window) {
  const int ng = traj.states.front().n_grid;
  const int rows = 2 * ng + 1;
  const int J = static_cast<int>(traj.states.size());
  const double t0 = traj.times.front();
  const double span = traj.times.back() - t0;
  Eigen::MatrixXcd W(rows, J);
  for (int j = 0; j < J; ++j) {
    double w = 1.0;
    if (window == Window::smooth)
      w = smooth_window(-2.0 + 4.0 * (traj.times[j] - t0) / span);
    W.col(j) = w * traj.states[j].c;
  }
  return W;
}

Eigen::VectorXd dispersion_offsets(int ng, double alpha) {
  Eigen::VectorXd tau0(2 * ng + 1);
  for (int n = -ng; n <= ng; ++n) tau0(n + ng) = abs_pow_2alpha(n, alpha);
  return tau0;
}

// Localized-window transform of a series sampled on t_j = j dt_eff,
// j = 0..J-1: zero-extend over [-T/2, 0), multiply by eta((2t - T)/T),
// demodulate. The zero extension is one admissible extension of the data,
// so the resulting norm upper-bounds the infimum over extensions.
SpaceTimeCoefficients local_transform(const Eigen::MatrixXcd& series,
                                      double dt_eff, double T, double alpha) {
  const int rows = static_cast<int>(series.rows());
  const int J = static_cast<int>(series.cols());
  const int npre = static_cast<int>(std::llround(0.5 * T / dt_eff));
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(rows, npre + J);
  for (int j = 0; j < J; ++j) {
    const double t = j * dt_eff;
    W.col(npre + j) = smooth_window((2.0 * t - T) / T) * series.col(j);
  }
  const int ng = (rows - 1) / 2;
  return transform_core(W, -npre * dt_eff, dt_eff,
                        dispersion_offsets(ng, alpha), Window::smooth);
}

struct TauLevel {
  int M = 1;
  double T = 1.0;
  int stride = 1;
  int n_steps = 0;  // last recorded step index (inclusive)
  int expected = 0;
  std::vector<Eigen::MatrixXcd> snaps;  // one K x (2N+1) block per record
};

constexpr int kMaxTimeSamples = 512;

std::vector<TauLevel> plan_levels(const ModelParams& params,
                                  const TauConfig& tc, double dt) {
  const double kappa =
      4.0 * params.alpha / (2.0 * params.alpha - 1.0) + tc.eps_dyadic;
  std::vector<TauLevel> levels;
  for (int M = 1; M <= tc.m_cap; M *= 2) {
    TauLevel lv;
    lv.M = M;
    lv.T = std::pow(static_cast<double>(M), -kappa);
    const int n_win = static_cast<int>(std::floor(1.5 * lv.T / dt + 1e-9));
    lv.stride = std::max(1, (n_win + kMaxTimeSamples) / kMaxTimeSamples);
    lv.n_steps = (n_win / lv.stride) * lv.stride;
    lv.expected = lv.n_steps / lv.stride + 1;
    if (lv.expected < 2)
      throw config_error(
          "stopping_time_tau: dt too coarse for the shortest dyadic window");
    levels.push_back(lv);
  }
  return levels;
}

std::vector<TauOutcome> scan_rows(const Eigen::MatrixXcd& U0,
                                  const ModelParams& params,
                                  const GridSpec& grid, const TauConfig& tc,
                                  const IntegratorConfig& int_cfg);

// Evaluate one sample's levels from the recorded snapshots.
TauOutcome judge_sample(int row, const std::vector<TauLevel>& levels,
                        const ModelParams& params, const TauConfig& tc,
                        double dt, double t_fail, bool integrator_failed) {
  const double b = 1.0 - 1.0 / tc.q + tc.b_slack;
  for (const TauLevel& lv : levels) {
    if (static_cast<int>(lv.snaps.size()) < lv.expected) {
      // window never completed: the shortest one failing is a hard error
      if (lv.M == levels.back().M && integrator_failed &&
          levels.back().snaps.size() < static_cast<size_t>(lv.expected))
        throw integration_error(
            "stopping_time_tau: blow-up inside the shortest dyadic window",
            t_fail);
      continue;  // level failed (solution left the resolved range)
    }
    const int nm = static_cast<int>(lv.snaps.front().cols());
    Eigen::MatrixXcd series(nm, lv.expected);
    for (int j = 0; j < lv.expected; ++j)
      series.col(j) = lv.snaps[j].row(row).transpose();
    const SpaceTimeCoefficients c =
        local_transform(series, lv.stride * dt, lv.T, params.alpha);
    const double n0 = xsb_norm(c, 0.0, b, 2.0, tc.q, params.alpha);
    const double ns = xsb_norm(c, params.s, b, 2.0, tc.q, params.alpha);
    if (n0 <= tc.c0 * lv.M &&
        ns <= tc.c1 * std::pow(static_cast<double>(lv.M), params.gamma))
      return {lv.T, lv.M, true};
  }
  return {levels.back().T, 0, false};
}

std::vector<TauOutcome> scan_rows(const Eigen::MatrixXcd& U0,
                                  const ModelParams& params,
                                  const GridSpec& grid, const TauConfig& tc,
                                  const IntegratorConfig& int_cfg) {
  const int64_t K = U0.rows();
  std::vector<TauLevel> levels = plan_levels(params, tc, int_cfg.dt);

  std::vector<int> record;
  for (const TauLevel& lv : levels)
    for (int j = 0; j <= lv.n_steps; j += lv.stride) record.push_back(j);
  std::sort(record.begin(), record.end());
  record.erase(std::unique(record.begin(), record.end()), record.end());

  const double t_run = levels.front().n_steps * int_cfg.dt;
  Eigen::MatrixXcd V;
  bool failed = false;
  double t_fail = 0.0;
  try {
    remainder_flow_batch(
        U0, V, t_run, params, grid, int_cfg, record,
        [&](int step, double, const Eigen::MatrixXcd& states) {
          for (TauLevel& lv : levels)
            if (step <= lv.n_steps && step % lv.stride == 0)
              lv.snaps.push_back(states);
        });
  } catch (const integration_error& e) {
    if (K > 1) {
      // isolate the pathological rows: rescan one by one
      std::vector<TauOutcome> out;
      out.reserve(K);
      for (int64_t k = 0; k < K; ++k)
        for (const TauOutcome& o :
             scan_rows(U0.row(k), params, grid, tc, int_cfg))
          out.push_back(o);
      return out;
    }
    failed = true;
    t_fail = e.t_fail;
  }

  std::vector<TauOutcome> out;
  out.reserve(K);
  for (int64_t k = 0; k < K; ++k)
    out.push_back(judge_sample(static_cast<int>(k), levels, params, tc,
                               int_cfg.dt, t_fail, failed));
  return out;
}

}  // namespace

double smooth_window(double x) {
  const double a = std::abs(x);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double up = bump(2.0 - a);
  return up / (up + bump(a - 1.0));
}

SpaceTimeCoefficients space_time_transform(const Trajectory& traj,
                                           Window window,
                                           const GridSpec& grid) {
  (void)grid;
  const double dt = uniform_dt(traj.times);
  const int ng = traj.states.front().n_grid;
  Eigen::MatrixXcd W = windowed_samples(traj, window);

  // absolute frequencies: the grid must reach every represented dispersion
  double need = 0.0;
  for (int n = -ng; n <= ng; ++n) {
    bool live = false;
    for (const FourierField& st : traj.states)
      if (st(n) != cd(0.0, 0.0)) {
        live = true;
        break;
      }
    if (live) need = std::max(need, abs_pow_2alpha(n, traj.params.alpha));
  }
  if (std::numbers::pi / dt < need)
    throw config_error(
        "space_time_transform: time step too coarse for the dispersion "
        "range (Nyquist < max |n|^{2 alpha})");

  return transform_core(W, traj.times.front(), dt,
                        Eigen::VectorXd::Zero(2 * ng + 1), window);
}

SpaceTimeCoefficients space_time_transform_demodulated(const Trajectory& traj,
                                                       Window window,
                                                       const GridSpec& grid) {
  (void)grid;
  const double dt = uniform_dt(traj.times);
  const int ng = traj.states.front().n_grid;
  return transform_core(windowed_samples(traj, window), traj.times.front(), dt,
                        dispersion_offsets(ng, traj.params.alpha), window);
}

double xsb_norm(const SpaceTimeCoefficients& c, double s, double b, double p,
                double q, double alpha) {
  const int rows = static_cast<int>(c.coeffs.rows());
  const int cols = static_cast<int>(c.coeffs.cols());
  const bool qinf = std::isinf(q);
  const bool pinf = std::isinf(p);
  double outer = 0.0;
  for (int r = 0; r < rows; ++r) {
    const int n = r - c.n_grid;
    const double disp = abs_pow_2alpha(n, alpha);
    double inner = 0.0;
    for (int k = 0; k < cols; ++k) {
      const double lam = c.tau0(r) + c.tau_value(k) - disp;
      const double w =
          std::pow(1.0 + lam * lam, 0.5 * b) * std::abs(c.coeffs(r, k));
      if (qinf)
        inner = std::max(inner, w);
      else
        inner += std::pow(w, q);
    }
    if (!qinf) inner = std::pow(inner, 1.0 / q) * std::pow(c.dtau, 1.0 / q);
    const double term = jb_pow2s(n, 0.5 * s) * inner;
    if (pinf)
      outer = std::max(outer, term);
    else
      outer += std::pow(term, p);
  }
  return pinf ? outer : std::pow(outer, 1.0 / p);
}

double localized_xsb_norm(const Trajectory& traj, double T, double s, double b,
                          double q, double alpha, const GridSpec& grid) {
  (void)grid;
  if (T <= 0.0) throw config_error("localized_xsb_norm: T must be positive");
  const double dt = uniform_dt(traj.times);
  if (std::abs(traj.times.front()) > 1e-12)
    throw config_error("localized_xsb_norm: trajectory must start at t = 0");

  int count = 0;
  while (count < static_cast<int>(traj.times.size()) &&
         traj.times[count] <= 1.5 * T + 1e-12)
    ++count;
  if (count < 2)
    throw config_error("localized_xsb_norm: window too short for the grid");
  const int stride = std::max(1, (count + kMaxTimeSamples - 1) / kMaxTimeSamples);
  const int J = (count - 1) / stride + 1;

  const int ng = traj.states.front().n_grid;
  Eigen::MatrixXcd series(2 * ng + 1, J);
  for (int j = 0; j < J; ++j) series.col(j) = traj.states[j * stride].c;

  return xsb_norm(local_transform(series, stride * dt, T, alpha), s, b, 2.0,
                  q, alpha);
}

void TauConfig::validate(const ModelParams& params) const {
  if (!(q >= 2.0))
    throw config_error("TauConfig: q must be >= 2");
  if (!(q < 4.0 * params.alpha / (3.0 - 2.0 * params.s)))
    throw config_error("TauConfig: q must satisfy q < 4 alpha / (3 - 2 s)");
  if (!(eps_dyadic > 0.0) || !(b_slack > 0.0))
    throw config_error("TauConfig: slacks must be positive");
  if (!(c0 > 0.0) || !(c1 > 0.0))
    throw config_error("TauConfig: threshold constants must be positive");
  if (m_cap < 1 || (m_cap & (m_cap - 1)) != 0)
    throw config_error("TauConfig: m_cap must be a power of two");
}

std::vector<TauOutcome> stopping_time_tau_batch(const Eigen::MatrixXcd& U0,
                                                const ModelParams& params,
                                                const GridSpec& grid,
                                                const TauConfig& tau_cfg,
                                                const IntegratorConfig& int_cfg) {
  params.validate();
  grid.validate();
  int_cfg.validate();
  tau_cfg.validate(params);
  if (U0.cols() != 2 * grid.n_trunc + 1)
    throw config_error("stopping_time_tau_batch: row width must be 2N+1");
  if (U0.rows() == 0) return {};
  return scan_rows(U0, params, grid, tau_cfg, int_cfg);
}

TauOutcome tau_outcome(const FourierField& u0, const ModelParams& params,
                       const GridSpec& grid, const TauConfig& tau_cfg,
                       const IntegratorConfig& int_cfg) {
  const int N = grid.n_trunc;
  Eigen::MatrixXcd U0(1, 2 * N + 1);
  for (int n = -N; n <= N; ++n) U0(0, n + N) = u0(n);
  return stopping_time_tau_batch(U0, params, grid, tau_cfg, int_cfg).front();
}

double stopping_time_tau(const FourierField& u0, const ModelParams& params,
                         const GridSpec& grid, const TauConfig& tau_cfg,
                         const IntegratorConfig& int_cfg) {
  return tau_outcome(u0, params, grid, tau_cfg, int_cfg).tau;
}

}  // namespace fnls
