#include "fnlslab/density.hpp"

#include "fnlslab/phase.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fnls {
namespace {

// corr(f,g)(m) = sum_k f(k+m) conj(g(k)), m in [-2N, 2N]
Eigen::VectorXcd correlation(const FourierField& f, const FourierField& g,
                             int N) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(4 * N + 1);
  for (int m = -2 * N; m <= 2 * N; ++m) {
    cd acc(0, 0);
    const int lo = std::max(-N, -N - m), hi = std::min(N, N - m);
    for (int k = lo; k <= hi; ++k) acc += f(k + m) * std::conj(g(k));
    c(m + 2 * N) = acc;
  }
  return c;
}

FourierField filtered(const FourierField& u, int N, double s) {
  FourierField f(N);
  for (int n = -N; n <= N; ++n) f.at(n) = jb_pow2s(n, s) * u(n);
  return f;
}

int common_trunc(const FourierField& u1, const FourierField& u2,
                 const FourierField& u3, const FourierField& u4) {
  return std::max({u1.n_grid, u2.n_grid, u3.n_grid, u4.n_grid});
}

// Simpson weights on a uniform grid of `m` intervals; odd m closes with the
// 3/8 rule on the last three intervals.
double simpson_uniform(const std::vector<double>& v, double h) {
  const size_t m = v.size() - 1;
  if (m == 0) return 0.0;
  if (m == 1) return 0.5 * h * (v[0] + v[1]);  // no better option
  double acc = 0.0;
  size_t even_part = (m % 2 == 0) ? m : m - 3;
  for (size_t k = 0; k + 2 <= even_part; k += 2)
    acc += h / 3.0 * (v[k] + 4.0 * v[k + 1] + v[k + 2]);
  if (m % 2 != 0) {
    const size_t j = m - 3;
    acc += 3.0 * h / 8.0 * (v[j] + 3.0 * v[j + 1] + 3.0 * v[j + 2] + v[j + 3]);
  }
  return acc;
}

}  // namespace

cd q_functional_complex(const FourierField& u1, const FourierField& u2,
                        const FourierField& u3, const FourierField& u4,
                        double s) {
  const int N = common_trunc(u1, u2, u3, u4);
  const FourierField f1 = filtered(u1, N, s), f2 = filtered(u2, N, s),
                     f3 = filtered(u3, N, s), f4 = filtered(u4, N, s);
  const Eigen::VectorXcd c12 = correlation(u1, u2, N);
  const Eigen::VectorXcd cf12 = correlation(f1, u2, N);
  const Eigen::VectorXcd c1f2 = correlation(u1, f2, N);
  const Eigen::VectorXcd c43 = correlation(u4, u3, N);
  const Eigen::VectorXcd c4f3 = correlation(u4, f3, N);
  const Eigen::VectorXcd cf43 = correlation(f4, u3, N);
  // sum over the shift m of the four Psi_s pieces
  cd T(0, 0);
  for (int j = 0; j < 4 * N + 1; ++j)
    T += (cf12(j) - c1f2(j)) * std::conj(c43(j)) +
         c12(j) * std::conj(c4f3(j) - cf43(j));
  return -0.25 * cd(0, 1) * T;
}

double q_functional(const FourierField& u1, const FourierField& u2,
                    const FourierField& u3, const FourierField& u4, double s) {
  return q_functional_complex(u1, u2, u3, u4, s).real();
}

double q_functional(const FourierField& u, double s) {
  return q_functional_complex(u, u, u, u, s).real();
}

double q_functional_direct(const FourierField& u1, const FourierField& u2,
                           const FourierField& u3, const FourierField& u4,
                           double s) {
  const int N = common_trunc(u1, u2, u3, u4);
  cd T(0, 0);
  for (int n1 = -N; n1 <= N; ++n1)
    for (int n2 = -N; n2 <= N; ++n2) {
      if (n2 == n1) continue;  // n1 = n2 excluded
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n4 = n1 - n2 + n3;
        if (std::abs(n4) > N || n4 == n1) continue;  // n1 = n4 excluded
        const double psi = psi_symbol(s, n1, n2, n3, n4);
        T += psi * u1(n1) * std::conj(u2(n2)) * u3(n3) * std::conj(u4(n4));
      }
    }
  return (-0.25 * cd(0, 1) * T).real();
}

double q_integral(const FourierField& u0, double t, const ModelParams& params,
                  const GridSpec& grid, const IntegratorConfig& cfg) {
  if (t == 0.0) return 0.0;
  IntegratorConfig dense = cfg;
  dense.record_every = 1;
  // states of Phi_{-t'}(u0) for t' in [0, t]: run the flow to -t
  const Trajectory traj = flow(u0, -t, params, grid, dense);
  const size_t M = traj.states.size();
  std::vector<double> qv(M);
  for (size_t i = 0; i < M; ++i) {
    const FourierField low = project(traj.states[i], grid.n_trunc);
    qv[i] = q_functional(low, params.s);
  }
  // reorder so the node list runs t' = 0 .. t (trajectory times are -t')
  std::vector<double> v(M);
  std::vector<double> tp(M);
  for (size_t i = 0; i < M; ++i) {
    const size_t j = (t > 0) ? (M - 1 - i) : i;
    v[i] = qv[j];
    tp[i] = -traj.times[j];
  }
  // uniform h = signed step except a possible short final interval
  if (M < 2) return 0.0;
  const double h = tp[1] - tp[0];
  size_t uniform_end = M - 1;
  double tail = 0.0;
  const double h_last = tp[M - 1] - tp[M - 2];
  if (std::abs(h_last - h) > 1e-9 * std::abs(h)) {
    tail = 0.5 * h_last * (v[M - 2] + v[M - 1]);  // short closer: trapezoid
    --uniform_end;
  }
  std::vector<double> body(v.begin(), v.begin() + uniform_end + 1);
  return simpson_uniform(body, h) + tail;
}

double density_f(const FourierField& u0, double t, const ModelParams& params,
                 const GridSpec& grid, const IntegratorConfig& cfg) {
  const double q = q_integral(u0, t, params, grid, cfg);
  if (q > 700.0)
    throw integration_error("density exponent overflow: " + std::to_string(q),
                            t);
  return std::exp(q);
}

double log_density_closed_form(const FourierField& u0, double t,
                               const ModelParams& params, const GridSpec& grid,
                               const IntegratorConfig& cfg) {
  const FourierField back = flow_to(u0, -t, params, grid, cfg);
  const double h0 = hs_norm_sq(project(u0, grid.n_trunc), params.s);
  const double hb = hs_norm_sq(project(back, grid.n_trunc), params.s);
  return 0.5 * (h0 - hb);
}

double density_closed_form(const FourierField& u0, double t,
                           const ModelParams& params, const GridSpec& grid,
                           const IntegratorConfig& cfg) {
  const double q = log_density_closed_form(u0, t, params, grid, cfg);
  if (q > 700.0)
    throw integration_error("density exponent overflow: " + std::to_string(q),
                            t);
  return std::exp(q);
}

double log_transported_density(const FourierField& u0, double t,
                               const ModelParams& params, const GridSpec& grid,
                               const IntegratorConfig& cfg) {
  return 2.0 * log_density_closed_form(u0, t, params, grid, cfg);
}

double q_variance_partial_sum(double s, int N) {
  double acc = 0.0;
  for (int n1 = -N; n1 <= N; ++n1)
    for (int n2 = -N; n2 <= N; ++n2) {
      if (n2 == n1) continue;
      for (int n3 = -N; n3 <= N; ++n3) {
        const int n4 = n1 - n2 + n3;
        if (std::abs(n4) > N || n4 == n1) continue;
        const double psi = psi_symbol(s, n1, n2, n3, n4);
        acc += psi * psi /
               (jb_pow2s(n1, s) * jb_pow2s(n2, s) * jb_pow2s(n3, s) *
                jb_pow2s(n4, s));
      }
    }
  return acc;
}

DensityRecord density_record(int64_t sample_index, const FourierField& u0,
                             double t, const ModelParams& params,
                             const GridSpec& grid, const IntegratorConfig& cfg,
                             double weight) {
  DensityRecord r;
  r.sample_index = sample_index;
  r.t = t;
  r.q_integral = q_integral(u0, t, params, grid, cfg);
  r.f_t = std::exp(r.q_integral);
  r.f_t_closed = density_closed_form(u0, t, params, grid, cfg);
  r.weight = weight;
  return r;
}

}  // namespace fnls
