#include "fnlslab/dynamics.hpp"

#include "fnlslab/phase.hpp"
#include "fnlslab/trilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fnls {
namespace {

Eigen::VectorXd dispersion_symbol(int N, double alpha) {
  Eigen::VectorXd sym(2 * N + 1);
  for (int n = -N; n <= N; ++n) sym(n + N) = abs_pow_2alpha(n, alpha);
  return sym;
}

Eigen::VectorXcd phase_factor(const Eigen::VectorXd& sym, double t) {
  Eigen::VectorXcd e(sym.size());
  for (Eigen::Index i = 0; i < sym.size(); ++i)
    e(i) = std::polar(1.0, t * sym(i));
  return e;
}

// How t splits into steps: n_full steps of signed size h, then one partial
// step h_last when dt does not divide |t| (within a relative fuzz).
struct StepPlan {
  int n_full = 0;
  double h = 0.0;
  double h_last = 0.0;  // 0 means no partial step
  int total() const { return n_full + (h_last != 0.0 ? 1 : 0); }
};

StepPlan plan_steps(double t, double dt) {
  StepPlan p;
  const double at = std::abs(t);
  if (at == 0.0) return p;
  const double sgn = t > 0 ? 1.0 : -1.0;
  p.h = sgn * dt;
  double n = std::floor(at / dt + 1e-9);
  p.n_full = static_cast<int>(n);
  const double rem = at - n * dt;
  if (rem > 1e-9 * dt) p.h_last = sgn * rem;
  return p;
}

using Gfun = std::function<FourierField(double, const FourierField&)>;

// One integrating-factor RK4 step in solution space. E1 = e^{i(h/2)|n|^{2a}},
// E2 = E1^2; equivalent to classical RK4 applied to w(t) = S(-t)u(t).
void ifrk4_step(FourierField& u, double t, double h,
                const Eigen::VectorXcd& E1, const Eigen::VectorXcd& E2,
                const Gfun& g) {
  const FourierField k1 = g(t, u);
  FourierField a(u.n_grid);
  a.c = E1.cwiseProduct(u.c + (0.5 * h) * k1.c);
  const FourierField k2 = g(t + 0.5 * h, a);
  a.c = E1.cwiseProduct(u.c) + (0.5 * h) * k2.c;
  const FourierField k3 = g(t + 0.5 * h, a);
  a.c = E2.cwiseProduct(u.c) + h * E1.cwiseProduct(k3.c);
  const FourierField k4 = g(t + h, a);
  u.c = E2.cwiseProduct(u.c) +
        (h / 6.0) * (E2.cwiseProduct(k1.c) +
                     2.0 * E1.cwiseProduct(k2.c + k3.c) + k4.c);
}

// Shared driver: integrates the low block |n| <= N with the given
// nonlinearity, rides any |n| > N tail on the exact propagator, records
// every record_every steps plus endpoints, reverses for backward runs.
Trajectory run_flow(const FourierField& u0, double t,
                    const ModelParams& params, const GridSpec& grid,
                    const IntegratorConfig& cfg, const Gfun& g,
                    bool states_are_low_only) {
  params.validate();
  grid.validate();
  cfg.validate();
  const int N = grid.n_trunc;

  FourierField low(N);
  for (int n = -N; n <= N; ++n) low.at(n) = u0(n);
  const int n_out = states_are_low_only ? N : std::max(u0.n_grid, N);

  Trajectory traj;
  traj.params = params;
  traj.grid = grid;

  auto record = [&](double time, const FourierField& lowstate) {
    FourierField st(n_out);
    for (int n = -N; n <= N; ++n) st.at(n) = lowstate(n);
    for (int n = -n_out; n <= n_out; ++n)
      if (std::abs(n) > N)
        st.at(n) = std::polar(1.0, time * abs_pow_2alpha(n, params.alpha)) *
                   u0(n);
    traj.times.push_back(time);
    traj.states.push_back(std::move(st));
  };

  record(0.0, low);
  const StepPlan plan = plan_steps(t, cfg.dt);
  if (plan.total() > 0) {
    const Eigen::VectorXd sym = dispersion_symbol(N, params.alpha);
    Eigen::VectorXcd E1 = phase_factor(sym, 0.5 * plan.h);
    Eigen::VectorXcd E2 = E1.cwiseProduct(E1);
    for (int k = 0; k < plan.total(); ++k) {
      double h = plan.h;
      if (k == plan.n_full) {  // partial closer
        h = plan.h_last;
        E1 = phase_factor(sym, 0.5 * h);
        E2 = E1.cwiseProduct(E1);
      }
      const double t_k = plan.h * k;  // k never exceeds n_full
      ifrk4_step(low, t_k, h, E1, E2, g);
      if (!low.all_finite())
        throw integration_error("state became non-finite", t_k + h);
      const bool last = (k + 1 == plan.total());
      if (last)
        record(t, low);  // pin the endpoint to the requested time
      else if ((k + 1) % cfg.record_every == 0)
        record((k + 1) * plan.h, low);
    }
  }
  if (t < 0) {
    std::reverse(traj.times.begin(), traj.times.end());
    std::reverse(traj.states.begin(), traj.states.end());
  }
  return traj;
}

cd isign_of(const ModelParams& params) {
  return cd(0.0, params.sign > 0 ? 1.0 : -1.0);
}

Gfun renorm_g(const ModelParams& params, const GridSpec& grid) {
  const cd is = isign_of(params);
  return [is, grid](double, const FourierField& u) {
    FourierField nl = renormalized_cubic(u, grid);
    nl.c *= is;
    return nl;
  };
}

Gfun plain_cubic_g(const ModelParams& params, const GridSpec& grid) {
  const cd is = isign_of(params);
  return [is, grid](double, const FourierField& u) {
    const FourierField f = full_cubic(u, u, u, grid);
    FourierField nl(grid.n_trunc);
    for (int n = -grid.n_trunc; n <= grid.n_trunc; ++n) nl.at(n) = is * f(n);
    return nl;
  };
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw config_error("dt must be positive");
  if (record_every < 1) throw config_error("record_every must be >= 1");
}

const FourierField& Trajectory::at_end_time(double t) const {
  if (times.empty()) throw config_error("empty trajectory");
  return std::abs(times.front() - t) <= std::abs(times.back() - t)
             ? states.front()
             : states.back();
}

FourierField linear_propagate(const FourierField& f, double t, double alpha) {
  FourierField out(f.n_grid);
  for (int n = -f.n_grid; n <= f.n_grid; ++n)
    out.at(n) = std::polar(1.0, t * abs_pow_2alpha(n, alpha)) * f(n);
  return out;
}

FourierField conj_field(const FourierField& f) {
  FourierField out(f.n_grid);
  out.c = f.c.conjugate();
  return out;
}

Trajectory flow(const FourierField& u0, double t, const ModelParams& params,
                const GridSpec& grid, const IntegratorConfig& cfg) {
  return run_flow(u0, t, params, grid, cfg, renorm_g(params, grid), false);
}

FourierField flow_to(const FourierField& u0, double t,
                     const ModelParams& params, const GridSpec& grid,
                     const IntegratorConfig& cfg) {
  IntegratorConfig sparse = cfg;
  sparse.record_every = std::numeric_limits<int>::max();
  return flow(u0, t, params, grid, sparse).at_end_time(t);
}

Trajectory flow_unrenormalized(const FourierField& u0, double t,
                               const ModelParams& params, const GridSpec& grid,
                               const IntegratorConfig& cfg) {
  return run_flow(u0, t, params, grid, cfg, plain_cubic_g(params, grid),
                  false);
}

Trajectory remainder_flow(const FourierField& u0, const FourierField& v0,
                          double t, const ModelParams& params,
                          const GridSpec& grid, const IntegratorConfig& cfg) {
  const int N = grid.n_trunc;
  FourierField zlow(N);
  for (int n = -N; n <= N; ++n) zlow.at(n) = u0(n) + v0(n);
  const Eigen::VectorXd sym = dispersion_symbol(N, params.alpha);
  const cd is = isign_of(params);
  Gfun g = [is, zlow, sym, grid](double time, const FourierField& v) {
    FourierField w(grid.n_trunc);
    w.c = phase_factor(sym, time).cwiseProduct(zlow.c) + v.c;
    FourierField nl = renormalized_cubic(w, grid);
    nl.c *= is;
    return nl;
  };
  FourierField zero(N);
  return run_flow(zero, t, params, grid, cfg, g, true);
}

Trajectory gauge_transform(const Trajectory& traj) {
  Trajectory out;
  out.params = traj.params;
  out.grid = traj.grid;
  out.times = traj.times;
  out.states.reserve(traj.states.size());
  const int N = traj.grid.n_trunc;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    const FourierField& u = traj.states[i];
    double m = 0.0;
    for (int n = -N; n <= N; ++n) m += std::norm(u(n));
    const cd phase =
        std::polar(1.0, -2.0 * traj.params.sign * traj.times[i] * m);
    FourierField st(u.n_grid);
    st.c = phase * u.c;
    out.states.push_back(std::move(st));
  }
  return out;
}

FourierField x3_exact(const FourierField& u0, double t,
                      const ModelParams& params, const GridSpec& grid) {
  const int N = grid.n_trunc;
  const double a = params.alpha;
  FourierField out(N);
  for (int n1 = -N; n1 <= N; ++n1) {
    const cd c1 = u0(n1);
    if (c1 == cd(0, 0)) continue;
    for (int n2 = -N; n2 <= N; ++n2) {
      if (n2 == n1) continue;
      const cd c12 = c1 * std::conj(u0(n2));
      if (c12 == cd(0, 0)) continue;
      for (int n3 = -N; n3 <= N; ++n3) {
        if (n2 == n3) continue;
        const int n4 = n1 - n2 + n3;
        if (std::abs(n4) > N) continue;
        const cd c = c12 * u0(n3);
        if (c == cd(0, 0)) continue;
        // (e^{it Phi} - 1)/(i Phi) = t e^{i th/2} sin(th/2)/(th/2), th = t Phi
        const double phi = phase_function(a, n1, n2, n3, n4);
        const double x = 0.5 * t * phi;
        const double sinc =
            std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        out.at(n4) += c * (t * sinc) * std::polar(1.0, x) *
                      std::polar(1.0, t * abs_pow_2alpha(n4, a));
      }
    }
  }
  return out;
}

FourierField duhamel_x3_quadrature(const FourierField& u0, double t,
                                   const ModelParams& params,
                                   const GridSpec& grid, int n_sub) {
  if (n_sub < 2 || n_sub % 2 != 0)
    throw config_error("duhamel quadrature needs an even subdivision count");
  const int N = grid.n_trunc;
  const double h = t / n_sub;
  FourierField acc(N);
  for (int j = 0; j <= n_sub; ++j) {
    const double tp = j * h;
    const double w = (j == 0 || j == n_sub) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    const FourierField ut = linear_propagate(u0, tp, params.alpha);
    // direct lattice sum: an oracle sharing no code with the fast engine,
    // and exactly zero term-by-term on single-mode data
    const FourierField nl = nonres_trilinear_direct(ut, ut, ut, grid);
    FourierField term(N);
    for (int n = -N; n <= N; ++n) term.at(n) = nl(n);
    const FourierField prop = linear_propagate(term, t - tp, params.alpha);
    acc.c += (w * h / 3.0) * prop.c;
  }
  return acc;
}

// ---- batched engine ----

namespace {

// i sign (F(W) - 2 M(W) W) for every row of W at once. C1 is the
// autocorrelation C1(m) = sum_{n1-n2=m} W(n1) conj(W(n2)) per row, built for
// m >= 0 and mirrored through C1(-m) = conj(C1(m)).
void batch_nonlinearity(const Eigen::MatrixXcd& W, int N, cd is,
                        Eigen::MatrixXcd& C1, Eigen::VectorXcd& acc,
                        Eigen::MatrixXcd& out) {
  const Eigen::Index K = W.rows();
  C1.resize(K, 4 * N + 1);
  out.resize(K, 2 * N + 1);
  for (int m = 0; m <= 2 * N; ++m) {
    acc.setZero(K);
    for (int n2 = -N; n2 <= N - m; ++n2)
      acc += W.col(n2 + m + N).cwiseProduct(W.col(n2 + N).conjugate());
    C1.col(m + 2 * N) = acc;
  }
  for (int m = 1; m <= 2 * N; ++m)
    C1.col(-m + 2 * N) = C1.col(m + 2 * N).conjugate();

  for (int n4 = -N; n4 <= N; ++n4) {
    acc.setZero(K);
    for (int n3 = -N; n3 <= N; ++n3)
      acc += C1.col(n4 - n3 + 2 * N).cwiseProduct(W.col(n3 + N));
    out.col(n4 + N) = acc;
  }
  const Eigen::VectorXcd mass2 = 2.0 * W.rowwise().squaredNorm().cast<cd>();
  out -= mass2.asDiagonal() * W;
  out *= is;
}

// g(t, V) for both batched flows; Z0 empty means the plain autonomous flow,
// otherwise V is a remainder riding the forcing Z(t) = Z0 * e^{it sym}.
struct BatchG {
  const Eigen::MatrixXcd* Z0 = nullptr;
  const Eigen::VectorXd* sym = nullptr;
  int N;
  cd is;
  Eigen::MatrixXcd C1, W, out;
  Eigen::VectorXcd acc;

  void eval(double t, const Eigen::MatrixXcd& V, Eigen::MatrixXcd& G) {
    if (Z0) {
      W = V;
      for (int j = 0; j < 2 * N + 1; ++j)
        W.col(j) += std::polar(1.0, t * (*sym)(j)) * Z0->col(j);
      batch_nonlinearity(W, N, is, C1, acc, out);
    } else {
      batch_nonlinearity(V, N, is, C1, acc, out);
    }
    G = out;
  }
};

void run_flow_batch(Eigen::MatrixXcd& U, double t, const ModelParams& params,
                    const GridSpec& grid, const IntegratorConfig& cfg,
                    const std::vector<int>& record_steps, const BatchSink& sink,
                    BatchG& g) {
  params.validate();
  grid.validate();
  cfg.validate();
  const int N = grid.n_trunc;
  if (U.cols() != 2 * N + 1)
    throw config_error("batch state must have 2N+1 columns");
  const Eigen::Index K = U.rows();

  auto rec = record_steps.begin();
  auto maybe_record = [&](int step, double time) {
    while (rec != record_steps.end() && *rec < step) ++rec;
    if (rec != record_steps.end() && *rec == step) {
      sink(step, time, U);
      ++rec;
    }
  };
  maybe_record(0, 0.0);

  const StepPlan plan = plan_steps(t, cfg.dt);
  if (plan.total() == 0) return;
  const Eigen::VectorXd sym = dispersion_symbol(N, params.alpha);
  Eigen::VectorXcd E1 = phase_factor(sym, 0.5 * plan.h);
  Eigen::VectorXcd E2 = E1.cwiseProduct(E1);

  Eigen::MatrixXcd K1(K, 2 * N + 1), K2(K, 2 * N + 1), K3(K, 2 * N + 1),
      K4(K, 2 * N + 1), A(K, 2 * N + 1);
  for (int k = 0; k < plan.total(); ++k) {
    double h = plan.h;
    if (k == plan.n_full) {
      h = plan.h_last;
      E1 = phase_factor(sym, 0.5 * h);
      E2 = E1.cwiseProduct(E1);
    }
    const double t_k = plan.h * k;  // k never exceeds n_full
    g.eval(t_k, U, K1);
    A = (U + (0.5 * h) * K1) * E1.asDiagonal();
    g.eval(t_k + 0.5 * h, A, K2);
    A = U * E1.asDiagonal() + (0.5 * h) * K2;
    g.eval(t_k + 0.5 * h, A, K3);
    A = U * E2.asDiagonal() + h * (K3 * E1.asDiagonal());
    g.eval(t_k + h, A, K4);
    U = U * E2.asDiagonal() +
        (h / 6.0) * (K1 * E2.asDiagonal() + 2.0 * (K2 + K3) * E1.asDiagonal() +
                     K4);
    if (!U.allFinite())
      throw integration_error("batch state became non-finite", t_k + h);
    maybe_record(k + 1, k + 1 == plan.total() ? t : (k + 1) * plan.h);
  }
}

}  // namespace

void flow_batch(Eigen::MatrixXcd& U, double t, const ModelParams& params,
                const GridSpec& grid, const IntegratorConfig& cfg,
                const std::vector<int>& record_steps, const BatchSink& sink) {
  BatchG g;
  g.N = grid.n_trunc;
  g.is = isign_of(params);
  run_flow_batch(U, t, params, grid, cfg, record_steps, sink, g);
}

void remainder_flow_batch(const Eigen::MatrixXcd& W0, Eigen::MatrixXcd& V,
                          double t, const ModelParams& params,
                          const GridSpec& grid, const IntegratorConfig& cfg,
                          const std::vector<int>& record_steps,
                          const BatchSink& sink) {
  const Eigen::VectorXd sym =
      dispersion_symbol(grid.n_trunc, params.alpha);
  BatchG g;
  g.Z0 = &W0;
  g.sym = &sym;
  g.N = grid.n_trunc;
  g.is = isign_of(params);
  V = Eigen::MatrixXcd::Zero(W0.rows(), W0.cols());
  run_flow_batch(V, t, params, grid, cfg, record_steps, sink, g);
}

}  // namespace fnls
