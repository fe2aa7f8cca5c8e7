#pragma once

#include "fnlslab/field.hpp"

#include <functional>
#include <vector>

namespace fnls {

enum class Method { ifrk4 };

struct IntegratorConfig {
  double dt = 1e-3;
  Method method = Method::ifrk4;
  int record_every = 1;
  void validate() const;
};

// Sampled solution path. times are strictly increasing (a backward run is
// stored reversed, so states[i] is always the state at model time times[i]).
struct Trajectory {
  std::vector<double> times;
  std::vector<FourierField> states;
  ModelParams params;
  GridSpec grid;

  // state at the largest |time|, i.e. at the t passed to flow()
  const FourierField& at_end_time(double t) const;
};

// S(t): c_n -> e^{i t |n|^{2 alpha}} c_n.
FourierField linear_propagate(const FourierField& f, double t, double alpha);

FourierField conj_field(const FourierField& f);

// Truncated renormalized flow: d/dt u = i A u + i sign (F(P_N u) - 2 M P_N u)
// projected to |n| <= N; modes above N ride the linear propagator exactly.
// t may be negative (steps run with negative dt). Records every
// cfg.record_every steps plus the final state.
Trajectory flow(const FourierField& u0, double t, const ModelParams& params,
                const GridSpec& grid, const IntegratorConfig& cfg);

// Endpoint-only convenience: the state at time t.
FourierField flow_to(const FourierField& u0, double t,
                     const ModelParams& params, const GridSpec& grid,
                     const IntegratorConfig& cfg);

// Same integrator with the plain projected cubic (no mass counterterm);
// the input side of the gauge correspondence.
Trajectory flow_unrenormalized(const FourierField& u0, double t,
                               const ModelParams& params, const GridSpec& grid,
                               const IntegratorConfig& cfg);

// Remainder v of the splitting u(t) = S(t)(u0 + v0) + v(t): v(0) = 0 and
//   d/dt v = i A v + i sign (F(w) - 2 M(w) w),  w = P_N(z(t) + v),
// with the forcing z(t) = S(t)(u0 + v0) evaluated in closed form at every
// Runge-Kutta substage time. v stays supported in |n| <= N.
Trajectory remainder_flow(const FourierField& u0, const FourierField& v0,
                          double t, const ModelParams& params,
                          const GridSpec& grid, const IntegratorConfig& cfg);

// Multiply each state by e^{-2 i sign t M(P_N u(t))}. The constant -2 is
// forced by the one-mode reduction: under the plain cubic a single mode
// rotates by +sign|c|^2 t on top of the dispersion, under the renormalized
// equation by -sign|c|^2 t, so the connecting phase must supply
// -2 sign M t. Input must solve the plain-cubic equation; output solves the
// renormalized one.
Trajectory gauge_transform(const Trajectory& traj);

// Closed-form first Picard cubic: for |n4| <= N
//   X3(t)(n4) = sum_{n1-n2+n3=n4, n2 not in {n1,n3}, |ni|<=N}
//       u0(n1) conj(u0(n2)) u0(n3) * (e^{it Phi}-1)/(i Phi) * e^{it|n4|^{2a}}
// with the divided difference evaluated as t e^{i t Phi/2} sinc(t Phi/2).
FourierField x3_exact(const FourierField& u0, double t,
                      const ModelParams& params, const GridSpec& grid);

// Simpson quadrature of the Duhamel integral int_0^t S(t-t') N(S(t')u0) dt'
// (independent oracle for x3_exact). n_sub must be even.
FourierField duhamel_x3_quadrature(const FourierField& u0, double t,
                                   const ModelParams& params,
                                   const GridSpec& grid, int n_sub);

// ---- batched flows (Monte-Carlo engine) ----
// K states advance together: row k of U is one state, column j the mode
// n = j - N. Every operation is elementwise across rows, so each sample's
// path is bit-identical no matter how samples are grouped into blocks.
// sink fires for each step index listed in record_steps (0 = initial data,
// sorted ascending); U holds the final state on return.
using BatchSink = std::function<void(int step, double time,
                                     const Eigen::MatrixXcd& states)>;

void flow_batch(Eigen::MatrixXcd& U, double t, const ModelParams& params,
                const GridSpec& grid, const IntegratorConfig& cfg,
                const std::vector<int>& record_steps, const BatchSink& sink);

// Batched remainder flow from v(0) = 0; W0 rows hold u0 + v0. The sink sees
// the v states. V is resized to W0's shape and holds v(t) on return.
void remainder_flow_batch(const Eigen::MatrixXcd& W0, Eigen::MatrixXcd& V,
                          double t, const ModelParams& params,
                          const GridSpec& grid, const IntegratorConfig& cfg,
                          const std::vector<int>& record_steps,
                          const BatchSink& sink);

}  // namespace fnls
