#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fnlslab/dynamics.hpp"
#include "fnlslab/phase.hpp"
#include "fnlslab/trilinear.hpp"

#include <cmath>
#include <random>

using namespace fnls;

namespace {

// decaying random data, |c_n| ~ amp / <n>^decay
FourierField decaying_field(int N, double amp, double decay, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FourierField f(N);
  for (int n = -N; n <= N; ++n)
    f.at(n) = amp / std::pow(1.0 + n * n, 0.5 * decay) * cd(g(rng), g(rng));
  return f;
}

double l2_dist(const FourierField& a, const FourierField& b) {
  double s = 0.0;
  const int m = std::max(a.n_grid, b.n_grid);
  for (int n = -m; n <= m; ++n) s += std::norm(a(n) - b(n));
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("linear propagator: identity, isometry, group law") {
  FourierField f = decaying_field(8, 1.0, 1.0, 1);
  FourierField g0 = linear_propagate(f, 0.0, 1.7);
  CHECK(l2_dist(f, g0) == 0.0);

  FourierField g1 = linear_propagate(f, 0.17, 1.7);
  for (int n = -8; n <= 8; ++n)
    CHECK(std::abs(std::abs(g1(n)) - std::abs(f(n))) < 1e-15);
  CHECK(hs_norm_sq(g1, 0.45) == doctest::Approx(hs_norm_sq(f, 0.45)));

  FourierField g2 = linear_propagate(linear_propagate(f, 0.1, 1.7), 0.07, 1.7);
  CHECK(l2_dist(g1, g2) < 1e-14);
}

TEST_CASE("zero data stays zero") {
  FourierField z(4);
  ModelParams p;
  GridSpec grid = GridSpec::for_trunc(4);
  IntegratorConfig cfg;
  Trajectory traj = flow(z, 0.2, p, grid, cfg);
  for (const auto& st : traj.states)
    for (int n = -4; n <= 4; ++n) CHECK(st(n) == cd(0, 0));
}

TEST_CASE("trajectory bookkeeping: recording, partial step, backward runs") {
  FourierField u0 = decaying_field(4, 0.3, 1.5, 2);
  ModelParams p;
  p.alpha = 1.2;
  GridSpec grid = GridSpec::for_trunc(4);
  IntegratorConfig cfg;
  cfg.dt = 1e-2;
  cfg.record_every = 3;

  Trajectory traj = flow(u0, 0.1234, p, grid, cfg);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == 0.1234);  // endpoint pinned despite partial step
  for (size_t i = 1; i < traj.times.size(); ++i)
    CHECK(traj.times[i] > traj.times[i - 1]);
  CHECK(traj.states.size() == traj.times.size());

  Trajectory back = flow(u0, -0.06, p, grid, cfg);
  CHECK(back.times.front() == -0.06);
  CHECK(back.times.back() == 0.0);
  CHECK(l2_dist(back.states.back(), u0) == 0.0);  // time 0 is the data
  CHECK(l2_dist(back.at_end_time(-0.06), back.states.front()) == 0.0);
}

TEST_CASE("mass is conserved to integrator accuracy") {
  // smooth low-mode data plus an untouched tail above the truncation
  FourierField u0(40);
  for (int n = -2; n <= 2; ++n) u0.at(n) = cd(0.35, 0.2 * n);
  u0.at(40) = cd(0.1, -0.05);
  ModelParams p;
  p.alpha = 1.5;
  GridSpec grid = GridSpec::for_trunc(32);
  IntegratorConfig cfg;
  Trajectory traj = flow(u0, 1.0, p, grid, cfg);
  const double m0 = mass(u0);
  for (size_t i = 0; i < traj.states.size(); i += 100)
    CHECK(std::abs(mass(traj.states[i]) - m0) / m0 < 1e-8);
  CHECK(std::abs(mass(traj.states.back()) - m0) / m0 < 1e-8);
}

TEST_CASE("high modes ride the exact propagator") {
  FourierField u0 = decaying_field(10, 0.4, 1.0, 3);
  ModelParams p;
  p.alpha = 1.4;
  GridSpec grid = GridSpec::for_trunc(4);  // truncation below the data extent
  IntegratorConfig cfg;
  Trajectory traj = flow(u0, 0.25, p, grid, cfg);
  const FourierField& uT = traj.states.back();
  for (int n = 5; n <= 10; ++n) {
    const cd want_p = std::polar(1.0, 0.25 * abs_pow_2alpha(n, p.alpha));
    CHECK(std::abs(uT(n) - want_p * u0(n)) < 1e-15);
    const cd want_m = std::polar(1.0, 0.25 * abs_pow_2alpha(-n, p.alpha));
    CHECK(std::abs(uT(-n) - want_m * u0(-n)) < 1e-15);
  }
}

TEST_CASE("round trip and conjugation symmetry") {
  FourierField u0 = decaying_field(16, 0.35, 1.2, 4);
  ModelParams p;
  p.alpha = 1.1;
  GridSpec grid = GridSpec::for_trunc(16);
  IntegratorConfig cfg;  // dt = 1e-3

  const double t = 0.2;
  FourierField uT = flow_to(u0, t, p, grid, cfg);
  FourierField back = flow_to(uT, -t, p, grid, cfg);
  CHECK(l2_dist(back, u0) < 1e-6);

  // negative-dt integration vs the conjugation route: identical arithmetic
  FourierField direct = flow_to(u0, -t, p, grid, cfg);
  FourierField conj_route =
      conj_field(flow_to(conj_field(u0), t, p, grid, cfg));
  CHECK(l2_dist(direct, conj_route) < 1e-13);
}

TEST_CASE("remainder flow reproduces the full flow") {
  ModelParams p;
  p.alpha = 1.3;
  GridSpec grid = GridSpec::for_trunc(16);
  IntegratorConfig cfg;  // dt = 1e-3

  FourierField zero(16);
  Trajectory vz = remainder_flow(zero, zero, 0.1, p, grid, cfg);
  for (const auto& st : vz.states)
    for (int n = -16; n <= 16; ++n) CHECK(st(n) == cd(0, 0));

  FourierField u0 = decaying_field(16, 0.3, 1.3, 5);
  FourierField v0 = decaying_field(16, 0.1, 1.0, 6);
  const double t = 0.25;
  Trajectory vtraj = remainder_flow(u0, v0, t, p, grid, cfg);
  CHECK(l2_dist(vtraj.states.front(), FourierField(16)) == 0.0);  // v(0) = 0

  FourierField w0(16);
  w0.c = u0.c + v0.c;
  FourierField direct = flow_to(w0, t, p, grid, cfg);
  FourierField recomposed = linear_propagate(w0, t, p.alpha);
  recomposed.c += vtraj.states.back().c;
  CHECK(l2_dist(direct, recomposed) < 1e-6);
}

TEST_CASE("remainder semigroup decomposition") {
  ModelParams p;
  p.alpha = 1.3;
  GridSpec grid = GridSpec::for_trunc(12);
  IntegratorConfig cfg;

  FourierField w0 = decaying_field(12, 0.35, 1.2, 7);
  FourierField zero(12);
  const double t1 = 0.15, t2 = 0.1;

  Trajectory leg1 = remainder_flow(w0, zero, t1, p, grid, cfg);
  const FourierField& v_t1 = leg1.states.back();
  FourierField w1 = linear_propagate(w0, t1, p.alpha);
  w1.c += v_t1.c;

  Trajectory leg2 = remainder_flow(w1, zero, t2, p, grid, cfg);
  Trajectory full = remainder_flow(w0, zero, t1 + t2, p, grid, cfg);

  FourierField composed = linear_propagate(v_t1, t2, p.alpha);
  composed.c += leg2.states.back().c;
  CHECK(l2_dist(full.states.back(), composed) < 1e-6);
}

TEST_CASE("gauge: one-mode closed forms") {
  // plain cubic rotates a lone mode by +sign |c|^2 t on top of the
  // dispersion; the renormalized equation by -sign |c|^2 t.
  ModelParams p;
  p.alpha = 1.6;
  const int n0 = 3;
  const cd c0(0.8, -0.4);
  const double m = std::norm(c0);
  const double disp = abs_pow_2alpha(n0, p.alpha);

  Trajectory plain;
  plain.params = p;
  plain.grid = GridSpec::for_trunc(4);
  for (double t : {0.0, 0.3, 0.7, 1.1}) {
    FourierField st(4);
    st.at(n0) = std::polar(1.0, t * (disp + p.sign * m)) * c0;
    plain.times.push_back(t);
    plain.states.push_back(st);
  }
  Trajectory gauged = gauge_transform(plain);
  for (size_t i = 0; i < gauged.times.size(); ++i) {
    const double t = gauged.times[i];
    const cd want = std::polar(1.0, t * (disp - p.sign * m)) * c0;
    CHECK(std::abs(gauged.states[i](n0) - want) < 1e-14);
  }
}

TEST_CASE("gauge connects the two integrated equations") {
  ModelParams p;  // alpha = 2, sign +1
  GridSpec grid = GridSpec::for_trunc(16);
  IntegratorConfig cfg;
  cfg.dt = 5e-4;
  FourierField u0(16);
  u0.at(-2) = cd(0.35, 0.1);
  u0.at(-1) = cd(-0.2, 0.3);
  u0.at(0) = cd(0.5, 0.0);
  u0.at(1) = cd(0.1, -0.4);
  u0.at(2) = cd(0.25, 0.2);

  const double t = 0.3;
  Trajectory plain = flow_unrenormalized(u0, t, p, grid, cfg);
  Trajectory gauged = gauge_transform(plain);
  Trajectory renorm = flow(u0, t, p, grid, cfg);
  REQUIRE(gauged.times.size() == renorm.times.size());
  double worst = 0.0;
  for (size_t i = 0; i < renorm.states.size(); i += 50)
    worst = std::max(worst, l2_dist(gauged.states[i], renorm.states[i]));
  worst = std::max(worst, l2_dist(gauged.states.back(), renorm.states.back()));
  CHECK(worst < 1e-6);
}

TEST_CASE("x3: single mode vanishes, small-t expansion is quadratic") {
  ModelParams p;
  p.alpha = 1.5;
  GridSpec grid = GridSpec::for_trunc(6);

  FourierField lone(6);
  lone.at(2) = cd(0.9, 0.1);
  FourierField x_lone = x3_exact(lone, 0.3, p, grid);
  for (int n = -6; n <= 6; ++n) CHECK(std::abs(x_lone(n)) == 0.0);

  FourierField u0 = decaying_field(6, 0.5, 1.0, 8);
  FourierField nl = nonres_trilinear_direct(u0, u0, u0, grid);
  auto err_at = [&](double t) {
    FourierField x = x3_exact(u0, t, p, grid);
    double e = 0.0;
    for (int n = -6; n <= 6; ++n) e = std::max(e, std::abs(x(n) - t * nl(n)));
    return e;
  };
  const double e1 = err_at(1e-4), e2 = err_at(2e-4);
  CHECK(e1 > 0.0);
  CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(0.02));  // O(t^2) deviation
}

TEST_CASE("x3 matches Duhamel quadrature") {
  ModelParams p;
  p.alpha = 1.2;
  GridSpec grid = GridSpec::for_trunc(8);
  FourierField u0 = decaying_field(8, 0.5, 1.1, 9);
  const double t = 0.3;
  FourierField closed = x3_exact(u0, t, p, grid);
  FourierField quad = duhamel_x3_quadrature(u0, t, p, grid, 300);
  double num = 0.0, den = 0.0;
  for (int n = -8; n <= 8; ++n) {
    num += std::norm(closed(n) - quad(n));
    den += std::norm(closed(n));
  }
  CHECK(std::sqrt(num / den) < 1e-4);
}

TEST_CASE("batched flow: matches the scalar path, block-composition exact") {
  ModelParams p;
  p.alpha = 1.4;
  const int N = 4;
  GridSpec grid = GridSpec::for_trunc(N);
  IntegratorConfig cfg;
  cfg.dt = 2e-3;
  const double t = 0.2;

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd U(3, 2 * N + 1);
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < 2 * N + 1; ++j) U(r, j) = 0.4 * cd(g(rng), g(rng));
  const Eigen::MatrixXcd U0 = U;

  flow_batch(U, t, p, grid, cfg, {}, {});
  for (int r = 0; r < 3; ++r) {
    FourierField u0(N);
    u0.c = U0.row(r).transpose();
    FourierField uT = flow_to(u0, t, p, grid, cfg);
    double diff = 0.0;
    for (int n = -N; n <= N; ++n)
      diff = std::max(diff, std::abs(uT(n) - U(r, n + N)));
    CHECK(diff < 1e-12);

    // the same sample alone in a 1-row block: bit-identical path
    Eigen::MatrixXcd U1 = U0.row(r);
    flow_batch(U1, t, p, grid, cfg, {}, {});
    for (int j = 0; j < 2 * N + 1; ++j) CHECK(U1(0, j) == U(r, j));
  }
}

TEST_CASE("batched remainder flow matches the scalar remainder") {
  ModelParams p;
  p.alpha = 1.4;
  const int N = 4;
  GridSpec grid = GridSpec::for_trunc(N);
  IntegratorConfig cfg;
  cfg.dt = 2e-3;
  const double t = 0.15;

  FourierField w0 = decaying_field(N, 0.5, 1.0, 12);
  Eigen::MatrixXcd W0(2, 2 * N + 1);
  W0.row(0) = w0.c.transpose();
  W0.row(1) = (0.5 * w0.c).transpose();

  Eigen::MatrixXcd V;
  std::vector<std::pair<int, double>> seen;
  remainder_flow_batch(W0, V, t, p, grid, cfg, {0, 10},
                       [&](int step, double time, const Eigen::MatrixXcd& S) {
                         seen.emplace_back(step, time);
                         if (step == 0) CHECK(S.cwiseAbs().maxCoeff() == 0.0);
                       });
  REQUIRE(seen.size() == 2);
  CHECK(seen[1].first == 10);
  CHECK(seen[1].second == doctest::Approx(10 * cfg.dt));

  FourierField zero(N);
  for (int r = 0; r < 2; ++r) {
    FourierField wr(N);
    wr.c = W0.row(r).transpose();
    Trajectory vt = remainder_flow(wr, zero, t, p, grid, cfg);
    double diff = 0.0;
    for (int n = -N; n <= N; ++n)
      diff = std::max(diff, std::abs(vt.states.back()(n) - V(r, n + N)));
    CHECK(diff < 1e-12);
  }
}
