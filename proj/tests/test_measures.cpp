#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fnlslab/measures.hpp"

#include <cmath>

using namespace fnls;

TEST_CASE("sampler reproducibility and stream separation") {
  GaussianSampler smp{0.45, 8, 1234567};
  FourierField a = smp.sample(41);
  FourierField b = smp.sample(41);
  for (int n = -8; n <= 8; ++n) CHECK(a(n) == b(n));

  GaussianSampler other{0.45, 8, 1234567};
  FourierField c = other.sample(41);
  for (int n = -8; n <= 8; ++n) CHECK(a(n) == c(n));

  FourierField d = smp.sample(42);
  double dist = 0.0;
  for (int n = -8; n <= 8; ++n) dist += std::abs(a(n) - d(n));
  CHECK(dist > 1e-3);

  GaussianSampler reseeded{0.45, 8, 1234568};
  FourierField e = reseeded.sample(41);
  dist = 0.0;
  for (int n = -8; n <= 8; ++n) dist += std::abs(a(n) - e(n));
  CHECK(dist > 1e-3);

  CHECK(a.all_finite());
  CHECK(smp.sample_coeffs(41)(3 + 8) == a(3));
}

TEST_CASE("per-mode variance and centering") {
  GaussianSampler smp{0.45, 6, 2024};
  const int64_t n_draws = 100000;
  for (int n : {-6, 0, 3}) {
    auto var_f = [n](const FourierField& u) { return std::norm(u(n)); };
    McEstimate var = mc_expect(var_f, smp, n_draws);
    const double want = 1.0 / jb_pow2s(n, 0.45);  // <n>^{-2s}
    CHECK(std::abs(var.mean - want) <= 3.0 * var.std_err);

    auto re_f = [n](const FourierField& u) { return u(n).real(); };
    auto im_f = [n](const FourierField& u) { return u(n).imag(); };
    McEstimate re = mc_expect(re_f, smp, n_draws);
    McEstimate im = mc_expect(im_f, smp, n_draws);
    CHECK(std::abs(re.mean) <= 3.0 * re.std_err);
    CHECK(std::abs(im.mean) <= 3.0 * im.std_err);

    // conjugation invariance + isotropy: Re/Im each carry half the variance
    auto re2_f = [n](const FourierField& u) {
      double x = u(n).real();
      return x * x;
    };
    auto reim_f = [n](const FourierField& u) {
      return u(n).real() * u(n).imag();
    };
    McEstimate re2 = mc_expect(re2_f, smp, n_draws);
    McEstimate reim = mc_expect(reim_f, smp, n_draws);
    CHECK(std::abs(re2.mean - 0.5 * want) <= 3.0 * re2.std_err);
    CHECK(std::abs(reim.mean) <= 3.0 * reim.std_err);
  }
}

TEST_CASE("sigma_n: closed three-term sum and growth laws") {
  CHECK(sigma_n(0.5, 1) == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sigma_n(0.5, 0) == 1.0);

  // s = 1/2: sigma_N ~ 2 log N
  const double r = sigma_n(0.5, 10000) / (2.0 * std::log(10000.0));
  CHECK(r > 0.85);
  CHECK(r < 1.15);

  // s = 0.3: sigma_N ~ c N^{1-2s}, so sigma_N N^{2s-1} plateaus
  const double p3 = sigma_n(0.3, 1000) * std::pow(1000.0, -0.4);
  const double p4 = sigma_n(0.3, 10000) * std::pow(10000.0, -0.4);
  CHECK(std::abs(p4 - p3) / p4 < 0.05);
}

TEST_CASE("wick mass: centering, variance, tail decay rate") {
  const double s = 0.45;
  GaussianSampler smp{s, 16, 555};
  const int64_t n_draws = 50000;

  auto wick_f = [s](const FourierField& u) { return wick_mass(u, s, 16); };
  McEstimate w = mc_expect(wick_f, smp, n_draws);
  CHECK(std::abs(w.mean) <= 3.0 * w.std_err);

  // Var = sum <n>^{-4s} since |g|^2 has unit variance
  auto wick2_f = [&](const FourierField& u) {
    const double x = wick_mass(u, s, 16);
    return x * x;
  };
  McEstimate w2 = mc_expect(wick2_f, smp, n_draws);
  CHECK(std::abs(w2.mean - sigma_n(2 * s, 16)) <= 3.0 * w2.std_err);

  // || wick_M - wick_N ||_{L^2} ~ N^{(1-4s)/2}: fit the empirical exponent.
  // M sits far above every cut so the missing tail beyond M cannot bend
  // the fitted slope.
  GaussianSampler big{s, 1024, 808};
  const int64_t n_fit = 4000;
  std::vector<int> cuts = {8, 16, 32, 64};
  std::vector<double> lx, ly;
  std::vector<double> diff2(cuts.size(), 0.0);
  for (int64_t i = 0; i < n_fit; ++i) {
    const FourierField u = big.sample(i);
    const double wM = wick_mass(u, s, 1024);
    for (size_t j = 0; j < cuts.size(); ++j) {
      const double d = wM - wick_mass(u, s, cuts[j]);
      diff2[j] += d * d;
    }
  }
  for (size_t j = 0; j < cuts.size(); ++j) {
    lx.push_back(std::log(static_cast<double>(cuts[j])));
    ly.push_back(0.5 * std::log(diff2[j] / n_fit));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= ly.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = num / den;
  CHECK(std::abs(slope - 0.5 * (1.0 - 4.0 * s)) < 0.15);
}

TEST_CASE("importance weights") {
  ModelParams p;  // s = 0.45, gamma = 3
  const int N = 12;

  // mass exactly sigma_N --> wick 0 --> weight 1
  FourierField f(N);
  f.at(0) = cd(std::sqrt(sigma_n(p.s, N)), 0.0);
  CHECK(wick_mass(f, p.s, N) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rho_weight(f, p, N) == doctest::Approx(1.0));

  GaussianSampler smp{p.s, N, 99};
  for (int i = 0; i < 200; ++i) {
    const double w = rho_weight(smp.sample(i), p, N);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
  }

  // E[R_N^p] stable when the truncation doubles (paired 3-sigma gate)
  for (double pw : {1.0, 2.0, 4.0}) {
    GaussianSampler s64{p.s, 64, 4242};
    auto r64 = [&](const FourierField& u) {
      return std::pow(rho_weight(u, p, 64), pw);
    };
    // same seeds at 128: modes |n|<=64 of the 128-sampler differ from the
    // 64-sampler draws, so treat the two estimates as independent
    GaussianSampler s128{p.s, 128, 4242};
    auto r128 = [&](const FourierField& u) {
      return std::pow(rho_weight(u, p, 128), pw);
    };
    McEstimate a = mc_expect(r64, s64, 20000);
    McEstimate b = mc_expect(r128, s128, 20000);
    const double z = (a.mean - b.mean) /
                     std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
    CHECK(std::abs(z) < 3.0);
    CHECK(a.mean > 0.0);
    CHECK(b.mean > 0.0);
  }
}

TEST_CASE("mc_expect: exact cases, CLT scaling, thread determinism") {
  GaussianSampler smp{0.45, 4, 31337};

  auto const_f = [](const FourierField&) { return 2.5; };
  McEstimate c = mc_expect(const_f, smp, 1000);
  CHECK(c.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(c.std_err == doctest::Approx(0.0));
  CHECK(c.count == 1000);
  CHECK(c.weight_sum == doctest::Approx(1000.0));

  auto mass_f = [](const FourierField& u) { return mass(u); };
  McEstimate m = mc_expect(mass_f, smp, 40000);
  CHECK(std::abs(m.mean - sigma_n(0.45, 4)) <= 3.0 * m.std_err);

  McEstimate m4 = mc_expect(mass_f, smp, 160000);
  CHECK(m4.std_err == doctest::Approx(0.5 * m.std_err).epsilon(0.3));

  McEstimate t1 = mc_expect(mass_f, smp, 10000, nullptr, 1);
  McEstimate t4 = mc_expect(mass_f, smp, 10000, nullptr, 4);
  CHECK(t1.mean == t4.mean);        // bit-identical block merge
  CHECK(t1.std_err == t4.std_err);

  auto bad_f = [](const FourierField&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS_AS(mc_expect(bad_f, smp, 100), integration_error);
}
