#pragma once

#include "fnlslab/field.hpp"

#include <cstdint>
#include <functional>

namespace fnls {

// Draws u0 = sum_{|n|<=N} g_n <n>^{-s} e^{inx} with g_n independent complex
// Gaussians, Re g_n, Im g_n ~ N(0, 1/2) (so E|g_n|^2 = 1). Each (seed, index)
// pair maps to one field through a counter-based hash chain: draws are
// bit-identical across runs, platforms with IEEE doubles, and any threading.
struct GaussianSampler {
  double s = 0.45;
  int n_trunc = 16;
  uint64_t seed = 0;

  FourierField sample(uint64_t index) const;
  // same draw as a dense coefficient vector (slot n + n_trunc)
  Eigen::VectorXcd sample_coeffs(uint64_t index) const;
};

// sigma_N = E[mass(P_N u0)] = sum_{|n|<=N} <n>^{-2s}, compensated summation.
double sigma_n(double s, int N);

// mass(P_N f) - sigma_N: the Wick-ordered mass integral.
double wick_mass(const FourierField& f, double s, int N);

// exp(-|wick_mass|^gamma) in (0,1]: the importance weight converting
// mu_s-samples into rho_{s,gamma}-expectations.
double rho_weight(const FourierField& f, const ModelParams& params, int N);

struct McEstimate {
  double mean = 0.0;
  double std_err = 0.0;  // sd of the weighted terms / sqrt(count)
  int64_t count = 0;
  double weight_sum = 0.0;
  int64_t flagged = 0;  // non-finite terms (zeroed; run aborts past 0.1%)
};

// Weighted Monte Carlo: mean = sum_i w(u_i) F(u_i) / n over samples
// sampler.sample(0..n-1). Pass a null weight_fn for unit weights. Threads
// split the stream into fixed 4096-sample blocks merged in block order,
// so the result is bit-identical for any n_threads.
McEstimate mc_expect(const std::function<double(const FourierField&)>& F,
                     const GaussianSampler& sampler, int64_t n_samples,
                     const std::function<double(const FourierField&)>&
                         weight_fn = nullptr,
                     int n_threads = 1);

}  // namespace fnls
