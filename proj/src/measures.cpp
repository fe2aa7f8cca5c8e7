#include "fnlslab/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace fnls {
namespace {

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 output function; used as a mixing hash on structured counters.
inline uint64_t sm64(uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double to_unit_open(uint64_t k) {  // (0, 1]
  return (static_cast<double>(k >> 11) + 1.0) * 0x1.0p-53;
}

inline double to_unit_closed(uint64_t k) {  // [0, 1)
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

// one standard complex Gaussian (E|g|^2 = 1) from the per-mode key h:
// radius^2 ~ Exp(1), angle uniform. The two uniforms come from h and a
// half-golden tweak of h, which never collides with another mode's key
// (mode keys step by the full golden constant).
inline cd complex_gaussian(uint64_t h) {
  const double u1 = to_unit_open(sm64(h));
  const double u2 = to_unit_closed(sm64(h + 0x4F1BBCDCBFA53E0AULL));
  const double r = std::sqrt(-std::log(u1));
  const double th = 2.0 * M_PI * u2;
  return cd(r * std::cos(th), r * std::sin(th));
}

}  // namespace

Eigen::VectorXcd GaussianSampler::sample_coeffs(uint64_t index) const {
  const uint64_t base = sm64(sm64(seed ^ 0xD1B54A32D192ED03ULL) + index);
  Eigen::VectorXcd c(2 * n_trunc + 1);
  for (int n = -n_trunc; n <= n_trunc; ++n) {
    const uint64_t slot = static_cast<uint64_t>(n + n_trunc);
    c(n + n_trunc) =
        complex_gaussian(base + slot * kGolden) / jb_pow2s(n, 0.5 * s);
  }
  return c;
}

FourierField GaussianSampler::sample(uint64_t index) const {
  FourierField f(n_trunc);
  f.c = sample_coeffs(index);
  return f;
}

double sigma_n(double s, int N) {
  double sum = 0.0, comp = 0.0;  // Kahan: the tail terms get tiny
  for (int n = -N; n <= N; ++n) {
    const double term = 1.0 / jb_pow2s(n, s);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double wick_mass(const FourierField& f, double s, int N) {
  double m = 0.0;
  for (int n = -N; n <= N; ++n) m += std::norm(f(n));
  return m - sigma_n(s, N);
}

double rho_weight(const FourierField& f, const ModelParams& params, int N) {
  return std::exp(-std::pow(std::abs(wick_mass(f, params.s, N)),
                            params.gamma));
}

McEstimate mc_expect(const std::function<double(const FourierField&)>& F,
                     const GaussianSampler& sampler, int64_t n_samples,
                     const std::function<double(const FourierField&)>&
                         weight_fn,
                     int n_threads) {
  if (n_samples < 2) throw config_error("mc_expect needs n_samples >= 2");
  if (n_threads < 1) n_threads = 1;

  constexpr int64_t kBlock = 4096;
  const int64_t n_blocks = (n_samples + kBlock - 1) / kBlock;
  struct Partial {
    double sum = 0.0, sum_sq = 0.0, wsum = 0.0;
    int64_t flagged = 0;
  };
  std::vector<Partial> parts(n_blocks);

  std::atomic<int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const int64_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      Partial p;
      const int64_t lo = b * kBlock;
      const int64_t hi = std::min(n_samples, lo + kBlock);
      for (int64_t i = lo; i < hi; ++i) {
        const FourierField u = sampler.sample(static_cast<uint64_t>(i));
        const double w = weight_fn ? weight_fn(u) : 1.0;
        const double term = w * F(u);
        if (!std::isfinite(term)) {
          ++p.flagged;
          continue;
        }
        p.sum += term;
        p.sum_sq += term * term;
        p.wsum += w;
      }
      parts[b] = p;
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // merge strictly in block order: identical result for any thread count
  double sum = 0.0, sum_sq = 0.0, wsum = 0.0;
  int64_t flagged = 0;
  for (const Partial& p : parts) {
    sum += p.sum;
    sum_sq += p.sum_sq;
    wsum += p.wsum;
    flagged += p.flagged;
  }
  if (flagged * 1000 > n_samples)
    throw integration_error("too many non-finite Monte-Carlo terms",
                            static_cast<double>(flagged));

  McEstimate e;
  e.count = n_samples;
  e.weight_sum = wsum;
  e.flagged = flagged;
  const double n = static_cast<double>(n_samples);
  e.mean = sum / n;
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  e.std_err = std::sqrt(var / n);
  return e;
}

}  // namespace fnls
