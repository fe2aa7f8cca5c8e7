#pragma once

#include "fnlslab/io.hpp"

namespace fnls {

// Outcome of one CLI command. exit_code: 0 = pass, 1 = gate failure,
// 3 = runtime failure (config errors throw config_error instead and map
// to exit 2 at the top level).
struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> files;
  std::string message;
};

// Trajectory summary: one CSV row per recorded time with the conserved and
// monitored quantities. Exposed separately from cmd_simulate so tests can
// feed hand-built data (zero field -> all-zero rows).
std::vector<std::vector<std::string>> simulate_rows(const FourierField& u0,
                                                    const ExperimentConfig& c);

CommandResult cmd_simulate(const ExperimentConfig& c, int n_threads = 1);

// Pushforward identity by importance-sampled Monte Carlo: for a battery of
// bounded functionals F, E_rho[F(Phi_t u)] = E_rho[F(u) f_t(u)] with the
// exact transported density. Gate: every paired z-score within |z| <= 4.
CommandResult cmd_quasi_invariance(const ExperimentConfig& c,
                                   int n_threads = 1);

// log ||f_t||_{L^p(rho)} over the built-in battery N in {4,8,16},
// p in {2,4}, t in {0, 1/4, 1/2, 1}: log-sum-exp estimates with stderrs,
// an N-uniformity diagnostic, and a <t>-growth exponent fit. Report-grade.
CommandResult cmd_density_lp(const ExperimentConfig& c, int n_threads = 1);

// Weighted survival of the inverse stopping time tau^{-1} across the
// dyadic levels, with a log-survival-vs-lambda^beta tail diagnostic.
// Gates: survival monotone nonincreasing; final bin mass <= 1e-2.
CommandResult cmd_tau_tail(const ExperimentConfig& c, int n_threads = 1);

// Single-shot verification reports as JSON. Ids: phase, psi, qdiv, sstar,
// numerology, x3, gauge, density-identity. Exit 1 when any pass flag is
// false.
CommandResult cmd_lemma(const ExperimentConfig& c,
                        const std::string& lemma_id);

}  // namespace fnls
