// fnlslab: command-line front end.
//
// Exit codes: 0 pass, 1 statistical/verification gate failure,
// 2 configuration error, 3 runtime (integration) failure.

#include <CLI11.hpp>
#include <iostream>

#include "fnlslab/experiments.hpp"

namespace {

// Leftover tokens are dotted config overrides: --model.alpha=1.5 or
// --grid.n_trunc 8. Strip dashes, split on '=', else pair with the next
// token.
void apply_extra_overrides(fnls::ExperimentConfig& cfg,
                           const std::vector<std::string>& extras) {
  for (size_t i = 0; i < extras.size(); ++i) {
    std::string tok = extras[i];
    size_t dash = 0;
    while (dash < tok.size() && tok[dash] == '-') ++dash;
    if (dash == 0)
      throw fnls::config_error("unexpected argument '" + tok +
                               "' (overrides look like --model.alpha=1.5)");
    tok = tok.substr(dash);
    const size_t eq = tok.find('=');
    std::string key, value;
    if (eq != std::string::npos) {
      key = tok.substr(0, eq);
      value = tok.substr(eq + 1);
    } else {
      key = tok;
      if (++i >= extras.size())
        throw fnls::config_error("override '--" + key + "' is missing a value");
      value = extras[i];
    }
    fnls::apply_override(cfg, key, value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fnlslab: truncated fractional NLS laboratory"};
  app.require_subcommand(1);

  std::string config_file, out_dir, lemma_id;
  uint64_t seed = 0;
  int threads = 1;

  auto add_common = [&](CLI::App* sc) {
    sc->add_option("--config", config_file, "JSON config file");
    sc->add_option("--seed", seed, "RNG seed (overrides config)");
    sc->add_option("--out", out_dir, "output directory (overrides config)");
    sc->add_option("--threads", threads, "worker threads")
        ->check(CLI::Range(1, 256));
    sc->allow_extras();
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "integrate one Gaussian draw, write conserved quantities");
  CLI::App* quasi = app.add_subcommand(
      "quasi", "Monte Carlo pushforward-identity check (gate |z| <= 4)");
  CLI::App* dlp = app.add_subcommand(
      "density-lp", "L^p norms of the transported density over the battery");
  CLI::App* tau = app.add_subcommand(
      "tau-tail", "weighted tail of the dyadic stopping time");
  CLI::App* lem = app.add_subcommand(
      "lemma", "single-shot verification report (JSON)");
  lem->add_option("id", lemma_id,
                  "phase|psi|qdiv|sstar|numerology|x3|gauge|density-identity")
      ->required();
  for (CLI::App* sc : {sim, quasi, dlp, tau, lem}) add_common(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    fnls::ExperimentConfig cfg;
    if (!config_file.empty()) cfg = fnls::load_config_file(config_file);
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--out")) cfg.output_dir = out_dir;
    apply_extra_overrides(cfg, sub->remaining());
    cfg.validate();

    fnls::CommandResult r;
    if (sub == sim) r = fnls::cmd_simulate(cfg, threads);
    else if (sub == quasi) r = fnls::cmd_quasi_invariance(cfg, threads);
    else if (sub == dlp) r = fnls::cmd_density_lp(cfg, threads);
    else if (sub == tau) r = fnls::cmd_tau_tail(cfg, threads);
    else r = fnls::cmd_lemma(cfg, lemma_id);

    std::cout << r.message << "\n";
    for (const auto& f : r.files) std::cout << "  wrote " << f << "\n";
    return r.exit_code;
  } catch (const fnls::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fnls::integration_error& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 3;
  }
}
