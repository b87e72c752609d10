#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "lgrom/experiment.hpp"

namespace {

void add_config_flags(CLI::App* cmd, lgrom::ExperimentConfig& cfg, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  cmd->add_option("--tag", cfg.tag,
                  "distributed-deterministic | random-domain | neumann-boundary");
  cmd->add_option("--nx", cfg.nx, "fine cells in x");
  cmd->add_option("--ny", cfg.ny, "fine cells in y");
  cmd->add_option("--ncx", cfg.ncx, "coarse cells in x");
  cmd->add_option("--ncy", cfg.ncy, "coarse cells in y");
  cmd->add_option("-L,--local-basis", cfg.L, "local modes per neighborhood");
  cmd->add_option("--n-max", cfg.n_max, "greedy sample cap");
  cmd->add_option("--eps-tol", cfg.eps_tol, "greedy estimator tolerance");
  cmd->add_option("--beta", cfg.beta, "regularization parameter");
  cmd->add_option("--n-train", cfg.n_train, "training sample count");
  cmd->add_option("--n-test", cfg.n_test, "test sample count");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("-o,--output-dir", cfg.output_dir, "artifact directory");
  cmd->add_option("--sigma", cfg.sigma, "boundary roughness amplitude");
  cmd->add_option("--kl-terms", cfg.kl_terms, "KL truncation");
  cmd->add_option("--eim-tol", cfg.eim_tol, "EIM sup-norm tolerance");
  cmd->add_option("--eim-cap", cfg.eim_cap, "EIM basis cap");
}

lgrom::ExperimentConfig resolve_config(const CLI::App* cmd, lgrom::ExperimentConfig cli_cfg,
                                       const std::string& config_path) {
  lgrom::ExperimentConfig cfg =
      config_path.empty() ? lgrom::ExperimentConfig{} : lgrom::ExperimentConfig::from_file(config_path);
  // flags given on the command line win over the file
  auto take = [&](const std::string& flag, auto member) {
    if (cmd->count(flag)) cfg.*member = cli_cfg.*member;
  };
  take("--tag", &lgrom::ExperimentConfig::tag);
  take("--nx", &lgrom::ExperimentConfig::nx);
  take("--ny", &lgrom::ExperimentConfig::ny);
  take("--ncx", &lgrom::ExperimentConfig::ncx);
  take("--ncy", &lgrom::ExperimentConfig::ncy);
  take("--local-basis", &lgrom::ExperimentConfig::L);
  take("--n-max", &lgrom::ExperimentConfig::n_max);
  take("--eps-tol", &lgrom::ExperimentConfig::eps_tol);
  take("--beta", &lgrom::ExperimentConfig::beta);
  take("--n-train", &lgrom::ExperimentConfig::n_train);
  take("--n-test", &lgrom::ExperimentConfig::n_test);
  take("--seed", &lgrom::ExperimentConfig::seed);
  take("--output-dir", &lgrom::ExperimentConfig::output_dir);
  take("--sigma", &lgrom::ExperimentConfig::sigma);
  take("--kl-terms", &lgrom::ExperimentConfig::kl_terms);
  take("--eim-tol", &lgrom::ExperimentConfig::eim_tol);
  take("--eim-cap", &lgrom::ExperimentConfig::eim_cap);
  if (const char* env = std::getenv("LGROM_OUTPUT_DIR")) cfg.output_dir = env;
  // re-validate through the JSON round trip
  return lgrom::ExperimentConfig::from_json(cfg.to_json());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local-global reduced models for PDE-constrained optimal control"};
  app.require_subcommand(1);

  lgrom::ExperimentConfig cli_cfg;
  std::string config_path;
  std::string study_kind = "beta";

  CLI::App* offline = app.add_subcommand("offline", "train the reduced model and persist it");
  add_config_flags(offline, cli_cfg, config_path);
  CLI::App* online = app.add_subcommand("online", "load a bundle and solve the test set");
  add_config_flags(online, cli_cfg, config_path);
  CLI::App* study = app.add_subcommand("study", "parameter sweeps (beta/H/N/L)");
  add_config_flags(study, cli_cfg, config_path);
  study->add_option("--kind", study_kind, "beta | H | N | L");
  CLI::App* bench = app.add_subcommand("bench", "fine vs. reduced timing");
  add_config_flags(bench, cli_cfg, config_path);

  CLI11_PARSE(app, argc, argv);

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const lgrom::ExperimentConfig cfg = resolve_config(cmd, cli_cfg, config_path);

    if (cmd == offline) {
      const lgrom::Problem problem = lgrom::build_problem(cfg);
      const lgrom::OfflineArtifacts art = lgrom::run_offline(problem, cfg);
      const auto paths = lgrom::persist_offline(problem, art, cfg);
      std::cout << "offline: N=" << art.greedy.spaces.samples << " M=" << art.local->M()
                << " snapshot=" << art.snapshot_seconds << "s greedy=" << art.greedy_seconds
                << "s\n";
      for (const auto& pth : paths) std::cout << "  wrote " << pth << '\n';
    } else if (cmd == online) {
      const lgrom::Problem problem = lgrom::build_problem(cfg);
      lgrom::LoadedBundle bundle = lgrom::load_bundle(cfg.output_dir + "/bundle");
      lgrom::reattach_coefficients(bundle, problem);
      const auto test = lgrom::sample_parameters(problem.domain, cfg.n_test, cfg.seed + 1);
      const lgrom::OnlineResult res = lgrom::run_online(problem, bundle.model, test);
      std::cout << "online: e2_u=" << res.errors.e2_u << " e2_f=" << res.errors.e2_f
                << " e2_lambda=" << res.errors.e2_lambda << " j_min=" << res.j_min_mean << '\n';
    } else if (cmd == study) {
      const lgrom::RunReport report = lgrom::run_study(cfg, study_kind);
      for (const auto& pth : report.artifacts) std::cout << "wrote " << pth << '\n';
    } else if (cmd == bench) {
      const lgrom::Problem problem = lgrom::build_problem(cfg);
      const lgrom::OfflineArtifacts art = lgrom::run_offline(problem, cfg);
      const auto samples = lgrom::sample_parameters(problem.domain, cfg.n_test, cfg.seed + 1);
      const lgrom::TimingSummary t = lgrom::timing_harness(problem, art.greedy.model, samples);
      std::cout << "bench: fine=" << t.fine_mean_seconds << "s/solve online="
                << t.online_mean_seconds << "s/solve speedup=" << t.speedup << " size "
                << t.fine_size << ':' << t.reduced_size << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
