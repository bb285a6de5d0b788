// Command-line front end: experiment sweeps, the validation suite, and
// single fits. Configs are JSON; outputs land in --out as report.csv,
// report.json, plot.svg, and manifest.json.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "lowsnr/estimators.hpp"
#include "lowsnr/experiments.hpp"
#include "lowsnr/models.hpp"

namespace {

using lowsnr::SweepConfig;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON sweep config")->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--threads", args.threads, "worker threads (overrides config)");
  cmd->add_option("--seed", args.seed, "base RNG seed (overrides config)");
}

SweepConfig resolve(const CommonArgs& args, const std::string& experiment) {
  SweepConfig config = lowsnr::load_config(args.config_path);
  config.experiment = experiment;
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  if (args.threads > 0) config.threads = args.threads;
  if (args.seed) config.seed = *args.seed;
  return config;
}

int run_fit(const std::string& model_config, const std::string& estimator, std::int64_t n,
            double snr, int L, const std::string& weighting, double ridge, std::uint64_t seed,
            const std::string& init_spec, const std::string& out_path) {
  SweepConfig config = lowsnr::load_config(model_config);
  const lowsnr::LatentModel model = lowsnr::build_model(config.model);
  if (config.theta.size() != model.m) {
    std::fprintf(stderr, "fit: model config must set theta (dimension %d)\n", model.m);
    return 2;
  }
  const lowsnr::NoiseSpec noise = lowsnr::noise_from_snr(snr, config.sigma);

  double radius = 0.1;
  const std::string prefix = "truth-perturbed:";
  if (init_spec.rfind(prefix, 0) == 0)
    radius = std::stod(init_spec.substr(prefix.size()));
  else if (!init_spec.empty() && init_spec != "truth-perturbed") {
    std::fprintf(stderr, "fit: unsupported --init '%s'\n", init_spec.c_str());
    return 2;
  }

  const std::uint64_t trial_seed = lowsnr::Rng::substream_key(seed, 0);
  const lowsnr::Dataset data = lowsnr::sample(model, config.theta, noise, n,
                                              lowsnr::Rng::substream_key(trial_seed, 0));
  lowsnr::Rng init_rng(lowsnr::Rng::substream_key(trial_seed, 1));
  const lowsnr::Vector init =
      lowsnr::perturbed_init(config.theta, radius * config.theta.norm(), init_rng);

  lowsnr::OptOptions opts;
  opts.gtol = config.gtol;
  opts.max_iter = config.max_iter;

  lowsnr::FitResult fit;
  if (estimator == "mle") {
    fit = lowsnr::mle_fit(data, model, noise, init, opts, &config.theta);
  } else if (estimator == "gmom") {
    const lowsnr::WeightingChoice choice = weighting == "identity"
                                               ? lowsnr::WeightingChoice::identity()
                                               : lowsnr::WeightingChoice::empirical_optimal(ridge);
    fit = lowsnr::gmom_fit(data, model, noise, L, choice, init, opts, &config.theta);
  } else {
    std::fprintf(stderr, "fit: --estimator must be mle or gmom\n");
    return 2;
  }

  nlohmann::json theta_hat = nlohmann::json::array(), theta_aligned = nlohmann::json::array();
  for (int i = 0; i < fit.theta_hat.size(); ++i) theta_hat.push_back(fit.theta_hat[i]);
  for (int i = 0; i < fit.theta_aligned.size(); ++i) theta_aligned.push_back(fit.theta_aligned[i]);
  nlohmann::json result{{"estimator", estimator},
                        {"model", model.name},
                        {"n", n},
                        {"snr", snr},
                        {"L", L},
                        {"weighting", weighting},
                        {"seed", seed},
                        {"init_radius", radius},
                        {"theta_hat", theta_hat},
                        {"theta_aligned", theta_aligned},
                        {"objective_final", fit.objective_final},
                        {"grad_norm_final", fit.grad_norm_final},
                        {"iterations", fit.iterations},
                        {"converged", fit.converged},
                        {"d_eq_to_truth", fit.d_eq_to_ref}};
  if (out_path.empty()) {
    std::cout << result.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << result.dump(2) << "\n";
  }
  return fit.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-SNR Gaussian mixture estimation: moment features, weighted "
               "method-of-moments fits, and information diagnostics"};
  app.require_subcommand(1);

  CommonArgs info_args, mse_args, layers_args, validate_args;
  add_common(app.add_subcommand("info-sweep",
                                "Fisher vs weighted-moment information over an SNR grid"),
             info_args);
  add_common(app.add_subcommand("mse-sweep", "Monte-Carlo estimator MSE over a sample-size grid"),
             mse_args);
  add_common(app.add_subcommand("layers",
                                "Moment filtration layers and layer-diagonal Fisher structure"),
             layers_args);
  add_common(app.add_subcommand("validate", "built-in invariant checks"), validate_args);

  CLI::App* fit_cmd = app.add_subcommand("fit", "single estimator fit on fresh synthetic data");
  std::string fit_model_config, fit_estimator = "gmom", fit_weighting = "optimal";
  std::string fit_init = "truth-perturbed:0.1", fit_out;
  std::int64_t fit_n = 10000;
  double fit_snr = 0.2, fit_ridge = -1.0;
  int fit_l = 3;
  std::uint64_t fit_seed = 1;
  fit_cmd->add_option("--model-config", fit_model_config, "JSON with model, theta, sigma")
      ->required();
  fit_cmd->add_option("--estimator", fit_estimator, "mle or gmom");
  fit_cmd->add_option("--n", fit_n, "sample count");
  fit_cmd->add_option("--snr", fit_snr, "signal-to-noise ratio beta^2/sigma^2")->required();
  fit_cmd->add_option("--L", fit_l, "moment order for gmom");
  fit_cmd->add_option("--weighting", fit_weighting, "optimal or identity")
      ->check(CLI::IsMember({"optimal", "identity"}));
  fit_cmd->add_option("--ridge", fit_ridge, "ridge for the optimal weighting (<0: default)");
  fit_cmd->add_option("--seed", fit_seed, "RNG seed");
  fit_cmd->add_option("--init", fit_init, "truth-perturbed:<radius> (fraction of ||theta*||)");
  fit_cmd->add_option("--out", fit_out, "result JSON path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("info-sweep"))
      return lowsnr::run_experiment(resolve(info_args, "info_sweep"));
    if (app.got_subcommand("mse-sweep"))
      return lowsnr::run_experiment(resolve(mse_args, "mse_sweep"));
    if (app.got_subcommand("layers"))
      return lowsnr::run_experiment(resolve(layers_args, "layers"));
    if (app.got_subcommand("validate"))
      return lowsnr::run_experiment(resolve(validate_args, "validate"));
    if (app.got_subcommand("fit"))
      return run_fit(fit_model_config, fit_estimator, fit_n, fit_snr, fit_l, fit_weighting,
                     fit_ridge, fit_seed, fit_init, fit_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
