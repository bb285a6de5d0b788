#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "json.hpp"
#include "lowsnr/experiments.hpp"

using namespace lowsnr;

namespace {

SweepConfig tiny_info_config() {
  SweepConfig config;
  config.experiment = "info_sweep";
  config.model = {"cyclic_mra", 2, 0};
  config.theta = (Vector(2) << 1.1, -0.6).finished();
  config.snr_grid = {0.02, 0.05, 0.1};
  config.L_list = {1, 2};
  return config;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("configs parse from nested and flat forms") {
  const SweepConfig nested = parse_config(R"({
    "experiment": "info_sweep",
    "model": {"model": "gmm", "d": 2, "K": 3, "theta": [1, 2, 3, 4, 5, 6], "sigma": 1.5},
    "snr_grid": [0.1, 0.2],
    "L_list": [1, 2, 3],
    "seed": 99
  })");
  CHECK(nested.model.model == "gmm");
  CHECK(nested.model.d == 2);
  CHECK(nested.model.K == 3);
  CHECK(nested.theta.size() == 6);
  CHECK(nested.theta[4] == 5.0);
  CHECK(nested.sigma == 1.5);
  CHECK(nested.seed == 99);
  CHECK(nested.snr_grid.size() == 2);

  const SweepConfig flat = parse_config(R"({
    "experiment": "mse_sweep",
    "model": "cyclic_mra", "d": 3,
    "theta": [1, 2, -4],
    "snr_grid": [0.16],
    "n_grid": [1000, 2000],
    "trials": 4,
    "estimators": ["mle", "gmom_L3_opt"]
  })");
  CHECK(flat.model.model == "cyclic_mra");
  CHECK(flat.model.d == 3);
  CHECK(flat.theta.size() == 3);
  CHECK(flat.n_grid.size() == 2);
  CHECK(flat.trials == 4);
  CHECK(flat.estimators.size() == 2);

  const NoiseSpec noise = config_noise(nested, 0.2);
  CHECK(noise.sigma == 1.5);
  CHECK(noise.snr() == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("config validation rejects malformed input") {
  CHECK_THROWS_AS(parse_config(R"({"experiment": "x", "bogus_key": 1})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"trials": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"snr_grid": [0.1, -0.2]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"n_grid": [1]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config(R"({"L_list": [0]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("not json at all"), nlohmann::json::parse_error);
}

TEST_CASE("info sweep rows are ordered and slopes near the moment order") {
  SweepConfig config = tiny_info_config();
  const InfoSweepReport report = run_info_sweep(config);
  REQUIRE(report.rows.size() == 6);  // L-major: 3 SNR points for L=1, then L=2
  for (int i = 0; i < 3; ++i) {
    CHECK(report.rows[i].L == 1);
    CHECK(report.rows[3 + i].L == 2);
  }
  CHECK(report.rows[0].snr < report.rows[1].snr);
  CHECK(report.rows[1].snr < report.rows[2].snr);
  for (const InfoSweepRow& r : report.rows) {
    CHECK(r.op_norm > 0.0);
    CHECK(r.r_min_eig > -1e-8);
    CHECK(r.fisher_min_eig > 0.0);
  }
  REQUIRE(report.slope_per_L.count(1) == 1);
  REQUIRE(report.slope_per_L.count(2) == 1);
  CHECK(std::abs(report.slope_per_L.at(1).slope - 2.0) < 0.7);
  CHECK(std::abs(report.slope_per_L.at(2).slope - 3.0) < 0.7);
}

TEST_CASE("info sweep output is byte-identical across thread counts") {
  SweepConfig config = tiny_info_config();
  config.threads = 1;
  const std::string csv1 = render_info_csv(run_info_sweep(config));
  config.threads = 4;
  const std::string csv4 = render_info_csv(run_info_sweep(config));
  CHECK(csv1 == csv4);
  CHECK(csv1.substr(0, csv1.find('\n')) ==
        "model,snr,L,op_norm_discrepancy,min_eig_R,fisher_min_eig,cond_sigma");
}

TEST_CASE("mse sweep accounts for every trial and is thread-stable") {
  SweepConfig config;
  config.experiment = "mse_sweep";
  config.model = {"gmm", 1, 1};
  config.theta = (Vector(1) << 1.7).finished();
  config.snr_grid = {0.25};
  config.n_grid = {300, 600};
  config.trials = 3;
  config.seed = 12;
  config.estimators = {"mle", "gmom_L1_opt", "gmom_L1_id"};

  config.threads = 1;
  const MseReport report = run_mse_sweep(config);
  REQUIRE(report.rows.size() == 6);  // 2 n-points x 3 estimators
  CHECK(report.trial_rows.size() == 18);
  for (const MseRow& row : report.rows) {
    CHECK(row.trials_used + row.nonconverged == 3);
    CHECK(row.mse >= 0.0);
    CHECK(row.std_error >= 0.0);
  }
  CHECK(report.n_slope.empty());  // two n-points cannot support a slope fit

  config.threads = 4;
  const MseReport threaded = run_mse_sweep(config);
  CHECK(render_mse_csv(report) == render_mse_csv(threaded));

  // all three estimators see the same data: with one atom and L = 1 the two
  // gmom weightings solve the same scalar problem, so their errors coincide
  for (std::size_t i = 0; i < report.trial_rows.size(); i += 3) {
    const MseTrialRow& opt = report.trial_rows[i + 1];
    const MseTrialRow& id = report.trial_rows[i + 2];
    CHECK(opt.estimator == "gmom_L1_opt");
    CHECK(id.estimator == "gmom_L1_id");
    // Both objectives share the minimizer when L = 1 (scalar weighting), but
    // the optimizer paths differ, so allow slack at the gradient tolerance.
    CHECK(opt.err2 == doctest::Approx(id.err2).epsilon(1e-4));
  }

  SweepConfig bad = config;
  bad.estimators = {"gmom_L0_opt"};
  CHECK_THROWS_AS(run_mse_sweep(bad), std::invalid_argument);
  bad.estimators = {"ols"};
  CHECK_THROWS_AS(run_mse_sweep(bad), std::invalid_argument);
}

TEST_CASE("layer report reproduces the shift-model structure") {
  SweepConfig config;
  config.experiment = "layers";
  config.model = {"cyclic_mra", 3, 0};
  // Normalized so the O(SNR) remainder of the layer prediction stays inside
  // the 5*SNR band; the layer spans and r_loc are scale-invariant.
  config.theta = (Vector(3) << 1.0, 2.0, -4.0).finished().normalized();
  config.snr_grid = {0.01, 0.02, 0.04};
  config.L_list = {1, 2, 3};

  const LayersReport report = run_layers_report(config);
  REQUIRE(report.filtration.reached);
  CHECK(report.filtration.r_loc == 3);
  REQUIRE(report.rows.size() == 9);  // 3 layers x 3 SNR points
  for (const LayerRow& row : report.rows) {
    CHECK(row.prediction > 0.0);
    CHECK(std::abs(row.ratio - 1.0) < 5.0 * row.snr);
  }
  REQUIRE(report.slope_ok);
  CHECK(std::abs(report.lambda_slope.slope - 3.0) < 0.4);
  CHECK(report.fisher_min_eig.size() == 3);
}

TEST_CASE("validation suite passes on the shipped checks") {
  std::ostringstream log;
  const int failures = run_validate(SweepConfig{}, log);
  CHECK(failures == 0);
  const std::string text = log.str();
  CHECK(text.find("FAIL") == std::string::npos);
  int lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines >= 5);
}

TEST_CASE("writers emit the documented artifact set") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "lowsnr_test_info_out";
  fs::remove_all(dir);

  SweepConfig config = tiny_info_config();
  config.output_dir = dir.string();
  const InfoSweepReport report = run_info_sweep(config);
  write_info_outputs(config, report, dir.string());

  for (const char* name : {"report.csv", "report.json", "plot.svg", "manifest.json"})
    CHECK(fs::exists(dir / name));

  const std::string csv = slurp(dir / "report.csv");
  CHECK(csv.rfind("model,snr,L,", 0) == 0);
  CHECK(csv.find("cyclic_mra") != std::string::npos);

  const std::string manifest1 = slurp(dir / "manifest.json");
  CHECK(manifest1.find("\"tool\": \"lowsnr-gmom\"") != std::string::npos);
  CHECK(manifest1.find("config_hash") != std::string::npos);
  CHECK(manifest1.find("fnv1a64:") != std::string::npos);

  // identical config, fresh write: manifests must match byte for byte
  write_info_outputs(config, report, dir.string());
  CHECK(slurp(dir / "manifest.json") == manifest1);

  const std::string svg = slurp(dir / "plot.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("experiment dispatch rejects unknown names") {
  SweepConfig config = tiny_info_config();
  config.experiment = "frobnicate";
  CHECK_THROWS_AS(run_experiment(config), std::invalid_argument);
}

}  // TEST_SUITE
