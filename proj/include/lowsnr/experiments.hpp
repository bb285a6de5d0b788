#pragma once

// Seeded experiment sweeps behind the CLI: the information-discrepancy sweep
// over (SNR, L), the finite-sample MSE sweep over (SNR, n, estimator), the
// layer report, and the cross-module validation suite. Every run writes
// report.csv, report.json, plot.svg and manifest.json into the output
// directory; identical configs yield byte-identical reports on any thread
// count.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lowsnr/estimators.hpp"
#include "lowsnr/information.hpp"
#include "lowsnr/models.hpp"
#include "lowsnr/slope.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

inline constexpr const char* kToolName = "lowsnr-gmom";
inline constexpr const char* kToolVersion = "0.1.0";

struct SweepConfig {
  std::string experiment;  // info_sweep | mse_sweep | layers | validate
  ModelSpec model;
  Vector theta;
  double sigma = 1.0;
  double beta = 0.0;  // used when snr_grid is empty
  std::vector<double> snr_grid;
  std::vector<int> L_list;
  std::vector<std::int64_t> n_grid;
  int trials = 50;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int threads = 1;
  QuadratureSpec quadrature;
  std::vector<std::string> estimators;  // mse_sweep: mle | gmom_L<k>_<opt|id>
  double init_radius = 0.1;             // times ||theta*||
  double ridge = -1.0;                  // < 0: per-fit default
  double gtol = 1e-8;
  int max_iter = 500;
  double filtration_tol = 1e-9;
};

// Reads the JSON schema documented in the README; unknown keys are rejected.
SweepConfig load_config(const std::string& path);
SweepConfig parse_config(const std::string& json_text);

// The SNR grid expressed as noise specs at the configured sigma.
NoiseSpec config_noise(const SweepConfig& config, double snr);

struct InfoSweepRow {
  double snr = 0.0;
  int L = 0;
  double op_norm = 0.0;
  double r_min_eig = 0.0;
  double fisher_min_eig = 0.0;
  double cond_sigma = 0.0;
};

struct InfoSweepReport {
  std::string model_name;
  std::vector<InfoSweepRow> rows;        // L-major, then SNR ascending
  std::map<int, SlopeFit> slope_per_L;   // fitted from op_norm where possible
};

InfoSweepReport run_info_sweep(const SweepConfig& config);

struct MseTrialRow {
  std::string estimator;
  double snr = 0.0;
  std::int64_t n = 0;
  int trial = 0;
  std::uint64_t substream_seed = 0;  // regenerates dataset and init
  double err2 = 0.0;                 // d_eq^2 / ||theta*||^2
  bool converged = false;
  int iterations = 0;
};

struct MseRow {
  std::string estimator;
  std::int64_t n = 0;
  double snr = 0.0;
  double mse = 0.0;  // mean err2 over converged trials
  int trials_used = 0;
  double std_error = 0.0;
  int nonconverged = 0;
};

struct MseReport {
  std::vector<MseRow> rows;
  std::vector<MseTrialRow> trial_rows;
  std::map<std::string, SlopeFit> n_slope;  // key "estimator@snr"
};

MseReport run_mse_sweep(const SweepConfig& config);

struct LayerRow {
  int layer = 0;  // k
  double snr = 0.0;
  double value = 0.0;
  double prediction = 0.0;
  double ratio = 0.0;
};

struct LayersReport {
  Filtration filtration;
  std::vector<LayerRow> rows;
  std::vector<std::pair<double, double>> fisher_min_eig;  // (snr, lambda_min)
  SlopeFit lambda_slope;  // valid when slope_ok
  bool slope_ok = false;
};

LayersReport run_layers_report(const SweepConfig& config);

// Cross-module invariant suite; returns the number of failed checks and
// logs one line per check.
int run_validate(const SweepConfig& config, std::ostream& log);

// Output writers; dir is created if needed.
void write_info_outputs(const SweepConfig& config, const InfoSweepReport& report,
                        const std::string& dir);
void write_mse_outputs(const SweepConfig& config, const MseReport& report,
                       const std::string& dir);
void write_layers_outputs(const SweepConfig& config, const LayersReport& report,
                          const std::string& dir);
void write_validate_outputs(const SweepConfig& config,
                            const std::vector<std::pair<std::string, bool>>& checks,
                            const std::string& dir);

// Convenience: run the configured experiment and write outputs; returns a
// process exit code (nonzero only for validate failures).
int run_experiment(const SweepConfig& config);

// In-memory CSV rendering, used by the byte-reproducibility checks.
std::string render_info_csv(const InfoSweepReport& report);
std::string render_mse_csv(const MseReport& report);

}  // namespace lowsnr
