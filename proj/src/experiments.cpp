#include "lowsnr/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "lowsnr/hermite.hpp"
#include "lowsnr/quadrature.hpp"
#include "lowsnr/svg.hpp"

namespace lowsnr {

using nlohmann::json;

namespace {

// --- parsing -------------------------------------------------------------

ModelSpec parse_model_spec(const json& j) {
  ModelSpec spec;
  spec.model = j.at("model").get<std::string>();
  spec.d = j.at("d").get<int>();
  spec.K = j.value("K", 0);
  return spec;
}

Vector parse_vector(const json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

const char* const kKnownKeys[] = {
    "experiment", "model",      "theta",     "beta",       "sigma",     "snr_grid",
    "L_list",     "n_grid",     "trials",    "seed",       "output_dir", "threads",
    "quadrature", "estimators", "init_radius", "ridge",    "gtol",      "max_iter",
    "filtration_tol", "d",      "K"};

}  // namespace

SweepConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const char* k : kKnownKeys) known = known || key == k;
    if (!known) throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  SweepConfig config;
  config.experiment = j.value("experiment", "");
  // The model spec may be nested under "model" or spread over the top level
  // with "model" holding the family name.
  if (j.contains("model") && j["model"].is_object()) {
    const json& m = j["model"];
    config.model = parse_model_spec(m);
    if (m.contains("theta")) config.theta = parse_vector(m["theta"]);
    config.beta = m.value("beta", config.beta);
    config.sigma = m.value("sigma", config.sigma);
  } else if (j.contains("model")) {
    config.model = parse_model_spec(j);
  }
  if (j.contains("theta")) config.theta = parse_vector(j["theta"]);
  config.beta = j.value("beta", config.beta);
  config.sigma = j.value("sigma", config.sigma);
  if (j.contains("snr_grid"))
    for (const auto& v : j["snr_grid"]) config.snr_grid.push_back(v.get<double>());
  if (j.contains("L_list"))
    for (const auto& v : j["L_list"]) config.L_list.push_back(v.get<int>());
  if (j.contains("n_grid"))
    for (const auto& v : j["n_grid"]) config.n_grid.push_back(v.get<std::int64_t>());
  config.trials = j.value("trials", config.trials);
  config.seed = j.value("seed", config.seed);
  config.output_dir = j.value("output_dir", config.output_dir);
  config.threads = j.value("threads", config.threads);
  if (j.contains("quadrature")) {
    const json& q = j["quadrature"];
    config.quadrature.nodes_per_axis = q.value("nodes_per_axis", 0);
    config.quadrature.budget = q.value("budget", config.quadrature.budget);
  }
  if (j.contains("estimators"))
    for (const auto& v : j["estimators"]) config.estimators.push_back(v.get<std::string>());
  config.init_radius = j.value("init_radius", config.init_radius);
  config.ridge = j.value("ridge", config.ridge);
  config.gtol = j.value("gtol", config.gtol);
  config.max_iter = j.value("max_iter", config.max_iter);
  config.filtration_tol = j.value("filtration_tol", config.filtration_tol);

  if (config.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  for (double s : config.snr_grid)
    if (!(s > 0.0)) throw std::invalid_argument("config: snr_grid entries must be > 0");
  for (std::int64_t n : config.n_grid)
    if (n < 2) throw std::invalid_argument("config: n_grid entries must be >= 2");
  for (int L : config.L_list)
    if (L < 1) throw std::invalid_argument("config: L_list entries must be >= 1");
  return config;
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

NoiseSpec config_noise(const SweepConfig& config, double snr) {
  return noise_from_snr(snr, config.sigma);
}

namespace {

// --- shared plumbing ------------------------------------------------------

void parallel_for_index(std::int64_t n, int threads,
                        const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  const int nt = static_cast<int>(std::min<std::int64_t>(threads, n));
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&] {
      for (std::int64_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

json config_echo(const SweepConfig& config) {
  json m{{"model", config.model.model}, {"d", config.model.d}, {"K", config.model.K}};
  json th = json::array();
  for (int i = 0; i < config.theta.size(); ++i) th.push_back(config.theta[i]);
  json j{{"experiment", config.experiment},
         {"model", m},
         {"theta", th},
         {"beta", config.beta},
         {"sigma", config.sigma},
         {"snr_grid", config.snr_grid},
         {"L_list", config.L_list},
         {"n_grid", config.n_grid},
         {"trials", config.trials},
         {"seed", config.seed},
         {"threads", config.threads},
         {"estimators", config.estimators},
         {"init_radius", config.init_radius},
         {"ridge", config.ridge},
         {"gtol", config.gtol},
         {"max_iter", config.max_iter},
         {"filtration_tol", config.filtration_tol},
         {"quadrature",
          {{"nodes_per_axis", config.quadrature.nodes_per_axis},
           {"budget", config.quadrature.budget}}}};
  return j;
}

void write_manifest(const SweepConfig& config, const std::string& dir,
                    const std::vector<std::string>& outputs) {
  const json echo = config_echo(config);
  char hash[32];
  std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(echo.dump())));
  json manifest{{"tool", kToolName},
                {"version", kToolVersion},
                {"experiment", config.experiment},
                {"config_hash", hash},
                {"seed", config.seed},
                {"threads", config.threads},
                {"outputs", outputs},
                {"config", echo}};
  std::ofstream out(dir + "/manifest.json");
  out << manifest.dump(2) << "\n";
}

Vector require_theta(const SweepConfig& config, const LatentModel& model) {
  if (config.theta.size() != model.m)
    throw std::invalid_argument("config: theta must have dimension " + std::to_string(model.m));
  return config.theta;
}

int max_L(const SweepConfig& config, int fallback) {
  int lmax = 0;
  for (int l : config.L_list) lmax = std::max(lmax, l);
  return lmax > 0 ? lmax : fallback;
}

std::vector<double> effective_snr_grid(const SweepConfig& config) {
  if (!config.snr_grid.empty()) return config.snr_grid;
  if (config.beta > 0.0) {
    const NoiseSpec noise{config.beta, config.sigma};
    return {noise.snr()};
  }
  throw std::invalid_argument("config: need snr_grid or a positive beta");
}

}  // namespace

// --- info sweep ------------------------------------------------------------

InfoSweepReport run_info_sweep(const SweepConfig& config) {
  const LatentModel model = build_model(config.model);
  const Vector theta = require_theta(config, model);
  const std::vector<double> snr_grid = effective_snr_grid(config);
  std::vector<int> l_list = config.L_list;
  if (l_list.empty()) l_list = {1, 2, 3};

  const Filtration filtration =
      moment_filtration(model, theta, max_L(config, 3), config.filtration_tol);
  QuadratureSpec quad = config.quadrature;
  quad.threads = 1;  // parallelism lives at the grid level

  // One job per SNR point evaluates every L; the Fisher matrix and layer
  // structure are shared across L.
  std::vector<std::vector<InfoReport>> grid(snr_grid.size());
  parallel_for_index(static_cast<std::int64_t>(snr_grid.size()), config.threads,
                     [&](std::int64_t si) {
                       const NoiseSpec noise = config_noise(config, snr_grid[si]);
                       for (int L : l_list)
                         grid[si].push_back(
                             info_discrepancy(model, theta, noise, L, filtration, quad));
                     });

  InfoSweepReport report;
  report.model_name = model.name;
  for (std::size_t li = 0; li < l_list.size(); ++li) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t si = 0; si < snr_grid.size(); ++si) {
      const InfoReport& r = grid[si][li];
      report.rows.push_back({r.snr, r.L, r.discrepancy_op_norm, r.R_min_eig, r.fisher_min_eig,
                             r.cond_sigma});
      pts.emplace_back(r.snr, r.discrepancy_op_norm);
    }
    try {
      report.slope_per_L[l_list[li]] = fit_loglog_slope(pts);
    } catch (const std::invalid_argument&) {
      // fewer than 3 points above the floor (e.g. exact-coincidence cases)
    }
  }
  return report;
}

// --- mse sweep ---------------------------------------------------------------

namespace {

struct EstimatorTag {
  std::string name;
  bool is_mle = false;
  int L = 0;
  bool optimal = true;
};

EstimatorTag parse_estimator(const std::string& tag) {
  if (tag == "mle") return {tag, true, 0, true};
  // gmom_L<k>_opt or gmom_L<k>_id
  if (tag.rfind("gmom_L", 0) == 0) {
    const std::size_t us = tag.find('_', 6);
    if (us != std::string::npos) {
      const int L = std::stoi(tag.substr(6, us - 6));
      const std::string kind = tag.substr(us + 1);
      if (L >= 1 && (kind == "opt" || kind == "id")) return {tag, false, L, kind == "opt"};
    }
  }
  throw std::invalid_argument("unknown estimator tag '" + tag + "'");
}

}  // namespace

MseReport run_mse_sweep(const SweepConfig& config) {
  const LatentModel model = build_model(config.model);
  const Vector theta = require_theta(config, model);
  const double theta_norm2 = theta.squaredNorm();
  if (!(theta_norm2 > 0.0)) throw std::invalid_argument("mse_sweep: theta* must be nonzero");
  const std::vector<double> snr_grid = effective_snr_grid(config);
  if (config.n_grid.empty()) throw std::invalid_argument("mse_sweep: n_grid must be non-empty");
  std::vector<EstimatorTag> tags;
  if (config.estimators.empty())
    for (const char* t : {"mle", "gmom_L3_opt", "gmom_L2_opt", "gmom_L3_id"})
      tags.push_back(parse_estimator(t));
  else
    for (const std::string& t : config.estimators) tags.push_back(parse_estimator(t));

  OptOptions opts;
  opts.gtol = config.gtol;
  opts.max_iter = config.max_iter;

  struct Cell {  // (snr, n) grid point
    double snr;
    std::int64_t n;
  };
  std::vector<Cell> cells;
  for (double snr : snr_grid)
    for (std::int64_t n : config.n_grid) cells.push_back({snr, n});

  // One job per (cell, trial); all estimators see the same data and init.
  const std::int64_t jobs = static_cast<std::int64_t>(cells.size()) * config.trials;
  std::vector<std::vector<MseTrialRow>> results(jobs);
  parallel_for_index(jobs, config.threads, [&](std::int64_t job) {
    const std::int64_t cell_idx = job / config.trials;
    const int trial = static_cast<int>(job % config.trials);
    const Cell& cell = cells[cell_idx];
    const NoiseSpec noise = config_noise(config, cell.snr);

    const std::uint64_t trial_seed = Rng::substream_key(
        config.seed, (static_cast<std::uint64_t>(cell_idx) << 32) | static_cast<std::uint64_t>(trial));
    const Dataset data =
        sample(model, theta, noise, cell.n, Rng::substream_key(trial_seed, 0));
    Rng init_rng(Rng::substream_key(trial_seed, 1));
    const Vector init = perturbed_init(theta, config.init_radius * theta.norm(), init_rng);

    for (const EstimatorTag& tag : tags) {
      FitResult fit;
      if (tag.is_mle) {
        fit = mle_fit(data, model, noise, init, opts, &theta);
      } else {
        const WeightingChoice choice = tag.optimal
                                           ? WeightingChoice::empirical_optimal(config.ridge)
                                           : WeightingChoice::identity();
        fit = gmom_fit(data, model, noise, tag.L, choice, init, opts, &theta);
      }
      MseTrialRow row;
      row.estimator = tag.name;
      row.snr = cell.snr;
      row.n = cell.n;
      row.trial = trial;
      row.substream_seed = trial_seed;
      row.err2 = fit.d_eq_to_ref * fit.d_eq_to_ref / theta_norm2;
      row.converged = fit.converged;
      row.iterations = fit.iterations;
      results[job].push_back(std::move(row));
    }
  });

  MseReport report;
  for (std::int64_t job = 0; job < jobs; ++job)
    for (MseTrialRow& row : results[job]) report.trial_rows.push_back(std::move(row));

  // Aggregate in a fixed (snr, n, estimator) order.
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const EstimatorTag& tag : tags) {
      MseRow agg;
      agg.estimator = tag.name;
      agg.snr = cells[c].snr;
      agg.n = cells[c].n;
      double sum = 0.0, sum2 = 0.0;
      for (const MseTrialRow& row : report.trial_rows) {
        if (row.estimator != tag.name || row.n != cells[c].n || row.snr != cells[c].snr) continue;
        if (!row.converged) {
          ++agg.nonconverged;
          continue;
        }
        sum += row.err2;
        sum2 += row.err2 * row.err2;
        ++agg.trials_used;
      }
      if (agg.trials_used > 0) {
        agg.mse = sum / agg.trials_used;
        if (agg.trials_used > 1) {
          const double var =
              (sum2 - sum * sum / agg.trials_used) / (agg.trials_used - 1);
          agg.std_error = std::sqrt(std::max(0.0, var) / agg.trials_used);
        }
      }
      report.rows.push_back(agg);
    }
  }

  // Per-estimator n-slopes at each SNR with at least 3 n points.
  for (double snr : snr_grid) {
    for (const EstimatorTag& tag : tags) {
      std::vector<std::pair<double, double>> pts;
      for (const MseRow& row : report.rows)
        if (row.estimator == tag.name && row.snr == snr && row.trials_used > 0 && row.mse > 0.0)
          pts.emplace_back(static_cast<double>(row.n), row.mse);
      if (pts.size() >= 3) {
        char key[128];
        std::snprintf(key, sizeof(key), "%s@%.6g", tag.name.c_str(), snr);
        report.n_slope[key] = fit_loglog_slope(pts);
      }
    }
  }
  return report;
}

// --- layers ------------------------------------------------------------------

LayersReport run_layers_report(const SweepConfig& config) {
  const LatentModel model = build_model(config.model);
  const Vector theta = require_theta(config, model);
  const std::vector<double> snr_grid = effective_snr_grid(config);

  LayersReport report;
  report.filtration = moment_filtration(model, theta, max_L(config, 4), config.filtration_tol);
  QuadratureSpec quad = config.quadrature;
  quad.threads = 1;

  struct PerSnr {
    std::vector<LayerRow> rows;
    double lambda_min = 0.0;
  };
  std::vector<PerSnr> per_snr(snr_grid.size());
  parallel_for_index(static_cast<std::int64_t>(snr_grid.size()), config.threads,
                     [&](std::int64_t si) {
                       const NoiseSpec noise = config_noise(config, snr_grid[si]);
                       const Matrix i_obs_w = restrict_to_normal(
                           observed_fisher(model, theta, noise, quad), report.filtration.Wbasis);
                       Eigen::SelfAdjointEigenSolver<Matrix> es(i_obs_w);
                       per_snr[si].lambda_min = es.eigenvalues().minCoeff();
                       for (std::size_t k = 0; k < report.filtration.Ubases.size(); ++k) {
                         const Matrix& u = report.filtration.Ubases[k];
                         if (u.cols() == 0) continue;
                         const Vector h = u.col(0);
                         const auto [value, prediction] = layer_bilinear(
                             model, theta, noise, h, h, report.filtration, quad);
                         LayerRow row;
                         row.layer = static_cast<int>(k) + 1;
                         row.snr = snr_grid[si];
                         row.value = value;
                         row.prediction = prediction;
                         row.ratio = prediction != 0.0 ? value / prediction : 0.0;
                         per_snr[si].rows.push_back(row);
                       }
                     });

  for (std::size_t si = 0; si < snr_grid.size(); ++si) {
    for (const LayerRow& row : per_snr[si].rows) report.rows.push_back(row);
    report.fisher_min_eig.emplace_back(snr_grid[si], per_snr[si].lambda_min);
  }
  try {
    report.lambda_slope = fit_loglog_slope(report.fisher_min_eig);
    report.slope_ok = true;
  } catch (const std::invalid_argument&) {
  }
  return report;
}

// --- writers -------------------------------------------------------------------

std::string render_info_csv(const InfoSweepReport& report) {
  std::string csv = "model,snr,L,op_norm_discrepancy,min_eig_R,fisher_min_eig,cond_sigma\n";
  for (const InfoSweepRow& r : report.rows)
    csv += report.model_name + "," + fmt17(r.snr) + "," + std::to_string(r.L) + "," +
           fmt17(r.op_norm) + "," + fmt17(r.r_min_eig) + "," + fmt17(r.fisher_min_eig) + "," +
           fmt17(r.cond_sigma) + "\n";
  return csv;
}

std::string render_mse_csv(const MseReport& report) {
  std::string csv = "estimator,n,snr,mse,trials_used,std_error,nonconverged\n";
  for (const MseRow& r : report.rows)
    csv += r.estimator + "," + std::to_string(r.n) + "," + fmt17(r.snr) + "," + fmt17(r.mse) +
           "," + std::to_string(r.trials_used) + "," + fmt17(r.std_error) + "," +
           std::to_string(r.nonconverged) + "\n";
  return csv;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json matrix_to_json(const Matrix& m) {
  json cols = json::array();
  for (int c = 0; c < m.cols(); ++c) {
    json col = json::array();
    for (int r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
    cols.push_back(col);
  }
  return cols;
}

}  // namespace

void write_info_outputs(const SweepConfig& config, const InfoSweepReport& report,
                        const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/report.csv", render_info_csv(report));

  json slopes = json::object();
  for (const auto& [L, fit] : report.slope_per_L)
    slopes[std::to_string(L)] = {{"slope", fit.slope}, {"r2", fit.r2}, {"points", fit.points_used}};
  json rows = json::array();
  for (const InfoSweepRow& r : report.rows)
    rows.push_back({{"snr", r.snr},
                    {"L", r.L},
                    {"op_norm_discrepancy", r.op_norm},
                    {"min_eig_R", r.r_min_eig},
                    {"fisher_min_eig", r.fisher_min_eig},
                    {"cond_sigma", r.cond_sigma}});
  json out{{"model", report.model_name}, {"rows", rows}, {"slope_per_L", slopes},
           {"config", config_echo(config)}};
  write_text(dir + "/report.json", out.dump(2) + "\n");

  std::map<int, SvgSeries> series_by_l;
  for (const InfoSweepRow& r : report.rows) {
    SvgSeries& s = series_by_l[r.L];
    s.label = "L=" + std::to_string(r.L);
    if (r.op_norm > 0.0) s.points.emplace_back(r.snr, r.op_norm);
  }
  std::vector<SvgSeries> series;
  std::vector<SvgRefLine> refs;
  for (auto& [L, s] : series_by_l) {
    if (!s.points.empty()) {
      const auto& [xa, ya] = s.points.back();
      refs.push_back({static_cast<double>(L + 1), xa, ya, ""});
    }
    series.push_back(std::move(s));
  }
  write_loglog_svg(dir + "/plot.svg", "Fisher vs weighted-moment information discrepancy",
                   "SNR", "operator norm", series, refs);
  write_manifest(config, dir, {"report.csv", "report.json", "plot.svg"});
}

void write_mse_outputs(const SweepConfig& config, const MseReport& report,
                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir + "/report.csv", render_mse_csv(report));

  std::string trials_csv = "estimator,snr,n,trial,substream_seed,err2,converged,iterations\n";
  for (const MseTrialRow& r : report.trial_rows)
    trials_csv += r.estimator + "," + fmt17(r.snr) + "," + std::to_string(r.n) + "," +
                  std::to_string(r.trial) + "," + std::to_string(r.substream_seed) + "," +
                  fmt17(r.err2) + "," + (r.converged ? "1" : "0") + "," +
                  std::to_string(r.iterations) + "\n";
  write_text(dir + "/trials.csv", trials_csv);

  json slopes = json::object();
  for (const auto& [key, fit] : report.n_slope)
    slopes[key] = {{"slope", fit.slope}, {"r2", fit.r2}, {"points", fit.points_used}};
  json rows = json::array();
  for (const MseRow& r : report.rows)
    rows.push_back({{"estimator", r.estimator},
                    {"n", r.n},
                    {"snr", r.snr},
                    {"mse", r.mse},
                    {"trials_used", r.trials_used},
                    {"std_error", r.std_error},
                    {"nonconverged", r.nonconverged}});
  json out{{"rows", rows}, {"n_slope", slopes}, {"config", config_echo(config)}};
  write_text(dir + "/report.json", out.dump(2) + "\n");

  std::map<std::string, SvgSeries> by_est;
  for (const MseRow& r : report.rows) {
    if (!(r.mse > 0.0)) continue;
    SvgSeries& s = by_est[r.estimator + "@" + fmt17(r.snr)];
    s.label = r.estimator;
    s.points.emplace_back(static_cast<double>(r.n), r.mse);
  }
  std::vector<SvgSeries> series;
  std::vector<SvgRefLine> refs;
  for (auto& [key, s] : by_est) {
    if (!s.points.empty() && s.points.size() >= 2) {
      const auto& [xa, ya] = s.points.front();
      refs.push_back({-1.0, xa, ya, ""});
    }
    series.push_back(std::move(s));
  }
  write_loglog_svg(dir + "/plot.svg", "Normalized MSE vs sample size", "n", "MSE", series, refs);
  write_manifest(config, dir, {"report.csv", "trials.csv", "report.json", "plot.svg"});
}

void write_layers_outputs(const SweepConfig& config, const LayersReport& report,
                          const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "layer,snr,value,prediction,ratio\n";
  for (const LayerRow& r : report.rows)
    csv += std::to_string(r.layer) + "," + fmt17(r.snr) + "," + fmt17(r.value) + "," +
           fmt17(r.prediction) + "," + fmt17(r.ratio) + "\n";
  write_text(dir + "/report.csv", csv);

  const Filtration& f = report.filtration;
  json layers = json::array();
  for (std::size_t k = 0; k < f.Ubases.size(); ++k)
    layers.push_back({{"k", k + 1},
                      {"dim", f.Ubases[k].cols()},
                      {"basis", matrix_to_json(f.Ubases[k])}});
  json rows = json::array();
  for (const LayerRow& r : report.rows)
    rows.push_back({{"layer", r.layer},
                    {"snr", r.snr},
                    {"value", r.value},
                    {"prediction", r.prediction},
                    {"ratio", r.ratio}});
  json lmin = json::array();
  for (const auto& [snr, v] : report.fisher_min_eig) lmin.push_back({{"snr", snr}, {"lambda_min", v}});
  json out{{"r_loc", f.reached ? json(f.r_loc) : json("unreached")},
           {"tol", f.tol},
           {"layers", layers},
           {"rows", rows},
           {"fisher_min_eig", lmin},
           {"config", config_echo(config)}};
  if (report.slope_ok)
    out["lambda_min_slope"] = {{"slope", report.lambda_slope.slope}, {"r2", report.lambda_slope.r2}};
  write_text(dir + "/report.json", out.dump(2) + "\n");

  std::map<int, SvgSeries> by_layer;
  for (const LayerRow& r : report.rows) {
    SvgSeries& s = by_layer[r.layer];
    s.label = "layer " + std::to_string(r.layer);
    if (r.value > 0.0) s.points.emplace_back(r.snr, r.value);
  }
  std::vector<SvgSeries> series;
  std::vector<SvgRefLine> refs;
  for (auto& [k, s] : by_layer) {
    if (!s.points.empty()) {
      const auto& [xa, ya] = s.points.back();
      refs.push_back({static_cast<double>(k), xa, ya, ""});
    }
    series.push_back(std::move(s));
  }
  SvgSeries lmin_series;
  lmin_series.label = "lambda_min";
  for (const auto& [snr, v] : report.fisher_min_eig)
    if (v > 0.0) lmin_series.points.emplace_back(snr, v);
  series.push_back(std::move(lmin_series));
  write_loglog_svg(dir + "/plot.svg", "Layer diagonal values and Fisher smallest eigenvalue",
                   "SNR", "value", series, refs);
  write_manifest(config, dir, {"report.csv", "report.json", "plot.svg"});
}

void write_validate_outputs(const SweepConfig& config,
                            const std::vector<std::pair<std::string, bool>>& checks,
                            const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "check,pass\n";
  json rows = json::array();
  for (const auto& [name, ok] : checks) {
    csv += name + "," + (ok ? "1" : "0") + "\n";
    rows.push_back({{"check", name}, {"pass", ok}});
  }
  write_text(dir + "/report.csv", csv);
  json out{{"checks", rows}, {"config", config_echo(config)}};
  write_text(dir + "/report.json", out.dump(2) + "\n");
  write_manifest(config, dir, {"report.csv", "report.json"});
}

// --- validate -------------------------------------------------------------------

namespace {

using Check = std::pair<std::string, bool>;

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
  Vector g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

std::vector<Check> validation_checks() {
  std::vector<Check> checks;
  Rng rng(20260825);

  {  // Hermite orthogonality under the standard normal, by quadrature
    bool ok = true;
    QuadratureSpec quad;
    const TensorGrid grid = tensor_grid(2, quad);
    for (int k = 1; k <= 3 && ok; ++k)
      for (int l = 1; l <= 3 && ok; ++l) {
        SymTensor a = sym_zero(2, k), b = sym_zero(2, l);
        for (int i = 0; i < a.coords.size(); ++i) a.coords[i] = rng.normal();
        for (int i = 0; i < b.coords.size(); ++i) b.coords[i] = rng.normal();
        double acc = 0.0;
        for (std::int64_t p = 0; p < grid.weights.size(); ++p) {
          const Vector x = grid.nodes.row(p).transpose();
          acc += grid.weights[p] * sym_inner(hermite_tensor(k, x), a) *
                 sym_inner(hermite_tensor(l, x), b);
        }
        double expected = 0.0;
        if (k == l) {
          double kfact = 1.0;
          for (int i = 2; i <= k; ++i) kfact *= i;
          expected = kfact * sym_inner(a, b);
        }
        ok = std::abs(acc - expected) <= 1e-8 * std::max(1.0, std::abs(expected));
      }
    checks.emplace_back("hermite_orthogonality", ok);
  }

  {  // pure-noise feature covariance has the closed diagonal form
    const LatentModel model = build_model({"cyclic_mra", 2, 0});
    const Vector theta = (Vector(2) << 0.7, -0.4).finished();
    QuadratureSpec quad;
    const Matrix cov =
        population_feature_covariance(model, theta, NoiseSpec{0.0, 1.0}, 3, quad);
    const Matrix expected = gaussian_limit_covariance(2, 3);
    checks.emplace_back("pure_noise_covariance",
                        (cov - expected).cwiseAbs().maxCoeff() <= 1e-8);
  }

  {  // analytic score against finite differences, all built-in families
    bool ok = true;
    const std::vector<ModelSpec> specs = {{"gmm", 2, 2},       {"cyclic_mra", 3, 0},
                                          {"sign_flip", 2, 0}, {"permutation", 3, 0},
                                          {"dihedral_mra", 3, 0}};
    for (const ModelSpec& spec : specs) {
      const LatentModel model = build_model(spec);
      for (int probe = 0; probe < 10 && ok; ++probe) {
        Vector theta(model.m), y(model.d);
        for (int i = 0; i < model.m; ++i) theta[i] = rng.normal();
        for (int i = 0; i < model.d; ++i) y[i] = 1.5 * rng.normal();
        const NoiseSpec noise{0.4 + 0.8 * rng.uniform01(), 0.6 + 0.8 * rng.uniform01()};
        const Vector analytic = score(model, theta, noise, y);
        const Vector fd = fd_gradient(
            [&](const Vector& t) { return marginal_log_density(model, t, noise, y); }, theta,
            1e-5);
        ok = (analytic - fd).norm() <= 1e-5 * std::max(1.0, analytic.norm());
      }
    }
    checks.emplace_back("score_gradient", ok);
  }

  {  // PSD discrepancy on a true mixture, exact coincidence on no mixture
    QuadratureSpec quad;
    const LatentModel mixture = build_model({"cyclic_mra", 2, 0});
    const Vector theta1 = (Vector(2) << 1.1, -0.6).finished();
    const Filtration f1 = moment_filtration(mixture, theta1, 2);
    const InfoReport r1 =
        info_discrepancy(mixture, theta1, noise_from_snr(0.04), 2, f1, quad);
    bool ok = r1.R_min_eig >= -1e-8 && r1.discrepancy_op_norm > 0.0;

    const LatentModel single = build_model({"gmm", 2, 1});
    const Vector theta2 = (Vector(2) << 0.5, 1.25).finished();
    const Filtration f2 = moment_filtration(single, theta2, 1);
    const InfoReport r2 =
        info_discrepancy(single, theta2, NoiseSpec{0.4, 1.0}, 1, f2, quad);
    ok = ok && r2.discrepancy_op_norm <= 1e-10;
    checks.emplace_back("psd_discrepancy", ok);
  }

  {  // three-layer structure of the shift model at the reference point
    const LatentModel model = build_model({"cyclic_mra", 3, 0});
    const Vector theta = (Vector(3) << 1.0, 2.0, -4.0).finished();
    const Filtration f = moment_filtration(model, theta, 3);
    auto span_matches = [&](const Matrix& u, std::initializer_list<double> v) {
      Vector ref(3);
      int i = 0;
      for (double x : v) ref[i++] = x;
      ref.normalize();
      return u.cols() == 1 && std::abs(std::abs(u.col(0).dot(ref)) - 1.0) <= 1e-9;
    };
    const bool ok = f.reached && f.r_loc == 3 && span_matches(f.Ubases[0], {1, 1, 1}) &&
                    span_matches(f.Ubases[1], {4, 7, -11}) &&
                    span_matches(f.Ubases[2], {-6, 5, 1});
    checks.emplace_back("shift_model_layers", ok);
  }

  return checks;
}

}  // namespace

int run_validate(const SweepConfig& config, std::ostream& log) {
  (void)config;
  int failures = 0;
  for (const auto& [name, ok] : validation_checks()) {
    log << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  }
  return failures;
}

int run_experiment(const SweepConfig& config) {
  if (config.experiment == "info_sweep") {
    write_info_outputs(config, run_info_sweep(config), config.output_dir);
    return 0;
  }
  if (config.experiment == "mse_sweep") {
    write_mse_outputs(config, run_mse_sweep(config), config.output_dir);
    return 0;
  }
  if (config.experiment == "layers") {
    write_layers_outputs(config, run_layers_report(config), config.output_dir);
    return 0;
  }
  if (config.experiment == "validate") {
    const auto checks = validation_checks();
    int failures = 0;
    for (const auto& [name, ok] : checks) {
      std::printf("%s %s\n", ok ? "PASS" : "FAIL", name.c_str());
      if (!ok) ++failures;
    }
    write_validate_outputs(config, checks, config.output_dir);
    return failures == 0 ? 0 : 1;
  }
  throw std::invalid_argument("unknown experiment '" + config.experiment + "'");
}

}  // namespace lowsnr
