#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "plgp/common.hpp"
#include "plgp/dml.hpp"
#include "plgp/errors.hpp"
#include "plgp/hyperopt.hpp"
#include "plgp/io.hpp"
#include "plgp/synthetic.hpp"

namespace plgp {

/// Benchmark grid: one cell per (method, sample size, seed).
struct ExperimentConfig {
  std::vector<std::string> methods{"plgp", "dml_linear"};
  std::vector<int> sample_sizes;
  std::vector<std::uint64_t> seeds;
  SimSpec sim{};  // n and seed are overridden per cell
  bool fit_hyperparameters{true};
  FitOptions fit_options{};
  DmlConfig dml{};
  int jobs{0};  // 0 -> hardware concurrency
  std::uint64_t master_seed{0};

  void validate() const {
    if (methods.empty()) throw config_error("ExperimentConfig: methods must be nonempty");
    if (sample_sizes.empty()) throw config_error("ExperimentConfig: sample_sizes must be nonempty");
    if (seeds.empty()) throw config_error("ExperimentConfig: seeds must be nonempty");
    for (const auto& m : methods)
      if (m != "plgp" && m != "dml_linear")
        throw config_error("ExperimentConfig: unknown method '" + m + "'");
    for (int n : sample_sizes)
      if (n < 1) throw config_error("ExperimentConfig: sample sizes must be positive");
    sim.validate();
  }
};

struct CellResult {
  std::string method;
  int n{0};
  std::uint64_t seed{0};
  double mse{std::numeric_limits<double>::quiet_NaN()};
  double wall_ms{0.0};
  double beta_theta{std::numeric_limits<double>::quiet_NaN()};
  double beta_f{std::numeric_limits<double>::quiet_NaN()};
  double s_eps{std::numeric_limits<double>::quiet_NaN()};
  std::string error;
};

namespace detail {

inline std::uint64_t method_tag(const std::string& method) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : method) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace detail

/// Runs one grid cell. The cell's RNG stream is derived from
/// (master_seed, method, n, seed) so the result never depends on how cells
/// are scheduled across workers.
inline CellResult run_cell(const ExperimentConfig& cfg, const std::string& method, int n,
                           std::uint64_t seed) {
  CellResult cell;
  cell.method = method;
  cell.n = n;
  cell.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::uint64_t cell_seed = mix_seed(
        mix_seed(cfg.master_seed, detail::method_tag(method)),
        mix_seed(static_cast<std::uint64_t>(n), seed));
    SimSpec spec = cfg.sim;
    spec.n = n;
    spec.seed = cell_seed;
    const SimOutput sim = simulate(spec);

    Eigen::VectorXd estimate;
    if (method == "plgp") {
      ModelConfig model_cfg = cfg.fit_options.warm_start;
      if (cfg.fit_hyperparameters) {
        FitOptions opts = cfg.fit_options;
        opts.seed = cell_seed;
        const HyperFitResult fit = fit_hyperparameters(sim.data, opts);
        model_cfg = fit.config;
      }
      estimate = posterior_cate(model_cfg, sim.data, sim.x_query).mean;
      cell.beta_theta = model_cfg.kernel_theta.beta;
      cell.beta_f = model_cfg.kernel_f.beta;
      cell.s_eps = model_cfg.noise_precision;
    } else {
      DmlConfig dml_cfg = cfg.dml;
      dml_cfg.seed = cell_seed;
      estimate = dml_linear_cate(sim.data, sim.x_query, dml_cfg);
    }
    cell.mse = (estimate - sim.true_cate).squaredNorm() / static_cast<double>(spec.m);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  cell.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return cell;
}

/// Runs the full grid on a worker pool. Output order is the deterministic
/// (method, n, seed) iteration order regardless of scheduling.
inline std::vector<CellResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    std::string method;
    int n;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& method : cfg.methods)
    for (int n : cfg.sample_sizes)
      for (std::uint64_t seed : cfg.seeds) tasks.push_back({method, n, seed});

  std::vector<CellResult> results(tasks.size());
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = run_cell(cfg, tasks[i].method, tasks[i].n, tasks[i].seed);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

/// CSV emission: one row per cell, then a commented summary block with the
/// per-(method, n) median MSE. 6 significant digits, '\n' line endings.
inline std::string results_to_csv(const std::vector<CellResult>& results) {
  std::ostringstream out;
  out << "method,n,seed,mse,wall_ms,fitted_beta_theta,fitted_beta_f,fitted_s_eps,error\n";
  for (const auto& c : results) {
    out << c.method << ',' << c.n << ',' << c.seed << ',' << format_number(c.mse) << ','
        << format_number(c.wall_ms) << ',' << format_number(c.beta_theta) << ','
        << format_number(c.beta_f) << ',' << format_number(c.s_eps) << ',' << c.error << '\n';
  }
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  for (const auto& c : results)
    if (c.error.empty()) groups[{c.method, c.n}].push_back(c.mse);
  out << "# summary\n# method,n,median_mse\n";
  for (const auto& [key, values] : groups)
    out << "# " << key.first << ',' << key.second << ',' << format_number(detail::median(values))
        << '\n';
  return out.str();
}

inline double median_mse(const std::vector<CellResult>& results, const std::string& method,
                         int n) {
  std::vector<double> v;
  for (const auto& c : results)
    if (c.method == method && c.n == n && c.error.empty()) v.push_back(c.mse);
  return detail::median(v);
}

}  // namespace plgp
