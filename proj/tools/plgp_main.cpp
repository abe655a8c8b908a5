// plgp: partially linear Gaussian-process CATE estimation.
// Subcommands: simulate, fit-predict, experiment, kl-check.
// Exit codes: 0 ok, 1 IO failure, 2 usage/config error, 3 numerical failure.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plgp/plgp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

plgp::FunctionSource parse_source(const std::string& s) {
  if (s == "gp") return plgp::FunctionSource::GpDraw;
  if (s == "linear") return plgp::FunctionSource::RandomLinear;
  throw plgp::config_error("function source must be 'gp' or 'linear', got '" + s + "'");
}

plgp::PropensityModel parse_propensity(const std::string& s) {
  if (s == "logistic-linear") return plgp::PropensityModel::LogisticLinear;
  if (s == "logistic-gp") return plgp::PropensityModel::LogisticGpDraw;
  throw plgp::config_error("propensity must be 'logistic-linear' or 'logistic-gp'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) seeds.push_back(std::stoull(item));
  }
  return seeds;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

struct SimFlags {
  plgp::SimSpec spec;
  std::string theta_source{"gp"};
  std::string f_source{"gp"};
  std::string propensity{"logistic-linear"};
  double beta_theta{1.0};
  double beta_f{1.0};

  void add_options(CLI::App* cmd, bool with_n_seed) {
    if (with_n_seed) {
      cmd->add_option("--n", spec.n, "sample size");
      cmd->add_option("--seed", spec.seed, "simulation seed");
    }
    cmd->add_option("--m", spec.m, "number of query points");
    cmd->add_option("--d", spec.d, "covariate dimension");
    cmd->add_option("--theta", theta_source, "effect function source: gp|linear");
    cmd->add_option("--f", f_source, "nuisance function source: gp|linear");
    cmd->add_option("--beta-theta", beta_theta, "RBF bandwidth of the effect prior");
    cmd->add_option("--beta-f", beta_f, "RBF bandwidth of the nuisance prior");
    cmd->add_option("--s-eps", spec.noise_precision, "noise precision");
    cmd->add_option("--propensity", propensity, "logistic-linear|logistic-gp");
    cmd->add_option("--clip", spec.clip, "propensity clipping bound, in (0, 0.5)");
  }

  plgp::SimSpec resolve() const {
    plgp::SimSpec out = spec;
    out.theta_source = parse_source(theta_source);
    out.f_source = parse_source(f_source);
    out.propensity = parse_propensity(propensity);
    out.theta_kernel = plgp::KernelSpec::rbf(beta_theta);
    out.f_kernel = plgp::KernelSpec::rbf(beta_f);
    return out;
  }
};

int default_jobs() {
  if (const char* env = std::getenv("PLGP_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // auto
}

int cmd_simulate(const SimFlags& flags, const std::string& output_path) {
  const plgp::SimOutput sim = plgp::simulate(flags.resolve());
  plgp::write_text_file(output_path, plgp::sim_output_to_json(sim).dump(2) + "\n");
  return kExitOk;
}

int cmd_fit_predict(const std::string& input_path, const std::string& output_path,
                    bool no_hyperfit, const plgp::ModelConfig& given_cfg,
                    const plgp::FitOptions& fit_opts) {
  const plgp::DatasetWithQuery in = plgp::dataset_from_json(plgp::load_json_file(input_path));
  plgp::ModelConfig cfg = given_cfg;
  if (!no_hyperfit) {
    plgp::FitOptions opts = fit_opts;
    opts.warm_start = given_cfg;
    cfg = plgp::fit_hyperparameters(in.data, opts).config;
  }
  const plgp::PosteriorPredictive post = plgp::posterior_cate(cfg, in.data, in.x_query);

  std::ostringstream csv;
  csv << "query_index,cate_mean,cate_var\n";
  for (Eigen::Index i = 0; i < post.mean.size(); ++i)
    csv << i << ',' << plgp::format_number(post.mean(i)) << ','
        << plgp::format_number(std::max(0.0, post.cov(i, i))) << '\n';
  plgp::write_text_file(output_path, csv.str());
  return kExitOk;
}

int cmd_experiment(const plgp::ExperimentConfig& cfg, const std::string& output_path) {
  const std::vector<plgp::CellResult> results = plgp::run_experiment(cfg);
  bool any_ok = false;
  for (const auto& c : results) any_ok = any_ok || c.error.empty();
  plgp::write_text_file(output_path, plgp::results_to_csv(results));

  // effective-config sidecar for provenance
  nlohmann::json side;
  side["methods"] = cfg.methods;
  side["sample_sizes"] = cfg.sample_sizes;
  side["seeds"] = cfg.seeds;
  side["fit_hyperparameters"] = cfg.fit_hyperparameters;
  side["master_seed"] = cfg.master_seed;
  side["jobs"] = cfg.jobs;
  side["sim"] = {{"m", cfg.sim.m},
                 {"d", cfg.sim.d},
                 {"noise_precision", cfg.sim.noise_precision},
                 {"clip", cfg.sim.clip}};
  plgp::write_text_file(output_path + ".config.json", side.dump(2) + "\n");
  return any_ok ? kExitOk : kExitNumerical;
}

// Randomized sweep over the appendix inequalities; fails (exit 3) on any
// violation.
int cmd_kl_check(int pairs, int mc_pairs, int mc_samples, std::uint64_t seed,
                 const std::string& output_path) {
  std::mt19937_64 rng = plgp::make_rng(seed, 0x6b6cu);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> grid_size(8, 64);

  auto random_pair = [&]() {
    plgp::DensityPair pair;
    const int g = grid_size(rng);
    pair.theta0.resize(g);
    pair.f0.resize(g);
    pair.theta1.resize(g);
    pair.f1.resize(g);
    pair.propensity.resize(g);
    Eigen::VectorXd w(g);
    for (int i = 0; i < g; ++i) {
      pair.theta0(i) = gauss(rng);
      pair.f0(i) = gauss(rng);
      pair.theta1(i) = gauss(rng);
      pair.f1(i) = gauss(rng);
      pair.propensity(i) = u01(rng);
      w(i) = u01(rng) + 1e-3;
    }
    pair.weights = w / w.sum();
    pair.weights(g - 1) += 1.0 - pair.weights.sum();  // exact normalization
    pair.noise_precision = 0.25 + 2.0 * u01(rng);
    return pair;
  };

  int bound_violations = 0;
  for (int k = 0; k < pairs; ++k) {
    const plgp::DensityPair pair = random_pair();
    if (plgp::kl_divergence(pair) > plgp::kl_upper_bound(pair)) ++bound_violations;
  }

  int pinsker_violations = 0;
  for (int k = 0; k < mc_pairs; ++k) {
    const plgp::DensityPair pair = random_pair();
    const plgp::McEstimate est = plgp::mc_l1_distance(pair, mc_samples, rng);
    if (est.value > plgp::l1_distance_bound(pair) + 3.0 * est.std_error) ++pinsker_violations;
  }

  std::ostringstream report;
  report << "kl_upper_bound sweep: " << pairs - bound_violations << "/" << pairs << " pairs ok\n"
         << "pinsker sweep: " << mc_pairs - pinsker_violations << "/" << mc_pairs
         << " pairs ok\n";
  std::cout << report.str();
  if (!output_path.empty()) plgp::write_text_file(output_path, report.str());
  return (bound_violations == 0 && pinsker_violations == 0) ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian CATE estimation under a partially linear GP model"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic dataset as JSON");
  SimFlags sim_flags;
  sim_flags.add_options(sim_cmd, true);
  std::string sim_out;
  sim_cmd->add_option("-o,--output", sim_out, "output JSON path")->required();

  // fit-predict
  auto* fit_cmd = app.add_subcommand("fit-predict", "fit the model and predict CATE at query points");
  std::string fit_in, fit_out;
  bool no_hyperfit = false;
  plgp::ModelConfig fit_cfg;
  plgp::FitOptions fit_opts;
  double fp_beta_theta = 1.0, fp_beta_f = 1.0, fp_s_eps = 1.0;
  fit_cmd->add_option("-i,--input", fit_in, "input JSON (dataset + x_query)")->required();
  fit_cmd->add_option("-o,--output", fit_out, "output predictions CSV")->required();
  fit_cmd->add_flag("--no-hyperfit", no_hyperfit, "use the provided hyperparameters as-is");
  fit_cmd->add_option("--beta-theta", fp_beta_theta, "effect kernel bandwidth");
  fit_cmd->add_option("--beta-f", fp_beta_f, "nuisance kernel bandwidth");
  fit_cmd->add_option("--s-eps", fp_s_eps, "noise precision");
  fit_cmd->add_option("--restarts", fit_opts.restarts, "optimizer restarts");
  fit_cmd->add_option("--max-iters", fit_opts.max_iters, "optimizer iteration cap");
  fit_cmd->add_option("--fit-seed", fit_opts.seed, "optimizer restart seed");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "run the benchmark grid and emit CSV");
  SimFlags exp_sim;
  exp_sim.add_options(exp_cmd, false);
  std::string methods_csv = "plgp,dml_linear";
  std::string sizes_csv, seeds_csv, exp_out, config_path;
  bool exp_no_hyperfit = false;
  int jobs = default_jobs();
  std::uint64_t master_seed = 0;
  int exp_restarts = 5, exp_max_iters = 200;
  exp_cmd->add_option("--methods", methods_csv, "comma list from {plgp,dml_linear}");
  exp_cmd->add_option("--sizes", sizes_csv, "comma list of sample sizes");
  exp_cmd->add_option("--seeds", seeds_csv, "comma list of seeds");
  exp_cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  exp_cmd->add_option("--jobs", jobs, "worker threads (env PLGP_JOBS as fallback)");
  exp_cmd->add_option("--master-seed", master_seed, "master seed for cell RNG derivation");
  exp_cmd->add_option("--restarts", exp_restarts, "optimizer restarts per cell");
  exp_cmd->add_option("--max-iters", exp_max_iters, "optimizer iteration cap per cell");
  exp_cmd->add_flag("--no-hyperfit", exp_no_hyperfit, "skip marginal-likelihood fitting");
  exp_cmd->add_option("-o,--output", exp_out, "output results CSV")->required();

  // kl-check
  auto* kl_cmd = app.add_subcommand("kl-check", "randomized sweep of the KL/Pinsker bounds");
  int kl_pairs = 1000, kl_mc_pairs = 50, kl_mc_samples = 100000;
  std::uint64_t kl_seed = 0;
  std::string kl_out;
  kl_cmd->add_option("--pairs", kl_pairs, "pairs for the closed-form bound sweep");
  kl_cmd->add_option("--mc-pairs", kl_mc_pairs, "pairs for the Monte Carlo L1 sweep");
  kl_cmd->add_option("--mc-samples", kl_mc_samples, "Monte Carlo samples per pair");
  kl_cmd->add_option("--seed", kl_seed, "sweep seed");
  kl_cmd->add_option("-o,--output", kl_out, "optional report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message/help
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim_flags, sim_out);
    if (fit_cmd->parsed()) {
      fit_cfg.kernel_theta = plgp::KernelSpec::rbf(fp_beta_theta);
      fit_cfg.kernel_f = plgp::KernelSpec::rbf(fp_beta_f);
      fit_cfg.noise_precision = fp_s_eps;
      return cmd_fit_predict(fit_in, fit_out, no_hyperfit, fit_cfg, fit_opts);
    }
    if (exp_cmd->parsed()) {
      plgp::ExperimentConfig cfg;
      if (!config_path.empty()) {
        const nlohmann::json j = plgp::load_json_file(config_path);
        if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
        if (j.contains("sample_sizes")) cfg.sample_sizes = j["sample_sizes"].get<std::vector<int>>();
        if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("fit_hyperparameters")) cfg.fit_hyperparameters = j["fit_hyperparameters"].get<bool>();
        if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
      }
      // flags override the config file
      if (exp_cmd->count("--methods") || cfg.methods.empty())
        cfg.methods = [&] {
          std::vector<std::string> out;
          std::stringstream ss(methods_csv);
          std::string item;
          while (std::getline(ss, item, ',')) if (!item.empty()) out.push_back(item);
          return out;
        }();
      if (!sizes_csv.empty()) cfg.sample_sizes = parse_int_list(sizes_csv);
      if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
      if (exp_cmd->count("--master-seed")) cfg.master_seed = master_seed;
      if (exp_no_hyperfit) cfg.fit_hyperparameters = false;
      cfg.sim = exp_sim.resolve();
      cfg.jobs = jobs;
      cfg.fit_options.restarts = exp_restarts;
      cfg.fit_options.max_iters = exp_max_iters;
      return cmd_experiment(cfg, exp_out);
    }
    if (kl_cmd->parsed())
      return cmd_kl_check(kl_pairs, kl_mc_pairs, kl_mc_samples, kl_seed, kl_out);
  } catch (const plgp::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const plgp::shape_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const plgp::numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
