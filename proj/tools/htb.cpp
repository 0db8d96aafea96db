#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "htb/baselines.hpp"
#include "htb/design.hpp"
#include "htb/environments.hpp"
#include "htb/errors.hpp"
#include "htb/harness.hpp"
#include "htb/kernelized.hpp"
#include "htb/medpe.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct RunFlags {
  std::optional<std::string> preset;
  std::optional<std::vector<std::size_t>> dims;
  std::optional<std::uint64_t> T;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> upsilon;
  std::optional<std::vector<std::string>> algos;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::optional<std::uint64_t> stride;
  std::optional<double> budget_scale;
  std::optional<std::string> noise;
  std::optional<std::string> action_set;
  std::optional<double> ucb_width;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool multi) {
  cmd->add_option("--preset", f.preset, "named preset (appendix-d)");
  if (multi) {
    cmd->add_option("--d", f.dims, "dimensions")->delimiter(',');
    cmd->add_option("--reps", f.reps, "repetitions per (algorithm, d)");
    cmd->add_option("--algo", f.algos, "medpe and/or crtm_style_ucb")->delimiter(',');
    cmd->add_option("--jobs", f.jobs, "concurrent runs");
  } else {
    cmd->add_option("--d", f.dims, "dimension");
    cmd->add_option("--algo", f.algos, "medpe or crtm_style_ucb");
  }
  cmd->add_option("--T", f.T, "horizon");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--epsilon", f.epsilon, "moment order is 1 + epsilon");
  cmd->add_option("--upsilon", f.upsilon, "noise moment bound (default: analytic)");
  cmd->add_option("--out", f.out, "output directory")->envname("HTB_OUT");
  cmd->add_option("--checkpoint-stride", f.stride, "log every N rounds");
  cmd->add_option("--budget-scale", f.budget_scale, "multiplier on phase budgets");
  cmd->add_option("--noise", f.noise, "zero | gaussian:S | student_t:DF | pareto:A,S");
  cmd->add_option("--action-set", f.action_set,
                  "signed_basis | simplex_basis | sphere_random:N | hypercube_random:N");
  cmd->add_option("--ucb-width", f.ucb_width, "width constant of the UCB baseline");
}

htb::ExperimentConfig resolve(const RunFlags& f) {
  htb::ExperimentConfig cfg = f.preset ? htb::preset_by_name(*f.preset) : htb::ExperimentConfig{};
  if (f.dims) cfg.dims = *f.dims;
  if (f.T) cfg.T = *f.T;
  if (f.reps) cfg.reps = *f.reps;
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.upsilon) cfg.upsilon = *f.upsilon;
  if (f.algos) cfg.algorithms = *f.algos;
  if (f.out) cfg.out_dir = *f.out;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.stride) cfg.checkpoint_stride = *f.stride;
  if (f.budget_scale) cfg.budget_scale = *f.budget_scale;
  if (f.ucb_width) cfg.ucb_width = *f.ucb_width;
  if (f.action_set) cfg.action_set = *f.action_set;
  if (f.noise) {
    try {
      cfg.noise = htb::parse_noise(*f.noise);
    } catch (const htb::DomainError& e) {
      throw htb::ConfigError(e.what());
    }
  }
  return cfg;
}

void print_final_rows(const htb::ExperimentConfig& cfg, const htb::AggregateResult& result) {
  std::printf("%-16s %6s %10s %16s %14s %6s\n", "algorithm", "d", "t", "mean_regret", "std_regret", "runs");
  for (const auto& algo : cfg.algorithms) {
    for (const auto d : cfg.dims) {
      if (const auto row = result.final_row(algo, d)) {
        std::printf("%-16s %6zu %10llu %16.6f %14.6f %6zu\n", algo.c_str(), d,
                    static_cast<unsigned long long>(row->t), row->mean, row->std, row->n_runs);
      }
    }
  }
}

int cmd_design(std::size_t d, const std::string& action_set, std::uint64_t T, double epsilon, std::uint64_t seed) {
  htb::ExperimentConfig cfg;
  cfg.action_set = action_set;
  cfg.master_seed = seed;
  cfg.epsilon = epsilon;
  cfg.T = T;
  cfg.checkpoint_stride = 1;
  cfg.dims = {d};
  cfg.validate();
  const htb::LinearInstance inst = htb::build_instance(cfg, d);
  const double gamma = std::pow(static_cast<double>(T), -2.0 * epsilon / (1.0 + epsilon));
  const htb::ActionSet& arms = inst.actions();
  const htb::Design g = htb::g_optimal_design(arms, gamma, htb::default_design_iters(arms.dim()));
  const htb::DesignProblem problem{arms, gamma, 1.0, epsilon};
  const double m_g = htb::moment_objective(problem, g);
  const htb::Design refined = htb::minimize_moment_objective(problem, g, 200, 1e-6);
  const double m_r = htb::moment_objective(problem, refined);
  const double bound = 2.0 * std::pow(static_cast<double>(arms.dim()), (1.0 + epsilon) / 2.0);
  std::printf("arms %zu  dim %zu  gamma %.6g  beta 1  epsilon %g\n", arms.size(), arms.dim(), gamma, epsilon);
  std::printf("M(g-optimal)  %.10g\n", m_g);
  std::printf("M(refined)    %.10g\n", m_r);
  std::printf("certificate   2 d^((1+eps)/2) = %.10g  %s\n", bound, m_g <= bound ? "holds" : "VIOLATED");
  std::printf("support:\n");
  for (Eigen::Index i = 0; i < refined.weights.size(); ++i) {
    if (refined.weights(i) > 1e-9) {
      std::printf("  label %lld  weight %.8f\n", static_cast<long long>(arms.label(static_cast<std::size_t>(i))),
                  refined.weights(i));
    }
  }
  return 0;
}

int cmd_simulate(const RunFlags& flags) {
  htb::ExperimentConfig cfg = resolve(flags);
  if (!flags.dims) cfg.dims = {cfg.dims.front()};
  if (!flags.algos) cfg.algorithms = {"medpe"};
  if (cfg.dims.size() != 1 || cfg.algorithms.size() != 1) {
    throw htb::ConfigError("simulate takes a single --d and a single --algo");
  }
  if (!flags.stride) cfg.checkpoint_stride = 1;
  cfg.reps = 1;
  cfg.validate();
  const htb::RunRecord record = htb::run_single(cfg, cfg.algorithms.front(), cfg.dims.front(), 0);
  std::printf("algorithm %s  d %zu  T %llu  seed %llu\n", record.algorithm.c_str(), cfg.dims.front(),
              static_cast<unsigned long long>(cfg.T), static_cast<unsigned long long>(record.seed));
  for (const auto& p : record.phases) {
    std::printf("phase %d  active %zu -> %zu  eps %.6g  budget %llu  rounds %llu  M %.6g\n", p.ell, p.active_before,
                p.active_after, p.accuracy, static_cast<unsigned long long>(p.budget),
                static_cast<unsigned long long>(p.rounds), p.design_value);
  }
  std::printf("final regret %.6f over %llu rounds\n", record.cumulative_regret,
              static_cast<unsigned long long>(record.rounds_played));
  if (flags.out) {
    std::filesystem::create_directories(*flags.out);
    const auto path = std::filesystem::path(*flags.out) / htb::run_file_name(cfg.algorithms.front(), cfg.dims.front(), 0);
    htb::write_run_csv(path, record);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_experiment(const RunFlags& flags) {
  const htb::ExperimentConfig cfg = resolve(flags);
  const htb::AggregateResult result = htb::run_experiment(cfg);
  print_final_rows(cfg, result);
  std::printf("wrote %s\n", cfg.out_dir.string().c_str());
  return 0;
}

int cmd_aggregate(const std::string& dir, const std::string& plot, const std::string& format) {
  const htb::AggregateResult result = htb::aggregate_directory(dir);
  htb::write_aggregate_csv(std::filesystem::path(dir) / "aggregate.csv", result);
  std::printf("aggregated %zu rows into %s\n", result.rows.size(), (std::filesystem::path(dir) / "aggregate.csv").c_str());
  if (!plot.empty()) {
    const auto fmt = format == "json" ? htb::PlotFormat::json : htb::PlotFormat::csv;
    htb::emit_plot_data(result, fmt, plot);
    std::printf("wrote %s\n", plot.c_str());
  }
  return 0;
}

int cmd_exponents(double epsilon, std::size_t d, std::optional<double> nu, std::optional<std::size_t> n) {
  const auto e = htb::theory_exponents(epsilon, d, nu, n);
  auto line = [](const char* name, const htb::RateExponents& r) {
    std::printf("%-14s d^%.6f  (log n)^%.6f  T^%.6f\n", name, r.d, r.log_n, r.T);
  };
  line("linear_upper", e.linear_upper);
  line("linear_lower", e.linear_lower);
  line("finite_upper", e.finite_upper);
  line("finite_lower", e.finite_lower);
  if (e.matern_upper_T) {
    std::printf("%-14s T^%.6f\n", "matern_upper", *e.matern_upper_T);
    std::printf("%-14s T^%.6f\n", "matern_lower", *e.matern_lower_T);
    std::printf("%-14s T^%.6f\n", "matern_design", *e.matern_design_exponent);
  }
  return 0;
}

struct KernelFlags {
  std::string kernel = "matern:2.5,0.2";
  std::size_t points = 50;
  std::uint64_t T = 100000;
  std::uint64_t seed = 1;
  double epsilon = 0.5;
  std::optional<double> upsilon;
  std::string noise = "pareto:2,1";
  std::size_t anchors = 5;
  double budget_scale = 1.0;
};

int cmd_kernel_sim(const KernelFlags& f) {
  const htb::KernelSpec spec = htb::parse_kernel(f.kernel);
  const htb::NoiseSpec noise = htb::parse_noise(f.noise);
  const htb::Discretization grid = htb::discretize_action_set(htb::Interval{0.0, 1.0}, f.points);
  htb::Rng rng(htb::split_seed(f.seed, 7));
  htb::RkhsFunction fstar;
  fstar.anchors.resize(static_cast<Eigen::Index>(f.anchors), 1);
  fstar.coefficients.resize(static_cast<Eigen::Index>(f.anchors));
  for (Eigen::Index j = 0; j < fstar.anchors.rows(); ++j) {
    fstar.anchors(j, 0) = rng.uniform();
    fstar.coefficients(j) = rng.normal();
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.actions.size(); ++i) {
    peak = std::max(peak, std::abs(fstar(spec, grid.actions.vector(i))));
  }
  if (peak > 0.0) fstar.coefficients *= 0.9 / peak;
  htb::MedPeConfig cfg;
  cfg.moment.epsilon = f.epsilon;
  if (f.upsilon) {
    cfg.moment.upsilon = *f.upsilon;
  } else if (const auto m = htb::noise_moment(noise, f.epsilon)) {
    cfg.moment.upsilon = *m;
  } else {
    throw htb::ConfigError("noise has no finite (1+eps)-moment; pass --upsilon");
  }
  cfg.T = f.T;
  cfg.budget_scale = f.budget_scale;
  cfg.checkpoint_stride = f.T;
  const htb::RunRecord record = htb::run_kernel_medpe(grid.actions, fstar, spec, noise, cfg, f.seed);
  std::printf("kernel %s  points %zu  T %llu  rkhs_norm %.4f\n", spec.describe().c_str(), grid.actions.size(),
              static_cast<unsigned long long>(f.T), fstar.rkhs_norm(spec));
  for (const auto& p : record.phases) {
    std::printf("phase %d  active %zu -> %zu  budget %llu  rounds %llu  M %.6g\n", p.ell, p.active_before,
                p.active_after, static_cast<unsigned long long>(p.budget), static_cast<unsigned long long>(p.rounds),
                p.design_value);
  }
  std::printf("final regret %.6f\n", record.cumulative_regret);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed linear bandit simulator"};
  app.set_version_flag("--version", std::string(htb::kLibraryVersion));
  app.set_config("--config", "", "INI file; sections name subcommands, flags override it");
  app.require_subcommand(1);

  std::size_t design_d = 5;
  std::string design_set = "signed_basis";
  std::uint64_t design_T = 100000;
  double design_eps = 0.5;
  std::uint64_t design_seed = 1;
  auto* design = app.add_subcommand("design", "solve the design and report M with its certificate");
  design->add_option("--d", design_d, "dimension");
  design->add_option("--action-set", design_set, "action set");
  design->add_option("--T", design_T, "horizon, sets gamma");
  design->add_option("--epsilon", design_eps, "moment order is 1 + epsilon");
  design->add_option("--seed", design_seed, "seed for random action sets");

  RunFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "single run");
  add_run_flags(simulate, sim_flags, false);

  RunFlags exp_flags;
  auto* experiment = app.add_subcommand("experiment", "repeated runs from a preset or config file");
  add_run_flags(experiment, exp_flags, true);

  std::string agg_dir = "htb_out";
  std::string agg_plot;
  std::string agg_format = "csv";
  auto* aggregate = app.add_subcommand("aggregate", "re-aggregate run files and emit plot data");
  aggregate->add_option("--out", agg_dir, "experiment directory")->envname("HTB_OUT");
  aggregate->add_option("--plot", agg_plot, "plot data file to write");
  aggregate->add_option("--format", agg_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  double exp_eps = 1.0;
  std::size_t exp_d = 1;
  std::optional<double> exp_nu;
  std::optional<std::size_t> exp_n;
  auto* exponents = app.add_subcommand("exponents", "rate exponents of the upper and lower bounds");
  exponents->add_option("--epsilon", exp_eps, "moment order is 1 + epsilon");
  exponents->add_option("--d", exp_d, "dimension");
  exponents->add_option("--nu", exp_nu, "Matern smoothness");
  exponents->add_option("--n", exp_n, "number of arms");

  KernelFlags kflags;
  auto* kernel = app.add_subcommand("kernel-sim", "kernelized run on a grid of [0, 1]");
  kernel->add_option("--kernel", kflags.kernel, "linear | rbf:L | matern:NU,L");
  kernel->add_option("--points", kflags.points, "grid points");
  kernel->add_option("--T", kflags.T, "horizon");
  kernel->add_option("--seed", kflags.seed, "seed");
  kernel->add_option("--epsilon", kflags.epsilon, "moment order is 1 + epsilon");
  kernel->add_option("--upsilon", kflags.upsilon, "noise moment bound");
  kernel->add_option("--noise", kflags.noise, "noise law");
  kernel->add_option("--anchors", kflags.anchors, "anchor points of the reward function");
  kernel->add_option("--budget-scale", kflags.budget_scale, "multiplier on phase budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*design) return cmd_design(design_d, design_set, design_T, design_eps, design_seed);
    if (*simulate) return cmd_simulate(sim_flags);
    if (*experiment) return cmd_experiment(exp_flags);
    if (*aggregate) return cmd_aggregate(agg_dir, agg_plot, agg_format);
    if (*exponents) return cmd_exponents(exp_eps, exp_d, exp_nu, exp_n);
    if (*kernel) return cmd_kernel_sim(kflags);
  } catch (const htb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const htb::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const htb::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const htb::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
