#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "htb/baselines.hpp"
#include "htb/design.hpp"
#include "htb/errors.hpp"
#include "htb/estimators.hpp"
#include "htb/harness.hpp"
#include "htb/kernelized.hpp"
#include "htb/medpe.hpp"

namespace py = pybind11;
using namespace htb;

namespace {

py::dict record_to_dict(const RunRecord& r) {
  py::list t;
  py::list phase;
  py::list action;
  py::list reward;
  py::list regret;
  for (const auto& e : r.rounds) {
    t.append(e.t);
    phase.append(e.phase);
    action.append(e.action);
    reward.append(e.reward);
    regret.append(e.cumulative_regret);
  }
  py::list phases;
  for (const auto& p : r.phases) {
    py::dict d;
    d["ell"] = p.ell;
    d["active_before"] = p.active_before;
    d["active_after"] = p.active_after;
    d["accuracy"] = p.accuracy;
    d["budget"] = p.budget;
    d["rounds"] = p.rounds;
    d["design_value"] = p.design_value;
    phases.append(d);
  }
  py::dict out;
  out["algorithm"] = r.algorithm;
  out["seed"] = r.seed;
  out["horizon"] = r.horizon;
  out["t"] = t;
  out["phase"] = phase;
  out["action_label"] = action;
  out["reward"] = reward;
  out["cum_regret"] = regret;
  out["phases"] = phases;
  out["pulls"] = r.pulls;
  out["final_active"] = r.final_active;
  out["cumulative_regret"] = r.cumulative_regret;
  out["rounds_played"] = r.rounds_played;
  return out;
}

py::dict rates(const RateExponents& e) {
  py::dict d;
  d["d"] = e.d;
  d["T"] = e.T;
  d["log_n"] = e.log_n;
  return d;
}

py::list rows_of(const AggregateResult& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["algorithm"] = row.algorithm;
    d["d"] = row.d;
    d["t"] = row.t;
    d["mean_regret"] = row.mean;
    d["std_regret"] = row.std;
    d["n_runs"] = row.n_runs;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Phased elimination for linear bandits with heavy-tailed rewards";
  m.attr("__version__") = kLibraryVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "noise_moment",
      [](const std::string& noise, double epsilon) { return noise_moment(parse_noise(noise), epsilon); },
      py::arg("noise"), py::arg("epsilon"), "E|eta|^(1+eps) for a noise string such as 'pareto:2,1'; None if infinite.");

  m.def(
      "truncated_mean",
      [](const std::vector<double>& x, double u, double epsilon, double delta) {
        return truncated_mean(x, TruncationConfig{u, epsilon, delta});
      },
      py::arg("samples"), py::arg("u"), py::arg("epsilon"), py::arg("delta"));
  m.def(
      "median_of_means", [](const std::vector<double>& x, double delta) { return median_of_means(x, delta); },
      py::arg("samples"), py::arg("delta"));

  m.def(
      "phase_budget",
      [](double epsilon, double upsilon, std::uint64_t T, double eps_ell, double m_value, int ell, std::size_t n_active,
         double budget_scale) {
        MedPeConfig cfg;
        cfg.moment = {epsilon, upsilon, 1.0};
        cfg.T = T;
        cfg.budget_scale = budget_scale;
        return phase_budget(cfg, eps_ell, m_value, ell, n_active);
      },
      py::arg("epsilon"), py::arg("upsilon"), py::arg("T"), py::arg("eps_ell"), py::arg("m_value"), py::arg("ell"),
      py::arg("n_active"), py::arg("budget_scale") = 1.0);

  m.def(
      "moment_objective",
      [](const Eigen::MatrixXd& arms, const Eigen::VectorXd& weights, double gamma, double beta, double epsilon) {
        return moment_objective(DesignProblem{ActionSet(arms), gamma, beta, epsilon}, Design{weights});
      },
      py::arg("arms"), py::arg("weights"), py::arg("gamma"), py::arg("beta"), py::arg("epsilon"));
  m.def(
      "g_optimal_design",
      [](const Eigen::MatrixXd& arms, double gamma, std::size_t max_iters, double tol) {
        return g_optimal_design(ActionSet(arms), gamma, max_iters, tol).weights;
      },
      py::arg("arms"), py::arg("gamma") = 0.0, py::arg("max_iters") = 10000, py::arg("tol") = 0.05);

  m.def(
      "run_medpe",
      [](const Eigen::MatrixXd& arms, const Eigen::VectorXd& theta, const std::string& noise, std::uint64_t T,
         double epsilon, std::optional<double> upsilon, std::uint64_t seed, std::uint64_t checkpoint_stride,
         double budget_scale, const std::string& estimator) {
        const NoiseSpec spec = parse_noise(noise);
        MedPeConfig cfg;
        const auto u = upsilon ? upsilon : noise_moment(spec, epsilon);
        if (!u) throw ConfigError("noise has no finite (1+eps)-moment; pass upsilon");
        cfg.moment = {epsilon, *u, 1.0};
        cfg.T = T;
        cfg.checkpoint_stride = checkpoint_stride;
        cfg.budget_scale = budget_scale;
        cfg.estimator = parse_estimator(estimator);
        const LinearInstance inst(theta, ActionSet(arms), spec);
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = run_medpe(inst, cfg, seed);
        }
        return record_to_dict(r);
      },
      py::arg("arms"), py::arg("theta"), py::arg("noise") = "pareto:2,1", py::arg("T") = 10000,
      py::arg("epsilon") = 0.5, py::arg("upsilon") = py::none(), py::arg("seed") = 0,
      py::arg("checkpoint_stride") = 1000, py::arg("budget_scale") = 1.0, py::arg("estimator") = "truncated_mean");

  m.def(
      "run_truncated_ucb",
      [](const Eigen::MatrixXd& arms, const Eigen::VectorXd& theta, const std::string& noise, std::uint64_t T,
         double epsilon, std::optional<double> upsilon, std::uint64_t seed, std::uint64_t checkpoint_stride,
         double width) {
        const NoiseSpec spec = parse_noise(noise);
        UcbConfig cfg;
        const auto u = upsilon ? upsilon : noise_moment(spec, epsilon);
        if (!u) throw ConfigError("noise has no finite (1+eps)-moment; pass upsilon");
        cfg.moment = {epsilon, *u, 1.0};
        cfg.checkpoint_stride = checkpoint_stride;
        cfg.width = width;
        const LinearInstance inst(theta, ActionSet(arms), spec);
        RunRecord r;
        {
          py::gil_scoped_release release;
          r = run_truncated_ucb(inst, cfg, T, seed);
        }
        return record_to_dict(r);
      },
      py::arg("arms"), py::arg("theta"), py::arg("noise") = "pareto:2,1", py::arg("T") = 10000,
      py::arg("epsilon") = 0.5, py::arg("upsilon") = py::none(), py::arg("seed") = 0,
      py::arg("checkpoint_stride") = 1000, py::arg("width") = 1.0);

  m.def("matern_correlation", &matern_correlation, py::arg("nu"), py::arg("length"), py::arg("r"));

  m.def(
      "theory_exponents",
      [](double epsilon, std::size_t d, std::optional<double> nu, std::optional<std::size_t> n) {
        const TheoryExponents e = theory_exponents(epsilon, d, nu, n);
        py::dict out;
        out["linear_upper"] = rates(e.linear_upper);
        out["linear_lower"] = rates(e.linear_lower);
        out["finite_upper"] = rates(e.finite_upper);
        out["finite_lower"] = rates(e.finite_lower);
        out["matern_upper_T"] = e.matern_upper_T;
        out["matern_lower_T"] = e.matern_lower_T;
        out["matern_design_exponent"] = e.matern_design_exponent;
        return out;
      },
      py::arg("epsilon"), py::arg("d"), py::arg("nu") = py::none(), py::arg("n") = py::none());

  m.def(
      "run_experiment",
      [](const std::filesystem::path& out, const std::string& preset, std::optional<std::vector<std::size_t>> dims,
         std::optional<std::uint64_t> T, std::optional<std::size_t> reps, std::optional<std::vector<std::string>> algorithms,
         std::optional<std::uint64_t> seed, std::optional<std::uint64_t> checkpoint_stride, std::optional<double> budget_scale,
         std::size_t jobs) {
        ExperimentConfig cfg = preset.empty() ? ExperimentConfig{} : preset_by_name(preset);
        cfg.out_dir = out;
        if (dims) cfg.dims = *dims;
        if (T) cfg.T = *T;
        if (reps) cfg.reps = *reps;
        if (algorithms) cfg.algorithms = *algorithms;
        if (seed) cfg.master_seed = *seed;
        if (checkpoint_stride) cfg.checkpoint_stride = *checkpoint_stride;
        if (budget_scale) cfg.budget_scale = *budget_scale;
        cfg.jobs = jobs;
        AggregateResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        return rows_of(r);
      },
      py::arg("out"), py::arg("preset") = "appendix-d", py::arg("dims") = py::none(), py::arg("T") = py::none(),
      py::arg("reps") = py::none(), py::arg("algorithms") = py::none(), py::arg("seed") = py::none(),
      py::arg("checkpoint_stride") = py::none(), py::arg("budget_scale") = py::none(), py::arg("jobs") = 1,
      "Runs the experiment grid, writes runs/, aggregate.csv and manifest.json under `out`, returns the aggregate rows.");

  m.def(
      "aggregate_directory", [](const std::filesystem::path& dir) { return rows_of(aggregate_directory(dir)); },
      py::arg("dir"));
}
