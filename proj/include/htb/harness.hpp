#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "htb/core.hpp"
#include "htb/noise.hpp"

namespace htb {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct ExperimentConfig {
  std::vector<std::string> algorithms{"medpe", "crtm_style_ucb"};
  /// "signed_basis", "simplex_basis", "sphere_random:N" or "hypercube_random:N"; theta* = (1/sqrt d) 1.
  std::string action_set = "signed_basis";
  NoiseSpec noise = CenteredParetoNoise{2.0, 1.0};
  std::vector<std::size_t> dims{10, 20, 40};
  std::uint64_t T = 100000;
  std::size_t reps = 10;
  std::uint64_t master_seed = 20240601;
  double epsilon = 0.5;
  /// Unset: the noise's analytic (1+eps)-moment.
  std::optional<double> upsilon;
  std::filesystem::path out_dir = "htb_out";
  std::uint64_t checkpoint_stride = 1000;
  std::size_t jobs = 1;
  double budget_scale = 1.0;
  double ucb_width = 1.0;
  double ucb_regularizer = 1.0;
  std::string preset;

  void validate() const;
  [[nodiscard]] double resolved_upsilon() const;
};

/// Horizon 1e5, d in {10, 20, 40}, 10 repetitions, eps = 0.5, centered
/// Pareto(2, 1) noise, signed coordinate arms, theta* = (1/sqrt d) 1.
[[nodiscard]] ExperimentConfig appendix_d_preset();

[[nodiscard]] ExperimentConfig preset_by_name(const std::string& name);

/// theta* = (1/sqrt d) 1 over the configured action set.
[[nodiscard]] LinearInstance build_instance(const ExperimentConfig& cfg, std::size_t d);

[[nodiscard]] RunRecord run_single(const ExperimentConfig& cfg, const std::string& algorithm, std::size_t d,
                                   std::size_t rep);

struct AggregateRow {
  std::string algorithm;
  std::size_t d = 0;
  std::uint64_t t = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t n_runs = 0;
};

struct AggregateResult {
  std::vector<AggregateRow> rows;

  [[nodiscard]] std::optional<AggregateRow> find(const std::string& algorithm, std::size_t d, std::uint64_t t) const;
  /// Row with the largest t for (algorithm, d).
  [[nodiscard]] std::optional<AggregateRow> final_row(const std::string& algorithm, std::size_t d) const;
};

struct RunSeries {
  std::string algorithm;
  std::size_t d = 0;
  std::size_t rep = 0;
  std::vector<std::uint64_t> t;
  std::vector<double> cumulative_regret;
};

[[nodiscard]] RunSeries series_of(const RunRecord& record, const std::string& algorithm, std::size_t d,
                                  std::size_t rep);

/// Mean and sample standard deviation per (algorithm, d, t), sorted by that key.
[[nodiscard]] AggregateResult aggregate(const std::vector<RunSeries>& runs);

/// Runs every (algorithm, d, rep), writes runs/*.csv, aggregate.csv and
/// manifest.json below cfg.out_dir, and returns the aggregate.
[[nodiscard]] AggregateResult run_experiment(const ExperimentConfig& cfg);

/// Path of a run file relative to the output directory.
[[nodiscard]] std::string run_file_name(const std::string& algorithm, std::size_t d, std::size_t rep);

void write_run_csv(const std::filesystem::path& path, const RunRecord& record);
[[nodiscard]] RunSeries read_run_csv(const std::filesystem::path& path);

void write_aggregate_csv(const std::filesystem::path& path, const AggregateResult& result);
[[nodiscard]] AggregateResult read_aggregate_csv(const std::filesystem::path& path);

/// Re-aggregates every runs/{algo}_d{d}_rep{rep}.csv under `dir`.
[[nodiscard]] AggregateResult aggregate_directory(const std::filesystem::path& dir);

enum class PlotFormat { csv, json };

/// One (algorithm, t, x = d, mean, std) row per aggregate row.
void emit_plot_data(const AggregateResult& result, PlotFormat format, const std::filesystem::path& path);
[[nodiscard]] AggregateResult read_plot_csv(const std::filesystem::path& path);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
struct UnitCube {
  std::size_t d = 2;
};
struct UnitCircle {};
struct UnitSphere {
  std::size_t d = 3;
};

using ContinuousDomain = std::variant<Interval, UnitCube, UnitCircle, UnitSphere>;

struct Discretization {
  ActionSet actions;
  std::size_t resolution = 0;  // per-axis resolution actually used
  bool capped = false;
  std::string warning;
};

/// Interval and cube: uniform grids with `resolution` points per axis.
/// Circle: `resolution` equally spaced angles. Sphere: the surface points of
/// the cube grid on [-1, 1]^d, normalized. Grids above `max_points` are
/// coarsened to fit and flagged.
[[nodiscard]] Discretization discretize_action_set(const ContinuousDomain& domain, std::size_t resolution,
                                                   std::size_t max_points = 1'000'000);

/// Per-axis resolution with mesh at most 1/T on the unit interval.
[[nodiscard]] std::size_t horizon_resolution(std::uint64_t T);

struct RateExponents {
  double d = 0.0;
  double log_n = 0.0;
  double T = 0.0;
};

struct TheoryExponents {
  RateExponents linear_upper;
  RateExponents linear_lower;
  RateExponents finite_upper;
  RateExponents finite_lower;
  std::optional<double> matern_upper_T;
  std::optional<double> matern_lower_T;
  std::optional<double> matern_design_exponent;
};

[[nodiscard]] TheoryExponents theory_exponents(double epsilon, std::size_t d, std::optional<double> nu = std::nullopt,
                                               std::optional<std::size_t> n = std::nullopt);

/// %.17g.
[[nodiscard]] std::string format_double(double v);

}  // namespace htb
