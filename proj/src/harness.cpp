#include "htb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <regex>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "htb/baselines.hpp"
#include "htb/environments.hpp"
#include "htb/errors.hpp"
#include "htb/medpe.hpp"

namespace htb {

namespace {

const std::regex kRunFile(R"(^(.+)_d(\d+)_rep(\d+)\.csv$)");

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed number '" + s + "' in " + path.string());
  }
}

std::uint64_t parse_u64(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed integer '" + s + "' in " + path.string());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  return is;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

bool is_known_algorithm(const std::string& name) { return name == "medpe" || name == "crtm_style_ucb"; }

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  for (const auto& a : algorithms) {
    if (!is_known_algorithm(a)) throw ConfigError("unknown algorithm '" + a + "' (expected medpe or crtm_style_ucb)");
  }
  if (dims.empty()) throw ConfigError("at least one dimension is required");
  for (const auto d : dims) {
    if (d < 1) throw ConfigError("dimensions must be >= 1");
  }
  if (T < 1) throw ConfigError("T must be >= 1");
  if (reps < 1) throw ConfigError("repetitions must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (checkpoint_stride < 1 || (checkpoint_stride != 1 && T % checkpoint_stride != 0)) {
    throw ConfigError("checkpoint stride must be 1 or divide T");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(budget_scale > 0.0)) throw ConfigError("budget scale must be positive");
  if (upsilon && !(*upsilon >= 0.0)) throw ConfigError("upsilon must be >= 0");
  try {
    validate_noise(noise);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (action_set != "signed_basis" && action_set != "simplex_basis" && action_set.rfind("sphere_random:", 0) != 0 &&
      action_set.rfind("hypercube_random:", 0) != 0) {
    throw ConfigError("unknown action set '" + action_set + "'");
  }
  (void)resolved_upsilon();
}

double ExperimentConfig::resolved_upsilon() const {
  if (upsilon) return *upsilon;
  const auto m = noise_moment(noise, epsilon);
  if (!m) throw ConfigError("noise " + describe_noise(noise) + " has no finite (1+eps)-moment; pass upsilon explicitly");
  return *m;
}

ExperimentConfig appendix_d_preset() {
  ExperimentConfig cfg;
  cfg.preset = "appendix-d";
  return cfg;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "appendix-d") return appendix_d_preset();
  throw ConfigError("unknown preset '" + name + "'");
}

LinearInstance build_instance(const ExperimentConfig& cfg, std::size_t d) {
  ActionSet arms = [&] {
    if (cfg.action_set == "signed_basis") return make_action_set(SignedBasis{}, d);
    if (cfg.action_set == "simplex_basis") return make_action_set(SimplexBasis{}, d);
    const auto colon = cfg.action_set.find(':');
    const auto count = static_cast<std::size_t>(parse_u64(cfg.action_set.substr(colon + 1), "action_set"));
    if (cfg.action_set.rfind("sphere_random:", 0) == 0) {
      return make_action_set(SphereRandom{count}, d, split_seed(cfg.master_seed, d));
    }
    return make_action_set(HypercubeRandom{count}, d, split_seed(cfg.master_seed, d));
  }();
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 1.0 / std::sqrt(static_cast<double>(d)));
  return LinearInstance(theta, std::move(arms), cfg.noise, 1.0);
}

RunRecord run_single(const ExperimentConfig& cfg, const std::string& algorithm, std::size_t d, std::size_t rep) {
  const LinearInstance instance = build_instance(cfg, d);
  const std::uint64_t seed = derive_run_seed(cfg.master_seed, algorithm, d, rep);
  MomentParams moment{cfg.epsilon, cfg.resolved_upsilon(), 1.0};
  if (algorithm == "medpe") {
    MedPeConfig mc;
    mc.moment = moment;
    mc.T = cfg.T;
    mc.checkpoint_stride = cfg.checkpoint_stride;
    mc.budget_scale = cfg.budget_scale;
    return run_medpe(instance, mc, seed);
  }
  if (algorithm == "crtm_style_ucb") {
    UcbConfig uc;
    uc.moment = moment;
    uc.width = cfg.ucb_width;
    uc.regularizer = cfg.ucb_regularizer;
    uc.checkpoint_stride = cfg.checkpoint_stride;
    return run_truncated_ucb(instance, uc, cfg.T, seed);
  }
  throw ConfigError("unknown algorithm '" + algorithm + "'");
}

std::optional<AggregateRow> AggregateResult::find(const std::string& algorithm, std::size_t d, std::uint64_t t) const {
  for (const auto& r : rows) {
    if (r.algorithm == algorithm && r.d == d && r.t == t) return r;
  }
  return std::nullopt;
}

std::optional<AggregateRow> AggregateResult::final_row(const std::string& algorithm, std::size_t d) const {
  std::optional<AggregateRow> best;
  for (const auto& r : rows) {
    if (r.algorithm == algorithm && r.d == d && (!best || r.t > best->t)) best = r;
  }
  return best;
}

RunSeries series_of(const RunRecord& record, const std::string& algorithm, std::size_t d, std::size_t rep) {
  RunSeries s{algorithm, d, rep, {}, {}};
  for (const auto& e : record.rounds) {
    s.t.push_back(e.t);
    s.cumulative_regret.push_back(e.cumulative_regret);
  }
  return s;
}

AggregateResult aggregate(const std::vector<RunSeries>& runs) {
  std::map<std::tuple<std::string, std::size_t, std::uint64_t>, std::vector<double>> groups;
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < run.t.size(); ++k) {
      groups[{run.algorithm, run.d, run.t[k]}].push_back(run.cumulative_regret[k]);
    }
  }
  AggregateResult out;
  for (const auto& [key, values] : groups) {
    AggregateRow row;
    std::tie(row.algorithm, row.d, row.t) = key;
    row.n_runs = values.size();
    double sum = 0.0;
    for (const double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (const double v : values) ss += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string run_file_name(const std::string& algorithm, std::size_t d, std::size_t rep) {
  return algorithm + "_d" + std::to_string(d) + "_rep" + std::to_string(rep) + ".csv";
}

void write_run_csv(const std::filesystem::path& path, const RunRecord& record) {
  auto os = open_out(path);
  os << "t,phase,action_label,reward,cum_regret\n";
  for (const auto& e : record.rounds) {
    os << e.t << ',' << e.phase << ',' << e.action << ',' << format_double(e.reward) << ','
       << format_double(e.cumulative_regret) << '\n';
  }
  finish(os, path);
}

RunSeries read_run_csv(const std::filesystem::path& path) {
  RunSeries s;
  std::smatch m;
  const std::string name = path.filename().string();
  if (std::regex_match(name, m, kRunFile)) {
    s.algorithm = m[1];
    s.d = static_cast<std::size_t>(std::stoull(m[2]));
    s.rep = static_cast<std::size_t>(std::stoull(m[3]));
  }
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != "t,phase,action_label,reward,cum_regret") {
    throw IoError("unexpected header in " + path.string());
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw IoError("malformed row in " + path.string());
    s.t.push_back(parse_u64(cells[0], path));
    s.cumulative_regret.push_back(parse_double(cells[4], path));
  }
  return s;
}

void write_aggregate_csv(const std::filesystem::path& path, const AggregateResult& result) {
  auto os = open_out(path);
  os << "algorithm,d,t,mean_regret,std_regret,n_runs\n";
  for (const auto& r : result.rows) {
    os << r.algorithm << ',' << r.d << ',' << r.t << ',' << format_double(r.mean) << ',' << format_double(r.std) << ','
       << r.n_runs << '\n';
  }
  finish(os, path);
}

AggregateResult read_aggregate_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != "algorithm,d,t,mean_regret,std_regret,n_runs") {
    throw IoError("unexpected header in " + path.string());
  }
  AggregateResult out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 6) throw IoError("malformed row in " + path.string());
    out.rows.push_back({c[0], static_cast<std::size_t>(parse_u64(c[1], path)), parse_u64(c[2], path),
                        parse_double(c[3], path), parse_double(c[4], path),
                        static_cast<std::size_t>(parse_u64(c[5], path))});
  }
  return out;
}

AggregateResult aggregate_directory(const std::filesystem::path& dir) {
  const auto runs_dir = dir / "runs";
  if (!std::filesystem::is_directory(runs_dir)) throw IoError("no runs directory under " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, kRunFile)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSeries> runs;
  runs.reserve(files.size());
  for (const auto& f : files) runs.push_back(read_run_csv(f));
  return aggregate(runs);
}

AggregateResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto runs_dir = cfg.out_dir / "runs";
  std::error_code ec;
  std::filesystem::create_directories(runs_dir, ec);
  if (ec) throw IoError("cannot create output directory " + runs_dir.string() + ": " + ec.message());
  {
    const auto probe = cfg.out_dir / ".write_probe";
    std::ofstream os(probe);
    if (!os) throw IoError("output directory " + cfg.out_dir.string() + " is not writable");
    os.close();
    std::filesystem::remove(probe, ec);
  }

  struct Task {
    std::string algorithm;
    std::size_t d;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (const auto& a : cfg.algorithms) {
    for (const auto d : cfg.dims) {
      for (std::size_t r = 0; r < cfg.reps; ++r) tasks.push_back({a, d, r});
    }
  }
  std::vector<RunSeries> series(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      try {
        const Task& task = tasks[k];
        const RunRecord record = run_single(cfg, task.algorithm, task.d, task.rep);
        write_run_csv(runs_dir / run_file_name(task.algorithm, task.d, task.rep), record);
        series[k] = series_of(record, task.algorithm, task.d, task.rep);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.jobs, tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const AggregateResult result = aggregate(series);
  write_aggregate_csv(cfg.out_dir / "aggregate.csv", result);

  nlohmann::json manifest;
  manifest["library_version"] = kLibraryVersion;
  manifest["preset"] = cfg.preset;
  manifest["algorithms"] = cfg.algorithms;
  manifest["action_set"] = cfg.action_set;
  manifest["theta_star"] = "(1/sqrt(d)) * ones(d)";
  manifest["noise"] = describe_noise(cfg.noise);
  manifest["noise_centering"] = "Pareto II draws shifted by their mean sigma/(alpha-1)";
  manifest["dims"] = cfg.dims;
  manifest["T"] = cfg.T;
  manifest["reps"] = cfg.reps;
  manifest["master_seed"] = cfg.master_seed;
  manifest["epsilon"] = cfg.epsilon;
  manifest["upsilon"] = cfg.resolved_upsilon();
  manifest["upsilon_source"] = cfg.upsilon ? "configured" : "analytic (1+eps)-moment of the noise";
  manifest["checkpoint_stride"] = cfg.checkpoint_stride;
  manifest["budget_scale"] = cfg.budget_scale;
  manifest["medpe"] = {{"gamma", "T^(-2 eps/(1+eps))"}, {"beta", 1.0}, {"estimator", "truncated_mean"}};
  manifest["crtm_style_ucb"] = {{"width_constant", cfg.ucb_width},
                                {"regularizer", cfg.ucb_regularizer},
                                {"truncation", "(upsilon t / max(ln t, 1))^(1/(1+eps))"}};
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& task : tasks) {
    seeds.push_back({{"algorithm", task.algorithm},
                     {"d", task.d},
                     {"rep", task.rep},
                     {"seed", derive_run_seed(cfg.master_seed, task.algorithm, task.d, task.rep)},
                     {"file", "runs/" + run_file_name(task.algorithm, task.d, task.rep)}});
  }
  manifest["runs"] = seeds;
  const auto manifest_path = cfg.out_dir / "manifest.json";
  auto os = open_out(manifest_path);
  os << manifest.dump(2) << '\n';
  finish(os, manifest_path);
  return result;
}

void emit_plot_data(const AggregateResult& result, PlotFormat format, const std::filesystem::path& path) {
  auto os = open_out(path);
  if (format == PlotFormat::csv) {
    os << "algorithm,t,x,mean,std\n";
    for (const auto& r : result.rows) {
      os << r.algorithm << ',' << r.t << ',' << r.d << ',' << format_double(r.mean) << ',' << format_double(r.std)
         << '\n';
    }
  } else {
    nlohmann::json doc;
    doc["format"] = "htb-plot-data";
    doc["version"] = 1;
    doc["x_label"] = "d";
    doc["y_label"] = "cumulative pseudo-regret";
    doc["columns"] = {"algorithm", "t", "x", "mean", "std"};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : result.rows) {
      rows.push_back({{"algorithm", r.algorithm}, {"t", r.t}, {"x", r.d}, {"mean", r.mean}, {"std", r.std}});
    }
    doc["rows"] = rows;
    os << doc.dump(2) << '\n';
  }
  finish(os, path);
}

AggregateResult read_plot_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != "algorithm,t,x,mean,std") throw IoError("unexpected header in " + path.string());
  AggregateResult out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 5) throw IoError("malformed row in " + path.string());
    AggregateRow r;
    r.algorithm = c[0];
    r.t = parse_u64(c[1], path);
    r.d = static_cast<std::size_t>(parse_u64(c[2], path));
    r.mean = parse_double(c[3], path);
    r.std = parse_double(c[4], path);
    out.rows.push_back(r);
  }
  return out;
}

std::size_t horizon_resolution(std::uint64_t T) { return static_cast<std::size_t>(T) + 1; }

Discretization discretize_action_set(const ContinuousDomain& domain, std::size_t resolution, std::size_t max_points) {
  if (resolution < 2) throw DomainError("discretization resolution must be >= 2");
  if (max_points < 2) throw DomainError("discretization cap must be >= 2");
  auto grid_value = [](std::size_t k, std::size_t res, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(res - 1);
  };
  auto warn = [&](Discretization& out, std::size_t requested_res, double requested_count) {
    out.capped = true;
    std::ostringstream os;
    os << "discretization capped: " << requested_count << " points at resolution " << requested_res
       << " exceed the limit " << max_points << "; using resolution " << out.resolution;
    out.warning = os.str();
  };

  if (const auto* iv = std::get_if<Interval>(&domain)) {
    if (!(iv->hi > iv->lo)) throw DomainError("interval must satisfy lo < hi");
    std::size_t res = std::min(resolution, max_points);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(res), 1);
    for (std::size_t k = 0; k < res; ++k) rows(static_cast<Eigen::Index>(k), 0) = grid_value(k, res, iv->lo, iv->hi);
    const double radius = std::max({std::abs(iv->lo), std::abs(iv->hi), 1e-300});
    Discretization out{ActionSet(std::move(rows), radius), res, false, {}};
    if (res < resolution) warn(out, resolution, static_cast<double>(resolution));
    return out;
  }
  if (std::holds_alternative<UnitCircle>(domain)) {
    const std::size_t res = std::min(resolution, max_points);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(res), 2);
    for (std::size_t k = 0; k < res; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(res);
      rows(static_cast<Eigen::Index>(k), 0) = std::cos(angle);
      rows(static_cast<Eigen::Index>(k), 1) = std::sin(angle);
    }
    Discretization out{ActionSet(std::move(rows)), res, false, {}};
    if (res < resolution) warn(out, resolution, static_cast<double>(resolution));
    return out;
  }
  if (const auto* cube = std::get_if<UnitCube>(&domain)) {
    const std::size_t d = cube->d;
    if (d < 1) throw DomainError("cube dimension must be >= 1");
    const double requested = std::pow(static_cast<double>(resolution), static_cast<double>(d));
    std::size_t res = resolution;
    if (requested > static_cast<double>(max_points)) {
      res = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(max_points), 1.0 / static_cast<double>(d)) + 1e-9));
      while (res > 2 && std::pow(static_cast<double>(res), static_cast<double>(d)) > static_cast<double>(max_points)) --res;
      res = std::max<std::size_t>(res, 2);
    }
    const auto count = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(res), static_cast<double>(d))));
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
    for (std::size_t code = 0; code < count; ++code) {
      std::size_t c = code;
      for (std::size_t j = 0; j < d; ++j) {
        rows(static_cast<Eigen::Index>(code), static_cast<Eigen::Index>(j)) = grid_value(c % res, res, 0.0, 1.0);
        c /= res;
      }
    }
    Discretization out{ActionSet(std::move(rows), std::sqrt(static_cast<double>(d))), res, false, {}};
    if (res < resolution) warn(out, resolution, requested);
    return out;
  }
  const std::size_t d = std::get<UnitSphere>(domain).d;
  if (d < 2) throw DomainError("sphere dimension must be >= 2");
  auto surface_count = [d](std::size_t res) {
    return std::pow(static_cast<double>(res), static_cast<double>(d)) -
           std::pow(static_cast<double>(res) - 2.0, static_cast<double>(d));
  };
  const double requested = surface_count(resolution);
  std::size_t res = resolution;
  while (res > 2 && surface_count(res) > static_cast<double>(max_points)) {
    res = std::max<std::size_t>(2, static_cast<std::size_t>(static_cast<double>(res) * 0.9));
  }
  while (surface_count(res + 1) <= static_cast<double>(max_points) && res + 1 <= resolution) ++res;
  std::vector<Eigen::VectorXd> points;
  const double total = std::pow(static_cast<double>(res), static_cast<double>(d));
  Eigen::VectorXd x(static_cast<Eigen::Index>(d));
  for (std::size_t code = 0; code < static_cast<std::size_t>(std::llround(total)); ++code) {
    std::size_t c = code;
    bool on_surface = false;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = c % res;
      c /= res;
      on_surface = on_surface || k == 0 || k == res - 1;
      x(static_cast<Eigen::Index>(j)) = grid_value(k, res, -1.0, 1.0);
    }
    if (on_surface) points.push_back(x / x.norm());
  }
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < points.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  Discretization out{ActionSet(std::move(rows)), res, false, {}};
  if (res < resolution) warn(out, resolution, requested);
  return out;
}

TheoryExponents theory_exponents(double epsilon, std::size_t d, std::optional<double> nu, std::optional<std::size_t> n) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in (0, 1]");
  if (d < 1) throw DomainError("d must be >= 1");
  if (n && *n < 2) throw DomainError("n must be >= 2");
  const double e = epsilon;
  const double t_exp = 1.0 / (1.0 + e);
  TheoryExponents out;
  out.linear_upper = {(1.0 + 3.0 * e) / (2.0 * (1.0 + e)), 0.0, t_exp};
  out.linear_lower = {2.0 * e / (1.0 + e), 0.0, t_exp};
  out.finite_upper = {0.5, e / (1.0 + e), t_exp};
  out.finite_lower = {e / (1.0 + e), e / (1.0 + e), t_exp};
  if (nu) {
    if (!(*nu > 0.0)) throw DomainError("nu must be positive");
    const double dd = static_cast<double>(d);
    out.matern_upper_T = 1.0 - (e / (1.0 + e)) * (2.0 * *nu / (2.0 * *nu + dd));
    out.matern_lower_T = (*nu + dd * e) / (*nu * (1.0 + e) + dd * e);
    out.matern_design_exponent = e * dd / (2.0 * *nu + dd);
  }
  return out;
}

}  // namespace htb
