// aoi: command-line front end.
//
//   aoi analyze  --policy zw|fp|po --mu1 M1 --mu2 M2 [--lambda L --k K]
//   aoi simulate --policy ... [--cycles N --reps R --seed S] | --config run.json
//   aoi optimize --mu1 M1 --mu2 M2 --k K [--lo A --hi B]
//   aoi figure   3a|3b|4|5|6
//
// Exit codes: 0 success, 2 usage or validation error, 1 numerical failure.

#include "aoi/aoi.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using aoi::json;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Bad flag value or combination; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  std::string policy = "zw";
  double mu1 = 1.0;
  double mu2 = 1.0;
  std::optional<double> lambda;
  std::optional<int> k;

  void add_to(CLI::App* app) {
    app->add_option("--policy", policy, "zw, fp or po (preemption only)");
    app->add_option("--mu1", mu1, "service rate of server 1");
    app->add_option("--mu2", mu2, "service rate of server 2");
    app->add_option("--lambda", lambda, "freeze rate (fp only)");
    app->add_option("--k", k, "Erlang order of the freeze (fp only)");
  }

  aoi::ModelKey to_key() const {
    aoi::ModelKey m;
    try {
      m.policy = aoi::parse_policy(policy);
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--policy: ") + e.what());
    }
    if (!(mu1 > 0.0)) throw UsageError("--mu1 must be > 0");
    if (!(mu2 > 0.0)) throw UsageError("--mu2 must be > 0");
    m.mu1 = mu1;
    m.mu2 = mu2;
    if (m.policy == aoi::Policy::kFp) {
      if (!lambda) throw UsageError("--lambda is required with --policy fp");
      if (!k) throw UsageError("--k is required with --policy fp");
      if (!(*lambda > 0.0)) throw UsageError("--lambda must be > 0");
      if (*k < 1) throw UsageError("--k must be >= 1");
      m.lambda = *lambda;
      m.k = *k;
    } else {
      if (lambda) throw UsageError("--lambda is only valid with --policy fp");
      if (k) throw UsageError("--k is only valid with --policy fp");
    }
    return m.normalized();
  }
};

class OutputDir {
 public:
  OutputDir(const std::string& command, const std::string& override_path) : command_(command) {
    if (!override_path.empty()) {
      path_ = override_path;
    } else {
      const char* root = std::getenv("AOI_OUT_ROOT");
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      path_ = fs::path(root && *root ? root : "out") / fmt::format("{}-{:%Y%m%d-%H%M%S}", command, fmt::localtime(now));
    }
    fs::create_directories(path_);
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(path_ / name);
    if (!os) throw std::runtime_error("cannot write " + (path_ / name).string());
    files_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  void write_manifest(const json& params, const json& seeds, std::chrono::steady_clock::time_point start) {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["parameters"] = params;
    m["seeds"] = seeds;
    m["outputs"] = files_;
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(path_ / "manifest.json") << m.dump(2) << '\n';
  }

  const fs::path& path() const { return path_; }

 private:
  std::string command_;
  fs::path path_;
  std::vector<std::string> files_;
};

aoi::GridSpec grid_from(std::size_t points, double hi_multiple) {
  if (points < 2) throw UsageError("--points must be >= 2");
  if (!(hi_multiple > 0.01)) throw UsageError("--hi-multiple must be > 0.01");
  aoi::GridSpec g;
  g.points = points;
  g.hi_multiple = hi_multiple;
  return g;
}

// ---------------------------------------------------------------- analyze

int run_analyze(const ModelFlags& mf, std::size_t points, double hi_multiple, const std::string& format,
                const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
  const auto key = mf.to_key();
  const auto r = aoi::analyze(key, grid_from(points, hi_multiple));

  OutputDir dir("analyze", out);
  if (format == "csv") {
    auto a = dir.open("aoi_table.csv");
    aoi::write_table_csv(a, r.summary.aoi_table);
    auto p = dir.open("paoi_table.csv");
    aoi::write_table_csv(p, r.summary.paoi_table);
  } else {
    dir.write_json("aoi_table.json", aoi::to_json(r.summary.aoi_table));
    dir.write_json("paoi_table.json", aoi::to_json(r.summary.paoi_table));
  }
  dir.write_json("aoi_summary.json", aoi::metric_summary_json(r, aoi::Metric::kAoi));
  dir.write_json("paoi_summary.json", aoi::metric_summary_json(r, aoi::Metric::kPaoi));
  json params = aoi::to_json(key);
  params["points"] = points;
  params["hi_multiple"] = hi_multiple;
  params["format"] = format;
  dir.write_manifest(params, json::array(), start);

  fmt::print("mean_aoi {}\nmean_paoi {}\np_success {}\noutput {}\n", aoi::fmt_num(r.summary.mean_aoi),
             aoi::fmt_num(r.summary.mean_paoi), aoi::fmt_num(r.summary.p_success), dir.path().string());
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimFlags {
  ModelFlags model;
  std::uint64_t cycles = 100000;
  std::optional<std::uint64_t> warmup;
  std::uint64_t seed = 1;
  int reps = 4;
  std::string config;
  std::size_t points = 500;
};

aoi::SimConfig sim_config(const SimFlags& f, const CLI::App& app) {
  ModelFlags mf = f.model;
  aoi::SimConfig cfg;
  cfg.horizon = f.cycles;
  cfg.warmup = f.warmup;
  cfg.seed = f.seed;
  cfg.replications = f.reps;
  if (!f.config.empty()) {
    std::ifstream is(f.config);
    if (!is) throw UsageError("--config: cannot open " + f.config);
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw UsageError(std::string("--config: ") + e.what());
    }
    // command-line flags given explicitly win over the file
    auto take = [&](const char* key, const char* flag, auto& dst) {
      if (j.contains(key) && app.count(flag) == 0) {
        try {
          j.at(key).get_to(dst);
        } catch (const json::exception&) {
          throw UsageError(std::string("--config: bad value for '") + key + "'");
        }
      }
    };
    std::string policy = mf.policy;
    take("policy", "--policy", policy);
    mf.policy = policy;
    take("mu1", "--mu1", mf.mu1);
    take("mu2", "--mu2", mf.mu2);
    try {
      if (j.contains("lambda") && app.count("--lambda") == 0) mf.lambda = j.at("lambda").get<double>();
      if (j.contains("k") && app.count("--k") == 0) mf.k = j.at("k").get<int>();
      if (j.contains("warmup") && app.count("--warmup") == 0) cfg.warmup = j.at("warmup").get<std::uint64_t>();
    } catch (const json::exception&) {
      throw UsageError("--config: bad value for 'lambda', 'k' or 'warmup'");
    }
    take("cycles", "--cycles", cfg.horizon);
    take("seed", "--seed", cfg.seed);
    take("replications", "--reps", cfg.replications);
    for (const auto& [key, _] : j.items()) {
      static const std::vector<std::string> known{"policy", "mu1", "mu2", "lambda", "k", "cycles", "warmup", "seed", "replications"};
      if (std::find(known.begin(), known.end(), key) == known.end()) throw UsageError("--config: unknown field '" + key + "'");
    }
  }
  cfg.model = mf.to_key();
  if (cfg.horizon < 1000) throw UsageError("--cycles must be >= 1000");
  if (cfg.effective_warmup() >= cfg.horizon) throw UsageError("--warmup must be smaller than --cycles");
  if (cfg.replications < 1) throw UsageError("--reps must be >= 1");
  return cfg;
}

int run_simulate(const SimFlags& f, const CLI::App& app, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = sim_config(f, app);
  if (f.points < 2) throw UsageError("--points must be >= 2");
  const auto r = aoi::simulate(cfg);

  OutputDir dir("simulate", out);
  dir.write_json("sim_result.json", aoi::to_json(r));
  aoi::GridSpec g;
  g.points = f.points;
  {
    auto os = dir.open("aoi_empirical.csv");
    aoi::write_empirical_csv(os, r.aoi_cdf, aoi::log_grid(r.mean_aoi, g));
  }
  {
    auto os = dir.open("paoi_empirical.csv");
    aoi::write_empirical_csv(os, r.paoi_cdf, aoi::log_grid(r.mean_paoi, g));
  }
  json params = aoi::to_json(cfg.model);
  params["cycles"] = cfg.horizon;
  params["warmup"] = cfg.effective_warmup();
  params["replications"] = cfg.replications;
  params["points"] = f.points;
  dir.write_manifest(params, json::array({cfg.seed}), start);

  fmt::print("mean_aoi {} +- {}\nmean_paoi {} +- {}\ncycles {}\noutput {}\n", aoi::fmt_num(r.mean_aoi),
             aoi::fmt_num(r.mean_aoi_se), aoi::fmt_num(r.mean_paoi), aoi::fmt_num(r.mean_paoi_se), r.cycle_count,
             dir.path().string());
  return 0;
}

// ---------------------------------------------------------------- optimize

int run_optimize(double mu1, double mu2, int k, const aoi::OptOptions& opt, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  if (!(mu1 > 0.0)) throw UsageError("--mu1 must be > 0");
  if (!(mu2 > 0.0)) throw UsageError("--mu2 must be > 0");
  if (k < 1) throw UsageError("--k must be >= 1");
  if (!(opt.lo > 0.0) || !(opt.lo < opt.hi)) throw UsageError("--lo/--hi must satisfy 0 < lo < hi");
  if (!(opt.rel_tol > 0.0)) throw UsageError("--rel-tol must be > 0");
  const auto r = aoi::optimize_freeze(mu1, mu2, k, opt);

  OutputDir dir("optimize", out);
  dir.write_json("opt_result.json", aoi::to_json(r, mu1, mu2, k));
  dir.write_manifest({{"mu1", mu1}, {"mu2", mu2}, {"k", k}, {"lo", opt.lo}, {"hi", opt.hi}, {"rel_tol", opt.rel_tol}},
                     json::array(), start);
  fmt::print("lambda_star {}\nf_star {}\naoi_star {}\nzw_aoi {}\nreduction_pct {}\n", aoi::fmt_num(r.lambda_star),
             aoi::fmt_num(r.f_star), aoi::fmt_num(r.aoi_at_star), aoi::fmt_num(r.zw_aoi),
             aoi::fmt_num(r.reduction_pct));
  if (r.boundary_hit) fmt::print("warning: argmin at bracket boundary [{}, {}]\n", r.bracket_lo, r.bracket_hi);
  fmt::print("output {}\n", dir.path().string());
  return 0;
}

// ---------------------------------------------------------------- figure

std::vector<double> log_space(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return v;
}

void figure3(OutputDir& dir, aoi::Metric metric, std::uint64_t cycles, int reps, std::uint64_t seed) {
  const bool aoi_metric = metric == aoi::Metric::kAoi;
  auto os = dir.open(aoi_metric ? "fig3b.csv" : "fig3a.csv");
  os << "series,k,x,cdf\n";
  for (int k : {1, 10, 50}) {
    aoi::ModelKey key{aoi::Policy::kFp, 0.5, 0.1, 1.0, k};
    const auto an = aoi::analyze(key);
    aoi::SimConfig cfg;
    cfg.model = key;
    cfg.horizon = cycles;
    cfg.seed = seed;
    cfg.replications = reps;
    const auto sim = aoi::simulate(cfg);
    const auto& table = aoi_metric ? an.summary.aoi_table : an.summary.paoi_table;
    for (std::size_t i = 0; i < table.grid.size(); ++i)
      os << "analytic," << k << ',' << aoi::fmt_num(table.grid[i]) << ',' << aoi::fmt_num(table.cdf[i]) << '\n';
    for (double x : table.grid) {
      const double f = aoi_metric ? sim.aoi_cdf(x) : sim.paoi_cdf(x);
      os << "simulated," << k << ',' << aoi::fmt_num(x) << ',' << aoi::fmt_num(f) << '\n';
    }
  }
}

void figure45(OutputDir& dir, bool aoi_metric) {
  auto os = dir.open(aoi_metric ? "fig5.csv" : "fig4.csv");
  os << (aoi_metric ? "mu1,lambda,mean_aoi,zw_mean_aoi\n" : "mu1,lambda,mean_paoi,zw_mean_paoi\n");
  const double mu2 = 0.1;
  const int k = 50;
  for (double mu1 : {0.1, 0.5}) {
    const auto zw = aoi::zw_closed_form_means(aoi::ZwParams(mu1, mu2));
    for (double lambda : log_space(0.01, 100.0, 41)) {
      const auto amc = aoi::make_fp_amc(aoi::FpParams(mu1, mu2, lambda, k));
      const double v = aoi_metric ? aoi::aoi_mean(amc) : aoi::paoi_mean(amc);
      os << aoi::fmt_num(mu1) << ',' << aoi::fmt_num(lambda) << ',' << aoi::fmt_num(v) << ','
         << aoi::fmt_num(aoi_metric ? zw.mean_aoi : zw.mean_paoi) << '\n';
    }
  }
  if (aoi_metric) {
    auto opt = dir.open("fig5_optimum.csv");
    opt << "mu1,lambda_star,f_star,aoi_star,zw_aoi\n";
    for (double mu1 : {0.1, 0.5}) {
      const auto r = aoi::optimize_freeze(mu1, mu2, k);
      opt << aoi::fmt_num(mu1) << ',' << aoi::fmt_num(r.lambda_star) << ',' << aoi::fmt_num(r.f_star) << ','
          << aoi::fmt_num(r.aoi_at_star) << ',' << aoi::fmt_num(r.zw_aoi) << '\n';
    }
  }
}

void figure6(OutputDir& dir) {
  const double mu1 = 1.0;
  {
    auto os = dir.open("fig6.csv");
    os << aoi::kSweepHeader << '\n';
    for (int k : {1, 10, 50})
      for (double mu2 : aoi::mu2_sweep_grid()) os << aoi::sweep_row(mu2, k, aoi::optimize_freeze(mu1, mu2, k)) << '\n';
  }
  auto os = dir.open("fig6_preempt_only.csv");
  os << "mu2,aoi,zw_aoi,reduction_pct\n";
  for (double mu2 : aoi::mu2_sweep_grid()) {
    const double zw = aoi::zw_closed_form_means(aoi::ZwParams(mu1, mu2)).mean_aoi;
    const double po = aoi::aoi_mean(aoi::make_fp_amc(aoi::preempt_only_params(mu1, mu2)));
    os << aoi::fmt_num(mu2) << ',' << aoi::fmt_num(po) << ',' << aoi::fmt_num(zw) << ','
       << aoi::fmt_num(aoi::reduction_pct(zw, po)) << '\n';
  }
}

int run_figure(const std::string& id, std::uint64_t cycles, int reps, std::uint64_t seed, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  static const std::vector<std::string> ids{"3a", "3b", "4", "5", "6"};
  if (std::find(ids.begin(), ids.end(), id) == ids.end())
    throw UsageError("unknown figure id '" + id + "' (valid: 3a, 3b, 4, 5, 6)");
  if (cycles < 1000) throw UsageError("--cycles must be >= 1000");
  if (reps < 1) throw UsageError("--reps must be >= 1");
  OutputDir dir("figure-" + id, out);
  json seeds = json::array();
  if (id == "3a" || id == "3b") {
    figure3(dir, id == "3b" ? aoi::Metric::kAoi : aoi::Metric::kPaoi, cycles, reps, seed);
    seeds.push_back(seed);
  } else if (id == "4" || id == "5") {
    figure45(dir, id == "5");
  } else {
    figure6(dir);
  }
  dir.write_manifest({{"id", id}, {"cycles", cycles}, {"replications", reps}}, seeds, start);
  fmt::print("output {}\n", dir.path().string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age of information analysis for dual-server status update systems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string out;

  auto* analyze = app.add_subcommand("analyze", "exact AoI/PAoI distributions and moments");
  ModelFlags analyze_model;
  analyze_model.add_to(analyze);
  std::size_t points = 2000;
  double hi_multiple = 40.0;
  std::string format = "csv";
  analyze->add_option("--points", points, "log-spaced grid points");
  analyze->add_option("--hi-multiple", hi_multiple, "grid end as a multiple of the mean");
  analyze->add_option("--format", format, "table format: csv or json");
  analyze->add_option("--out", out, "output directory");

  auto* simulate = app.add_subcommand("simulate", "discrete-event simulation");
  SimFlags sim;
  sim.model.add_to(simulate);
  simulate->add_option("--cycles", sim.cycles, "successful receptions per replication");
  simulate->add_option("--warmup", sim.warmup, "receptions discarded per replication (default 1%)");
  simulate->add_option("--seed", sim.seed, "64-bit seed");
  simulate->add_option("--reps", sim.reps, "independent replications");
  simulate->add_option("--config", sim.config, "JSON run configuration");
  simulate->add_option("--points", sim.points, "grid points for empirical cdf CSVs");
  simulate->add_option("--out", out, "output directory");

  auto* optimize = app.add_subcommand("optimize", "freeze rate minimizing mean AoI");
  double omu1 = 1.0, omu2 = 1.0;
  int ok = 50;
  aoi::OptOptions opt;
  optimize->add_option("--mu1", omu1, "service rate of server 1")->required();
  optimize->add_option("--mu2", omu2, "service rate of server 2")->required();
  optimize->add_option("--k", ok, "Erlang order of the freeze");
  optimize->add_option("--lo", opt.lo, "bracket lower end (rate)");
  optimize->add_option("--hi", opt.hi, "bracket upper end (rate)");
  optimize->add_option("--rel-tol", opt.rel_tol, "final bracket width relative to the argmin");
  optimize->add_option("--out", out, "output directory");

  auto* figure = app.add_subcommand("figure", "plot-ready CSV data for the numerical experiments");
  std::string fig_id;
  std::uint64_t fig_cycles = 250000, fig_seed = 1;
  int fig_reps = 4;
  figure->add_option("id", fig_id, "3a, 3b, 4, 5 or 6")->required();
  figure->add_option("--cycles", fig_cycles, "receptions per replication (3a/3b)");
  figure->add_option("--reps", fig_reps, "replications (3a/3b)");
  figure->add_option("--seed", fig_seed, "seed (3a/3b)");
  figure->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return 2;
  }

  try {
    if (*analyze) return run_analyze(analyze_model, points, hi_multiple, format, out);
    if (*simulate) return run_simulate(sim, *simulate, out);
    if (*optimize) return run_optimize(omu1, omu2, ok, opt, out);
    if (*figure) return run_figure(fig_id, fig_cycles, fig_reps, fig_seed, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
