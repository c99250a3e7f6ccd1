// Command-line driver: grow cascade realizations, verify the model's exact
// and statistical laws, export measure densities, and produce moment/
// singularity statistics.

#include "h22/cascade.hpp"
#include "h22/io.hpp"
#include "h22/stats.hpp"
#include "h22/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitStatFailure = 1;
constexpr int kExitInvariant = 2;
constexpr int kExitUsage = 3;

struct CommonArgs {
  std::string config_path;
  h22::RunConfig cfg;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  args.cfg.out_dir = h22::default_out_dir();
  cmd->add_option("--config", args.config_path, "key=value config file; flags override it")
      ->check(CLI::ExistingFile);
  cmd->add_option("--wbar", args.cfg.wbar, "inverse temperature");
  cmd->add_option("--rho", args.cfg.rho, "hierarchical decay parameter (> 1)");
  cmd->add_option("--level", args.cfg.level, "target level / depth");
  cmd->add_option("--replicates", args.cfg.replicates, "Monte Carlo replicates");
  cmd->add_option("--seed", args.cfg.seed, "RNG seed");
  cmd->add_option("--threads", args.cfg.threads, "worker threads (0 = auto)");
  cmd->add_option("--out", args.cfg.out_dir, "output directory");
  cmd->add_option("--suite", args.cfg.suite, "verification suite name or 'all'");
  cmd->add_option("--s", args.cfg.s_exponent, "fractional moment exponent in (0,1/2)");
  cmd->add_option("--floor", args.cfg.floor_value, "density floor for the singularity probe");
  cmd->add_option("--dead-band", args.cfg.dead_band, "slope dead band for the singularity label");
}

// config file first, command line second
void finalize(CLI::App* cmd, CommonArgs& args) {
  if (args.config_path.empty()) return;
  h22::RunConfig file_cfg = h22::load_config(args.config_path);
  CommonArgs merged;
  merged.cfg = file_cfg;
  for (const std::string flag :
       {"--wbar", "--rho", "--level", "--replicates", "--seed", "--threads", "--out", "--suite",
        "--s", "--floor", "--dead-band"}) {
    if (cmd->count(flag) == 0) continue;
    if (flag == "--wbar") merged.cfg.wbar = args.cfg.wbar;
    else if (flag == "--rho") merged.cfg.rho = args.cfg.rho;
    else if (flag == "--level") merged.cfg.level = args.cfg.level;
    else if (flag == "--replicates") merged.cfg.replicates = args.cfg.replicates;
    else if (flag == "--seed") merged.cfg.seed = args.cfg.seed;
    else if (flag == "--threads") merged.cfg.threads = args.cfg.threads;
    else if (flag == "--out") merged.cfg.out_dir = args.cfg.out_dir;
    else if (flag == "--suite") merged.cfg.suite = args.cfg.suite;
    else if (flag == "--s") merged.cfg.s_exponent = args.cfg.s_exponent;
    else if (flag == "--floor") merged.cfg.floor_value = args.cfg.floor_value;
    else if (flag == "--dead-band") merged.cfg.dead_band = args.cfg.dead_band;
  }
  args.cfg = merged.cfg;
}

int cmd_grow(const h22::RunConfig& cfg, bool validate_full) {
  cfg.validate();
  h22::HierParams hp{cfg.wbar, cfg.rho, 0};
  h22::CascadeRealization r = h22::init_root(hp, cfg.seed, 0, std::max(cfg.level, 1));
  std::printf("level %2d  wbar %-10.6g mass %.12g\n", 0, r.levels[0].wbar, r.total_mass());
  for (int n = 1; n <= cfg.level; ++n) {
    h22::grow_to_level(r, n, validate_full);
    const auto& l = r.levels.back();
    std::printf("level %2d  wbar %-10.6g mass %.12g  density [%.6g, %.6g]\n", n, l.wbar,
                h22::measure_density(r, n).total_mass(), l.u.array().exp().minCoeff(),
                l.u.array().exp().maxCoeff());
  }
  if (validate_full)
    std::printf("full-matrix replay deviation %.3e\n", r.validation_deviation);
  h22::validate(r);
  h22::ensure_dir(cfg.out_dir);
  const std::string path = cfg.out_dir + "/realization.json";
  h22::save_realization(r, path);
  std::printf("saved %s\n", path.c_str());
  return kExitPass;
}

int cmd_verify(const h22::RunConfig& cfg) {
  cfg.validate();
  h22::verify::Options opt;
  opt.wbar = cfg.wbar;
  opt.rho = cfg.rho;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  // scale the battery to the requested replicate budget
  const double scale = double(cfg.replicates) / 10000.0;
  auto scaled = [&](long base) { return std::max<long>(1000, long(base * scale)); };
  opt.n_laplace = scaled(100000);
  opt.n_expmart = scaled(50000);
  opt.n_total_mass = scaled(50000);
  opt.n_ward = scaled(50000);
  opt.n_coupling = scaled(10000);
  opt.n_fractional = scaled(10000);
  opt.n_ks_mcmc = scaled(50000);
  opt.n_beta_check = scaled(100000);
  opt.n_martingale_regrow = scaled(10000);

  const auto reports = h22::verify::run_suite(cfg.suite, opt);
  h22::ensure_dir(cfg.out_dir);
  std::ofstream report_file(cfg.out_dir + "/verify_report.txt");
  bool all_pass = true;
  report_file << "suite=" << cfg.suite << " seed=" << cfg.seed << " wbar=" << cfg.wbar
              << " rho=" << cfg.rho << "\n";
  for (const auto& r : reports) {
    const std::string line = r.line();
    std::puts(line.c_str());
    report_file << line << "\n";
    for (const auto& [k, v] : r.metadata) report_file << "    " << k << " = " << v << "\n";
    all_pass = all_pass && r.passed;
  }
  std::printf("%zu checks, %s\n", reports.size(), all_pass ? "all passed" : "FAILURES present");
  return all_pass ? kExitPass : kExitStatFailure;
}

int cmd_measure(const h22::RunConfig& cfg, const std::string& realization_path, int depth,
                bool svg) {
  h22::CascadeRealization r = h22::load_realization(realization_path);
  const int n = depth < 0 ? r.grown_level() : depth;
  const h22::EmpiricalMeasure m = h22::measure_density(r, n);
  h22::ensure_dir(cfg.out_dir);
  {
    std::ofstream csv(cfg.out_dir + "/measure.csv");
    h22::write_measure_csv(m, csv);
  }
  if (svg) {
    std::ofstream out(cfg.out_dir + "/measure.svg");
    h22::write_measure_svg(m, out);
  }
  std::printf("depth %d cells %lld total mass %.12g -> %s/measure.csv\n", n,
              static_cast<long long>(m.density.size()), m.total_mass(), cfg.out_dir.c_str());
  return kExitPass;
}

int cmd_stats(const h22::RunConfig& cfg) {
  cfg.validate();
  h22::ensure_dir(cfg.out_dir);
  h22::HierParams hp{cfg.wbar, cfg.rho, 0};

  const auto curve = h22::fractional_moment_curve(hp, cfg.s_exponent, std::min(cfg.level, 12),
                                                  cfg.replicates, cfg.seed, 0x73746174ull);
  {
    std::ofstream csv(cfg.out_dir + "/fractional_moments.csv");
    csv << "level,mean,se\n";
    for (const auto& p : curve)
      csv << p.level << "," << nlohmann::json(p.value).dump() << ","
          << nlohmann::json(p.se).dump() << "\n";
  }
  std::printf("fractional moments s=%.3g written for levels 0..%d\n", cfg.s_exponent,
              curve.back().level);

  const int depth = std::max(cfg.level, 12);
  h22::CascadeRealization r = h22::init_root(hp, cfg.seed, 0x736cull, depth);
  h22::grow_to_level(r, depth);
  const auto diag = h22::singularity_diagnostic(r, cfg.floor_value, cfg.dead_band);
  {
    std::ofstream csv(cfg.out_dir + "/singularity_diagnostic.csv");
    csv << "level,q10,median,q90,below_floor_fraction\n";
    for (const auto& row : diag.rows)
      csv << row.level << "," << row.q10 << "," << row.median << "," << row.q90 << ","
          << row.below_floor_fraction << "\n";
  }
  std::printf("singularity probe: median ln-phi slope %.4f per level, label %s\n",
              diag.median_slope, h22::to_string(diag.label));
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical random-operator cascade simulator"};
  app.require_subcommand(1);

  CommonArgs grow_args, verify_args, measure_args, stats_args;
  auto* grow = app.add_subcommand("grow", "grow a cascade realization and save it");
  add_common(grow, grow_args);
  bool validate_full = false;
  grow->add_flag("--validate", validate_full,
                 "replay each step through full Green matrices (levels <= 10)");
  auto* verify = app.add_subcommand("verify", "run the verification battery");
  add_common(verify, verify_args);
  auto* measure = app.add_subcommand("measure", "export the density of a saved realization");
  add_common(measure, measure_args);
  std::string realization_path;
  int depth = -1;
  bool svg = false;
  measure->add_option("realization", realization_path, "saved realization file")
      ->required();
  measure->add_option("--depth", depth, "depth to render (default: deepest grown)");
  measure->add_flag("--svg", svg, "also write an SVG log-density plot");
  auto* stats = app.add_subcommand("stats", "fractional moment curve and singularity probe");
  add_common(stats, stats_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (grow->parsed()) {
      finalize(grow, grow_args);
      return cmd_grow(grow_args.cfg, validate_full);
    }
    if (verify->parsed()) {
      finalize(verify, verify_args);
      return cmd_verify(verify_args.cfg);
    }
    if (measure->parsed()) {
      finalize(measure, measure_args);
      return cmd_measure(measure_args.cfg, realization_path, depth, svg);
    }
    if (stats->parsed()) {
      finalize(stats, stats_args);
      return cmd_stats(stats_args.cfg);
    }
  } catch (const h22::consistency_error& e) {
    std::fprintf(stderr, "consistency violation: %s\n", e.what());
    return kExitInvariant;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvariant;
  }
  return kExitUsage;
}
