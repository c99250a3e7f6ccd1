// Acceptance battery: one line per criterion, nonzero exit on any failure.
// Sample sizes, tolerances and runtime budgets are pinned here and must not
// be tuned to make a run pass.

#include "h22/verify.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

namespace {

struct Criterion {
  std::string name;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

std::vector<Criterion> results;

template <class Fn>
void run(const std::string& name, double time_budget_s, Fn&& fn) {
  Criterion c;
  c.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const std::vector<h22::TestReport> reports = fn();
    c.passed = true;
    double worst = 0.0;
    for (const auto& r : reports) {
      c.passed = c.passed && r.passed;
      if (r.standard_error > 0.0) worst = std::max(worst, r.statistic / r.standard_error);
      if (!r.passed) c.detail += " [" + r.name + "]";
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), " worst_dev/se=%.2f", worst);
    if (worst > 0.0) c.detail += buf;
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = std::string(" exception: ") + e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_budget_s > 0.0 && c.seconds > time_budget_s) {
    c.passed = false;
    c.detail += " (over time budget)";
  }
  std::printf("%-4s criterion %-38s %7.2fs%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
              c.seconds, c.detail.c_str());
  std::fflush(stdout);
  results.push_back(std::move(c));
}

}  // namespace

int main(int argc, char** argv) {
  h22::verify::Options opt;
  opt.wbar = 1.0;
  opt.rho = 2.0;
  opt.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  std::printf("seed %llu\n", static_cast<unsigned long long>(opt.seed));

  opt.n_roundtrip = 10000;
  run("1_coarse_fine_exactness", 1.0, [&] { return h22::verify::check_roundtrip(opt); });

  opt.n_green = 1000;
  run("2_green_reconstruction", 30.0, [&] { return h22::verify::check_green_reconstruction(opt); });

  opt.n_laplace = 1000000;
  run("3_laplace_oracle", 300.0, [&] { return h22::verify::check_laplace(opt); });

  opt.martingale_parents = 20;
  opt.n_martingale_regrow = 10000;
  run("4_one_step_martingale", 0.0, [&] { return h22::verify::check_one_step_martingale(opt); });

  opt.n_expmart = 100000;
  run("5_exponential_martingale", 0.0, [&] { return h22::verify::check_exponential_martingale(opt); });

  opt.n_total_mass = 100000;
  run("6_total_mass_law", 0.0, [&] { return h22::verify::check_total_mass(opt); });

  opt.n_ward = 100000;
  run("7_ward_identity", 0.0, [&] {
    auto all = h22::verify::check_ward(opt);
    return all;
  });

  opt.conservation_level = 20;
  run("8_conservation_level20", 120.0, [&] { return h22::verify::check_conservation(opt); });

  opt.n_coupling = 10000;
  run("9_cross_coupling_equality", 0.0, [&] { return h22::verify::check_cross_coupling(opt); });

  opt.n_fractional = 10000;
  opt.fractional_levels = 8;
  run("10_fractional_moment_decay", 0.0, [&] { return h22::verify::check_fractional_decay(opt); });

  run("11_determinism", 0.0, [&] { return h22::verify::check_determinism(opt); });

  int failures = 0;
  for (const auto& c : results) failures += c.passed ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}
