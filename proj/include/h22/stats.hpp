#pragma once

#include "h22/cascade.hpp"
#include "h22/distributions.hpp"
#include "h22/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace h22 {

/// Named statistical verdict: a statistic, the threshold it was held to, the
/// sample size and standard error behind it.
struct TestReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  long n_samples = 0;
  double standard_error = 0.0;
  bool passed = false;
  std::map<std::string, double> metadata;

  std::string line() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-44s %s  stat=%.6g thr=%.6g n=%ld se=%.3g",
                  name.c_str(), passed ? "PASS" : "FAIL", statistic, threshold, n_samples,
                  standard_error);
    return buf;
  }
};

/// Streaming mean/variance accumulator; merges associatively.
struct Accumulator {
  long n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) { ++n; sum += x; sumsq += x * x; }
  void merge(const Accumulator& o) { n += o.n; sum += o.sum; sumsq += o.sumsq; }
  double mean() const { return n ? sum / n : 0.0; }
  double variance() const {
    if (n < 2) return 0.0;
    return std::max(0.0, (sumsq - sum * sum / n) / (n - 1));
  }
  double se() const { return n ? std::sqrt(variance() / n) : 0.0; }
};

/// Asymptotic Kolmogorov quantile factor: threshold = c(alpha)/sqrt(n) for the
/// one-sample statistic, c(alpha) sqrt((m+n)/(mn)) for two samples.
inline double ks_quantile_factor(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha in (0,1)");
  return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

/// One-sample Kolmogorov-Smirnov statistic against a distribution function.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    worst = std::max(worst, std::max((i + 1) / n - f, f - i / n));
  }
  return worst;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;  // ties advance both sides together
    while (j < b.size() && b[j] == x) ++j;
    worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return worst;
}

inline TestReport two_sample_test(const std::string& name, const std::vector<double>& a,
                                  const std::vector<double>& b, double alpha = 1e-3) {
  TestReport r;
  r.name = name;
  r.statistic = ks_two_sample_statistic(a, b);
  const double m = double(a.size()), n = double(b.size());
  r.threshold = ks_quantile_factor(alpha) * std::sqrt((m + n) / (m * n));
  r.n_samples = long(a.size() + b.size());
  r.passed = r.statistic < r.threshold;
  return r;
}

/// Paired one-step martingale check: child means against their parent values,
/// pass when every |mean - parent| stays within 3 SE.
inline TestReport paired_martingale_test(const std::string& name,
                                         const std::vector<double>& parent_values,
                                         const std::vector<Accumulator>& child_means) {
  if (parent_values.size() != child_means.size() || parent_values.empty())
    throw std::invalid_argument("mismatched or empty pairing");
  TestReport r;
  r.name = name;
  double worst_dev = 0.0, worst_se = 0.0;
  long n = 0;
  bool ok = true;
  for (std::size_t k = 0; k < parent_values.size(); ++k) {
    const double dev = std::abs(child_means[k].mean() - parent_values[k]);
    const double se = child_means[k].se();
    n += child_means[k].n;
    if (dev > std::max(3.0 * se, 1e-12)) ok = false;
    if (dev * worst_se >= worst_dev * se) {  // track the largest dev/se pair
      worst_dev = dev;
      worst_se = se;
    }
  }
  r.statistic = worst_dev;
  r.standard_error = worst_se;
  r.threshold = 3.0 * worst_se;
  r.n_samples = n;
  r.passed = ok;
  return r;
}

/// Moment-symmetry check of the field: compares the empirical means of e^{s u}
/// and e^{(1-s) u} over the same samples (paired standard error).
inline TestReport ward_identity_test(const std::vector<double>& u_samples, double s) {
  if (u_samples.empty()) throw std::invalid_argument("empty sample");
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s in (0,1)");
  Accumulator diff;
  for (double u : u_samples) diff.add(std::exp(s * u) - std::exp((1.0 - s) * u));
  TestReport r;
  r.name = "ward_identity_s=" + std::to_string(s);
  r.statistic = std::abs(diff.mean());
  r.standard_error = diff.se();
  r.threshold = 3.0 * diff.se();
  r.n_samples = diff.n;
  r.passed = r.statistic <= std::max(r.threshold, 1e-14);
  return r;
}

/// Piecewise-constant density of a realization at depth n: value e^{u^(n)_i}
/// on the dyadic cell [(i-1) 2^-n, i 2^-n).
struct EmpiricalMeasure {
  int depth = 0;
  Eigen::VectorXd density;

  double cell_mass(Eigen::Index i) const { return density(i) * std::pow(2.0, -depth); }
  double total_mass() const { return density.sum() * std::pow(2.0, -depth); }
  double mass_of_prefix(double x) const {  // mass of [0, x) for dyadic x
    const double cells = x * std::pow(2.0, depth);
    const Eigen::Index full = static_cast<Eigen::Index>(cells);
    double m = 0.0;
    for (Eigen::Index i = 0; i < full; ++i) m += cell_mass(i);
    return m;
  }
};

inline EmpiricalMeasure measure_density(const CascadeRealization& r, int n) {
  if (n < 0 || n > r.grown_level()) throw std::invalid_argument("depth exceeds grown level");
  EmpiricalMeasure m;
  m.depth = n;
  m.density = r.levels[static_cast<std::size_t>(n)].u.array().exp();
  if ((m.density.array() <= 0.0).any()) throw consistency_error("nonpositive density cell");
  if (std::abs(m.total_mass() - r.total_mass()) > 1e-10 * (1.0 + r.total_mass()))
    throw consistency_error("measure mass differs from the conserved root mass");
  return m;
}

/// KS test of sampled total masses against the root law pinned by quadrature
/// of the one-edge field density (inverse Gaussian, mean 1, shape
/// wbar/(2(rho-1))), plus the mean-one check.
inline TestReport total_mass_test(const std::vector<double>& masses, const HierParams& params,
                                  double alpha = 1e-3) {
  if (masses.size() < 10000) throw std::invalid_argument("need at least 1e4 samples");
  const double shape = params.wbar / (2.0 * (params.rho - 1.0));
  TestReport r;
  r.name = "total_mass_inverse_gaussian";
  r.statistic = ks_statistic(masses, [&](double y) { return inverse_gaussian_cdf(y, 1.0, shape); });
  r.threshold = ks_quantile_factor(alpha) / std::sqrt(double(masses.size()));
  r.n_samples = long(masses.size());
  Accumulator acc;
  for (double m : masses) acc.add(m);
  r.standard_error = acc.se();
  r.metadata["mean"] = acc.mean();
  r.metadata["mean_dev_over_se"] = std::abs(acc.mean() - 1.0) / std::max(acc.se(), 1e-300);
  r.passed = r.statistic < r.threshold && std::abs(acc.mean() - 1.0) <= 3.0 * acc.se();
  return r;
}

struct MomentPoint {
  int level = 0;
  double value = 0.0;
  double se = 0.0;
};

/// Empirical fractional moments E[e^{s u^(n)_1}] of the first site, levels
/// 0..n_max, over independent realizations grown with the cascade coupling.
inline std::vector<MomentPoint> fractional_moment_curve(const HierParams& params, double s,
                                                        int n_max, long replicates,
                                                        std::uint64_t seed,
                                                        std::uint64_t stream_base) {
  if (!(s > 0.0 && s < 0.5)) throw std::invalid_argument("s in (0,1/2)");
  std::vector<Accumulator> acc(static_cast<std::size_t>(n_max) + 1);
  for (long rep = 0; rep < replicates; ++rep) {
    CascadeRealization r =
        init_root(params, seed, substream(stream_base, 0x6d6f6d, std::uint64_t(rep)),
                  std::max(n_max, 1));
    grow_to_level(r, n_max);
    for (int n = 0; n <= n_max; ++n)
      acc[static_cast<std::size_t>(n)].add(std::exp(s * r.levels[static_cast<std::size_t>(n)].u(0)));
  }
  std::vector<MomentPoint> out;
  for (int n = 0; n <= n_max; ++n)
    out.push_back({n, acc[static_cast<std::size_t>(n)].mean(), acc[static_cast<std::size_t>(n)].se()});
  return out;
}

enum class SingularityLabel { singular_consistent, density_consistent, inconclusive };

inline const char* to_string(SingularityLabel l) {
  switch (l) {
    case SingularityLabel::singular_consistent: return "singular-consistent";
    case SingularityLabel::density_consistent: return "density-consistent";
    default: return "inconclusive";
  }
}

/// Numerical probe of the singular/absolutely-continuous dichotomy: per-level
/// quantiles of ln phi over all cells, the Lebesgue fraction of cells whose
/// field lies below a floor, and the least-squares slope of the median of
/// ln phi against the level. The label only reflects the slope sign against a
/// dead band; it proves nothing.
struct SingularityDiagnostic {
  struct LevelRow {
    int level = 0;
    double q10 = 0.0, median = 0.0, q90 = 0.0;
    double below_floor_fraction = 0.0;
  };
  std::vector<LevelRow> rows;
  double median_slope = 0.0;
  double dead_band = 0.02;
  double floor_value = 0.0;
  SingularityLabel label = SingularityLabel::inconclusive;
};

inline SingularityDiagnostic singularity_diagnostic(const CascadeRealization& r,
                                                    double floor_value = 1e-3,
                                                    double dead_band = 0.02) {
  if (r.grown_level() < 12) throw std::invalid_argument("diagnostic needs depth >= 12");
  SingularityDiagnostic d;
  d.dead_band = dead_band;
  d.floor_value = floor_value;
  const double log_floor = std::log(floor_value);
  for (const auto& l : r.levels) {
    std::vector<double> lnphi(l.u.data(), l.u.data() + l.u.size());
    std::sort(lnphi.begin(), lnphi.end());
    auto quantile = [&](double q) {
      const double pos = q * (lnphi.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(pos);
      const double frac = pos - double(lo);
      return lo + 1 < lnphi.size() ? lnphi[lo] * (1.0 - frac) + lnphi[lo + 1] * frac : lnphi[lo];
    };
    SingularityDiagnostic::LevelRow row;
    row.level = l.level;
    row.q10 = quantile(0.10);
    row.median = quantile(0.50);
    row.q90 = quantile(0.90);
    row.below_floor_fraction =
        double(std::lower_bound(lnphi.begin(), lnphi.end(), log_floor) - lnphi.begin()) /
        double(lnphi.size());
    d.rows.push_back(row);
  }
  // least-squares slope of median ln phi vs level
  const double n = double(d.rows.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& row : d.rows) {
    sx += row.level;
    sy += row.median;
    sxx += double(row.level) * row.level;
    sxy += row.level * row.median;
  }
  d.median_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (d.median_slope < -dead_band) d.label = SingularityLabel::singular_consistent;
  else if (d.median_slope > dead_band) d.label = SingularityLabel::density_consistent;
  else d.label = SingularityLabel::inconclusive;
  return d;
}

}  // namespace h22
