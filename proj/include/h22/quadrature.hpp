#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace h22 {

/// Composite-Simpson integral of f over [a,b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 1 << 12) {
  if (n < 2) throw std::invalid_argument("need at least two intervals");
  n += n & 1;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += f(a + k * h) * (k & 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// Cumulative distribution of an unnormalized density on [a,b], tabulated on a
/// uniform grid by cumulative Simpson and evaluated by monotone interpolation.
/// Densities here decay at least exponentially, so a hard truncation interval
/// chosen by the caller keeps the tail error below the table resolution.
class TabulatedCdf {
 public:
  TabulatedCdf(const std::function<double(double)>& density, double a, double b, int cells = 1 << 14)
      : a_(a), b_(b) {
    if (!(b > a)) throw std::invalid_argument("empty integration interval");
    cells += cells & 1;
    const double h = (b - a) / cells;
    std::vector<double> f(cells + 1);
    for (int k = 0; k <= cells; ++k) f[k] = density(a + k * h);
    cum_.assign(cells / 2 + 1, 0.0);
    for (int k = 0; k < cells; k += 2)
      cum_[k / 2 + 1] = cum_[k / 2] + h / 3.0 * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
    total_ = cum_.back();
    if (!(total_ > 0.0)) throw std::invalid_argument("density integrates to zero");
    step_ = 2.0 * h;
    dens_ = std::move(f);
    h_ = h;
  }

  double total_mass() const { return total_; }

  /// Normalized CDF value at x.
  double operator()(double x) const {
    if (x <= a_) return 0.0;
    if (x >= b_) return 1.0;
    const double t = (x - a_) / step_;
    int cell = static_cast<int>(t);
    if (cell >= static_cast<int>(cum_.size()) - 1) cell = static_cast<int>(cum_.size()) - 2;
    // Simpson over the partial cell keeps the interpolation O(h^4) accurate.
    const double x0 = a_ + cell * step_;
    const double mid = 0.5 * (x0 + x);
    const double partial = (x - x0) / 6.0 *
        (dens_[2 * cell] + 4.0 * interp_density(mid) + interp_density(x));
    return (cum_[cell] + partial) / total_;
  }

  /// Inverse CDF by bisection on the table plus local refinement.
  double inverse(double p) const {
    if (p <= 0.0) return a_;
    if (p >= 1.0) return b_;
    double lo = a_, hi = b_;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (b_ - a_); ++it) {
      const double mid = 0.5 * (lo + hi);
      ((*this)(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  double interp_density(double x) const {
    const double t = (x - a_) / h_;
    int k = static_cast<int>(t);
    if (k >= static_cast<int>(dens_.size()) - 1) k = static_cast<int>(dens_.size()) - 2;
    const double w = t - k;
    return dens_[k] * (1.0 - w) + dens_[k + 1] * w;
  }

  double a_, b_, total_, step_, h_;
  std::vector<double> cum_;
  std::vector<double> dens_;
};

}  // namespace h22
