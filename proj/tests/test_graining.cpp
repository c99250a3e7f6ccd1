#include <doctest.h>

#include "h22/cascade.hpp"
#include "h22/graining.hpp"
#include "h22/hierarchical.hpp"
#include "h22/quadrature.hpp"
#include "h22/stats.hpp"

#include <cmath>

using namespace h22;

namespace {

// exact two-vertex reduced state on the level-0 ball
SchrodingerState exact_root_state(double wbar, double rho, std::uint64_t seed) {
  const WeightedGraph g0 = build_level_graph({wbar, rho, 0});
  RngStream rng(seed, 0);
  const double gamma = rng.gamma_half();
  const double mass = rng.inverse_gaussian(1.0, wbar / (2.0 * (rho - 1.0)));
  Eigen::VectorXd u(2);
  u << std::log(mass), 0.0;
  return make_state(g0, beta_from_u(g0, u, gamma, 1));
}

}  // namespace

TEST_CASE("coarse_grain_beta hand values and Schur agreement") {
  CHECK(coarse_grain_beta(1.0, 1.0, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(coarse_grain_beta(1.0, 1.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));

  RngStream rng(12, 0);
  for (int k = 0; k < 1000; ++k) {
    const double w = 0.05 + rng.uniform();
    const double b1 = 0.3 + 2.0 * rng.uniform();
    const double b2 = 0.3 + 2.0 * rng.uniform();
    if (4.0 * b1 * b2 <= w * w) continue;
    Eigen::Matrix2d huu;
    huu << 2.0 * b1, -w, -w, 2.0 * b2;
    const Eigen::Matrix2d ghat = huu.inverse();
    const double schur = 4.0 / (Eigen::Vector2d::Ones().transpose() * ghat * Eigen::Vector2d::Ones());
    REQUIRE(coarse_grain_beta(b1, b2, w) == doctest::Approx(schur / 2.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(coarse_grain_beta(0.1, 0.1, 1.0), consistency_error);
}

TEST_CASE("coarse_grain_G averaging on the identity matrix") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd r = coarse_grain_G(id, 0);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r(0, 1) == 0.0);
  CHECK(r(1, 1) == 1.0);
  CHECK(r.rows() == 3);
}

TEST_CASE("coarse-grained state is the reduced-graph operator") {
  // split an exact root state up one level, then coarse-grain back
  const double wbar = 1.0, rho = 2.0;
  const SchrodingerState red = exact_root_state(wbar, rho, 21);
  const double w1 = (rho / 2.0) * wbar / (2.0 * rho);
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream rng(22, 1);
  const Eigen::MatrixXd gf = fine_grain_G(red.green, fine, {0, w1}, rng, red.beta(0));

  const Eigen::MatrixXd back = coarse_grain_G(gf, 0);
  CHECK((back - red.green).cwiseAbs().maxCoeff() < 1e-10);

  // inverse of the fine matrix has the reduced weights off the pair
  const Eigen::MatrixXd hf = gf.inverse();
  CHECK(hf(0, 1) == doctest::Approx(-w1).epsilon(1e-9));
  CHECK(hf(0, 2) == doctest::Approx(-fine.weights(0, 2)).epsilon(1e-9));
}

TEST_CASE("fine_grain_pair: forced draws and exact identities") {
  // t = 0 forces equal children: inverts the symmetric coarse-grain example
  const SplitDraw d0 = fine_grain_pair_from(1.5, 0.5, 0.0, 1.0);
  CHECK(d0.beta1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(d0.beta2 == doctest::Approx(1.0).epsilon(1e-15));

  RngStream rng(1, 1);
  double worst_rt = 0.0, worst_det = 0.0;
  for (long k = 0; k < 1000000; ++k) {
    const double bp = 0.05 + 4.0 * rng.uniform();
    const double w = 0.02 + 1.5 * rng.uniform();
    const SplitDraw d = fine_grain_pair(bp, w, rng);
    REQUIRE(d.beta1 > 0.0);
    REQUIRE(d.beta2 > 0.0);
    REQUIRE(d.beta_check > 0.5 * bp + w);
    const double det = 4.0 * d.beta1 * d.beta2 - w * w;
    REQUIRE(det > 0.0);
    worst_det = std::max(worst_det, std::abs(det - 2.0 * d.beta_check * bp) / det);
    worst_rt = std::max(worst_rt, std::abs(coarse_grain_beta(d.beta1, d.beta2, w) - bp) / bp);
  }
  CHECK(worst_rt < 1e-12);
  CHECK(worst_det < 1e-12);
}

TEST_CASE("beta_check law against the raw-density quadrature oracle") {
  const double bp = 1.1, w = 0.35;
  const double a = 0.5 * bp + w;
  // raw conditional density e^{-bc xi^2/2} / (sqrt(2 bc) xi) integrated in
  // y = sqrt(bc - a); the Jacobian removes the edge singularity
  auto raw = [&](double y) {
    const double bc = a + y * y;
    const double gap = 4.0 * ((a - 0.5 * bp - w) + y * y);  // cancellation-free edge
    const double xi = std::sqrt(gap / bc);
    return std::exp(-0.5 * bc * xi * xi) / (std::sqrt(2.0 * bc) * xi) * 2.0 * y;
  };
  TabulatedCdf cdf(raw, 1e-6, 8.0);
  RngStream rng(77, 0);
  const long n = 200000;
  std::vector<double> samples(n);
  for (auto& x : samples) x = fine_grain_pair(bp, w, rng).beta_check;
  const double ks =
      ks_statistic(samples, [&](double b) { return cdf(std::sqrt(std::max(b - a, 0.0))); });
  CHECK(ks < ks_quantile_factor(1e-3) / std::sqrt(double(n)));
}

TEST_CASE("fine_grain_G preserves, reconstructs, and validates") {
  const SchrodingerState red = exact_root_state(0.9, 2.0, 31);
  const double w1 = (2.0 / 2.0) * 0.9 / 4.0;
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream rng(32, 0);

  for (int rep = 0; rep < 500; ++rep) {
    SplitDraw d;
    const Eigen::MatrixXd gf = fine_grain_G(red.green, fine, {0, w1}, rng, red.beta(0), &d);
    // preservation is exact
    REQUIRE(gf(2, 2) == red.green(1, 1));
    // inverse is the fine operator built from the drawn pair
    Eigen::VectorXd beta_fine(3);
    beta_fine << d.beta1, d.beta2, red.beta(1);
    const Eigen::MatrixXd h = assemble_schrodinger(fine, beta_fine);
    REQUIRE(inverse_residual(gf, h) < 1e-10);
  }
}

TEST_CASE("fine_grain_G recovers beta' from the matrix when not supplied") {
  const SchrodingerState red = exact_root_state(1.2, 2.0, 41);
  const double w1 = 1.2 / 4.0;
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream a(5, 5), b(5, 5);
  const Eigen::MatrixXd g1 = fine_grain_G(red.green, fine, {0, w1}, a, red.beta(0));
  const Eigen::MatrixXd g2 = fine_grain_G(red.green, fine, {0, w1}, b);  // fallback path
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-9);

  // corrupted reduced input is rejected by the fallback path
  Eigen::MatrixXd bad = red.green;
  bad(0, 1) = bad(1, 0) = bad(0, 1) * 1.5;
  RngStream c(5, 5);
  CHECK_THROWS_AS(fine_grain_G(bad, fine, {0, w1}, c), consistency_error);
}

TEST_CASE("exponential martingale exact-zero cases") {
  const SchrodingerState red = exact_root_state(1.0, 2.0, 51);
  const double w1 = 0.25;
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream rng(6, 6);

  // lambda = 0: both sides exactly 1
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd eta(3);
  eta << 0.3, 0.3, 0.8;
  MartingaleCheck c0 = verify_exponential_martingale(red, {0, w1}, fine, lam, eta, 2000, rng);
  CHECK(c0.closed_form == 1.0);
  CHECK(c0.mc_mean == 1.0);
  CHECK(c0.passed);

  // lambda supported off the pair: deviation exactly 0
  lam << 0.0, 0.0, 0.9;
  eta << 0.4, 0.4, 0.0;
  MartingaleCheck coff = verify_exponential_martingale(red, {0, w1}, fine, lam, eta, 2000, rng);
  CHECK(std::abs(coff.mc_mean - coff.closed_form) < 1e-13);
  CHECK(coff.passed);

  // eta must be constant on the pair
  eta << 0.1, 0.2, 0.0;
  CHECK_THROWS_AS(verify_exponential_martingale(red, {0, w1}, fine, lam, eta, 100, rng),
                  std::invalid_argument);
}

TEST_CASE("exponential martingale Monte Carlo case with pair-constant lambda") {
  const SchrodingerState red = exact_root_state(1.4, 2.0, 61);
  const double w1 = 1.4 / 4.0;
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream rng(7, 7);
  Eigen::VectorXd lam(3), eta(3);
  lam << 0.8, 0.8, 0.3;
  eta << 0.5, 0.5, 0.6;
  MartingaleCheck c = verify_exponential_martingale(red, {0, w1}, fine, lam, eta, 200000, rng);
  CHECK(c.passed);
  CHECK(c.mc_se > 0.0);
}

TEST_CASE("a split leaves untouched vertices bit-for-bit intact") {
  const SchrodingerState red = exact_root_state(1.0, 2.0, 81);
  const double w1 = 0.25;
  const WeightedGraph fine = split_vertex(red.graph, 0, w1);
  RngStream rng(11, 11);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::MatrixXd gf = fine_grain_G(red.green, fine, {0, w1}, rng, red.beta(0));
    // the pinned vertex keeps its diagonal, hence its field value exactly
    REQUIRE(gf(2, 2) == red.green(1, 1));
  }
}

TEST_CASE("pair reduction of a directly sampled fine model matches the reduced model") {
  // beta' computed from pairs of a sampled level-1 model is distributed as the
  // level-0 potential (rho = 2 keeps the temperature fixed)
  const double wbar = 1.0, rho = 2.0;
  const WeightedGraph g1 = build_level_graph({wbar, rho, 1});
  McmcConfig cfg;
  cfg.thinning = 25;
  UFieldMcmc chain(g1, *g1.pinning, cfg, RngStream(91, 0));
  const long n = 8000;
  std::vector<double> reduced(n);
  for (auto& x : reduced) {
    const Eigen::VectorXd& u = chain.next_sample();
    const double b1 = 0.5 * (g1.weights(0, 1) * std::exp(u(1) - u(0)) +
                             g1.weights(0, 2) * std::exp(-u(0)));
    const double b2 = 0.5 * (g1.weights(0, 1) * std::exp(u(0) - u(1)) +
                             g1.weights(1, 2) * std::exp(-u(1)));
    x = coarse_grain_beta(b1, b2, g1.weights(0, 1));
  }
  // exact draws of the level-0 site potential: beta' = (wd/2) e^{-u}
  const double wd = wbar / (2.0 * (rho - 1.0));
  RngStream rng(92, 0);
  std::vector<double> direct(n);
  for (auto& x : direct) x = 0.5 * wd / rng.inverse_gaussian(1.0, wd);
  const TestReport t = two_sample_test("reduced_vs_direct_beta", reduced, direct);
  CHECK(t.passed);
}

TEST_CASE("property: random graphs with an indistinguishable pair reduce and split exactly") {
  // hand-rolled generator: random connected graphs, pair {0,1} forced
  // indistinguishable, states sampled through the Metropolis chain
  RngStream gen(101, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index n = 4 + Eigen::Index(gen.next_u64() % 3);  // 4..6 vertices
    WeightedGraph g;
    g.weights.setZero(n, n);
    for (Eigen::Index i = 2; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        g.weights(i, j) = g.weights(j, i) = 0.05 + gen.uniform();
    const double w = 0.05 + gen.uniform();
    g.weights(0, 1) = g.weights(1, 0) = w;
    for (Eigen::Index k = 2; k < n; ++k) {
      const double c = 0.05 + gen.uniform();
      g.weights(0, k) = g.weights(k, 0) = c;
      g.weights(1, k) = g.weights(k, 1) = c;
    }
    g.pinning = n - 1;
    g.validate();
    REQUIRE(is_indistinguishable(g, {0, 1}));

    McmcConfig cfg;
    cfg.burn_in_sweeps = 2000;
    UFieldMcmc chain(g, n - 1, cfg, RngStream(101, 10 + trial));
    RngStream grng(101, 200 + trial);
    const Eigen::VectorXd beta = beta_from_u(g, chain.next_sample(), grng.gamma_half(), n - 1);
    const SchrodingerState st = make_state(g, beta);

    // averaging reduction inverts to the reduced-weight operator with the
    // harmonic pair potential
    const Eigen::MatrixXd gp = coarse_grain_G(st.green, 0);
    const Eigen::MatrixXd hp = gp.inverse();
    const WeightedGraph rg = reduced_weights(g, 0);
    for (Eigen::Index k = 0; k < n - 1; ++k)
      for (Eigen::Index l = k + 1; l < n - 1; ++l)
        REQUIRE(hp(k, l) == doctest::Approx(-rg.weights(k, l)).epsilon(1e-8));
    REQUIRE(hp(0, 0) / 2.0 ==
            doctest::Approx(coarse_grain_beta(beta(0), beta(1), w)).epsilon(1e-8));

    // splitting the reduction reproduces a valid fine state and the
    // averaging round trip returns the reduced matrix
    RngStream srng(101, 300 + trial);
    const Eigen::MatrixXd gf = fine_grain_G(gp, g, {0, w}, srng);
    REQUIRE(relative_gap(coarse_grain_G(gf, 0), gp) < 1e-10);
    const Eigen::MatrixXd hf = gf.inverse();
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index l = k + 1; l < n; ++l)
        REQUIRE(hf(k, l) == doctest::Approx(-g.weights(k, l)).epsilon(1e-7));
  }
}

TEST_CASE("u-martingale of the corollary: child mean equals parent value") {
  const SchrodingerState red = exact_root_state(1.0, 2.0, 71);
  const double w1 = 0.25;
  RngStream rng(9, 9);
  const double parent_eu = std::exp(red.pinned_u(0));
  Accumulator child1, child2;
  for (long k = 0; k < 200000; ++k) {
    const SplitDraw d = fine_grain_pair(red.beta(0), w1, rng);
    const Eigen::Matrix2d block = fine_pair_block(d, red.beta(0), w1, red.green(0, 0));
    const double r = (block(0, 0) + block(1, 0)) / (block(0, 1) + block(1, 1));
    child1.add(2.0 * parent_eu * r / (1.0 + r));
    child2.add(2.0 * parent_eu / (1.0 + r));
  }
  CHECK(std::abs(child1.mean() - parent_eu) <= 3.0 * child1.se());
  CHECK(std::abs(child2.mean() - parent_eu) <= 3.0 * child2.se());
}
