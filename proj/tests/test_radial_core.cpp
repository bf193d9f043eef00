#include <cmath>
#include <numbers>
#include <random>

#include "diracstar/errors.hpp"
#include "diracstar/norms.hpp"
#include "diracstar/radial_ops.hpp"
#include "diracstar/units.hpp"
#include "doctest.h"
#include "oracles/coulomb_quadrature.hpp"

using namespace diracstar;
using std::numbers::pi;

namespace {

RadialProfile sample(const GridPtr& g, double (*fn)(double), Parity p = Parity::even) {
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g->r(i));
  return RadialProfile(g, v, p);
}

template <class F>
RadialProfile sample_fn(const GridPtr& g, F fn, Parity p = Parity::even) {
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g->r(i));
  return RadialProfile(g, v, p);
}

}  // namespace

TEST_CASE("unit system rejects non-positive constants") {
  CHECK_THROWS_AS(UnitSystem(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(UnitSystem(1.0, -1.0, 1.0), Error);
  CHECK_THROWS_AS(UnitSystem(1.0, 1.0, std::nan("")), Error);
  UnitSystem u(2.0, 3.0, 5.0);
  CHECK(u.kappa() == doctest::Approx(8.0 * pi * 15.0).epsilon(1e-15));
}

TEST_CASE("grid invariants") {
  auto g = RadialGrid::stretched(301, 40.0);
  CHECK(g->r(0) == 0.0);
  for (std::size_t i = 1; i < g->size(); ++i) CHECK(g->r(i) > g->r(i - 1));
  CHECK(g->r_max() == 40.0);

  double one = 0.0, sq = 0.0, cube = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    double r = g->r(i), w = g->weights()[i];
    one += w;
    sq += w * r * r;
    cube += w * r * r * r;
  }
  CHECK(std::abs(one - 40.0) < 1e-12);
  CHECK(std::abs(sq / (40.0 * 40.0 * 40.0 / 3.0) - 1.0) < 1e-13);
  CHECK(std::abs(cube / (std::pow(40.0, 4) / 4.0) - 1.0) < 1e-8);

  double vol = 0.0;
  for (double v : g->volumes()) vol += v;
  CHECK(std::abs(vol / (40.0 * 40.0 * 40.0 / 3.0) - 1.0) < 1e-13);

  CHECK_THROWS_AS(RadialGrid::from_nodes({0.0, 1.0, 1.0, 2.0}), Error);
  CHECK_THROWS_AS(RadialGrid::from_nodes({0.1, 1.0, 2.0, 3.0}), Error);
}

TEST_CASE("profile invariants") {
  auto g = RadialGrid::stretched(11, 1.0);
  CHECK_THROWS_AS(RadialProfile(g, std::vector<double>(10, 0.0)), Error);
  std::vector<double> v(11, 1.0);
  CHECK_THROWS_AS(RadialProfile(g, v, Parity::vanishing), Error);
  v[0] = 0.0;
  CHECK_NOTHROW(RadialProfile(g, v, Parity::vanishing));
}

TEST_CASE("f0 values") {
  CHECK(f0_eval(1.0) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(f0_eval(0.0) == 0.0);
  CHECK(std::abs(1e3 * f0_eval(1e3) - 1.0) < 3e-3);
  CHECK(f0_prime(0.0) == 0.0);
  for (double r : {0.3, 1.0, 4.0, 25.0}) {
    double h = 1e-5 * r;
    double fd = (f0_eval(r + h) - f0_eval(r - h)) / (2.0 * h);
    CHECK(std::abs(f0_prime(r) - fd) < 1e-8);
  }
}

TEST_CASE("stencils reproduce the derivative of r^2") {
  auto g = RadialGrid::stretched(201, 5.0, 1.0);
  auto f = sample(g, [](double r) { return r * r; });
  auto d = derivative(f);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(d.f[i] - 2.0 * g->r(i)));
  CHECK(err <= 1e-10);
  auto d2 = second_derivative(f);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(std::abs(d2.f[i] - 2.0) < 1e-8);
  auto lap = laplacian(f);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(std::abs(lap.f[i] - 6.0) < 1e-8);
}

TEST_CASE("radial poisson of zero") {
  auto g = RadialGrid::stretched(101, 10.0);
  auto u = radial_poisson(RadialProfile::zeros(g));
  CHECK(sup_abs(u.f) == 0.0);
}

TEST_CASE("radial poisson of the unit ball") {
  // node exactly at r = 1
  std::vector<double> nodes;
  const int n1 = 2000;
  for (int i = 0; i <= n1; ++i) nodes.push_back(double(i) / n1);
  for (int i = 1; i <= 3 * n1; ++i) nodes.push_back(1.0 + double(i) / n1);
  auto g = RadialGrid::from_nodes(nodes);
  auto f = sample(g, [](double r) { return r < 1.0 ? 1.0 : 0.0; });
  auto u = radial_poisson(f);
  CHECK(std::abs(u.f[0] - 0.5) < 1e-3);
  CHECK(std::abs(u.f[n1] - 1.0 / 3.0) < 1e-3);
  for (std::size_t i = n1 + 10; i < g->size(); i += 97) CHECK(std::abs(u.f[i] - 1.0 / (3.0 * g->r(i))) < 1e-3);
}

TEST_CASE("radial poisson of a gaussian matches direct sphere quadrature") {
  auto g = RadialGrid::stretched(2001, 12.0);
  auto gauss = [](double r) { return std::exp(-r * r); };
  auto u = radial_poisson(sample_fn(g, gauss));
  for (std::size_t i : {0, 1, 50, 300, 700, 1000, 1500, 1999}) {
    double ref = oracle::coulomb_potential(gauss, g->r(i), 12.0);
    CHECK(std::abs(u.f[i] / ref - 1.0) <= 1e-6);
  }
}

TEST_CASE("radial poisson rejects a heavy tail") {
  auto g = RadialGrid::stretched(101, 10.0);
  auto f = sample(g, [](double r) { return 1.0 / (1.0 + r * r); });
  CHECK_THROWS_AS(radial_poisson(f), Error);
}

TEST_CASE("radial poisson converges at second order in the discrete equation") {
  auto f_of = [](double r) { return std::exp(-r * r) * (1.0 + r); };
  std::vector<double> res, hs;
  for (std::size_t n : {201u, 401u, 801u}) {
    auto g = RadialGrid::stretched(n, 8.0);
    auto f = sample_fn(g, f_of);
    auto u = radial_poisson(f);
    auto lap = laplacian(u);
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) m = std::max(m, std::abs(-lap.f[i] - f.f[i]));
    res.push_back(m);
    hs.push_back(1.0 / double(n - 1));
  }
  double s1 = std::log(res[0] / res[1]) / std::log(hs[0] / hs[1]);
  double s2 = std::log(res[1] / res[2]) / std::log(hs[1] / hs[2]);
  MESSAGE("poisson residuals " << res[0] << " " << res[1] << " " << res[2]);
  CHECK(s1 >= 1.9);
  CHECK(s2 >= 1.9);
}

TEST_CASE("kernel potential") {
  auto g = RadialGrid::stretched(801, 20.0);
  CHECK(sup_abs(kernel_potential(RadialProfile::zeros(g)).f) == 0.0);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    double c[4];
    for (double& x : c) x = U(rng);
    double width = 1.0 + 0.5 * (U(rng) + 1.0);
    auto phi = sample_fn(g, [&](double r) {
      double p = c[0] + c[1] * r * r + c[2] * r * r * r * r + c[3] * std::cos(r);
      return p * std::exp(-r * r / (width * width));
    });
    auto W = kernel_potential(phi);
    CHECK(W.f[0] == 0.0);
    for (double w : W.f) CHECK(w >= 0.0);

    // u solves -Laplace u = -8 pi |phi|^2, so W = 2 (u(0) - u(r))
    std::vector<double> src(g->size());
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = 4.0 * pi * phi.f[i] * phi.f[i];
    auto u = radial_poisson(RadialProfile(g, src));
    double err = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(W.f[i] - 2.0 * (u.f[0] - u.f[i])));
    CHECK(err <= 1e-8);
  }
}

TEST_CASE("weighted norms") {
  auto g = RadialGrid::stretched(4001, 40.0);
  auto zero = RadialProfile::zeros(g);
  for (auto spec : {NormSpec::bc(2.0), NormSpec::bc_vanishing(1.0, 1.0), NormSpec::bc1(1.0),
                    NormSpec::bc1(2.0, 2.0), NormSpec::h_exp(0, 0.5), NormSpec::h_exp(2, 0.5)})
    CHECK(weighted_norm(zero, spec) == 0.0);

  auto f = sample(g, [](double r) { return 1.0 / ((1.0 + r) * (1.0 + r)); });
  CHECK(weighted_norm(f, NormSpec::bc(2.0)) == doctest::Approx(1.0).epsilon(1e-15));

  const double delta = 1.0;
  auto e = sample_fn(g, [&](double r) { return std::exp(-2.0 * delta * r); });
  CHECK(std::abs(weighted_norm(e, NormSpec::h_exp(0, delta)) / std::sqrt(pi / (delta * delta * delta)) - 1.0) <=
        1e-6);

  auto sq = sample(g, [](double r) { return r * r * std::exp(-r); }, Parity::vanishing);
  CHECK(vanishing_factor(sq, 2.0) == doctest::Approx(1.0).epsilon(1e-12));

  auto big = sample(g, [](double) { return 1.0; });
  CHECK_THROWS_AS(weighted_norm(big, NormSpec::h_exp(0, 20.0)), Error);
  CHECK_THROWS_AS(weighted_norm(big, NormSpec::h_exp(0, 0.0)), Error);
  CHECK_THROWS_AS(weighted_norm(big, NormSpec{NormKind::exp_sobolev, 1.0, 0.0, 3}), Error);
}

TEST_CASE("weighted norms are absolutely homogeneous") {
  auto g = RadialGrid::stretched(1001, 30.0);
  auto f = sample(g, [](double r) { return (1.0 + r) * std::exp(-r * r / 4.0) * std::cos(r); });
  auto v = sample(g, [](double r) { return r * std::exp(-r); }, Parity::vanishing);
  for (double c : {-3.5, 0.25, 7.0}) {
    for (auto spec : {NormSpec::bc(2.0), NormSpec::bc1(1.5), NormSpec::h_exp(0, 0.3), NormSpec::h_exp(1, 0.3),
                      NormSpec::h_exp(2, 0.3)})
      CHECK(weighted_norm(c * f, spec) == doctest::Approx(std::abs(c) * weighted_norm(f, spec)).epsilon(1e-13));
    for (auto spec : {NormSpec::bc_vanishing(1.0, 1.0), NormSpec::bc1(0.0, 1.0), NormSpec::h_exp(1, 0.5)})
      CHECK(weighted_norm(c * v, spec) == doctest::Approx(std::abs(c) * weighted_norm(v, spec)).epsilon(1e-13));
  }
}
