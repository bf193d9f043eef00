#include <cmath>
#include <fstream>
#include <numbers>

#include "diracstar/choquard.hpp"
#include "diracstar/errors.hpp"
#include "diracstar/radial_ops.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles/dilation_virial.hpp"
#include "oracles/energy_descent.hpp"

using namespace diracstar;
using std::numbers::pi;

namespace {

nlohmann::json golden() {
  std::ifstream in(std::string(DIRACSTAR_GOLDEN_DIR) + "/choquard.json");
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

const ChoquardSolution& ground_state() {
  static const ChoquardSolution sol = solve_choquard(RadialGrid::stretched(1000, 40.0));
  return sol;
}

double rel(double a, double b) { return std::abs(a / b - 1.0); }

}  // namespace

TEST_CASE("energy descent oracle reproduces the frozen values") {
  auto g = golden();
  auto o = oracle::energy_descent(g["oracle_grid_n"].get<std::size_t>(), g["oracle_r_max"].get<double>());
  CHECK(rel(o.eta, g["eta"]) < 1e-9);
  CHECK(rel(o.u0, g["u0"]) < 1e-9);
  CHECK(rel(o.E, g["E"]) < 1e-9);
  CHECK(rel(o.energy, g["energy"]) < 1e-9);
  CHECK(rel(o.phi[0] / o.alpha, g["amplitude"]) < 1e-9);
}

TEST_CASE("canonical solution is positive, monotone and even") {
  const auto& c = ground_state().canonical;
  for (std::size_t i = 0; i + 1 < c.phi.size(); ++i) {
    CHECK(c.phi.f[i] > 0.0);
    CHECK(c.phi.f[i + 1] <= c.phi.f[i]);
  }
  CHECK(c.phi.parity == Parity::even);
  CHECK(c.dphi[0] <= 0.0);
  CHECK(std::abs(c.dphi[0]) < 1e-4);
  CHECK(c.residual_sup <= 1e-8);
  auto res = canonical_residual(c.phi.grid, c.phi.f, c.dphi, c.psi.f);
  CHECK(sup_abs(res) <= 1e-8);
}

TEST_CASE("canonical amplitude agrees with the energy descent oracle") {
  auto g = golden();
  CHECK(rel(ground_state().canonical.amplitude, g["amplitude"]) <= 1e-4);
  CHECK(rel(ground_state().eta, g["eta"]) <= 1e-4);
}

TEST_CASE("bracket not straddling the ground state") {
  const auto& grid = ground_state().canonical.phi.grid;
  try {
    bisect_amplitude(grid, 0.5, 1.0);
    FAIL("expected bracket-not-found");
  } catch (const Error& e) {
    CHECK(e.code() == "bracket-not-found");
    CHECK(e.exit_code() == 3);
  }
}

TEST_CASE("distinct brackets converge to the same amplitude") {
  const auto& grid = ground_state().canonical.phi.grid;
  double a = bisect_amplitude(grid, 0.05, 1.0);
  double b = bisect_amplitude(grid, 0.2, 0.25);
  CHECK(std::abs(a - b) <= 1e-8);
}

TEST_CASE("normalized ground state") {
  const auto& s = ground_state();
  std::vector<double> sq(s.phi.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = 4.0 * pi * s.phi.f[i] * s.phi.f[i] * s.phi.r(i) * s.phi.r(i);
  double fv = 0.0;
  for (std::size_t i = 0; i < sq.size(); ++i) fv += 4.0 * pi * s.phi.f[i] * s.phi.f[i] * s.grid->volume(i);
  CHECK(std::abs(fv - 1.0) <= 1e-10);
  CHECK(std::abs(s.normalization - 1.0) <= 1e-10);
  // Simpson differs at second order
  CHECK(std::abs(integrate(s.grid, sq) - 1.0) <= 1e-4);
  CHECK(s.eta < 0.0);
  CHECK(s.E > 0.0);
  CHECK(std::abs(s.E - (s.eta - s.units.m * s.u0)) < 1e-14);
  CHECK(s.u0 == s.u.f[0]);
  for (std::size_t i = 0; i + 1 < s.u.size(); ++i) {
    CHECK(s.u.f[i] <= 0.0);
    CHECK(s.u.f[i + 1] >= s.u.f[i]);
  }
  CHECK(s.ele_residual_sup < 1e-10);
}

TEST_CASE("nonlocal term from the kernel and from the poisson solve") {
  const auto& s = ground_state();
  const double Gm = s.units.G * s.units.m;
  std::vector<double> src(s.phi.size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = 8.0 * pi * s.phi.f[i] * s.phi.f[i];
  auto P = radial_poisson(RadialProfile(s.grid, src));
  auto W = kernel_potential(s.phi);

  ChoquardSolution a = s, b = s;
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.u.f[i] = -Gm * P.f[i];
    b.u.f[i] = -Gm * P.f[0] + Gm * W.f[i];
  }
  auto Ha = choquard_hamiltonian_phi(a);
  auto Hb = choquard_hamiltonian_phi(b);
  double diff = 0.0;
  for (std::size_t i = 0; i < Ha.size(); ++i)
    diff = std::max(diff, std::abs((Ha[i] - s.eta * s.phi.f[i]) - (Hb[i] - s.eta * s.phi.f[i])));
  CHECK(diff <= 1e-8);
}

TEST_CASE("energy") {
  const auto& s = ground_state();
  CHECK(choquard_energy(RadialProfile::zeros(s.grid), s.units) == 0.0);
  CHECK(s.energy < 0.0);
  CHECK(choquard_energy(s.phi, s.units) == doctest::Approx(s.energy).epsilon(1e-12));
}

TEST_CASE("eta matches the dilation derivative of the discrete energy") {
  const auto& s = ground_state();
  CHECK(std::abs(oracle::dilation_eta(s.grid, s.units) - s.eta) <= 1e-6);
  UnitSystem u(1.5, 0.7, 2.0);
  auto g = RadialGrid::stretched(600, 40.0);
  CHECK(std::abs(oracle::dilation_eta(g, u) - solve_choquard(g, u).eta) <= 1e-6);
}

TEST_CASE("decay fit") {
  auto g = RadialGrid::stretched(401, 10.0);
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 3.0 * std::exp(-2.0 * g->r(i));
  auto [c1, c2] = fit_decay(RadialProfile(g, v));
  CHECK(std::abs(c1 - 3.0) <= 1e-6);
  CHECK(std::abs(c2 - 2.0) <= 1e-6);

  const auto& s = ground_state();
  CHECK(s.decay_rate > 0.0);
  CHECK(rel(s.decay_rate, linearized_decay_rate(s)) <= 0.05);
  CHECK(linearized_decay_rate(s) == doctest::Approx(std::sqrt(-2.0 * s.units.m * s.eta) / s.units.hbar));

  auto big = RadialGrid::stretched(401, 60.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-big->r(i) * big->r(i));
  try {
    fit_decay(RadialProfile(big, v));
    FAIL("expected fit-window-underflow");
  } catch (const Error& e) {
    CHECK(e.code() == "fit-window-underflow");
  }
}

TEST_CASE("scaling covariance") {
  // phi(r) = a phihat(b r) solves the shifted equation with eigenvalue E when
  // hbar^2 b^2 / 2m = E and m^2 G a^2 / b^2 = E; a / b^2 is the same for all E,
  // so r -> s^2 phi(s r) stays in the family and scales the mass by s.
  const auto& s = ground_state();
  const auto& u = s.units;
  const double M = s.canonical.mass;
  std::vector<std::pair<double, double>> results;
  for (double E : {0.3, 2.5}) {
    double b = std::sqrt(2.0 * u.m * E) / u.hbar;
    double a = b * std::sqrt(E) / (u.m * std::sqrt(u.G));
    double mass = a * a * M / (b * b * b);
    double sc = 1.0 / mass;
    results.emplace_back(sc * sc * a, sc * b);
  }
  CHECK(rel(results[0].first, results[1].first) <= 1e-8);
  CHECK(rel(results[0].second, results[1].second) <= 1e-8);
  CHECK(rel(results[0].first, s.alpha) <= 1e-8);
  CHECK(rel(results[0].second, s.beta) <= 1e-8);
  // the collapsed member has E = hbar^2 beta^2 / 2m
  CHECK(rel(u.hbar * u.hbar * s.beta * s.beta / (2.0 * u.m), s.E) <= 1e-8);
}

TEST_CASE("coulomb tail of the potential") {
  const auto& s = ground_state();
  double tail = s.grid->r_max() * s.u.f.back();
  CHECK(std::abs(tail + 2.0 * s.units.m * s.units.G) <= 1e-4);

  UnitSystem u(2.0, 3.0, 0.5);
  auto t = solve_choquard(RadialGrid::stretched(1000, 40.0), u);
  CHECK(std::abs(t.grid->r_max() * t.u.f.back() / (u.m * u.G) + 2.0) <= 1e-4);
}

TEST_CASE("eta converges at second order") {
  std::vector<double> eta;
  for (std::size_t n : {500u, 1000u, 2000u}) eta.push_back(solve_choquard(RadialGrid::stretched(n, 40.0)).eta);
  double ratio = (eta[0] - eta[1]) / (eta[1] - eta[2]);
  MESSAGE("eta refinement ratio " << ratio);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("general units") {
  UnitSystem u(1.3, 0.8, 2.2);
  auto grid = RadialGrid::stretched(1000, 40.0);
  auto s = solve_choquard(grid, u);
  CHECK(s.eta < 0.0);
  CHECK(s.E > 0.0);
  CHECK(s.ele_residual_sup < 1e-10);
  CHECK(std::abs(s.normalization - 1.0) < 1e-10);
  // lengths scale as hbar^2 / (m^3 G), energies as m^5 G^2 / hbar^2
  double L = u.hbar * u.hbar / (u.m * u.m * u.m * u.G);
  double unit_eta = solve_choquard(grid->scaled(1.0 / L)).eta * std::pow(u.m, 5) * u.G * u.G / (u.hbar * u.hbar);
  CHECK(rel(s.eta, unit_eta) < 1e-8);
}
