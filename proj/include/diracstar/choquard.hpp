#pragma once

#include <utility>
#include <vector>

#include "diracstar/radial_profile.hpp"
#include "diracstar/units.hpp"

namespace diracstar {

struct ShootingControls {
  double a_lo = 0.05;  // initial amplitude bracket
  double a_hi = 1.0;
  double bracket_tol = 1e-12;
  double residual_tol = 1e-8;
  int max_bisections = 200;
  int max_newton = 40;
  int substeps = 2;  // RK4 steps per grid cell
};

/// Positive solution of -(phi'' + 2phi'/r) + W phi = phi with W the kernel potential.
/// Stored in first-order staggered form: phi and Psi at nodes, fluxes at cells,
/// with W = 2 Psi and Laplace(Psi) = 4 pi phi^2, Psi(0) = 0.
struct CanonicalSolution {
  RadialProfile phi;
  std::vector<double> dphi;
  RadialProfile psi;
  std::vector<double> dpsi;
  double amplitude = 0.0;           // phi(0) after polishing
  double shooting_amplitude = 0.0;  // bisection result
  double W_inf = 0.0;
  double mass = 0.0;  // 4 pi int phi^2 r^2 dr
  double residual_sup = 0.0;
  int newton_iterations = 0;
};

enum class ShotOutcome { crossing, regrowth, reached_end };

struct Shot {
  ShotOutcome outcome;
  std::size_t last_node;  // last node integrated before the event
  std::vector<double> phi, dphi, A, B;
};

Shot shoot(const GridPtr& grid, double amplitude, int substeps = 2);
// bisection only; throws bracket-not-found when [lo, hi] does not straddle the ground state
double bisect_amplitude(const GridPtr& grid, double lo, double hi, const ShootingControls& ctl = {});

CanonicalSolution solve_canonical(const GridPtr& grid, const ShootingControls& ctl = {});
// Newton polish of the staggered system from an initial guess on `grid`
CanonicalSolution polish_canonical(const GridPtr& grid, std::vector<double> phi, std::vector<double> dphi,
                                   std::vector<double> psi, const ShootingControls& ctl = {});
// residual rows of the staggered canonical system
std::vector<double> canonical_residual(const GridPtr& grid, const std::vector<double>& phi,
                                       const std::vector<double>& dphi, const std::vector<double>& psi);

struct ChoquardSolution {
  GridPtr grid;
  UnitSystem units;
  RadialProfile phi;
  RadialProfile u;
  std::vector<double> dphi;  // phi' at cell midpoints
  std::vector<double> du;    // u' at cell midpoints
  double eta = 0.0;
  double E = 0.0;
  double u0 = 0.0;
  double energy = 0.0;
  double decay_rate = 0.0;
  double decay_amplitude = 0.0;
  double alpha = 0.0;  // phi(r) = alpha phihat(beta r)
  double beta = 0.0;
  double normalization = 0.0;
  double ele_residual_sup = 0.0;  // sup |H phi - eta phi| over nodes
  CanonicalSolution canonical;
};

// phi(r) = alpha phihat(beta r) on the grid canonical.grid / beta
ChoquardSolution rescale_to_normalized(const CanonicalSolution& canonical, const UnitSystem& units);

struct ChoquardControls {
  ShootingControls shoot;
  double beta_tol = 1e-14;
  int max_beta_iterations = 30;
};

/// Normalized ground state on exactly the given grid (canonical grid = beta * grid).
ChoquardSolution solve_choquard(const GridPtr& grid, const UnitSystem& units = {},
                                const ChoquardControls& ctl = {});

double choquard_energy(const RadialProfile& phi, const UnitSystem& units);
// (c1, c2) from a least-squares fit of log phi on [r_max/2, 0.9 r_max]
std::pair<double, double> fit_decay(const RadialProfile& phi);

// far-field rate sqrt(-2 m eta)/hbar
double linearized_decay_rate(const ChoquardSolution& sol);

// [H phi]_i = -(hbar^2/2m) div2(phi')_i + m u_i phi_i at nodes 0..n-2
std::vector<double> choquard_hamiltonian_phi(const ChoquardSolution& sol);

}  // namespace diracstar
