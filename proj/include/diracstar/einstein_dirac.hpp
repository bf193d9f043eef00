#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "diracstar/choquard.hpp"
#include "diracstar/radial_profile.hpp"
#include "diracstar/units.hpp"

namespace diracstar {

/// Rescaled unknowns on the staggered grid.
/// Q and psi2 live at cell midpoints, N and Phi1 at nodes.
struct EDState {
  GridPtr grid;
  double eps = 0.0;
  double l = 0.0;
  std::vector<double> Q;     // cells
  std::vector<double> N;     // nodes
  std::vector<double> Phi1;  // nodes
  std::vector<double> psi2;  // cells

  static EDState zeros(GridPtr g, double eps = 0.0);

  // flat layout [l, Q, N, Phi1, psi2], 4n - 1 entries
  std::size_t dim() const { return 4 * grid->size() - 1; }
  Eigen::VectorXd pack() const;
  static EDState unpack(GridPtr g, const Eigen::VectorXd& x, double eps);

  // node profiles; Q and psi2 take 0 at the origin
  RadialProfile Q_nodes() const;
  RadialProfile N_profile() const;
  RadialProfile Phi1_profile() const;
  RadialProfile psi2_nodes() const;
};

/// Residual components. alpha at every node (the last node carries the
/// outer flux 2l), beta and j1 at cells, j2 at nodes 0..n-2, plus the two
/// far-field rows r N = const and Phi1(r_max) = 0.
struct ResidualVector {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> j1;
  std::vector<double> j2;
  double n_tail = 0.0;
  double phi_tail = 0.0;

  static ResidualVector zeros(const RadialGrid& g);
  // row order [alpha, beta, n_tail, j1, j2, phi_tail]
  Eigen::VectorXd pack() const;
  static ResidualVector unpack(const RadialGrid& g, const Eigen::VectorXd& y);
  double sup() const;
};

struct EDOptions {
  // use eps^2 S in place of 1 - e^{-lambda} inside F1 and F2
  bool printed_coefficient = false;
};

struct NewtonianLimitPoint {
  EDState state;
  RadialProfile phi;
  RadialProfile u;
  std::vector<double> dphi;  // cells
  std::vector<double> du;    // cells
  double eta = 0.0;
  UnitSystem units;
};

// (2mG, 2 r u' - 4mG f0, u, phi, -(hbar/2m) phi') on the solution grid
NewtonianLimitPoint limit_point(const ChoquardSolution& sol);
// same tuple on a coarse grid whose nodes are a subset of sol's nodes;
// cell derivatives come from cubic interpolation of the fine cell values
NewtonianLimitPoint sampled_limit_point(const ChoquardSolution& sol, const GridPtr& coarse);

// pointwise sources
double rho_eps_point(double N, double Phi1, double psi2, double eta, double eps, const UnitSystem& u);
double p_eps_point(double N, double Phi1, double psi2, double psi2_over_r, double eta, double eps,
                   const UnitSystem& u);
// (e^{-x} - 1)/x and (1 - x - e^{-x})/x with series below |x| < 1e-6
double quotient_g0(double x);
double quotient_g1(double x);

struct SourceTerms {
  std::vector<double> rho;  // nodes
  std::vector<double> p;    // cells
};
SourceTerms source_terms(const EDState& s, double eta, const UnitSystem& units);

ResidualVector residual_F(const EDState& s, double eta, const UnitSystem& units, const EDOptions& opt = {});
Eigen::SparseMatrix<double> jacobian_F(const EDState& s, double eta, const UnitSystem& units,
                                       const EDOptions& opt = {});

// l = (1/2) sum 8 pi G rho_eps V_i
double l_closure(const EDState& s, double eta, const UnitSystem& units, double tail_threshold = 1e-6);

struct NewtonControls {
  double tol = 1e-10;
  int max_iterations = 20;
  double min_damping = 1.0 / 1024.0;
};

struct NewtonReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
};

EDState newton_solve(const EDState& seed, double eps, double eta, const UnitSystem& units,
                     const NewtonControls& ctl = {}, NewtonReport* report = nullptr, const EDOptions& opt = {});

struct NormReport {
  double l_diff = 0.0;
  double Q = 0.0;
  double N = 0.0;
  double Phi1 = 0.0;
  double psi2 = 0.0;
  double total() const { return l_diff + Q + N + Phi1 + psi2; }
};

NormReport norm_report(const EDState& s, const NewtonianLimitPoint& ref, double delta);

struct ContinuationStep {
  double eps = 0.0;
  EDState state;
  int iterations = 0;
  double residual = 0.0;
  NormReport norms;
};

struct SlopeFit {
  double total = 0.0;
  double Q = 0.0, N = 0.0, Phi1 = 0.0, psi2 = 0.0;
  std::size_t points = 0;
};

struct ContinuationResult {
  std::vector<ContinuationStep> steps;
  bool stalled = false;
  double stall_eps = 0.0;
  std::string stall_reason;
  double delta = 0.0;
  SlopeFit slope;
};

struct ContinuationControls {
  NewtonControls newton;
  int max_iterations_per_step = 10;
  double delta = 0.0;  // 0 selects half the Choquard decay rate
  EDOptions options;
};

// geometric schedule from lo to hi
std::vector<double> geometric_schedule(double lo, double hi, int steps);

ContinuationResult continue_in_eps(const NewtonianLimitPoint& start, const std::vector<double>& schedule,
                                   double eta, const ContinuationControls& ctl = {},
                                   std::optional<double> decay_rate = std::nullopt);

// least-squares slope of log y against log x over positive pairs
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
SlopeFit fit_slopes(const std::vector<ContinuationStep>& steps);

struct UnscaledResiduals {
  double d1 = 0.0;  // nodes 0..n-2
  double d2 = 0.0;  // cells
  double e1 = 0.0;  // nodes
  double e2 = 0.0;  // cells
  double sup() const;
};

struct PhysicalFields {
  GridPtr grid;
  double eps = 0.0;
  RadialProfile lambda;
  RadialProfile nu;
  RadialProfile Phi1;
  RadialProfile Phi2;                // nodes, interpolated
  std::vector<double> lambda_cells;  // cells
  std::vector<double> Phi2_cells;    // cells
  double omega = 0.0;
  double adm_mass_observable = 0.0;
  double norm_flat = 0.0;    // 4 pi int e^{nu} (Phi1^2 + Phi2^2) r^2 dr
  double norm_curved = 0.0;  // with e^{nu + lambda}
  UnscaledResiduals residuals;
};

PhysicalFields reconstruct_physical(const EDState& s, double eta, const UnitSystem& units);
// inverse map back to (Q, N, psi2) given l
EDState rescale_from_physical(const PhysicalFields& p, double l);

// S = 2 l f0 + Q at nodes: 0 at the origin, interpolated inside, r S extrapolated at r_max
std::vector<double> node_S(const EDState& s);

}  // namespace diracstar
