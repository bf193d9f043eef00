#pragma once

#include <vector>

#include <Eigen/Dense>

#include "diracstar/einstein_dirac.hpp"

namespace diracstar {

/// Discrete L on nodes 0..n-2 (chi vanishes at r_max):
/// (L chi)_i = (hbar^2/2m)(-div2 D chi)_i - eta chi_i + m u_i chi_i + m n[chi]_i phi_i,
/// with n[chi] the discrete potential of 16 pi G m phi chi.
struct DenseRadialOperator {
  GridPtr grid;
  Eigen::MatrixXd M;          // (n-1) x (n-1)
  Eigen::VectorXd last;       // coupling of each row to chi at r_max
  Eigen::VectorXd weights;    // control volumes V_i
  bool self_adjoint = false;  // set once the V-weighted symmetry check passes
  double symmetry_error = 0.0;

  std::size_t size() const { return M.rows(); }
  // acts on node samples; the output vanishes at r_max
  std::vector<double> apply(const std::vector<double>& chi) const;
  // V^{1/2} M V^{-1/2}
  Eigen::MatrixXd symmetrized() const;
};

DenseRadialOperator assemble_L(const GridPtr& grid, const std::vector<double>& phi, const std::vector<double>& u,
                               double eta, const UnitSystem& units);
DenseRadialOperator assemble_L(const NewtonianLimitPoint& lp);
DenseRadialOperator assemble_L(const ChoquardSolution& sol);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending, finest level
  int negative_count = 0;
  double min_abs_eigenvalue = 0.0;
  std::vector<std::size_t> levels;        // node counts
  std::vector<int> negative_counts;       // per level
  std::vector<double> refinement_trace;   // min |eigenvalue| per level
};

SpectrumReport spectrum(const DenseRadialOperator& L);
// solves the ground state and the spectrum of L on n_j = base_n 2^j nodes, j < levels
SpectrumReport spectrum_refined(std::size_t base_n, double r_max, const UnitSystem& units, int levels,
                                const ChoquardControls& ctl = {});

/// X-direction perturbation: q and chi2 at cells, n and chi1 at nodes.
struct TangentState {
  GridPtr grid;
  double dl = 0.0;
  std::vector<double> q;
  std::vector<double> n;
  std::vector<double> chi1;
  std::vector<double> chi2;

  static TangentState zeros(GridPtr g);
  // same flat layout as EDState
  Eigen::VectorXd pack() const;
  static TangentState unpack(GridPtr g, const Eigen::VectorXd& x);
};

ResidualVector apply_D1F_at_limit(const TangentState& xi, const NewtonianLimitPoint& lp);

struct LinearSolveInfo {
  double q_form_mismatch = 0.0;  // sup |q from the origin - q from r_max|
  double refinement_residual = 0.0;
  int refinement_steps = 0;
};

TangentState solve_linearized_at_limit(const ResidualVector& y, const NewtonianLimitPoint& lp,
                                       LinearSolveInfo* info = nullptr);

}  // namespace diracstar
