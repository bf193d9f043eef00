#include "diracstar/linearized.hpp"

#include <cmath>
#include <numbers>

#include "diracstar/fv.hpp"
#include "diracstar/radial_ops.hpp"

namespace diracstar {

namespace {

constexpr double pi = std::numbers::pi;

void check_tangent(const TangentState& xi, const RadialGrid& g) {
  const std::size_t n = g.size();
  if (xi.q.size() != n - 1 || xi.n.size() != n || xi.chi1.size() != n || xi.chi2.size() != n - 1)
    throw config_error("grid-mismatch", "tangent fields do not match the grid");
}

// n with 2 r_c (Dn)_c = b_c, r_{n-1} n_{n-1} - r_{n-2} n_{n-2} = tail
std::vector<double> integrate_inward(const RadialGrid& g, const std::vector<double>& b, double tail) {
  const std::size_t n = g.size();
  std::vector<double> out(n);
  std::vector<double> dn(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) dn[c] = b[c] / (2.0 * g.mid(c));
  double h = g.width(n - 2);
  out[n - 2] = (tail - g.r(n - 1) * h * dn[n - 2]) / h;
  out[n - 1] = out[n - 2] + h * dn[n - 2];
  for (std::size_t c = n - 2; c-- > 0;) out[c] = out[c + 1] - g.width(c) * dn[c];
  return out;
}

}  // namespace

std::vector<double> DenseRadialOperator::apply(const std::vector<double>& chi) const {
  const std::size_t m = size();
  if (chi.size() != m + 1) throw config_error("grid-mismatch", "operator input size");
  Eigen::Map<const Eigen::VectorXd> x(chi.data(), m);
  Eigen::VectorXd y = M * x + last * chi[m];
  std::vector<double> out(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) out[i] = y[i];
  return out;
}

Eigen::MatrixXd DenseRadialOperator::symmetrized() const {
  Eigen::VectorXd s = weights.head(size()).cwiseSqrt();
  return s.asDiagonal() * M * s.cwiseInverse().asDiagonal();
}

DenseRadialOperator assemble_L(const GridPtr& gp, const std::vector<double>& phi, const std::vector<double>& u,
                               double eta, const UnitSystem& units) {
  const auto& g = *gp;
  const std::size_t n = g.size();
  if (phi.size() != n || u.size() != n) throw config_error("grid-mismatch", "profiles do not match the grid");
  const std::size_t m = n - 1;
  const double k = units.hbar * units.hbar / (2.0 * units.m);

  DenseRadialOperator L;
  L.grid = gp;
  L.M = Eigen::MatrixXd::Zero(m, m);
  L.last = Eigen::VectorXd::Zero(m);
  L.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) L.weights[i] = g.volume(i);

  for (std::size_t i = 0; i < m; ++i) {
    double V = g.volume(i);
    double ap = g.mid(i) * g.mid(i) / g.width(i);
    L.M(i, i) += k * ap / V - eta + units.m * u[i];
    if (i + 1 < m) L.M(i, i + 1) -= k * ap / V;
    else L.last[i] -= k * ap / V;
    if (i > 0) {
      double am = g.mid(i - 1) * g.mid(i - 1) / g.width(i - 1);
      L.M(i, i) += k * am / V;
      L.M(i, i - 1) -= k * am / V;
    }
  }

  // discrete Green function of the potential equation depends on max(i, j)
  std::vector<double> T(m);
  T[m - 1] = g.r(n - 1) / (g.mid(n - 2) * g.mid(n - 2));
  for (std::size_t c = m - 1; c-- > 0;) T[c] = T[c + 1] + g.width(c) / (g.mid(c) * g.mid(c));
  const double coup = -16.0 * pi * units.G * units.m * units.m;
  for (std::size_t i = 0; i < m; ++i) {
    if (phi[i] == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) L.M(i, j) += coup * phi[i] * T[std::max(i, j)] * phi[j] * g.volume(j);
  }

  Eigen::MatrixXd A = L.symmetrized();
  double nrm = A.norm();
  L.symmetry_error = nrm > 0.0 ? (A - A.transpose()).norm() / nrm : 0.0;
  L.self_adjoint = L.symmetry_error <= 1e-10;
  return L;
}

DenseRadialOperator assemble_L(const NewtonianLimitPoint& lp) {
  return assemble_L(lp.state.grid, lp.state.Phi1, lp.state.N, lp.eta, lp.units);
}

DenseRadialOperator assemble_L(const ChoquardSolution& sol) {
  return assemble_L(sol.grid, sol.phi.f, sol.u.f, sol.eta, sol.units);
}

SpectrumReport spectrum(const DenseRadialOperator& L) {
  if (!L.self_adjoint)
    throw config_error("not-self-adjoint", "operator failed the weighted symmetry check");
  Eigen::MatrixXd A = L.symmetrized();
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numerical_error("eigensolver", "eigendecomposition failed at n = " + std::to_string(L.size() + 1));
  SpectrumReport rep;
  const auto& ev = es.eigenvalues();
  rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  rep.min_abs_eigenvalue = INFINITY;
  for (double v : rep.eigenvalues) {
    if (v < 0.0) ++rep.negative_count;
    rep.min_abs_eigenvalue = std::min(rep.min_abs_eigenvalue, std::abs(v));
  }
  rep.levels = {L.size() + 1};
  rep.negative_counts = {rep.negative_count};
  rep.refinement_trace = {rep.min_abs_eigenvalue};
  return rep;
}

SpectrumReport spectrum_refined(std::size_t base_n, double r_max, const UnitSystem& units, int levels,
                                const ChoquardControls& ctl) {
  if (levels < 1) throw config_error("refinements", "need at least one level");
  SpectrumReport out;
  for (int j = 0; j < levels; ++j) {
    std::size_t n = base_n << j;
    auto sol = solve_choquard(RadialGrid::stretched(n, r_max), units, ctl);
    SpectrumReport s;
    try {
      s = spectrum(assemble_L(sol));
    } catch (const Error& e) {
      throw numerical_error(e.code(), std::string(e.what()) + " (level " + std::to_string(j) + ")");
    }
    out.levels.push_back(n);
    out.negative_counts.push_back(s.negative_count);
    out.refinement_trace.push_back(s.min_abs_eigenvalue);
    out.eigenvalues = std::move(s.eigenvalues);
    out.negative_count = s.negative_count;
    out.min_abs_eigenvalue = s.min_abs_eigenvalue;
  }
  return out;
}

TangentState TangentState::zeros(GridPtr g) {
  TangentState t;
  const std::size_t n = g->size();
  t.grid = std::move(g);
  t.q.assign(n - 1, 0.0);
  t.n.assign(n, 0.0);
  t.chi1.assign(n, 0.0);
  t.chi2.assign(n - 1, 0.0);
  return t;
}

Eigen::VectorXd TangentState::pack() const {
  EDState s = EDState::zeros(grid);
  s.l = dl;
  s.Q = q;
  s.N = n;
  s.Phi1 = chi1;
  s.psi2 = chi2;
  return s.pack();
}

TangentState TangentState::unpack(GridPtr g, const Eigen::VectorXd& x) {
  EDState s = EDState::unpack(g, x, 0.0);
  TangentState t;
  t.grid = g;
  t.dl = s.l;
  t.q = std::move(s.Q);
  t.n = std::move(s.N);
  t.chi1 = std::move(s.Phi1);
  t.chi2 = std::move(s.psi2);
  return t;
}

ResidualVector apply_D1F_at_limit(const TangentState& xi, const NewtonianLimitPoint& lp) {
  const auto& g = *lp.state.grid;
  if (xi.grid && xi.grid->size() != g.size()) throw config_error("grid-mismatch", "tangent and limit point grids differ");
  check_tangent(xi, g);
  const std::size_t n = g.size();
  const auto& U = lp.units;
  const double hb = U.hbar, m = U.m, G = U.G;
  const auto& phi = lp.state.Phi1;
  const auto& u = lp.state.N;

  ResidualVector y = ResidualVector::zeros(g);
  std::vector<double> flux(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) flux[c] = g.mid(c) * (xi.q[c] + 2.0 * xi.dl * f0_eval(g.mid(c)));
  for (std::size_t i = 0; i < n; ++i) {
    double Fp = i + 1 == n ? 2.0 * xi.dl : flux[i];
    double Fm = i == 0 ? 0.0 : flux[i - 1];
    y.alpha[i] = (Fp - Fm) / g.span(i) - 32.0 * pi * m * G * phi[i] * xi.chi1[i] * g.volume(i) / g.span(i);
  }
  for (std::size_t c = 0; c + 1 < n; ++c) {
    double r = g.mid(c), h = g.width(c);
    y.beta[c] = 2.0 * r * (xi.n[c + 1] - xi.n[c]) / h - 2.0 * xi.dl * f0_eval(r) - xi.q[c];
    y.j1[c] = (2.0 * m / hb) * xi.chi2[c] + (xi.chi1[c + 1] - xi.chi1[c]) / h;
  }
  y.n_tail = g.r(n - 1) * xi.n[n - 1] - g.r(n - 2) * xi.n[n - 2];
  for (std::size_t i = 0; i + 1 < n; ++i)
    y.j2[i] = ((lp.eta - m * u[i]) / hb) * xi.chi1[i] - fv::div2<double>(g, xi.chi2, i) - (m / hb) * xi.n[i] * phi[i];
  y.phi_tail = xi.chi1[n - 1];
  return y;
}

TangentState solve_linearized_at_limit(const ResidualVector& y, const NewtonianLimitPoint& lp, LinearSolveInfo* info) {
  const auto& gp = lp.state.grid;
  const auto& g = *gp;
  const std::size_t n = g.size();
  if (y.alpha.size() != n || y.beta.size() != n - 1 || y.j1.size() != n - 1 || y.j2.size() != n - 1)
    throw config_error("grid-mismatch", "residual components do not match the grid");
  const auto& U = lp.units;
  const double hb = U.hbar, m = U.m, G = U.G;
  const auto& phi = lp.state.Phi1;
  LinearSolveInfo inf;

  // potential generated by (alpha, beta) alone
  std::vector<double> b(n - 1);
  double C = 0.0;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    C += y.alpha[c] * g.span(c);
    b[c] = y.beta[c] + C / g.mid(c);
  }
  auto ny = integrate_inward(g, b, y.n_tail);

  auto L = assemble_L(lp);
  const std::size_t M = n - 1;
  Eigen::VectorXd rhs(M);
  for (std::size_t i = 0; i < M; ++i)
    rhs[i] = -hb * y.j2[i] - (hb * hb / (2.0 * m)) * fv::div2<double>(g, y.j1, i) - m * ny[i] * phi[i] -
             L.last[i] * y.phi_tail;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L.M);
  if (!(lu.rcond() > 1e-15)) throw numerical_error("singular-L", "linearized operator is numerically singular");
  Eigen::VectorXd x = lu.solve(rhs);
  double bn = std::max(rhs.cwiseAbs().maxCoeff(), 1e-300);
  // residuals in extended precision; the stencil near the origin cancels to ~1/h^2
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LMat ML = L.M.cast<long double>();
  LVec bL = rhs.cast<long double>();
  for (int it = 0; it < 4; ++it) {
    LVec xl = x.cast<long double>();
    LVec rl = bL - ML * xl;
    Eigen::VectorXd r = rl.cast<double>();
    inf.refinement_residual = r.cwiseAbs().maxCoeff() / bn;
    if (inf.refinement_residual < 1e-15) break;
    x += lu.solve(r);
    ++inf.refinement_steps;
  }

  TangentState xi = TangentState::zeros(gp);
  for (std::size_t i = 0; i < M; ++i) xi.chi1[i] = x[i];
  xi.chi1[n - 1] = y.phi_tail;
  for (std::size_t c = 0; c + 1 < n; ++c)
    xi.chi2[c] = (hb / (2.0 * m)) * (y.j1[c] - (xi.chi1[c + 1] - xi.chi1[c]) / g.width(c));

  std::vector<double> s(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = 32.0 * pi * m * G * phi[i] * xi.chi1[i] * g.volume(i) + y.alpha[i] * g.span(i);
    total += s[i];
  }
  if (!std::isfinite(total)) throw numerical_error("dl-quadrature", "closure sum is not finite");
  xi.dl = 0.5 * total;

  double inner = 0.0, outer = total;
  for (std::size_t c = 0; c + 1 < n; ++c) {
    inner += s[c];
    outer -= s[c];
    double r = g.mid(c);
    double f = 2.0 * xi.dl * f0_eval(r);
    xi.q[c] = inner / r - f;
    // same quantity from the far end: 2 dl minus the remaining integrand
    double q_far = (2.0 * xi.dl - outer) / r - f;
    inf.q_form_mismatch = std::max(inf.q_form_mismatch, std::abs(xi.q[c] - q_far));
  }
  for (std::size_t c = 0; c + 1 < n; ++c) b[c] = y.beta[c] + 2.0 * xi.dl * f0_eval(g.mid(c)) + xi.q[c];
  xi.n = integrate_inward(g, b, y.n_tail);
  if (info) *info = inf;
  return xi;
}

}  // namespace diracstar
