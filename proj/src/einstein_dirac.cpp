#include "diracstar/einstein_dirac.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseLU>

#include "diracstar/dual.hpp"
#include "diracstar/fv.hpp"
#include "diracstar/norms.hpp"
#include "diracstar/radial_ops.hpp"

namespace diracstar {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double series_cut = 1e-6;

template <class T>
T g0_of(const T& x) {
  using std::expm1;
  if (std::abs(value(x)) < series_cut) return -1.0 + x * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0)));
  return expm1(-x) / x;
}

template <class T>
T g1_of(const T& x) {
  using std::expm1;
  if (std::abs(value(x)) < series_cut) return x * (-0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0 + x * (1.0 / 120.0))));
  return (-x - expm1(-x)) / x;
}

template <class T>
T rho_of(const T& N, const T& P, const T& s, double eta, double eps, double m) {
  using std::exp;
  double e2 = eps * eps;
  return 2.0 * (m + e2 * eta) * exp(-2.0 * e2 * N) * (P * P + e2 * s * s);
}

template <class T>
T p_of(const T& N, const T& P, const T& s, const T& s_over_r, double eta, double eps, double m, double hbar) {
  using std::exp;
  double e2 = eps * eps;
  T x = e2 * N;
  T e = exp(-x);
  return -2.0 * eta * e * e * (P * P + e2 * s * s) - 2.0 * m * e * P * P * (N * g0_of(x)) - 2.0 * m * e * s * s +
         4.0 * hbar * P * s_over_r;
}

// 1 - e^{-lambda} with e^{-2 lambda} = 1 - y
template <class T>
T lambda_coefficient(const T& y, bool printed) {
  using std::sqrt;
  if (printed) return y;
  return y / (1.0 + sqrt(1.0 - y));
}

// linear interpolation of cell values to node i in 1..n-1 (extrapolation at the last node)
template <class T>
T cell_to_node(const RadialGrid& g, const std::vector<T>& c, std::size_t i) {
  const std::size_t n = g.size();
  std::size_t a = i + 1 < n ? i - 1 : n - 3;
  double t = (g.r(i) - g.mid(a)) / (g.mid(a + 1) - g.mid(a));
  return (1.0 - t) * c[a] + t * c[a + 1];
}

template <class T>
void residual_rows(const RadialGrid& g, const T* x, double eps, double eta, const UnitSystem& u,
                   const EDOptions& opt, T* out) {
  using std::expm1;
  using std::exp;
  const std::size_t n = g.size();
  const std::size_t nc = n - 1;
  const double e2 = eps * eps;
  const double hb = u.hbar, m = u.m, G = u.G;

  const T& l = x[0];
  auto Q = [&](std::size_t c) -> const T& { return x[1 + c]; };
  auto N = [&](std::size_t i) -> const T& { return x[n + i]; };
  auto P = [&](std::size_t i) -> const T& { return x[2 * n + i]; };
  std::vector<T> s(x + 3 * n, x + 3 * n + nc);

  std::vector<T> S(nc), rS(nc), D(nc), cl(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    S[c] = 2.0 * l * f0_eval(g.mid(c)) + Q(c);
    rS[c] = g.mid(c) * S[c];
    D[c] = 1.0 - e2 * S[c];
    if (value(D[c]) <= 0.5)
      throw numerical_error("metric-degenerate", "1 - eps^2 (2 l f0 + Q) <= 1/2 at cell " + std::to_string(c));
    cl[c] = lambda_coefficient<T>(e2 * S[c], opt.printed_coefficient);
  }

  std::vector<T> sn(n), rho(n);
  sn[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) sn[i] = cell_to_node(g, s, i);
  for (std::size_t i = 0; i < n; ++i) rho[i] = rho_of(N(i), P(i), sn[i], eta, eps, m);

  std::size_t row = 0;
  // alpha: flux form of (r Q)' + 2 l (r f0)' - 8 pi G r^2 rho
  for (std::size_t i = 0; i < n; ++i) {
    T Gp = i + 1 == n ? 2.0 * l : rS[i];
    T Gm = i == 0 ? T(0.0) : rS[i - 1];
    out[row++] = (Gp - Gm) / g.span(i) - 8.0 * pi * G * rho[i] * g.volume(i) / g.span(i);
  }
  // beta
  for (std::size_t c = 0; c < nc; ++c) {
    double rc = g.mid(c);
    T Nb = 0.5 * (N(c) + N(c + 1));
    T Pb = 0.5 * (P(c) + P(c + 1));
    T p = p_of(Nb, Pb, s[c], s[c] / rc, eta, eps, m, hb);
    out[row++] = 2.0 * rc * (N(c + 1) - N(c)) / g.width(c) - S[c] / D[c] - 8.0 * pi * G * e2 * rc * rc * p / D[c];
  }
  out[row++] = g.r(n - 1) * N(n - 1) - g.r(n - 2) * N(n - 2);
  // j1
  for (std::size_t c = 0; c < nc; ++c) {
    double rc = g.mid(c);
    T Nb = 0.5 * (N(c) + N(c + 1));
    T Pb = 0.5 * (P(c) + P(c + 1));
    T dP = (P(c + 1) - P(c)) / g.width(c);
    T xb = e2 * Nb;
    T F2 = cl[c] * (dP + Pb / rc) - e2 * (eta / hb) * exp(-xb) * s[c] + (m / hb) * (-expm1(-xb)) * s[c];
    out[row++] = (2.0 * m / hb) * s[c] + dP - F2;
  }
  // j2
  for (std::size_t i = 0; i + 1 < n; ++i) {
    T xi = e2 * N(i);
    T Sn = i == 0 ? T(0.0) : cell_to_node(g, rS, i) / g.r(i);
    T cn = lambda_coefficient<T>(e2 * Sn, opt.printed_coefficient);
    T F1 = (m / hb) * N(i) * g1_of(xi) * P(i) + (eta / hb) * (-expm1(-xi)) * P(i) - cn * fv::div1<T>(g, s, i);
    out[row++] = ((eta - m * N(i)) / hb) * P(i) - fv::div2<T>(g, s, i) - F1;
  }
  out[row++] = P(n - 1);
}

// spatial index of each residual row, used for the column coloring
std::size_t row_site(std::size_t row, std::size_t n) {
  if (row < n) return row;
  if (row < 2 * n - 1) return row - n;
  if (row == 2 * n - 1) return n - 1;
  if (row < 3 * n - 1) return row - 2 * n;
  if (row < 4 * n - 2) return row - (3 * n - 1);
  return n - 1;
}

void check_grid(const EDState& s) {
  if (!s.grid) throw config_error("grid-mismatch", "state has no grid");
  const std::size_t n = s.grid->size();
  if (s.Q.size() != n - 1 || s.N.size() != n || s.Phi1.size() != n || s.psi2.size() != n - 1)
    throw config_error("grid-mismatch", "state fields do not match the grid");
}

double sup_vec(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double quotient_g0(double x) { return g0_of(x); }
double quotient_g1(double x) { return g1_of(x); }

double rho_eps_point(double N, double Phi1, double psi2, double eta, double eps, const UnitSystem& u) {
  return rho_of(N, Phi1, psi2, eta, eps, u.m);
}

double p_eps_point(double N, double Phi1, double psi2, double psi2_over_r, double eta, double eps,
                   const UnitSystem& u) {
  return p_of(N, Phi1, psi2, psi2_over_r, eta, eps, u.m, u.hbar);
}

EDState EDState::zeros(GridPtr g, double eps) {
  EDState s;
  const std::size_t n = g->size();
  s.grid = std::move(g);
  s.eps = eps;
  s.Q.assign(n - 1, 0.0);
  s.N.assign(n, 0.0);
  s.Phi1.assign(n, 0.0);
  s.psi2.assign(n - 1, 0.0);
  return s;
}

Eigen::VectorXd EDState::pack() const {
  check_grid(*this);
  const std::size_t n = grid->size();
  Eigen::VectorXd x(dim());
  x[0] = l;
  for (std::size_t c = 0; c + 1 < n; ++c) x[1 + c] = Q[c];
  for (std::size_t i = 0; i < n; ++i) x[n + i] = N[i];
  for (std::size_t i = 0; i < n; ++i) x[2 * n + i] = Phi1[i];
  for (std::size_t c = 0; c + 1 < n; ++c) x[3 * n + c] = psi2[c];
  return x;
}

EDState EDState::unpack(GridPtr g, const Eigen::VectorXd& x, double eps) {
  EDState s = zeros(g, eps);
  const std::size_t n = g->size();
  if (static_cast<std::size_t>(x.size()) != s.dim()) throw config_error("grid-mismatch", "unknown vector size");
  s.l = x[0];
  for (std::size_t c = 0; c + 1 < n; ++c) s.Q[c] = x[1 + c];
  for (std::size_t i = 0; i < n; ++i) s.N[i] = x[n + i];
  for (std::size_t i = 0; i < n; ++i) s.Phi1[i] = x[2 * n + i];
  for (std::size_t c = 0; c + 1 < n; ++c) s.psi2[c] = x[3 * n + c];
  return s;
}

RadialProfile EDState::Q_nodes() const {
  return RadialProfile(grid, cells_to_nodes(grid, Q, 0.0), Parity::vanishing);
}
RadialProfile EDState::N_profile() const { return RadialProfile(grid, N, Parity::even); }
RadialProfile EDState::Phi1_profile() const { return RadialProfile(grid, Phi1, Parity::even); }
RadialProfile EDState::psi2_nodes() const {
  return RadialProfile(grid, cells_to_nodes(grid, psi2, 0.0), Parity::vanishing);
}

ResidualVector ResidualVector::zeros(const RadialGrid& g) {
  ResidualVector y;
  const std::size_t n = g.size();
  y.alpha.assign(n, 0.0);
  y.beta.assign(n - 1, 0.0);
  y.j1.assign(n - 1, 0.0);
  y.j2.assign(n - 1, 0.0);
  return y;
}

Eigen::VectorXd ResidualVector::pack() const {
  const std::size_t n = alpha.size();
  Eigen::VectorXd y(4 * n - 1);
  std::size_t k = 0;
  for (double v : alpha) y[k++] = v;
  for (double v : beta) y[k++] = v;
  y[k++] = n_tail;
  for (double v : j1) y[k++] = v;
  for (double v : j2) y[k++] = v;
  y[k++] = phi_tail;
  return y;
}

ResidualVector ResidualVector::unpack(const RadialGrid& g, const Eigen::VectorXd& y) {
  ResidualVector r = zeros(g);
  const std::size_t n = g.size();
  if (static_cast<std::size_t>(y.size()) != 4 * n - 1) throw config_error("grid-mismatch", "residual vector size");
  std::size_t k = 0;
  for (auto& v : r.alpha) v = y[k++];
  for (auto& v : r.beta) v = y[k++];
  r.n_tail = y[k++];
  for (auto& v : r.j1) v = y[k++];
  for (auto& v : r.j2) v = y[k++];
  r.phi_tail = y[k++];
  return r;
}

double ResidualVector::sup() const { return sup_vec(pack()); }

NewtonianLimitPoint limit_point(const ChoquardSolution& sol) {
  NewtonianLimitPoint lp;
  const auto& g = *sol.grid;
  const auto& u = sol.units;
  lp.phi = sol.phi;
  lp.u = sol.u;
  lp.dphi = sol.dphi;
  lp.du = sol.du;
  lp.eta = sol.eta;
  lp.units = u;
  EDState s = EDState::zeros(sol.grid, 0.0);
  s.l = 2.0 * u.m * u.G;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    s.Q[c] = 2.0 * g.mid(c) * sol.du[c] - 4.0 * u.m * u.G * f0_eval(g.mid(c));
    s.psi2[c] = -(u.hbar / (2.0 * u.m)) * sol.dphi[c];
  }
  s.N = sol.u.f;
  s.Phi1 = sol.phi.f;
  lp.state = std::move(s);
  return lp;
}

NewtonianLimitPoint sampled_limit_point(const ChoquardSolution& sol, const GridPtr& coarse) {
  const auto& fine = *sol.grid;
  const std::size_t n = coarse->size();
  std::vector<double> phi(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    double r = coarse->r(i);
    auto it = std::lower_bound(fine.nodes().begin(), fine.nodes().end(), r - 1e-12 * fine.r_max());
    if (it == fine.nodes().end() || std::abs(*it - r) > 1e-9 * fine.r_max())
      throw config_error("grid-mismatch", "coarse node is not a node of the solution grid");
    std::size_t k = it - fine.nodes().begin();
    phi[i] = sol.phi.f[k];
    u[i] = sol.u.f[k];
  }
  ChoquardSolution c = sol;
  c.grid = coarse;
  c.phi = RadialProfile(coarse, phi, Parity::even);
  c.u = RadialProfile(coarse, u, Parity::even);
  c.dphi = cubic_interpolate(fine.mids(), sol.dphi, coarse->mids());
  c.du = cubic_interpolate(fine.mids(), sol.du, coarse->mids());
  return limit_point(c);
}

SourceTerms source_terms(const EDState& s, double eta, const UnitSystem& units) {
  check_grid(s);
  const auto& g = *s.grid;
  const std::size_t n = g.size();
  SourceTerms st;
  auto sn = cells_to_nodes(s.grid, s.psi2, 0.0);
  st.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) st.rho[i] = rho_of(s.N[i], s.Phi1[i], sn[i], eta, s.eps, units.m);
  st.p.resize(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    double Nb = 0.5 * (s.N[c] + s.N[c + 1]);
    double Pb = 0.5 * (s.Phi1[c] + s.Phi1[c + 1]);
    st.p[c] = p_of(Nb, Pb, s.psi2[c], s.psi2[c] / g.mid(c), eta, s.eps, units.m, units.hbar);
  }
  return st;
}

ResidualVector residual_F(const EDState& s, double eta, const UnitSystem& units, const EDOptions& opt) {
  Eigen::VectorXd x = s.pack();
  Eigen::VectorXd y(x.size());
  residual_rows<double>(*s.grid, x.data(), s.eps, eta, units, opt, y.data());
  return ResidualVector::unpack(*s.grid, y);
}

Eigen::SparseMatrix<double> jacobian_F(const EDState& s, double eta, const UnitSystem& units, const EDOptions& opt) {
  using D = Dual<21>;
  const auto& g = *s.grid;
  const std::size_t n = g.size();
  const std::size_t dim = s.dim();
  Eigen::VectorXd x = s.pack();

  // color = 5 * block + (index mod 5), l takes color 20
  const std::size_t offset[4] = {1, n, 2 * n, 3 * n};
  const std::size_t length[4] = {n - 1, n, n, n - 1};
  std::vector<D> xd(dim);
  xd[0].v = x[0];
  xd[0].d[20] = 1.0;
  for (int b = 0; b < 4; ++b)
    for (std::size_t j = 0; j < length[b]; ++j) {
      auto& v = xd[offset[b] + j];
      v.v = x[offset[b] + j];
      v.d[5 * b + j % 5] = 1.0;
    }
  std::vector<D> yd(dim);
  residual_rows<D>(g, xd.data(), s.eps, eta, units, opt, yd.data());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dim * 12);
  for (std::size_t row = 0; row < dim; ++row) {
    const auto& y = yd[row];
    std::size_t k = row_site(row, n);
    if (y.d[20] != 0.0) trip.emplace_back(row, 0, y.d[20]);
    for (int b = 0; b < 4; ++b) {
      std::size_t lo = k >= 2 ? k - 2 : 0;
      std::size_t hi = std::min(k + 2, length[b] - 1);
      for (std::size_t j = lo; j <= hi; ++j) {
        double v = y.d[5 * b + j % 5];
        if (v != 0.0) trip.emplace_back(row, offset[b] + j, v);
      }
    }
  }
  Eigen::SparseMatrix<double> J(dim, dim);
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

std::vector<double> node_S(const EDState& s) {
  check_grid(s);
  const auto& g = *s.grid;
  const std::size_t n = g.size();
  std::vector<double> rS(n - 1);
  for (std::size_t c = 0; c + 1 < n; ++c) rS[c] = g.mid(c) * (2.0 * s.l * f0_eval(g.mid(c)) + s.Q[c]);
  std::vector<double> S(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) S[i] = cell_to_node(g, rS, i) / g.r(i);
  return S;
}

double l_closure(const EDState& s, double eta, const UnitSystem& units, double tail_threshold) {
  auto st = source_terms(s, eta, units);
  const auto& g = *s.grid;
  const std::size_t n = g.size();
  double total = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += st.rho[i] * g.volume(i);
    mag += std::abs(st.rho[i]) * g.volume(i);
  }
  double r = g.r_max();
  if (std::abs(st.rho[n - 1]) * r * r * r > tail_threshold * mag && mag > 0.0)
    throw numerical_error("tail-too-heavy", "density does not decay before r_max");
  return 0.5 * 8.0 * pi * units.G * total;
}

EDState newton_solve(const EDState& seed, double eps, double eta, const UnitSystem& units, const NewtonControls& ctl,
                     NewtonReport* report, const EDOptions& opt) {
  check_grid(seed);
  if (!(ctl.tol > 0.0)) throw config_error("tolerance", "Newton tolerance must be positive");
  EDState s = seed;
  s.eps = eps;
  const auto& g = *s.grid;
  NewtonReport rep;
  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y.resize(x.size());
    residual_rows<double>(g, x.data(), eps, eta, units, opt, y.data());
    return sup_vec(y);
  };
  Eigen::VectorXd x = s.pack(), y;
  double norm = eval(x, y);
  if (!std::isfinite(norm)) throw numerical_error("newton-divergence", "seed residual is not finite");
  rep.history.push_back(norm);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (norm > ctl.tol) {
    if (rep.iterations >= ctl.max_iterations)
      throw numerical_error("newton-divergence", "no convergence in " + std::to_string(ctl.max_iterations) +
                                                     " iterations, residual " + std::to_string(norm));
    auto J = jacobian_F(EDState::unpack(s.grid, x, eps), eta, units, opt);
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw numerical_error("newton-divergence", "singular Jacobian");
    Eigen::VectorXd dx = lu.solve(y);
    double lam = 1.0;
    bool accepted = false;
    Eigen::VectorXd xt, yt;
    while (lam >= ctl.min_damping) {
      xt = x - lam * dx;
      double nt = 0.0;
      try {
        nt = eval(xt, yt);
      } catch (const Error& e) {
        if (e.code() != "metric-degenerate") throw;
        nt = INFINITY;
      }
      if (std::isfinite(nt) && nt <= (1.0 - 1e-4 * lam) * norm) {
        x = xt;
        y = yt;
        norm = nt;
        accepted = true;
        break;
      }
      lam *= 0.5;
    }
    if (!accepted) throw numerical_error("newton-divergence", "residual does not contract under maximal damping");
    ++rep.iterations;
    rep.history.push_back(norm);
  }
  rep.residual = norm;
  if (report) *report = rep;
  return EDState::unpack(s.grid, x, eps);
}

NormReport norm_report(const EDState& s, const NewtonianLimitPoint& ref, double delta) {
  check_grid(s);
  const auto& r = ref.state;
  if (s.grid->size() != r.grid->size()) throw config_error("grid-mismatch", "state and reference grids differ");
  const auto& gp = s.grid;
  const std::size_t n = gp->size();
  std::vector<double> dQ(n - 1), dpsi(n - 1), dN(n), dP(n);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    dQ[c] = s.Q[c] - r.Q[c];
    dpsi[c] = s.psi2[c] - r.psi2[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    dN[i] = s.N[i] - r.N[i];
    dP[i] = s.Phi1[i] - r.Phi1[i];
  }
  NormReport nr;
  nr.l_diff = std::abs(s.l - r.l);
  RadialProfile q(gp, cells_to_nodes(gp, dQ, 0.0), Parity::vanishing);
  RadialProfile nn(gp, dN, Parity::even);
  RadialProfile pp(gp, dP, Parity::even);
  RadialProfile ps(gp, cells_to_nodes(gp, dpsi, 0.0), Parity::vanishing);
  nr.Q = weighted_norm(q, NormSpec::bc1(2.0, 2.0));
  nr.N = weighted_norm(nn, NormSpec::bc1(1.0));
  nr.Phi1 = weighted_norm(pp, NormSpec::h_exp(2, delta)) + weighted_norm(pp, NormSpec::bc1(0.0));
  nr.psi2 = weighted_norm(ps, NormSpec::h_exp(1, delta)) + weighted_norm(ps, NormSpec::bc1(0.0, 1.0));
  return nr;
}

std::vector<double> geometric_schedule(double lo, double hi, int steps) {
  if (steps < 0) throw config_error("schedule", "step count must be >= 0");
  if (steps == 0) return {};
  if (!(lo > 0.0) || !(hi >= lo)) throw config_error("schedule", "need 0 < lo <= hi");
  if (steps == 1) return {hi};
  std::vector<double> e(steps);
  for (int k = 0; k < steps; ++k) e[k] = lo * std::pow(hi / lo, double(k) / (steps - 1));
  e.back() = hi;
  return e;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    ++k;
  }
  if (k < 2) return NAN;
  double den = k * sxx - sx * sx;
  return den == 0.0 ? NAN : (k * sxy - sx * sy) / den;
}

SlopeFit fit_slopes(const std::vector<ContinuationStep>& steps) {
  std::vector<double> e, t, q, nn, p, s;
  for (const auto& st : steps) {
    if (!(st.eps > 0.0)) continue;
    e.push_back(st.eps);
    t.push_back(st.norms.total());
    q.push_back(st.norms.Q);
    nn.push_back(st.norms.N);
    p.push_back(st.norms.Phi1);
    s.push_back(st.norms.psi2);
  }
  SlopeFit f;
  f.points = e.size();
  f.total = loglog_slope(e, t);
  f.Q = loglog_slope(e, q);
  f.N = loglog_slope(e, nn);
  f.Phi1 = loglog_slope(e, p);
  f.psi2 = loglog_slope(e, s);
  return f;
}

ContinuationResult continue_in_eps(const NewtonianLimitPoint& start, const std::vector<double>& schedule, double eta,
                                   const ContinuationControls& ctl, std::optional<double> decay_rate) {
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] >= 0.0) || !std::isfinite(schedule[k]))
      throw config_error("schedule", "eps values must be finite and >= 0");
    if (k > 0 && !(schedule[k] > schedule[k - 1])) throw config_error("schedule", "eps must be strictly increasing");
  }
  ContinuationResult res;
  double rate = decay_rate ? *decay_rate : fit_decay(start.phi).second;
  res.delta = ctl.delta > 0.0 ? ctl.delta : 0.5 * rate;
  NewtonControls nc = ctl.newton;
  nc.max_iterations = std::min(nc.max_iterations, ctl.max_iterations_per_step);

  // previous (eps, state) pairs for the predictor, starting from the limit point
  std::vector<std::pair<double, Eigen::VectorXd>> hist{{0.0, start.state.pack()}};
  const auto& units = start.units;
  for (double eps : schedule) {
    Eigen::VectorXd guess = hist.back().second;
    if (hist.size() >= 2 && eps > hist.back().first) {
      const auto& [e0, x0] = hist[hist.size() - 2];
      const auto& [e1, x1] = hist.back();
      double t = (eps * eps - e1 * e1) / (e1 * e1 - e0 * e0);
      guess = x1 + t * (x1 - x0);
    }
    ContinuationStep step;
    step.eps = eps;
    try {
      NewtonReport rep;
      EDState seed = EDState::unpack(start.state.grid, guess, eps);
      step.state = newton_solve(seed, eps, eta, units, nc, &rep, ctl.options);
      step.iterations = rep.iterations;
      step.residual = rep.residual;
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::numerical) throw;
      res.stalled = true;
      res.stall_eps = eps;
      res.stall_reason = e.what();
      break;
    }
    step.norms = norm_report(step.state, start, res.delta);
    if (eps > hist.back().first) hist.emplace_back(eps, step.state.pack());
    res.steps.push_back(std::move(step));
  }
  res.slope = fit_slopes(res.steps);
  return res;
}

double UnscaledResiduals::sup() const { return std::max({d1, d2, e1, e2}); }

PhysicalFields reconstruct_physical(const EDState& s, double eta, const UnitSystem& units) {
  check_grid(s);
  if (!(s.eps > 0.0)) throw config_error("eps", "physical fields need eps > 0");
  const auto& gp = s.grid;
  const auto& g = *gp;
  const std::size_t n = g.size();
  const double eps = s.eps, e2 = eps * eps, c = 1.0 / eps;
  const double m = units.m, hb = units.hbar, G = units.G;

  PhysicalFields pf;
  pf.grid = gp;
  pf.eps = eps;
  std::vector<double> lc(n - 1), Sn = node_S(s), ln(n), nu(n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double S = 2.0 * s.l * f0_eval(g.mid(k)) + s.Q[k];
    if (1.0 - e2 * S <= 0.5) throw numerical_error("metric-degenerate", "metric factor too small at cell " + std::to_string(k));
    lc[k] = -0.5 * std::log1p(-e2 * S);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (1.0 - e2 * Sn[i] <= 0.5) throw numerical_error("metric-degenerate", "metric factor too small at node " + std::to_string(i));
    ln[i] = -0.5 * std::log1p(-e2 * Sn[i]);
    nu[i] = e2 * s.N[i];
  }
  std::vector<double> P2c(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) P2c[k] = eps * s.psi2[k];
  auto P2n = cells_to_nodes(gp, P2c, 0.0);

  pf.lambda = RadialProfile(gp, ln, Parity::even);
  pf.nu = RadialProfile(gp, nu, Parity::even);
  pf.Phi1 = RadialProfile(gp, s.Phi1, Parity::even);
  pf.Phi2 = RadialProfile(gp, P2n, Parity::vanishing);
  pf.lambda_cells = lc;
  pf.Phi2_cells = P2c;
  pf.omega = (m * c * c + eta) / hb;
  double rm = g.r_max();
  pf.adm_mass_observable = 0.5 * rm * std::expm1(2.0 * ln[n - 1]);

  for (std::size_t i = 0; i < n; ++i) {
    double a = 4.0 * pi * g.volume(i) * std::exp(nu[i]) * (s.Phi1[i] * s.Phi1[i] + P2n[i] * P2n[i]);
    pf.norm_flat += a;
    pf.norm_curved += a * std::exp(ln[i]);
  }

  auto& R = pf.residuals;
  const auto& P1 = s.Phi1;
  for (std::size_t i = 0; i < n; ++i) {
    double Fp = i + 1 == n ? -rm * std::expm1(-2.0 * ln[i]) : -g.mid(i) * std::expm1(-2.0 * lc[i]);
    double Fm = i == 0 ? 0.0 : -g.mid(i - 1) * std::expm1(-2.0 * lc[i - 1]);
    double rho = 2.0 * (m + eta / (c * c)) * std::exp(-2.0 * nu[i]) * (P1[i] * P1[i] + P2n[i] * P2n[i]);
    double e1 = (Fp - Fm) / g.span(i) - 8.0 * pi * G * rho * g.volume(i) / (c * c * g.span(i));
    R.e1 = std::max(R.e1, std::abs(e1));
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double r = g.mid(k), h = g.width(k);
    double nub = 0.5 * (nu[k] + nu[k + 1]);
    double Pb = 0.5 * (P1[k] + P1[k + 1]);
    double dnu = (nu[k + 1] - nu[k]) / h;
    double dP = (P1[k + 1] - P1[k]) / h;
    double P2 = P2c[k];
    double p = -2.0 * eta * std::exp(-2.0 * nub) * (Pb * Pb + P2 * P2) -
               2.0 * m * c * c * std::exp(-nub) * Pb * Pb * std::expm1(-nub) -
               2.0 * m * c * c * std::exp(-nub) * P2 * P2 + 4.0 * hb * c / r * Pb * P2;
    double em = std::exp(-2.0 * lc[k]);
    double e2r = em * 2.0 * r * dnu + std::expm1(-2.0 * lc[k]) - 8.0 * pi * G * r * r * p / (c * c * c * c);
    R.e2 = std::max(R.e2, std::abs(e2r));
    double el = std::exp(-lc[k]);
    double d2 = (pf.omega * std::exp(-nub) / c + m * c / hb) * P2 + el * dP + (el - 1.0) * Pb / r;
    R.d2 = std::max(R.d2, std::abs(d2));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double el = std::exp(-ln[i]);
    double d1 = (pf.omega * std::exp(-nu[i]) / c - m * c / hb) * P1[i] - fv::div2<double>(g, P2c, i) +
                (1.0 - el) * fv::div1<double>(g, P2c, i);
    R.d1 = std::max(R.d1, std::abs(d1));
  }
  return pf;
}

EDState rescale_from_physical(const PhysicalFields& p, double l) {
  const auto& g = *p.grid;
  const std::size_t n = g.size();
  const double eps = p.eps, e2 = eps * eps;
  EDState s = EDState::zeros(p.grid, eps);
  s.l = l;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    s.Q[k] = -std::expm1(-2.0 * p.lambda_cells[k]) / e2 - 2.0 * l * f0_eval(g.mid(k));
    s.psi2[k] = p.Phi2_cells[k] / eps;
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.N[i] = p.nu.f[i] / e2;
    s.Phi1[i] = p.Phi1.f[i];
  }
  return s;
}

}  // namespace diracstar
