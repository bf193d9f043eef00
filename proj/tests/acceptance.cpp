// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "diracstar/einstein_dirac.hpp"
#include "diracstar/linearized.hpp"
#include "diracstar/pipeline.hpp"
#include "diracstar/profile_io.hpp"
#include "diracstar/radial_ops.hpp"
#include "fixtures.hpp"
#include "oracles/energy_descent.hpp"

using namespace diracstar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int k, const std::string& name, double time_limit, const std::function<void(Outcome&)>& body) {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit > 0.0) o.require(secs <= time_limit, "runtime");
  if (!o.pass) ++failures;
  std::printf("%s %d %s (%.1f s)%s\n", o.pass ? "PASS" : "FAIL", k, name.c_str(), secs, o.detail.str().c_str());
  std::fflush(stdout);
}

double sup_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).generic_string()] = read_file(e.path().string());
  return m;
}

}  // namespace

int main() {
  criterion(1, "choquard ground state n=4000", 30.0, [](Outcome& o) {
    auto s = solve_choquard(RadialGrid::stretched(4000, 40.0));
    const auto& c = s.canonical;
    bool positive = true, monotone = true;
    for (std::size_t i = 0; i < s.phi.size(); ++i) {
      positive = positive && s.phi.f[i] > 0.0;
      if (i + 1 < s.phi.size()) monotone = monotone && s.phi.f[i + 1] <= s.phi.f[i];
    }
    double lin = linearized_decay_rate(s);
    double rel = std::abs(s.decay_rate / lin - 1.0);
    o.detail << " residual=" << c.residual_sup << " decay=" << s.decay_rate << " linear=" << lin;
    o.require(c.residual_sup <= 1e-8, "residual");
    o.require(positive, "positivity");
    o.require(monotone, "monotonicity");
    o.require(rel <= 0.05, "decay rate");
  });

  criterion(2, "energy descent oracle equivalence", 120.0, [](Outcome& o) {
    auto d = oracle::energy_descent(500, 20.0);
    const auto& s = fixture::ground_state(1000);
    // canonical profile phihat(x) = phi(x / beta) / alpha from both solvers
    std::vector<double> x, ref;
    for (std::size_t j = 0; j < d.r.size(); ++j) {
      x.push_back(d.beta * d.r[j]);
      ref.push_back(d.phi[j] / d.alpha);
    }
    auto ours = cubic_interpolate(s.canonical.phi.grid->nodes(), s.canonical.phi.f, x);
    double err = sup_abs_diff(ours, ref);
    o.detail << " sup=" << err;
    o.require(err <= 1e-4, "sup-norm");
  });

  criterion(3, "spectral nondegeneracy", 180.0, [](Outcome& o) {
    auto rep = spectrum_refined(500, 40.0, {}, 3);
    o.detail << " negatives=";
    for (int c : rep.negative_counts) o.detail << c << ",";
    o.detail << " min|ev|=";
    for (double t : rep.refinement_trace) o.detail << t << ",";
    for (int c : rep.negative_counts) o.require(c == 1, "negative count");
    const auto& t = rep.refinement_trace;
    o.require(t.size() == 3, "levels");
    o.require(std::abs(t[2] - t[1]) / t[2] < 0.05, "refinement variation");
    o.require(t[2] > 0.0, "positive limit");
  });

  criterion(4, "linearization fidelity", 0.0, [](Outcome& o) {
    const auto& lp = fixture::limit(1000);
    const auto& g = lp.state.grid;
    fixture::SmoothSampler rs(1);
    const Eigen::VectorXd x = lp.state.pack();
    double fd = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto xi = rs.tangent(g);
      Eigen::VectorXd an = apply_D1F_at_limit(xi, lp).pack();
      Eigen::VectorXd v = xi.pack();
      const double h = 1e-5;
      Eigen::VectorXd fp = residual_F(EDState::unpack(g, x + h * v, 0.0), lp.eta, lp.units).pack();
      Eigen::VectorXd fm = residual_F(EDState::unpack(g, x - h * v, 0.0), lp.eta, lp.units).pack();
      fd = std::max(fd, fixture::sup_diff((fp - fm) / (2.0 * h), an) / fixture::sup(an));
    }
    // round trip on the p = 1.5 grid, where the origin rows stay above double rounding
    const auto& lq = fixture::limit(1000, 1.5);
    fixture::SmoothSampler rq(2);
    double rt = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto y = rq.residual(lq.state.grid);
      auto back = apply_D1F_at_limit(solve_linearized_at_limit(y, lq), lq).pack();
      rt = std::max(rt, fixture::sup_diff(back, y.pack()) / fixture::sup(y.pack()));
    }
    o.detail << " fd=" << fd << " roundtrip=" << rt;
    o.require(fd <= 1e-6, "finite differences");
    o.require(rt <= 1e-8, "round trip");
  });

  criterion(5, "newtonian fixed point order", 0.0, [](Outcome& o) {
    auto fine = solve_choquard(RadialGrid::stretched(16001, 40.0));
    std::vector<double> res;
    for (std::size_t cells : {250u, 500u, 1000u}) {
      std::vector<double> nodes;
      for (std::size_t i = 0; i < fine.grid->size(); i += 16000 / cells) nodes.push_back(fine.grid->r(i));
      auto lp = sampled_limit_point(fine, RadialGrid::from_nodes(nodes));
      res.push_back(residual_F(lp.state, lp.eta, lp.units).sup());
    }
    double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    o.detail << " residuals=" << res[0] << "," << res[1] << "," << res[2] << " orders=" << o1 << "," << o2;
    o.require(o1 >= 1.9 && o2 >= 1.9, "order");
  });

  ContinuationResult run;
  const NewtonianLimitPoint* lp_default = nullptr;
  criterion(6, "continuation over the default schedule", 300.0, [&](Outcome& o) {
    RunConfig cfg;
    const auto& lp = fixture::limit(cfg.n, cfg.stretch);
    lp_default = &lp;
    ContinuationControls ctl;
    ctl.newton.tol = cfg.newton_tol;
    ctl.max_iterations_per_step = cfg.max_newton_iterations;
    run = continue_in_eps(lp, cfg.schedule(), lp.eta, ctl);
    int worst_it = 0;
    double worst_res = 0.0, eps_max = 0.0;
    for (const auto& st : run.steps) {
      worst_it = std::max(worst_it, st.iterations);
      worst_res = std::max(worst_res, st.residual);
      eps_max = st.eps;
    }
    bool monotone = true;
    for (std::size_t k = 1; k < run.steps.size(); ++k)
      monotone = monotone && std::abs(run.steps[k].state.l - lp.state.l) > std::abs(run.steps[k - 1].state.l - lp.state.l);
    o.detail << " steps=" << run.steps.size() << " eps_max=" << eps_max << " iterations<=" << worst_it
             << " residual<=" << worst_res << " slope=" << run.slope.total;
    o.require(!run.stalled, "stall");
    o.require(eps_max >= 0.05, "reach");
    o.require(worst_it <= 10, "iterations");
    o.require(worst_res <= 1e-10, "residual");
    o.require(run.slope.total >= 0.9, "slope");
    o.require(monotone, "|l - 2mG| monotone");
  });

  criterion(7, "physical reconstruction", 0.0, [&](Outcome& o) {
    if (run.steps.empty() || !lp_default) throw std::runtime_error("no converged state");
    const auto& st = run.steps.back().state;
    auto pf = reconstruct_physical(st, lp_default->eta, lp_default->units);
    const auto& g = *st.grid;
    double adm = std::abs(pf.adm_mass_observable / (st.eps * st.eps * st.l) - 1.0);
    std::vector<double> r, m;
    for (std::size_t c = 2; c < 20; ++c) {
      r.push_back(g.mid(c));
      m.push_back(std::expm1(2.0 * pf.lambda_cells[c]));
    }
    double order = loglog_slope(r, m);
    double q0 = pf.Phi2_cells[0] / g.mid(0), q1 = pf.Phi2_cells[1] / g.mid(1);
    o.detail << " eps=" << st.eps << " residuals=" << pf.residuals.sup() << " adm_rel=" << adm << " order=" << order
             << " Phi2/r=" << q0;
    o.require(pf.residuals.sup() <= 1e-7, "unscaled residuals");
    o.require(adm <= 0.01, "mass");
    o.require(order >= 1.9, "origin order");
    o.require(std::isfinite(q0) && std::abs(q0 - q1) <= 1e-3 * std::abs(q1), "Phi2/r at origin");
  });

  criterion(8, "vacuum and determinism", 0.0, [](Outcome& o) {
    auto g = RadialGrid::stretched(1000, 40.0);
    double vac = 0.0;
    for (double eps : {0.0, 0.05, 0.1}) vac = std::max(vac, residual_F(EDState::zeros(g, eps), -0.65, {}).sup());
    o.require(vac == 0.0, "vacuum");

    RunConfig cfg;
    auto dir = fs::temp_directory_path() / "diracstar_acceptance_run";
    cfg.out = dir.string();
    fs::remove_all(dir);
    auto m1 = run_pipeline(cfg);
    auto a = snapshot(dir);
    fs::remove_all(dir);
    auto m2 = run_pipeline(cfg);
    auto b = snapshot(dir);
    std::size_t differing = 0;
    for (const auto& [k, v] : a)
      if (!b.count(k) || b[k] != v) ++differing;
    o.detail << " vacuum=" << vac << " files=" << a.size() << " differing=" << differing;
    o.require(m1.completed() && m2.completed(), "pipeline stages");
    o.require(a.size() == b.size() && differing == 0, "byte identical");
    o.require(verify_manifest(dir.string()), "manifest");
    fs::remove_all(dir);
  });

  return failures == 0 ? 0 : 1;
}
