// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "chronospec/bench.hpp"

using namespace chronospec;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Problem rabi_with_horizon(double T) {
  json j = builtin_problem_json("rabi");
  j["horizon"] = T;
  j["defaults"]["n_tau"] = 0;
  return problem_from_json(j);
}

// --- 1 ---------------------------------------------------------------------
Outcome resources() {
  const auto t0 = std::chrono::steady_clock::now();
  const ResourceEstimate g = estimate_resources(128, 4, 4, PipelineMode::Global);
  const ResourceEstimate s = estimate_resources(61, 4, 4, PipelineMode::Sequential);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = g == ResourceEstimate{2560, 13, 1} && s == ResourceEstimate{40, 7, 61} && ms < 1.0;
  return {ok, "global {" + std::to_string(g.dimension) + "," + std::to_string(g.qubits) + "," +
                  std::to_string(g.invocations) + "}, sequential {" + std::to_string(s.dimension) + "," +
                  std::to_string(s.qubits) + "," + std::to_string(s.invocations) + "}"};
}

// --- 2 ---------------------------------------------------------------------
Outcome convergence() {
  const Problem p = load_problem("rabi");
  const PreparedProblem pp = prepare_problem(p);
  const double T = p.hamiltonian.horizon();
  const Segmentation seg = make_segmentation(pp.A, T, {SegmentationMode::Uniform, p.defaults.n_tau});
  const Segmentation minimal = make_segmentation(pp.A, T, {SegmentationMode::Uniform, 0});
  const auto times = uniform_samples(T, 201);
  const Trajectory ref = integrate_reduced_ode(pp.A, pp.alpha0, T, times);
  std::vector<double> dp;
  for (int n = 2; n <= 8; ++n) {
    PipelineOptions o;
    o.degree = n;
    const auto sol = run_pipeline(pp.reduced, pp.alpha0, seg, o).solution;
    dp.push_back(error_metrics(sol, ref, pp.reduced_observable).delta_p);
  }
  bool ok = seg.count() >= minimal.count() && seg.max_scaled_norm <= 1.0;
  double worst_ratio = 1e300;
  for (int n = 2; n < 6; ++n) {
    const double ratio = dp[n - 2] / dp[n - 1];
    worst_ratio = std::min(worst_ratio, ratio);
    ok = ok && ratio >= 2.0;
  }
  double best = 1e300;
  for (double v : dp) best = std::min(best, v);
  ok = ok && best <= 1e-8;
  std::string list;
  for (int n = 2; n <= 8; ++n) list += (n > 2 ? " " : "") + num(dp[n - 2]);
  return {ok, "N_tau=" + std::to_string(seg.count()) + ", dP(n=2..8) = " + list +
                  ", min ratio n=2..6 " + num(worst_ratio)};
}

// --- 3 ---------------------------------------------------------------------
Outcome equivalence() {
  const Problem p = load_problem("rabi");
  ExperimentOptions o;
  o.degree = 4;
  o.samples = 21;
  const Report r = run_experiment(p, Experiment::Compare, o);
  const double disc = r.summary["metrics"]["max_endpoint_discrepancy"];
  const double seq_dev = r.summary["metrics"]["max_sequential_norm_deviation"];
  o.degree = 7;
  const Report r7 = run_experiment(p, Experiment::Compare, o);
  const double drift7 = r7.summary["metrics"]["max_global_norm_drift"];
  const bool ok = disc <= 1e-10 && seq_dev <= 1e-12 && drift7 <= 1e-7;
  return {ok, "endpoint discrepancy " + num(disc) + ", sequential |norm-1| " + num(seq_dev) +
                  ", global drift (n=7) " + num(drift7)};
}

// --- 4 ---------------------------------------------------------------------
Outcome oracle() {
  const Problem p = load_problem("rabi");
  const PreparedProblem pp = prepare_problem(p);
  const double T = p.hamiltonian.horizon();
  const auto times = uniform_samples(T, 201);
  const Trajectory full = propagate_full_hilbert(p.hamiltonian, pp.basis.reference_state, times);
  const Segmentation seg = make_segmentation(pp.A, T, {SegmentationMode::Uniform, p.defaults.n_tau});
  const auto lift = [&](const VectorXc& a) { return reconstruct_state(pp.basis, a); };
  double worst = 1.0;
  for (int n = 6; n <= 8; ++n) {
    PipelineOptions o;
    o.degree = n;
    const auto sol = run_pipeline(pp.reduced, pp.alpha0, seg, o).solution;
    worst = std::min(worst, error_metrics(sol, full, p.observable(), lift).min_fidelity);
  }
  return {worst >= 1 - 1e-8, "min fidelity over n=6..8 and all samples: 1 - " + num(1 - worst)};
}

// --- 5 ---------------------------------------------------------------------
Outcome qsvt() {
  std::mt19937 rng(2024);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> dim(1, 16);
  double unit = 0.0, block = 0.0;
  for (int m = 0; m < 50; ++m) {
    const int n = dim(rng);
    MatrixXc L(n, n);
    for (auto& v : L.reshaped()) v = {g(rng), g(rng)};
    const auto be = build_block_encoding(L);
    unit = std::max(unit, (be.unitary.adjoint() * be.unitary - MatrixXc::Identity(2 * n, 2 * n)).norm());
    block = std::max(block, (be.top_left() - L / be.normalization).cwiseAbs().maxCoeff());
  }
  const bool ok_a = unit <= 1e-12 && block <= 1e-12;

  const auto held_out = [](const PhaseSequence& seq, const VectorXr& cheb) {
    double err = 0.0;
    for (int j = 0; j < 1000; ++j) {
      const double x = -1.0 + 2.0 * (j + 0.5) / 1000.0;
      err = std::max(err, std::abs(qsp_response(seq, x).real() - eval_expansion(cheb, x)));
    }
    return err;
  };
  double phase_err = 0.0;
  for (const VectorXr& c : {VectorXr(VectorXr::Unit(2, 1)), VectorXr(VectorXr::Unit(4, 3))})
    phase_err = std::max(phase_err, held_out(compute_phase_factors(c), c));
  const auto inv = build_inverse_polynomial(4.0, 1e-4);
  phase_err = std::max(phase_err, held_out(compute_phase_factors(inv), inv.chebyshev()));
  const bool ok_b = phase_err <= 1e-8;

  // First sequential step of synthetic13: N_alpha = 4, n = 4.
  const Problem p = load_problem("synthetic13");
  const PreparedProblem pp = prepare_problem(p);
  const Segmentation seg = make_segmentation(pp.A, p.hamiltonian.horizon(), {SegmentationMode::Uniform, 0});
  const auto grid = build_chebyshev_grid(4);
  double worst_kappa_step = 0.0;
  int chosen = 0;
  for (int h = 0; h < seg.count(); ++h) {
    const auto step = assemble_sequential_step(rescale_interval(seg, h, pp.A), grid, pp.alpha0);
    const double k = condition_number(step.matrix);
    if (k <= 50.0 && k > worst_kappa_step) {
      worst_kappa_step = k;
      chosen = h;
    }
  }
  const auto step = assemble_sequential_step(rescale_interval(seg, chosen, pp.A), grid, pp.alpha0);
  QsvtOptions qo;
  qo.epsilon = 1e-6;
  qo.mode = QsvtMode::Circuit;
  const auto run = qsvt_solve(step, qo);
  const auto direct = solve_direct(step);
  const double rel = (run.solution - direct.x).norm() / direct.x.norm();
  const bool ok_c = step.matrix.rows() == 40 && worst_kappa_step <= 50.0 && rel <= 1e-5;

  return {ok_a && ok_b && ok_c,
          "(a) unitarity " + num(unit) + ", block " + num(block) + "; (b) held-out " + num(phase_err) +
              "; (c) dim " + std::to_string(step.matrix.rows()) + ", kappa " + num(worst_kappa_step) + ", d " +
              std::to_string(run.degree) + ", rel err " + num(rel)};
}

// --- 6 ---------------------------------------------------------------------
Outcome ideal_qsvt() {
  const Problem p = rabi_with_horizon(4.0);
  const PreparedProblem pp = prepare_problem(p);
  const Segmentation seg = make_segmentation(pp.A, 4.0, {SegmentationMode::Uniform, 0});
  PipelineOptions base;
  base.degree = 4;
  const auto direct = run_pipeline(pp.reduced, pp.alpha0, seg, base);
  const auto stack = [](const SpectralSolution& s) {
    VectorXc v(static_cast<Eigen::Index>(s.coefficients.size()) * s.coefficients[0].size());
    Eigen::Index o = 0;
    for (const auto& c : s.coefficients) {
      v.segment(o, c.size()) = c.reshaped();
      o += c.size();
    }
    return v;
  };
  const VectorXc ref = stack(direct.solution);
  bool ok = direct.max_kappa() <= 100.0;
  std::string detail = "kappa " + num(direct.max_kappa());
  for (double eps : {1e-4, 1e-6}) {
    PipelineOptions o = base;
    o.solver = SolverKind::QsvtIdeal;
    o.qsvt.epsilon = eps;
    const auto q = run_pipeline(pp.reduced, pp.alpha0, seg, o);
    const double rel = (stack(q.solution) - ref).norm() / ref.norm();
    ok = ok && rel <= 5 * eps;
    detail += ", eps " + num(eps) + ": rel err " + num(rel);
  }
  return {ok, detail};
}

// --- 7 ---------------------------------------------------------------------
Outcome degree_scaling() {
  const double eps = 1e-6;
  std::vector<double> kappas{2, 4, 8, 16}, d;
  for (double k : kappas) d.push_back(build_inverse_polynomial(k, eps).degree);
  double log_c = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) log_c += std::log(d[i] / (kappas[i] * std::log(kappas[i] / eps)));
  const double c = std::exp(log_c / d.size());
  bool ok = true;
  double worst = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i > 0) ok = ok && d[i] > d[i - 1];
    const double ratio = d[i] / (c * kappas[i] * std::log(kappas[i] / eps));
    worst = std::max(worst, std::max(ratio, 1 / ratio));
  }
  ok = ok && worst <= 3.0;
  std::string list;
  for (std::size_t i = 0; i < d.size(); ++i) list += (i ? " " : "") + std::to_string(static_cast<int>(d[i]));
  return {ok, "d = " + list + ", c = " + num(c) + ", worst factor " + num(worst)};
}

// --- 8 ---------------------------------------------------------------------
Outcome adaptive() {
  const double T = 20.0;
  const MatrixFn A = [T](double t) {
    const double g = 0.05 + 2.0 * std::exp(-(t - T / 2) * (t - T / 2) / 2.0);
    MatrixXc m(2, 2);
    m << 0, cplx(0, -g), cplx(0, -g), 0;
    return m;
  };
  const int n_adaptive = minimal_adaptive_segments(T, A);
  const Segmentation ad = segment_adaptive(T, A, n_adaptive);
  const Segmentation un = segment_uniform(T, A, default_sample_count(T));
  double spread = 0.0, largest = 0.0;
  for (double a : ad.segment_integrals) {
    largest = std::max(largest, a);
    for (double b : ad.segment_integrals) spread = std::max(spread, std::abs(a - b) / std::max(a, b));
  }
  const bool ok = spread <= 1e-8 && largest <= 1.0 && ad.count() <= un.count();
  return {ok, "adaptive N_tau " + std::to_string(ad.count()) + " vs uniform " + std::to_string(un.count()) +
                  ", integral spread " + num(spread) + ", max integral " + num(largest)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{{1, 1.0, resources},   {2, 30, convergence},     {3, 30, equivalence},
                                        {4, 30, oracle},       {5, 300, qsvt},           {6, 120, ideal_qsvt},
                                        {7, 60, degree_scaling}, {8, 10, adaptive}};
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = out.pass && secs <= c.budget_s;
    failures += !pass;
    std::printf("%s criterion %d: %s (%.2f s, budget %g s)\n", pass ? "PASS" : "FAIL", c.id, out.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
