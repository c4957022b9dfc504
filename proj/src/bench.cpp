#include "chronospec/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "chronospec/io.hpp"

namespace chronospec {
namespace {

using json = nlohmann::json;

ParseError field_error(const std::string& path, const std::string& msg) { return ParseError(path + ": " + msg); }

std::uint64_t parse_basis_index(const json& v, int n_qubits, const std::string& path) {
  std::uint64_t idx = 0;
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
    idx = v.get<std::uint64_t>();
  } else if (v.is_string()) {
    // Bitstring, leftmost character = highest qubit.
    const auto s = v.get<std::string>();
    if (static_cast<int>(s.size()) != n_qubits) throw field_error(path, "bitstring length must equal n_qubits");
    for (char c : s) {
      if (c != '0' && c != '1') throw field_error(path, "bitstring may contain only 0 and 1");
      idx = (idx << 1) | static_cast<std::uint64_t>(c - '0');
    }
  } else {
    throw field_error(path, "expected a non-negative integer or bitstring");
  }
  if (idx >= (std::uint64_t{1} << n_qubits)) throw field_error(path, "basis index out of range");
  return idx;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, r.ptr);
}

Table trajectory_table(const std::string& name, const std::vector<double>& times,
                       const std::vector<VectorXc>& states) {
  Table t;
  t.name = name;
  t.columns.push_back("t");
  const Eigen::Index dim = states.empty() ? 0 : states.front().size();
  for (Eigen::Index i = 0; i < dim; ++i) {
    t.columns.push_back("re_" + std::to_string(i));
    t.columns.push_back("im_" + std::to_string(i));
  }
  t.columns.push_back("norm");
  for (std::size_t s = 0; s < times.size(); ++s) {
    std::vector<double> row{times[s]};
    for (Eigen::Index i = 0; i < dim; ++i) {
      row.push_back(states[s](i).real());
      row.push_back(states[s](i).imag());
    }
    row.push_back(states[s].norm());
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<VectorXc> sample_solution(const SpectralSolution& sol, const std::vector<double>& times) {
  std::vector<VectorXc> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(sol.evaluate(t));
  return out;
}

json diagnostics_json(const PipelineResult& r) {
  json solves = json::array();
  double pmin = 1.0;
  for (const auto& s : r.solves) {
    solves.push_back({{"interval", s.interval},
                      {"dimension", s.dimension},
                      {"kappa", s.kappa},
                      {"residual", s.residual},
                      {"success_probability", s.success_probability},
                      {"index_probability", s.index_probability},
                      {"qsvt_degree", s.qsvt_degree}});
    pmin = std::min(pmin, s.success_probability);
  }
  json d{{"solves", solves},
         {"solve_count", r.solves.size()},
         {"max_kappa", r.max_kappa()},
         {"max_residual", r.max_residual()},
         {"min_success_probability", pmin}};
  if (!r.solution.endpoint_norms.empty()) d["endpoint_norms"] = r.solution.endpoint_norms;
  const int qd = r.solves.empty() ? 0 : r.solves.front().qsvt_degree;
  if (qd > 0) d["circuit_depth_layers"] = circuit_depth_layers(qd);
  return d;
}

json problem_json(const Problem& p, const PreparedProblem& pp) {
  json basis = pp.basis.to_json();
  json phases = json::array();
  for (const auto& z : pp.basis.phases) phases.push_back({z.real(), z.imag()});
  basis["phases"] = phases;
  return {{"name", p.name},
          {"hash", p.hash()},
          {"n_qubits", p.hamiltonian.n_qubits()},
          {"n_terms", p.hamiltonian.size()},
          {"horizon", p.hamiltonian.horizon()},
          {"reference", p.reference},
          {"K", p.K},
          {"n_alpha", pp.basis.size()},
          {"overlap_rank", pp.reduced.overlap_rank},
          {"basis", basis},
          {"observable",
           {{"label", p.observable_label},
            {"basis_states", p.observable_indices},
            {"alpha_components", pp.observable_components}}}};
}

struct Resolved {
  PipelineOptions pipeline;
  int samples;
};

Resolved resolve(const Problem& p, const ExperimentOptions& o) {
  Resolved r;
  r.pipeline.mode = o.mode;
  r.pipeline.solver = o.solver;
  r.pipeline.degree = o.degree.value_or(p.defaults.degree);
  r.pipeline.segmentation.mode = o.segmentation.value_or(p.defaults.segmentation);
  r.pipeline.segmentation.n_tau = o.n_tau.value_or(p.defaults.n_tau);
  r.pipeline.qsvt.epsilon = o.epsilon.value_or(p.defaults.epsilon);
  r.pipeline.renormalize = o.renormalize;
  if (r.pipeline.degree < 1) throw DomainError("degree must be >= 1");
  if (o.samples < 2) throw DomainError("samples must be >= 2");
  r.samples = o.samples;
  return r;
}

json options_json(const PipelineOptions& po, int samples) {
  return {{"mode", to_string(po.mode)},
          {"solver", to_string(po.solver)},
          {"degree", po.degree},
          {"segmentation", to_string(po.segmentation.mode)},
          {"n_tau_requested", po.segmentation.n_tau},
          {"epsilon", po.qsvt.epsilon},
          {"renormalize", po.renormalize},
          {"samples", samples}};
}

json tool_json() {
  return {{"name", "chronospec"}, {"version", kToolVersion}};
}

// ---------------------------------------------------------------------------

Report run_simulate(const Problem& p, const ExperimentOptions& o) {
  const PreparedProblem pp = prepare_problem(p);
  const Resolved r = resolve(p, o);
  const double T = p.hamiltonian.horizon();
  const Segmentation seg = make_segmentation(pp.A, T, r.pipeline.segmentation);
  const std::vector<double> times = uniform_samples(T, r.samples);

  PipelineResult result;
  Trajectory oracle, full;
  const bool with_full = p.hamiltonian.n_qubits() <= LcuHamiltonian::kDefaultDenseQubitCap;
  parallel_for(with_full ? 3 : 2, [&](std::size_t job) {
    if (job == 0) result = run_pipeline(pp.reduced, pp.alpha0, seg, r.pipeline);
    if (job == 1) oracle = integrate_reduced_ode(pp.A, pp.alpha0, T, times);
    if (job == 2) full = propagate_full_hilbert(p.hamiltonian, pp.basis.reference_state, times);
  }, o.threads);

  const std::vector<VectorXc> states = sample_solution(result.solution, times);
  const ErrorMetrics m = error_metrics(states, oracle, pp.reduced_observable);

  Report rep;
  rep.experiment = Experiment::Simulate;
  rep.tables.push_back(trajectory_table("trajectory", times, states));
  rep.tables.push_back(trajectory_table("oracle_reduced", times, oracle.states));
  json metrics = m.summary_json();
  metrics["reference"] = "reduced ODE oracle";
  if (with_full) {
    rep.tables.push_back(trajectory_table("oracle_full", times, full.states));
    const auto lift = [&](const VectorXc& a) { return reconstruct_state(pp.basis, a); };
    const ErrorMetrics mf = error_metrics(states, full, p.observable(), lift);
    metrics["full_space"] = mf.summary_json();
  }

  Plot prob{"probability", "Observable probability", "t", "P(t)", false, {}};
  prob.series.push_back({"spectral", times, m.probability});
  prob.series.push_back({"oracle", times, m.probability_exact});
  Plot fid{"fidelity", "Infidelity against the oracle", "t", "1 - F(t)", true, {}};
  std::vector<double> infid;
  for (double f : m.fidelity) infid.push_back(std::max(1.0 - f, 1e-17));
  fid.series.push_back({"spectral", times, infid});
  rep.plots = {prob, fid};

  const int na = static_cast<int>(pp.basis.size());
  const ResourceEstimate res = estimate_resources(seg.count(), na, r.pipeline.degree, r.pipeline.mode);
  rep.summary = {{"tool", tool_json()},
                 {"experiment", "simulate"},
                 {"problem", problem_json(p, pp)},
                 {"options", options_json(r.pipeline, r.samples)},
                 {"segmentation", seg.to_json()},
                 {"diagnostics", diagnostics_json(result)},
                 {"metrics", metrics},
                 {"oracle", {{"reduced", oracle.stats.to_json()}}},
                 {"resources", {{"dimension", res.dimension}, {"qubits", res.qubits}, {"invocations", res.invocations}}}};
  if (with_full) rep.summary["oracle"]["full"] = full.stats.to_json();
  return rep;
}

Report run_converge(const Problem& p, const ExperimentOptions& o) {
  if (o.degrees.empty()) throw DomainError("converge: empty degree list");
  const PreparedProblem pp = prepare_problem(p);
  const Resolved r = resolve(p, o);
  const double T = p.hamiltonian.horizon();
  const Segmentation seg = make_segmentation(pp.A, T, r.pipeline.segmentation);
  const std::vector<double> times = uniform_samples(T, r.samples);
  const Trajectory oracle = integrate_reduced_ode(pp.A, pp.alpha0, T, times);

  struct Cell {
    PipelineResult result;
    std::vector<VectorXc> states;
    ErrorMetrics metrics;
  };
  std::vector<Cell> cells(o.degrees.size());
  parallel_for(cells.size(), [&](std::size_t i) {
    PipelineOptions po = r.pipeline;
    po.degree = o.degrees[i];
    cells[i].result = run_pipeline(pp.reduced, pp.alpha0, seg, po);
    cells[i].states = sample_solution(cells[i].result.solution, times);
    cells[i].metrics = error_metrics(cells[i].states, oracle, pp.reduced_observable);
  }, o.threads);

  Report rep;
  rep.experiment = Experiment::Converge;
  Table conv{"convergence", {"n", "delta_p", "p_final", "p_exact_final", "min_fidelity", "max_norm_drift", "max_kappa",
                             "max_residual", "dimension"}, {}};
  Series dp{"delta P", {}, {}}, drift{"norm drift", {}, {}};
  json rows = json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const double n = o.degrees[i];
    conv.rows.push_back({n, c.metrics.delta_p, c.metrics.probability.back(), c.metrics.probability_exact.back(),
                         c.metrics.min_fidelity, c.metrics.max_norm_drift, c.result.max_kappa(),
                         c.result.max_residual(), static_cast<double>(c.result.solves.front().dimension)});
    dp.x.push_back(n);
    dp.y.push_back(std::max(c.metrics.delta_p, 1e-17));
    drift.x.push_back(n);
    drift.y.push_back(std::max(c.metrics.max_norm_drift, 1e-17));
    json row = c.metrics.summary_json();
    row["n"] = o.degrees[i];
    row["max_kappa"] = c.result.max_kappa();
    row["max_residual"] = c.result.max_residual();
    row["trajectory_table"] = "trajectory_n" + std::to_string(o.degrees[i]);
    rows.push_back(row);
    rep.tables.push_back(trajectory_table("trajectory_n" + std::to_string(o.degrees[i]), times, c.states));
  }
  rep.tables.insert(rep.tables.begin(), conv);
  rep.tables.push_back(trajectory_table("oracle_reduced", times, oracle.states));
  rep.plots.push_back({"convergence", "Spectral convergence", "n", "error", true, {dp, drift}});

  json opts = options_json(r.pipeline, r.samples);
  opts.erase("degree");
  opts["degrees"] = o.degrees;
  rep.summary = {{"tool", tool_json()},
                 {"experiment", "converge"},
                 {"problem", problem_json(p, pp)},
                 {"options", opts},
                 {"segmentation", seg.to_json()},
                 {"oracle", {{"reduced", oracle.stats.to_json()}}},
                 {"rows", rows}};
  return rep;
}

Report run_compare(const Problem& p, const ExperimentOptions& o) {
  const PreparedProblem pp = prepare_problem(p);
  const Resolved r = resolve(p, o);
  const double T = p.hamiltonian.horizon();
  const Segmentation seg = make_segmentation(pp.A, T, r.pipeline.segmentation);
  const std::vector<double> times = uniform_samples(T, r.samples);

  PipelineResult global, seq;
  parallel_for(2, [&](std::size_t job) {
    PipelineOptions po = r.pipeline;
    po.mode = job == 0 ? PipelineMode::Global : PipelineMode::Sequential;
    (job == 0 ? global : seq) = run_pipeline(pp.reduced, pp.alpha0, seg, po);
  }, o.threads);

  Report rep;
  rep.experiment = Experiment::Compare;
  Table ends{"endpoints",
             {"h", "t_end", "discrepancy", "raw_discrepancy", "global_norm", "sequential_norm_before_renormalization"},
             {}};
  Series disc{"normalized discrepancy", {}, {}};
  double max_disc = 0.0, max_raw = 0.0, max_seq_norm_dev = 0.0, cumulative = 1.0;
  for (int h = 0; h < seg.count(); ++h) {
    const VectorXc& g = global.solution.endpoints[static_cast<std::size_t>(h)];
    const VectorXc& s = seq.solution.endpoints[static_cast<std::size_t>(h)];
    cumulative *= seq.solution.endpoint_norms[static_cast<std::size_t>(h)];
    const double d = (g / g.norm() - s).norm();
    const double raw = (g - cumulative * s).norm();
    max_disc = std::max(max_disc, d);
    max_raw = std::max(max_raw, raw);
    max_seq_norm_dev = std::max(max_seq_norm_dev, std::abs(s.norm() - 1.0));
    ends.rows.push_back({static_cast<double>(h), seg.boundaries[static_cast<std::size_t>(h) + 1], d, raw, g.norm(),
                         seq.solution.endpoint_norms[static_cast<std::size_t>(h)]});
    disc.x.push_back(seg.boundaries[static_cast<std::size_t>(h) + 1]);
    disc.y.push_back(std::max(d, 1e-17));
  }
  double global_drift = 0.0;
  for (const auto& e : global.solution.endpoints) global_drift = std::max(global_drift, std::abs(e.norm() - 1.0));

  rep.tables.push_back(ends);
  rep.tables.push_back(trajectory_table("trajectory_global", times, sample_solution(global.solution, times)));
  rep.tables.push_back(trajectory_table("trajectory_sequential", times, sample_solution(seq.solution, times)));
  rep.plots.push_back({"endpoints", "Global vs sequential endpoints", "t", "discrepancy", true, {disc}});

  json opts = options_json(r.pipeline, r.samples);
  opts.erase("mode");
  const ResourceEstimate rg = estimate_resources(seg.count(), pp.basis.size(), r.pipeline.degree, PipelineMode::Global);
  const ResourceEstimate rs =
      estimate_resources(seg.count(), pp.basis.size(), r.pipeline.degree, PipelineMode::Sequential);
  rep.summary = {
      {"tool", tool_json()},
      {"experiment", "compare"},
      {"problem", problem_json(p, pp)},
      {"options", opts},
      {"segmentation", seg.to_json()},
      {"metrics",
       {{"max_endpoint_discrepancy", max_disc},
        {"max_raw_endpoint_discrepancy", max_raw},
        {"max_sequential_norm_deviation", max_seq_norm_dev},
        {"max_global_norm_drift", global_drift}}},
      {"diagnostics", {{"global", diagnostics_json(global)}, {"sequential", diagnostics_json(seq)}}},
      {"resources",
       {{"global", {{"dimension", rg.dimension}, {"qubits", rg.qubits}, {"invocations", rg.invocations}}},
        {"sequential", {{"dimension", rs.dimension}, {"qubits", rs.qubits}, {"invocations", rs.invocations}}}}}};
  return rep;
}

Report run_resources(const Problem& p, const ExperimentOptions& o) {
  auto cells = o.resource_cells;
  json own;
  {
    const PreparedProblem pp = prepare_problem(p);
    const Resolved r = resolve(p, o);
    const Segmentation seg = make_segmentation(pp.A, p.hamiltonian.horizon(), r.pipeline.segmentation);
    cells.push_back({seg.count(), static_cast<long long>(pp.basis.size()), r.pipeline.degree});
    own = {{"problem", p.name}, {"hash", p.hash()}, {"segmentation", seg.to_json()}};
  }
  Report rep;
  rep.experiment = Experiment::Resources;
  Table t{"resources", {"n_tau", "n_alpha", "n", "sequential", "dimension", "qubits", "invocations"}, {}};
  json rows = json::array();
  for (const auto& c : cells) {
    for (PipelineMode m : {PipelineMode::Global, PipelineMode::Sequential}) {
      const ResourceEstimate e = estimate_resources(c[0], c[1], c[2], m);
      t.rows.push_back({static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2]),
                        m == PipelineMode::Sequential ? 1.0 : 0.0, static_cast<double>(e.dimension),
                        static_cast<double>(e.qubits), static_cast<double>(e.invocations)});
      rows.push_back({{"n_tau", c[0]},
                      {"n_alpha", c[1]},
                      {"n", c[2]},
                      {"mode", to_string(m)},
                      {"dimension", e.dimension},
                      {"qubits", e.qubits},
                      {"invocations", e.invocations}});
    }
  }
  rep.tables.push_back(t);
  rep.summary = {{"tool", tool_json()},
                 {"experiment", "resources"},
                 {"rows", rows},
                 {"problem_cell", own},
                 {"qsvt_depth_formula", "4 d + 2 layers"}};
  return rep;
}

Report run_qsp_phases(const Problem& p, const ExperimentOptions& o) {
  const double eps = o.epsilon.value_or(p.defaults.epsilon);
  const InversePolynomial poly = build_inverse_polynomial(o.kappa, eps);
  const PhaseSequence phases = compute_phase_factors(poly);

  Report rep;
  rep.experiment = Experiment::QspPhases;
  Table ph{"phases", {"index", "phi"}, {}};
  for (std::size_t j = 0; j < phases.phases.size(); ++j)
    ph.rows.push_back({static_cast<double>(j + 1), phases.phases[j]});
  Table ver{"verification", {"x", "target", "re_response", "im_response"}, {}};
  Series tgt{"target P(x)", {}, {}}, resp{"Re response", {}, {}};
  const VectorXr cheb = poly.chebyshev();
  double max_err = 0.0;
  constexpr int kHeldOut = 1000;
  for (int j = 0; j < kHeldOut; ++j) {
    const double x = -1.0 + 2.0 * (j + 0.5) / kHeldOut;
    const double target = eval_expansion(cheb, x);
    const cplx r = qsp_response(phases, x);
    max_err = std::max(max_err, std::abs(r.real() - target));
    ver.rows.push_back({x, target, r.real(), r.imag()});
    tgt.x.push_back(x);
    tgt.y.push_back(target);
    resp.x.push_back(x);
    resp.y.push_back(r.real());
  }
  rep.tables = {ph, ver};
  rep.plots.push_back({"response", "QSP response vs target", "x", "P(x)", false, {tgt, resp}});
  rep.summary = {{"tool", tool_json()},
                 {"experiment", "qsp_phases"},
                 {"kappa", o.kappa},
                 {"epsilon", eps},
                 {"polynomial", poly.to_json()},
                 {"phases", phases.to_json()},
                 {"held_out_max_error", max_err},
                 {"held_out_points", kHeldOut},
                 {"circuit_depth_layers", circuit_depth_layers(phases.degree())}};
  return rep;
}

// ---------------------------------------------------------------------------
// Built-in problems
// ---------------------------------------------------------------------------

json rabi_json() {
  // H = (Delta/2) Z + Omega cos(omega t) X, Delta = 1, Omega = 0.5, omega = 1.
  return {{"name", "rabi"},
          {"n_qubits", 1},
          {"horizon", 10.0},
          {"terms",
           {{{"pauli", "Z"}, {"coeff", {{"type", "constant"}, {"value", 0.5}}}},
            {{"pauli", "X"},
             {"coeff", {{"type", "trig"}, {"amplitude", 0.5}, {"frequency", 1.0}, {"phase", 0.0}, {"function", "cos"}}}}}},
          {"reference", 0},
          {"K", 1},
          {"observable", {{"label", "excited state |1>"}, {"basis_states", {1}}}},
          {"defaults", {{"degree", 4}, {"segmentation", "uniform"}, {"n_tau", 32}, {"epsilon", 1e-6}}}};
}

json landau_zener_json() {
  // H = v (t - T/2) Z + Delta X with v = 1, Delta = 0.5 on a symmetric window of 24.
  const double T = 24.0, v = 1.0;
  return {{"name", "landau_zener"},
          {"n_qubits", 1},
          {"horizon", T},
          {"terms",
           {{{"pauli", "Z"}, {"coeff", {{"type", "polynomial"}, {"coeffs", {-v * T / 2.0, v}}}}},
            {{"pauli", "X"}, {"coeff", {{"type", "constant"}, {"value", 0.5}}}}}},
          {"reference", 0},
          {"K", 1},
          {"observable", {{"label", "diabatic state |0> retained"}, {"basis_states", {0}}}},
          {"defaults", {{"degree", 6}, {"segmentation", "uniform"}, {"n_tau", 0}, {"epsilon", 1e-6}}}};
}

json synthetic13_json() {
  // Synthetic coefficients: Gaussians and Gaussian-modulated cosines centred
  // on the middle of the window. Not physical data.
  const auto g = [](double amp, double width2) {
    return fixed(amp, 6) + "*exp(-(t-10)^2/" + fixed(width2, 6) + ")";
  };
  const auto gc = [&](double amp, double width2, double freq) {
    return g(amp, width2) + "*cos(" + fixed(freq, 6) + "*(t-10))";
  };
  const std::vector<std::pair<std::string, std::string>> terms{
      {"IIII", "-1.0+" + g(0.3, 8)},
      {"IIIX", g(0.25, 6)},
      {"IIIY", gc(0.05, 6, 0.8)},
      {"IIIZ", "-0.4+" + g(0.2, 10)},
      {"IXII", g(0.25, 6)},
      {"IYII", gc(0.05, 6, 0.8)},
      {"IZII", "-0.4+" + g(0.2, 10)},
      {"IIZX", gc(0.15, 4, 0.5)},
      {"IIZY", g(0.03, 4)},
      {"IIZZ", g(0.1, 8)},
      {"ZXZI", gc(0.15, 4, 0.5)},
      {"ZYZI", g(0.03, 4)},
      {"ZZZI", g(0.1, 8)},
  };
  json arr = json::array();
  for (const auto& [pauli, text] : terms)
    arr.push_back({{"pauli", pauli}, {"coeff", {{"type", "expression"}, {"text", text}}}});
  return {{"name", "synthetic13"},
          {"n_qubits", 4},
          {"horizon", 20.0},
          {"terms", arr},
          {"reference", "0001"},
          {"K", 2},
          {"observable", {{"label", "qubit 2 flipped (synthetic transfer channel)"}, {"basis_states", {"0101", "0100"}}}},
          {"defaults", {{"degree", 4}, {"segmentation", "uniform"}, {"n_tau", 0}, {"epsilon", 1e-6}}}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Problems
// ---------------------------------------------------------------------------

std::string Problem::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : source.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

ObservableSpec Problem::observable() const {
  return basis_observable(hamiltonian.n_qubits(), observable_indices, observable_label);
}

Problem problem_from_json(const json& j) {
  LcuHamiltonian ham = hamiltonian_from_json(j);
  const int n = ham.n_qubits();
  if (j.contains("name") && !j["name"].is_string()) throw field_error("$.name", "expected a string");
  Problem p{j.value("name", std::string("custom")), std::move(ham), 0, 1, {}, {}, {}, j};
  if (j.contains("reference")) p.reference = parse_basis_index(j["reference"], n, "$.reference");
  if (j.contains("K")) {
    if (!j["K"].is_number_integer() || j["K"].get<int>() < 0) throw field_error("$.K", "expected a non-negative integer");
    p.K = j["K"].get<int>();
  }
  if (j.contains("observable")) {
    const auto& o = j["observable"];
    if (!o.is_object()) throw field_error("$.observable", "expected an object");
    p.observable_label = o.value("label", std::string("observable"));
    if (!o.contains("basis_states") || !o["basis_states"].is_array() || o["basis_states"].empty())
      throw field_error("$.observable.basis_states", "required nonempty array");
    for (std::size_t i = 0; i < o["basis_states"].size(); ++i)
      p.observable_indices.push_back(parse_basis_index(o["basis_states"][i], n,
                                                       "$.observable.basis_states[" + std::to_string(i) + "]"));
    std::vector<std::uint64_t> sorted = p.observable_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw field_error("$.observable.basis_states", "duplicate basis state");
  } else {
    p.observable_label = "reference state";
    p.observable_indices = {p.reference};
  }
  if (j.contains("defaults")) {
    const auto& d = j["defaults"];
    if (!d.is_object()) throw field_error("$.defaults", "expected an object");
    if (d.contains("degree")) {
      if (!d["degree"].is_number_integer() || d["degree"].get<int>() < 1 || d["degree"].get<int>() > 64)
        throw field_error("$.defaults.degree", "expected an integer in [1, 64]");
      p.defaults.degree = d["degree"].get<int>();
    }
    if (d.contains("segmentation")) {
      if (!d["segmentation"].is_string()) throw field_error("$.defaults.segmentation", "expected a string");
      try {
        p.defaults.segmentation = parse_segmentation_mode(d["segmentation"].get<std::string>());
      } catch (const DomainError& e) {
        throw field_error("$.defaults.segmentation", e.what());
      }
    }
    if (d.contains("n_tau")) {
      if (!d["n_tau"].is_number_integer() || d["n_tau"].get<int>() < 0)
        throw field_error("$.defaults.n_tau", "expected a non-negative integer");
      p.defaults.n_tau = d["n_tau"].get<int>();
    }
    if (d.contains("epsilon")) {
      if (!d["epsilon"].is_number() || !(d["epsilon"].get<double>() > 0.0 && d["epsilon"].get<double>() < 1.0))
        throw field_error("$.defaults.epsilon", "expected a number in (0, 1)");
      p.defaults.epsilon = d["epsilon"].get<double>();
    }
  }
  return p;
}

std::vector<std::string> builtin_problem_names() { return {"rabi", "landau_zener", "synthetic13"}; }

json builtin_problem_json(const std::string& name) {
  if (name == "rabi") return rabi_json();
  if (name == "landau_zener") return landau_zener_json();
  if (name == "synthetic13") return synthetic13_json();
  throw DomainError("unknown built-in problem '" + name + "'");
}

Problem load_problem(const std::string& name_or_path) {
  const auto names = builtin_problem_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return problem_from_json(builtin_problem_json(name_or_path));
  std::ifstream in(name_or_path);
  if (!in) throw DomainError("cannot open problem file '" + name_or_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(name_or_path + ": malformed JSON (" + e.what() + ")");
  }
  return problem_from_json(j);
}

PreparedProblem prepare_problem(const Problem& p) {
  PreparedProblem pp;
  pp.basis = build_kmoment_basis(p.hamiltonian, p.reference, p.K);
  pp.reduced = compute_reduced_operators(pp.basis, p.hamiltonian);
  pp.alpha0 = reference_parameters(pp.basis);
  pp.A = coefficient_matrix_fn(pp.reduced);
  pp.reduced_observable.label = p.observable_label;
  const auto na = static_cast<Eigen::Index>(pp.basis.size());
  for (Eigen::Index i = 0; i < na; ++i) {
    const auto image = pp.basis.images[static_cast<std::size_t>(i)];
    if (std::find(p.observable_indices.begin(), p.observable_indices.end(), image) != p.observable_indices.end()) {
      pp.reduced_observable.targets.push_back(VectorXc::Unit(na, i));
      pp.observable_components.push_back(static_cast<int>(i));
    }
  }
  if (pp.reduced_observable.targets.empty())
    throw DomainError("observable '" + p.observable_label + "' has no overlap with the variational subspace");
  return pp;
}

// ---------------------------------------------------------------------------
// Experiments and reports
// ---------------------------------------------------------------------------

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Simulate: return "simulate";
    case Experiment::Converge: return "converge";
    case Experiment::Compare: return "compare";
    case Experiment::Resources: return "resources";
    case Experiment::QspPhases: return "qsp_phases";
  }
  return "?";
}

Experiment parse_experiment(const std::string& s) {
  if (s == "simulate") return Experiment::Simulate;
  if (s == "converge") return Experiment::Converge;
  if (s == "compare") return Experiment::Compare;
  if (s == "resources") return Experiment::Resources;
  if (s == "qsp-phases" || s == "qsp_phases") return Experiment::QspPhases;
  throw DomainError("unknown experiment '" + s + "'");
}

Report run_experiment(const Problem& problem, Experiment experiment, const ExperimentOptions& options) {
  switch (experiment) {
    case Experiment::Simulate: return run_simulate(problem, options);
    case Experiment::Converge: return run_converge(problem, options);
    case Experiment::Compare: return run_compare(problem, options);
    case Experiment::Resources: return run_resources(problem, options);
    case Experiment::QspPhases: return run_qsp_phases(problem, options);
  }
  throw DomainError("unknown experiment");
}

std::vector<ReportFormat> parse_formats(const std::string& list) {
  std::vector<ReportFormat> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") out.push_back(ReportFormat::Csv);
    else if (item == "json") out.push_back(ReportFormat::Json);
    else if (item == "svg") out.push_back(ReportFormat::Svg);
    else if (!item.empty()) throw DomainError("unknown format '" + item + "' (expected csv, json, svg)");
  }
  if (out.empty()) throw DomainError("no output format selected");
  return out;
}

void write_csv(std::ostream& os, const Table& table) {
  // RFC 4180: CRLF line ends; quote any header containing separators.
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const std::string& col = table.columns[c];
    if (c) os << ',';
    if (col.find_first_of(",\"\r\n") != std::string::npos) {
      os << '"';
      for (char ch : col) os << (ch == '"' ? "\"\"" : std::string(1, ch));
      os << '"';
    } else {
      os << col;
    }
  }
  os << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << fmt(row[c]);
    os << "\r\n";
  }
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg(std::ostream& os, const Plot& plot) {
  constexpr double W = 640, H = 400, L = 70, R = 150, Tm = 40, B = 50;
  constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  const auto ty = [&](double y) { return plot.log_y ? std::log10(std::max(y, 1e-300)) : y; };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_y && !(s.y[i] > 0.0))) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (plot.log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(plot.title)
     << "</text>\n"
     << "<rect x=\"" << L << "\" y=\"" << Tm << "\" width=\"" << W - L - R << "\" height=\"" << H - Tm - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4;
    os << "<text x=\"" << fixed(px(xv), 6) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << fixed(xv, 4) << "</text>\n";
  }
  const int ysteps = plot.log_y ? std::max(1, static_cast<int>(y1 - y0)) : 4;
  const int ystride = std::max(1, ysteps / 8);
  for (int k = 0; k <= ysteps; k += ystride) {
    const double yv = y0 + (y1 - y0) * k / ysteps;
    const std::string label = plot.log_y ? "1e" + std::to_string(static_cast<int>(std::lround(yv))) : fixed(yv, 4);
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << fixed(py(yv), 6) << "\" y2=\""
       << fixed(py(yv), 6) << "\" stroke=\"#dddddd\"/>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(yv) + 4, 6) << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << xml_escape(plot.x_label) << "</text>\n"
     << "<text x=\"16\" y=\"" << (Tm + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (Tm + H - B) / 2 << ")\">" << xml_escape(plot.y_label) << "</text>\n";

  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const auto& s = plot.series[si];
    const char* color = palette[si % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_y && !(s.y[i] > 0.0))) continue;
      os << (first ? "" : " ") << fixed(px(s.x[i]), 6) << ',' << fixed(py(ty(s.y[i])), 6);
      first = false;
    }
    os << "\"/>\n";
    const double ly = Tm + 16 + 18.0 * static_cast<double>(si);
    os << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
}

std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir,
                                               const std::vector<ReportFormat>& formats,
                                               const std::string& timestamp) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory '" + out_dir.string() + "'");
  const auto want = [&](ReportFormat f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  const std::string stem = to_string(report.experiment);

  struct Pending {
    fs::path path;
    std::string content;
  };
  std::vector<Pending> files;
  if (want(ReportFormat::Csv))
    for (const auto& t : report.tables) {
      std::ostringstream os;
      write_csv(os, t);
      files.push_back({out_dir / (stem + "_" + t.name + ".csv"), os.str()});
    }
  if (want(ReportFormat::Svg))
    for (const auto& p : report.plots) {
      std::ostringstream os;
      write_svg(os, p);
      files.push_back({out_dir / (stem + "_" + p.name + ".svg"), os.str()});
    }
  if (want(ReportFormat::Json)) {
    json summary = report.summary;
    summary["generated_at"] = timestamp;
    json names = json::array();
    for (const auto& f : files) names.push_back(f.path.filename().string());
    summary["files"] = names;
    files.push_back({out_dir / (stem + "_summary.json"), summary.dump(2) + "\n"});
  }

  std::vector<fs::path> written;
  for (const auto& f : files) {
    std::ofstream out(f.path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + f.path.string() + "'");
    out << f.content;
    if (!out) throw std::runtime_error("write failed for '" + f.path.string() + "'");
    written.push_back(f.path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

namespace {

std::optional<int> env_thread_cap() {
  const char* env = std::getenv("CHRONOSPEC_THREADS");
  if (!env) return std::nullopt;
  int cap = 0;
  const std::string_view sv(env);
  const auto r = std::from_chars(sv.data(), sv.data() + sv.size(), cap);
  if (r.ec != std::errc{} || r.ptr != sv.data() + sv.size() || cap < 1) return std::nullopt;
  return cap;
}

}  // namespace

int worker_count() {
  const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const auto cap = env_thread_cap();
  return cap ? std::min(hw, *cap) : hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task, int threads) {
  if (count == 0) return;
  int limit = worker_count();
  if (threads > 0) limit = std::min(threads, env_thread_cap().value_or(threads));
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(limit));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace chronospec
