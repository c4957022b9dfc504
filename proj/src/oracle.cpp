#include "chronospec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace chronospec {
namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI controller constants.
constexpr double kSafety = 0.9, kBeta = 0.04, kExpo = 0.2 - kBeta * 0.75;
constexpr double kMinShrink = 0.2, kMaxGrow = 10.0;

double error_norm(const VectorXc& err, const VectorXc& y0, const VectorXc& y1, double rtol, double atol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = std::abs(err(i)) / sk;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, err.size())));
}

double initial_step(const OdeRhs& f, double t0, const VectorXc& y0, const VectorXc& f0, double span, double rtol,
                    double atol, long& evals) {
  auto scaled = [&](const VectorXc& v) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = std::abs(v(i)) / (atol + rtol * std::abs(y0(i)));
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, v.size())));
  };
  const double dn0 = scaled(y0), dn1 = scaled(f0);
  double h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
  h = std::min(h, span);
  VectorXc y1 = y0 + h * f0;
  VectorXc f1(y0.size());
  f(t0 + h, y1, f1);
  ++evals;
  const double dn2 = scaled(f1 - f0) / h;
  const double m = std::max(dn1, dn2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / m, 0.2);
  return std::min({100.0 * h, h1, span});
}

}  // namespace

nlohmann::json IntegratorStats::to_json() const {
  return {{"method", "Dormand-Prince 5(4), PI control"},
          {"steps", steps},
          {"rejected", rejected},
          {"evaluations", evaluations},
          {"rtol", rtol},
          {"atol", atol}};
}

std::vector<double> uniform_samples(double horizon, int count) {
  if (count < 2) throw DomainError("uniform_samples: need at least 2 samples");
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) t[static_cast<std::size_t>(s)] = horizon * s / (count - 1);
  t.back() = horizon;
  return t;
}

Trajectory integrate_dopri5(const OdeRhs& f, const VectorXc& y0, double t0, double t1,
                            const std::vector<double>& samples, const IntegratorOptions& options) {
  if (!(options.rtol > 0.0 && options.atol > 0.0)) throw DomainError("integrate: tolerances must be positive");
  if (!(t1 > t0)) throw DomainError("integrate: end time must exceed start time");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] < t0 || samples[i] > t1) throw DomainError("integrate: sample time outside the interval");
    if (i > 0 && !(samples[i] > samples[i - 1])) throw DomainError("integrate: sample times must increase");
  }

  Trajectory traj;
  traj.stats.rtol = options.rtol;
  traj.stats.atol = options.atol;
  std::size_t next = 0;
  while (next < samples.size() && samples[next] == t0) {
    traj.times.push_back(t0);
    traj.states.push_back(y0);
    ++next;
  }

  const Eigen::Index n = y0.size();
  VectorXc y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
  f(t0, y, k1);
  long& evals = traj.stats.evaluations;
  ++evals;
  double t = t0;
  double h = initial_step(f, t0, y0, k1, t1 - t0, options.rtol, options.atol, evals);
  double err_old = 1e-4;
  bool last_rejected = false;

  while (t < t1) {
    if (traj.stats.steps + traj.stats.rejected >= options.max_steps)
      throw NumericalError("integrate: step budget exhausted at t=" + std::to_string(t));
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw NumericalError("integrate: step size underflow at t=" + std::to_string(t) + " (problem may be stiff)");
    const bool final_step = t + h >= t1;
    if (final_step) h = t1 - t;

    ytmp = y + h * a21 * k1;
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double t_new = final_step ? t1 : t + h;
    f(t_new, ytmp, k6);
    ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(t_new, ynew, k7);
    evals += 6;

    const VectorXc err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(err_vec, y, ynew, options.rtol, options.atol);
    if (!std::isfinite(err)) throw NumericalError("integrate: non-finite state at t=" + std::to_string(t));
    const double fac11 = std::pow(err, kExpo);

    if (err <= 1.0) {
      // Dense output on [t, t_new] for any samples inside.
      if (next < samples.size() && samples[next] <= t_new) {
        const VectorXc ydiff = ynew - y;
        const VectorXc bspl = h * k1 - ydiff;
        const VectorXc r4 = ydiff - h * k7 - bspl;
        const VectorXc r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        while (next < samples.size() && samples[next] <= t_new) {
          const double th = (samples[next] - t) / h, th1 = 1.0 - th;
          traj.times.push_back(samples[next]);
          if (samples[next] == t_new) traj.states.push_back(ynew);
          else traj.states.push_back(y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
          ++next;
        }
      }
      ++traj.stats.steps;
      y = ynew;
      k1 = k7;
      t = t_new;
      double fac = fac11 / std::pow(err_old, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxGrow, 1.0 / kMinShrink);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      err_old = std::max(err, 1e-4);
      last_rejected = false;
      h = h_new;
    } else {
      ++traj.stats.rejected;
      h /= std::min(1.0 / kMinShrink, fac11 / kSafety);
      last_rejected = true;
    }
  }
  return traj;
}

Trajectory integrate_reduced_ode(const MatrixFn& A, const VectorXc& alpha0, double horizon,
                                 const std::vector<double>& samples, const IntegratorOptions& options) {
  const OdeRhs f = [&](double t, const VectorXc& y, VectorXc& dy) { dy.noalias() = A(std::min(t, horizon)) * y; };
  return integrate_dopri5(f, alpha0, 0.0, horizon, samples, options);
}

Trajectory propagate_full_hilbert(const LcuHamiltonian& h, const VectorXc& psi0, const std::vector<double>& samples,
                                  const IntegratorOptions& options, int qubit_cap) {
  if (h.n_qubits() > qubit_cap)
    throw DomainError("propagate_full_hilbert: " + std::to_string(h.n_qubits()) + " qubits exceed the cap " +
                      std::to_string(qubit_cap));
  if (psi0.size() != (Eigen::Index{1} << h.n_qubits()))
    throw DomainError("propagate_full_hilbert: initial state has wrong dimension");
  const double T = h.horizon();
  const OdeRhs f = [&](double t, const VectorXc& y, VectorXc& dy) {
    dy = -kI * apply_hamiltonian(h, std::min(t, T), y);
  };
  return integrate_dopri5(f, psi0, 0.0, T, samples, options);
}

void write_trajectory_csv(std::ostream& os, const std::vector<double>& times, const std::vector<VectorXc>& states) {
  if (times.size() != states.size()) throw DomainError("write_trajectory_csv: length mismatch");
  const Eigen::Index dim = states.empty() ? 0 : states.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < dim; ++i) os << ",re_" << i << ",im_" << i;
  os << ",norm\r\n";
  const auto old = os.precision(17);
  for (std::size_t s = 0; s < times.size(); ++s) {
    os << times[s];
    for (Eigen::Index i = 0; i < dim; ++i) os << ',' << states[s](i).real() << ',' << states[s](i).imag();
    os << ',' << states[s].norm() << "\r\n";
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------

void ObservableSpec::validate() const {
  if (targets.empty()) throw DomainError("observable '" + label + "': no targets");
  for (std::size_t a = 0; a < targets.size(); ++a)
    for (std::size_t b = a; b < targets.size(); ++b) {
      if (targets[a].size() != targets[b].size()) throw DomainError("observable '" + label + "': dimension mismatch");
      const cplx ip = targets[a].dot(targets[b]);
      const double expect = a == b ? 1.0 : 0.0;
      if (std::abs(ip - expect) > 1e-10)
        throw DomainError("observable '" + label + "': targets are not orthonormal");
    }
}

nlohmann::json ObservableSpec::to_json() const {
  return {{"label", label}, {"targets", targets.size()}};
}

ObservableSpec basis_observable(int n_qubits, const std::vector<std::uint64_t>& indices, std::string label) {
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  ObservableSpec obs;
  obs.label = std::move(label);
  for (auto b : indices) {
    if (b >= static_cast<std::uint64_t>(dim)) throw DomainError("basis_observable: index out of range");
    VectorXc v = VectorXc::Zero(dim);
    v(static_cast<Eigen::Index>(b)) = 1.0;
    obs.targets.push_back(std::move(v));
  }
  obs.validate();
  return obs;
}

double projection_probability(const VectorXc& psi, const ObservableSpec& obs) {
  const double nrm = psi.norm();
  if (std::abs(nrm - 1.0) > 1e-6)
    throw DomainError("projection_probability: state norm " + std::to_string(nrm) + " is not 1");
  double p = 0.0;
  for (const auto& t : obs.targets) {
    if (t.size() != psi.size()) throw DomainError("projection_probability: dimension mismatch");
    p += std::norm(t.dot(psi));
  }
  return std::clamp(p, 0.0, 1.0);
}

double fidelity(const VectorXc& a, const VectorXc& b) {
  if (a.size() != b.size()) throw DomainError("fidelity: dimension mismatch");
  return std::norm(a.dot(b));
}

nlohmann::json ErrorMetrics::summary_json() const {
  return {{"delta_p", delta_p},
          {"delta_p_kind", delta_p_relative ? "relative" : "absolute"},
          {"p_final", probability.empty() ? 0.0 : probability.back()},
          {"p_exact_final", probability_exact.empty() ? 0.0 : probability_exact.back()},
          {"min_fidelity", min_fidelity},
          {"max_norm_drift", max_norm_drift},
          {"samples", times.size()}};
}

ErrorMetrics error_metrics(const std::vector<VectorXc>& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift) {
  if (approx.size() != ref.size() || ref.size() == 0)
    throw DomainError("error_metrics: approximation and reference sample counts differ");
  ErrorMetrics m;
  m.times = ref.times;
  for (std::size_t s = 0; s < ref.size(); ++s) {
    const VectorXc a = lift ? lift(approx[s]) : approx[s];
    const double na = approx[s].norm();
    m.norm.push_back(na);
    m.max_norm_drift = std::max(m.max_norm_drift, std::abs(na - 1.0));
    const VectorXc& r = ref.states[s];
    const double an = a.norm(), rn = r.norm();
    if (!(an > 0.0) || !(rn > 0.0)) throw NumericalError("error_metrics: zero state at t=" + std::to_string(m.times[s]));
    const VectorXc au = a / an, ru = r / rn;
    m.fidelity.push_back(fidelity(ru, au));
    m.min_fidelity = std::min(m.min_fidelity, m.fidelity.back());
    m.probability.push_back(projection_probability(au, obs));
    m.probability_exact.push_back(projection_probability(ru, obs));
  }
  const double pe = m.probability_exact.back(), pa = m.probability.back();
  m.delta_p_relative = pe > 0.0;
  m.delta_p = m.delta_p_relative ? std::abs(pa - pe) / pe : std::abs(pa - pe);
  return m;
}

ErrorMetrics error_metrics(const Trajectory& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift) {
  if (approx.times != ref.times) throw DomainError("error_metrics: trajectories use different sample times");
  return error_metrics(approx.states, ref, obs, lift);
}

ErrorMetrics error_metrics(const SpectralSolution& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift) {
  std::vector<VectorXc> states;
  states.reserve(ref.size());
  for (double t : ref.times) states.push_back(approx.evaluate(t));
  return error_metrics(states, ref, obs, lift);
}

}  // namespace chronospec
