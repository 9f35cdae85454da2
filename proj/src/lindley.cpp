#include "learnq/lindley.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace learnq::lindley {

std::vector<double> waiting_times(const std::vector<double>& tau, const std::vector<double>& a) {
  if (tau.size() != a.size()) throw std::invalid_argument("waiting_times: tau and a differ in length");
  std::vector<double> w(tau.size() + 1, 0.0);
  for (std::size_t t = 0; t < tau.size(); ++t) w[t + 1] = lindley_step(w[t], tau[t], a[t]);
  return w;
}

WaitTrace make_wait_trace(std::vector<double> a, std::vector<double> tau_pi, double tau_star) {
  if (!(tau_star > 0.0)) throw std::invalid_argument("make_wait_trace: tau_star must be positive");
  if (a.size() != tau_pi.size()) throw std::invalid_argument("make_wait_trace: length mismatch");
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!(a[t] > 0.0)) throw std::invalid_argument("make_wait_trace: inter-arrival times must be positive");
    if (!(tau_pi[t] >= tau_star)) throw std::invalid_argument("make_wait_trace: service faster than tau_star");
  }
  WaitTrace tr;
  tr.tau_star = tau_star;
  tr.w_pi = waiting_times(tau_pi, a);
  tr.w_star = waiting_times(std::vector<double>(a.size(), tau_star), a);
  tr.a = std::move(a);
  tr.tau_pi = std::move(tau_pi);
  tr.mode.assign(tr.a.size(), 0);
  tr.label.assign(tr.a.size(), 0);
  return tr;
}

double service_regret(const WaitTrace& trace, long T) {
  if (T < 0 || T > trace.customers()) throw std::out_of_range("service_regret: T exceeds the trace");
  double total = 0.0;
  for (long t = 0; t < T; ++t) total += trace.tau_pi[static_cast<std::size_t>(t)] - trace.tau_star;
  return total;
}

GapCheck waiting_gap_check(const WaitTrace& trace) {
  const auto n = static_cast<std::size_t>(trace.customers());
  // prefix[k] = Rg(k) over customers 0..k-1.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + (trace.tau_pi[t] - trace.tau_star);

  GapCheck g;
  g.gap.resize(n);
  g.regret_window.resize(n);
  g.literal.resize(n);
  g.t0.resize(n);
  g.holds.resize(n);
  long t0 = 0;
  // Accumulated from t0 forward rather than as a prefix difference, so the
  // comparison is free of cancellation error.
  double window = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (trace.w_pi[t] == 0.0) {
      t0 = static_cast<long>(t);
      window = 0.0;
    }
    window += trace.tau_pi[t] - trace.tau_star;
    g.t0[t] = t0;
    g.gap[t] = trace.w_pi[t + 1] - trace.w_star[t + 1];
    g.regret_window[t] = window;
    g.literal[t] = prefix[t] - prefix[t - static_cast<std::size_t>(t0)];
    g.holds[t] = g.gap[t] <= window;
    if (!g.holds[t]) ++g.violations;
    if (g.gap[t] > g.literal[t]) ++g.literal_violations;
  }
  return g;
}

double hinge_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) {
  return std::max(1.0 - y * w.dot(x), 0.0);
}

int classify(const Eigen::VectorXd& w, const Eigen::VectorXd& x) { return w.dot(x) >= 0.0 ? 1 : -1; }

PerceptronState PerceptronState::zero(Eigen::Index dim, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("perceptron: alpha must be positive");
  return PerceptronState{Eigen::VectorXd::Zero(dim), alpha, 0, 0};
}

PerceptronState perceptron_update(const PerceptronState& s, const Eigen::VectorXd& x, int y, UpdateRule rule) {
  if (x.size() != s.w.size()) throw std::invalid_argument("perceptron_update: dimension mismatch");
  if (y != 1 && y != -1) throw std::invalid_argument("perceptron_update: label must be +1 or -1");
  PerceptronState next = s;
  const bool mistake = classify(s.w, x) != y;
  if (mistake) ++next.mistakes;
  const bool update = rule == UpdateRule::Hinge ? y * s.w.dot(x) < 1.0 : mistake;
  if (update) {
    next.w += (s.alpha * y) * x;
    ++next.margin_updates;
  }
  return next;
}

Eigen::VectorXd draw_truth(const SeparableModel& m, Rng& rng) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(m.dim);
  do {
    for (Eigen::Index i = 0; i < m.dim; ++i) v(i) = gauss(rng);
  } while (v.norm() == 0.0);
  return v * (m.w_norm / v.norm());
}

std::vector<Sample> separable_stream(const SeparableModel& m, const Eigen::VectorXd& w_star, long n, Rng& rng) {
  if (m.dim < 1 || !(m.D > 0.0)) throw std::invalid_argument("separable_stream: need dim >= 1 and D > 0");
  if (!(w_star.norm() * m.D > 1.0)) {
    throw std::invalid_argument("separable_stream: margin 1 unreachable with ||w*|| D <= 1");
  }
  std::normal_distribution<double> gauss;
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, n)));
  Eigen::VectorXd x(m.dim);
  while (static_cast<long>(out.size()) < n) {
    for (Eigen::Index i = 0; i < m.dim; ++i) x(i) = gauss(rng);
    const double r = m.D * std::pow(uniform01(rng), 1.0 / static_cast<double>(m.dim));
    x *= r / x.norm();
    const double s = w_star.dot(x);
    if (std::abs(s) < 1.0) continue;
    out.push_back(Sample{x, s >= 0.0 ? 1 : -1});
  }
  return out;
}

MistakeReport mistake_bound_check(const std::vector<Sample>& stream, const Eigen::VectorXd& w_star, double D,
                                  double alpha, UpdateRule rule) {
  for (std::size_t t = 0; t < stream.size(); ++t) {
    if (stream[t].y * w_star.dot(stream[t].x) < 1.0) {
      throw MarginViolation("sample " + std::to_string(t) + " violates the unit margin");
    }
    if (stream[t].x.norm() > D * (1.0 + 1e-12)) {
      throw MarginViolation("sample " + std::to_string(t) + " exceeds the context bound");
    }
  }
  PerceptronState s = PerceptronState::zero(w_star.size(), alpha);
  MistakeReport rep;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const long before = s.mistakes;
    s = perceptron_update(s, stream[t].x, stream[t].y, rule);
    if (s.mistakes > before) rep.mistake_rounds.push_back(static_cast<long>(t));
  }
  rep.mistakes = s.mistakes;
  rep.bound = D * D * w_star.squaredNorm();
  rep.w = s.w;
  return rep;
}

Eigen::VectorXd hinge_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y) {
  if (y * w.dot(x) < 1.0) return -static_cast<double>(y) * x;
  return Eigen::VectorXd::Zero(x.size());
}

std::vector<Eigen::VectorXd> hinge_trajectory(const std::vector<Sample>& stream, const StepSchedule& alpha,
                                              const Eigen::VectorXd& w1) {
  std::vector<Eigen::VectorXd> traj;
  traj.reserve(stream.size() + 1);
  traj.push_back(w1);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const double a = alpha(static_cast<long>(t + 1));
    if (!(a > 0.0)) throw std::invalid_argument("hinge_trajectory: step sizes must be positive");
    traj.push_back(traj.back() - a * hinge_gradient(traj.back(), stream[t].x, stream[t].y));
  }
  return traj;
}

OcoBound oco_bound_check(const std::vector<Sample>& stream, const std::vector<Eigen::VectorXd>& trajectory,
                         const StepSchedule& alpha, const Eigen::VectorXd& w) {
  if (trajectory.size() < stream.size()) throw std::invalid_argument("oco_bound_check: trajectory too short");
  if (stream.empty()) return {};
  OcoBound b;
  const double a1 = alpha(1);
  b.rhs_displayed = (trajectory[0] - w).norm() / a1;
  b.rhs_telescoped = (trajectory[0] - w).squaredNorm() / (2.0 * a1);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const long t = static_cast<long>(i + 1);
    const auto& wt = trajectory[i];
    const Sample& s = stream[i];
    const double at = alpha(t);
    const double dist2 = (wt - w).squaredNorm();
    const double g2 = hinge_gradient(wt, s.x, s.y).squaredNorm();
    b.lhs += hinge_loss(wt, s.x, s.y) - hinge_loss(w, s.x, s.y);
    b.rhs_displayed += dist2 / 2.0 * (1.0 / at - 1.0 / alpha(t + 1)) + at / 2.0 * g2;
    if (t >= 2) b.rhs_telescoped += dist2 * (1.0 / (2.0 * at) - 1.0 / (2.0 * alpha(t - 1)));
    b.rhs_telescoped += at / 2.0 * g2;
  }
  return b;
}

void assess_queue_run(QueueRun& run, double D, double w_norm, double tau_zero) {
  const WaitTrace& tr = run.trace;
  const long n = tr.customers();
  run.gap = waiting_gap_check(tr);
  run.literal_bound = D * D * w_norm * w_norm;
  run.gap_bound = run.literal_bound * (tau_zero - tr.tau_star);
  run.max_gap = 0.0;
  for (const double g : run.gap.gap) run.max_gap = std::max(run.max_gap, g);
  run.gap_within_bound = run.max_gap <= run.gap_bound;
  run.gap_within_literal = run.max_gap <= run.literal_bound;

  // The last mistake perturbs W_{m+1}; coupling starts at the next empty epoch.
  long t_prime = 0;
  if (!run.learner.mistake_rounds.empty()) {
    t_prime = run.learner.mistake_rounds.back() + 1;
    while (t_prime <= n && tr.w_pi[static_cast<std::size_t>(t_prime)] != 0.0) ++t_prime;
  }
  run.t_prime = t_prime;
  run.coupled_after_t_prime = true;
  for (long t = t_prime; t <= n; ++t) {
    if (tr.w_pi[static_cast<std::size_t>(t)] != tr.w_star[static_cast<std::size_t>(t)]) {
      run.coupled_after_t_prime = false;
      break;
    }
  }
}

QueueRun run_queue_with_perceptron(const SeparableModel& m, const std::vector<Sample>& stream,
                                   const Eigen::VectorXd& w_star, double arrival_rate, std::uint64_t seed,
                                   double alpha, UpdateRule rule) {
  if (!(m.tau_zero > m.tau_star && m.tau_star > 0.0)) {
    throw std::invalid_argument("service times must satisfy tau0 > tau* > 0");
  }
  if (!(arrival_rate > 0.0)) throw std::invalid_argument("arrival rate must be positive");
  QueueRun run;
  run.learner = mistake_bound_check(stream, w_star, m.D, alpha, rule);

  Rng rng(derive_seed(seed, 0));
  std::vector<double> a(stream.size()), tau(stream.size());
  std::vector<int> mode(stream.size()), label(stream.size());
  PerceptronState s = PerceptronState::zero(w_star.size(), alpha);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    mode[t] = classify(s.w, stream[t].x);
    label[t] = stream[t].y;
    tau[t] = mode[t] == label[t] ? m.tau_star : m.tau_zero;
    s = perceptron_update(s, stream[t].x, stream[t].y, rule);
    double gap;
    do {
      gap = exponential(rng, arrival_rate);
    } while (!(gap > 0.0));
    a[t] = gap;
  }
  run.trace = make_wait_trace(std::move(a), std::move(tau), m.tau_star);
  run.trace.mode = std::move(mode);
  run.trace.label = std::move(label);
  assess_queue_run(run, m.D, w_star.norm(), m.tau_zero);
  return run;
}

}  // namespace learnq::lindley
