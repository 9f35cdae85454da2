#pragma once

// Single-server queue with two service modes: Lindley recursion, the
// regret-to-waiting-time transfer, and perceptron-chosen service modes.

#include "learnq/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace learnq::lindley {

/// max{0, W + tau - a}
inline double lindley_step(double w, double tau, double a) {
  const double next = w + tau - a;
  return next > 0.0 ? next : 0.0;
}

/// W_{t+1} for every t given W_0 = 0; result has size tau.size() + 1.
std::vector<double> waiting_times(const std::vector<double>& tau, const std::vector<double>& a);

/// Customers t = 0..N-1 with inter-arrival a_t after customer t and service
/// tau_pi_t; W_pi and W_star have N + 1 entries with W_0 = 0.
struct WaitTrace {
  std::vector<double> a;
  std::vector<int> mode;     // chosen mode pi_t in {-1, +1}; 0 when not modelled
  std::vector<int> label;    // fast mode y_t; 0 when not modelled
  std::vector<double> tau_pi;
  double tau_star = 0.0;
  std::vector<double> w_pi;
  std::vector<double> w_star;

  long customers() const { return static_cast<long>(tau_pi.size()); }
};

/// Runs both recursions. Requires tau_pi_t >= tau_star > 0 and a_t > 0.
WaitTrace make_wait_trace(std::vector<double> a, std::vector<double> tau_pi, double tau_star);

/// sum_{t < T} (tau_pi_t - tau_star). Throws when T exceeds the trace.
double service_regret(const WaitTrace& trace, long T);

struct GapCheck {
  std::vector<double> gap;          // W_pi_{t+1} - W_star_{t+1}
  std::vector<double> regret_window;  // sum_{s=t0}^{t} (tau_pi_s - tau_star)
  std::vector<double> literal;      // Rg(t) - Rg(t - t0), Rg(k) over the first k customers
  std::vector<long> t0;             // last s <= t with W_pi_s = 0
  std::vector<bool> holds;          // gap <= regret_window, exact
  long violations = 0;
  long literal_violations = 0;
};

GapCheck waiting_gap_check(const WaitTrace& trace);

/// max{1 - y <w, x>, 0}
double hinge_loss(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y);

/// +1 when <w, x> >= 0, otherwise -1.
int classify(const Eigen::VectorXd& w, const Eigen::VectorXd& x);

/// Hinge updates when y <w, x> < 1 (gradient step on the hinge loss);
/// Mistake updates only when classify(w, x) != y (classical perceptron).
enum class UpdateRule { Hinge, Mistake };

struct PerceptronState {
  Eigen::VectorXd w;
  double alpha = 1.0;
  long mistakes = 0;        // rounds with classify(w, x) != y before the update
  long margin_updates = 0;  // rounds on which w changed

  static PerceptronState zero(Eigen::Index dim, double alpha = 1.0);
};

PerceptronState perceptron_update(const PerceptronState& s, const Eigen::VectorXd& x, int y,
                                  UpdateRule rule = UpdateRule::Hinge);

struct Sample {
  Eigen::VectorXd x;
  int y = 1;
};

/// Raised when a stream breaks the margin or norm assumptions.
class MarginViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SeparableModel {
  Eigen::Index dim = 2;
  double D = 1.0;        // context bound
  double w_norm = 2.0;   // ||w*||
  double tau_star = 1.0;
  double tau_zero = 2.0;
};

/// w* uniform on the sphere of radius w_norm.
Eigen::VectorXd draw_truth(const SeparableModel& m, Rng& rng);
/// x uniform in the D-ball, y = sign <w*, x>, rejection-sampled to margin >= 1.
std::vector<Sample> separable_stream(const SeparableModel& m, const Eigen::VectorXd& w_star, long n, Rng& rng);

struct MistakeReport {
  long mistakes = 0;
  double bound = 0.0;  // D^2 ||w*||^2
  std::vector<long> mistake_rounds;
  Eigen::VectorXd w;
};

/// Runs the learner from w = 0. Throws MarginViolation if some sample has
/// y <w*, x> < 1 or ||x|| > D.
MistakeReport mistake_bound_check(const std::vector<Sample>& stream, const Eigen::VectorXd& w_star, double D,
                                  double alpha = 1.0, UpdateRule rule = UpdateRule::Mistake);

/// Hinge gradient at w: -y x when y <w, x> < 1, else 0.
Eigen::VectorXd hinge_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& x, int y);

/// Step size alpha_t for t = 1, 2, ...
using StepSchedule = std::function<double(long)>;

/// Gradient descent on the hinge losses: w_1 = w1, w_{t+1} = w_t - alpha_t grad l_t(w_t).
/// Returns w_1..w_{T+1}.
std::vector<Eigen::VectorXd> hinge_trajectory(const std::vector<Sample>& stream, const StepSchedule& alpha,
                                              const Eigen::VectorXd& w1);

struct OcoBound {
  double lhs = 0.0;  // sum l_t(w_t) - sum l_t(w)
  /// ||w1 - w|| / a_1 + sum ||w_t - w||^2 / 2 (1/a_t - 1/a_{t+1}) + sum a_t / 2 ||g_t||^2
  double rhs_displayed = 0.0;
  /// ||w1 - w||^2 / (2 a_1) + sum_{t>=2} ||w_t - w||^2 (1/(2 a_t) - 1/(2 a_{t-1})) + sum a_t / 2 ||g_t||^2
  double rhs_telescoped = 0.0;
  double slack_displayed() const { return rhs_displayed - lhs; }
  double slack_telescoped() const { return rhs_telescoped - lhs; }
};

/// Both sides for comparator w along `trajectory` (w_1..w_T, extra entries ignored).
OcoBound oco_bound_check(const std::vector<Sample>& stream, const std::vector<Eigen::VectorXd>& trajectory,
                         const StepSchedule& alpha, const Eigen::VectorXd& w);

struct QueueRun {
  WaitTrace trace;
  MistakeReport learner;
  GapCheck gap;
  double max_gap = 0.0;
  double gap_bound = 0.0;      // D^2 ||w*||^2 (tau0 - tau*)
  double literal_bound = 0.0;  // D^2 ||w*||^2
  bool gap_within_bound = false;
  bool gap_within_literal = false;
  long t_prime = 0;            // first W_pi = 0 index after the last mistake
  bool coupled_after_t_prime = false;
};

/// Perceptron picks each customer's mode; inter-arrival times are
/// exponential with `arrival_rate`. Both queues see the same arrivals.
QueueRun run_queue_with_perceptron(const SeparableModel& m, const std::vector<Sample>& stream,
                                   const Eigen::VectorXd& w_star, double arrival_rate, std::uint64_t seed,
                                   double alpha = 1.0, UpdateRule rule = UpdateRule::Mistake);

/// Evaluates the coupling verdicts of a finished queue run.
void assess_queue_run(QueueRun& run, double D, double w_norm, double tau_zero);

}  // namespace learnq::lindley
